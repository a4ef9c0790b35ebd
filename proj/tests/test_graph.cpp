#include <doctest.h>

#include <filesystem>
#include <random>
#include <set>

#include "nltv/graph.hpp"
#include "oracles.hpp"

using namespace nltv;

namespace {

HsiCube cube_from(std::size_t rows, std::size_t cols, std::size_t bands, std::vector<float> data) {
    return HsiCube(rows, cols, bands, std::move(data));
}

HsiCube random_cube(std::size_t rows, std::size_t cols, std::size_t bands, oracle::Rng& rng) {
    std::uniform_real_distribution<float> d(0.0f, 1.0f);
    std::vector<float> data(rows * cols * bands);
    for (auto& v : data) v = d(rng);
    return cube_from(rows, cols, bands, std::move(data));
}

double inner(const EdgeField& a, const EdgeField& b) {
    double s = 0.0;
    for (std::size_t n = 0; n < a.values.size(); ++n) s += a.values[n] * b.values[n];
    return s;
}

double inner(const Matrix& a, const Matrix& b) {
    double s = 0.0;
    for (std::size_t n = 0; n < a.data().size(); ++n) s += a.data()[n] * b.data()[n];
    return s;
}

double norm(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

}  // namespace

TEST_CASE("patch_distance identities") {
    oracle::Rng rng(1);
    const HsiCube c = random_cube(4, 5, 3, rng);
    const PatchConfig cfg;
    CHECK(patch_distance(c, 7, 7, cfg) == 0.0);
    CHECK(patch_distance(c, 3, 11, cfg) == doctest::Approx(patch_distance(c, 11, 3, cfg)).epsilon(1e-14));

    const HsiCube flat = cube_from(3, 3, 2, std::vector<float>(18, 0.25f));
    for (std::size_t i = 0; i < 9; ++i) {
        for (std::size_t j = 0; j < 9; ++j) CHECK(patch_distance(flat, i, j, cfg) == 0.0);
    }
}

TEST_CASE("patch_distance on a 1x2 image with radius 0 is the single kernel term") {
    const HsiCube c = cube_from(1, 2, 1, {0.0f, 1.0f});
    PatchConfig cfg;
    cfg.patch_radius = 0;
    const auto kernel = patch_kernel(cfg);
    REQUIRE(kernel.size() == 1);
    CHECK(patch_distance(c, 0, 1, cfg) == doctest::Approx(kernel[0] * 1.0));
    CHECK(kernel[0] == 1.0);
}

TEST_CASE("patch_distance matches a hand-rolled clamp-to-edge sum") {
    oracle::Rng rng(2);
    const HsiCube c = random_cube(5, 4, 3, rng);
    PatchConfig cfg;
    cfg.patch_radius = 1;
    cfg.sigma = 0.8;
    double total = 0.0, wsum = 0.0;
    const int yi = 0, xi = 3, yj = 4, xj = 1;
    for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
            const double w = std::exp(-(dx * dx + dy * dy) / (2 * 0.8 * 0.8));
            wsum += w;
            const auto a = c.spectrum(std::clamp(yi + dy, 0, 4) * 4 + std::clamp(xi + dx, 0, 3));
            const auto b = c.spectrum(std::clamp(yj + dy, 0, 4) * 4 + std::clamp(xj + dx, 0, 3));
            double s = 0.0;
            for (int q = 0; q < 3; ++q) s += (double(a[q]) - b[q]) * (double(a[q]) - b[q]);
            total += w * s;
        }
    }
    CHECK(patch_distance(c, yi * 4 + xi, yj * 4 + xj, cfg) == doctest::Approx(total / wsum).epsilon(1e-12));
}

TEST_CASE("build_graph: m=1 on three pixels gives mutual nearest pair") {
    const HsiCube c = cube_from(1, 3, 1, {0.0f, 0.1f, 10.0f});
    PatchConfig cfg;
    cfg.m = 1;
    cfg.patch_radius = 0;
    const auto g = build_graph(c, cfg);
    CHECK(g.neighbors(0)[0] == 1);
    CHECK(g.neighbors(1)[0] == 0);
    CHECK(g.neighbors(2)[0] == 1);
}

TEST_CASE("build_graph invariants: m entries, no self loops, binarized weights") {
    oracle::Rng rng(3);
    const HsiCube c = random_cube(12, 13, 4, rng);
    PatchConfig cfg;
    const auto g = build_graph(c, cfg);
    CHECK(g.pixels() == 156);
    CHECK(g.m() == 10);
    CHECK(g.edges() == 1560);
    for (std::size_t i = 0; i < g.pixels(); ++i) {
        std::set<std::uint32_t> seen;
        for (auto j : g.neighbors(i)) {
            CHECK(j != i);
            seen.insert(j);
        }
        CHECK(seen.size() == g.m());
    }
    for (double w : g.weights()) CHECK(w == 1.0);
}

TEST_CASE("build_graph with binarize=false stores inverse squared patch distances") {
    oracle::Rng rng(4);
    const HsiCube c = random_cube(6, 6, 3, rng);
    PatchConfig cfg;
    cfg.binarize = false;
    cfg.m = 4;
    const auto g = build_graph(c, cfg);
    for (std::size_t i = 0; i < g.pixels(); ++i) {
        for (std::size_t s = 0; s < g.m(); ++s) {
            const double d = patch_distance(c, i, g.neighbors(i)[s], cfg);
            CHECK(g.weights()[i * g.m() + s] == doctest::Approx(1.0 / (d * d)).epsilon(1e-5));
        }
    }
}

TEST_CASE("build_graph with duplicate patches clamps infinite weights") {
    // Two identical 2x2 halves: many zero distances.
    std::vector<float> data{1, 1, 2, 2, 1, 1, 2, 2};
    const HsiCube c = cube_from(2, 4, 1, data);
    PatchConfig cfg;
    cfg.binarize = false;
    cfg.m = 3;
    cfg.patch_radius = 0;
    const auto g = build_graph(c, cfg);
    for (double w : g.weights()) {
        CHECK(std::isfinite(w));
        CHECK(w > 0.0);
    }
}

TEST_CASE("build_graph rejects degenerate cubes") {
    const HsiCube c = cube_from(2, 2, 1, {1, 2, 3, 4});
    PatchConfig cfg;
    cfg.m = 4;
    CHECK_THROWS_WITH_AS(build_graph(c, cfg), doctest::Contains("degenerate cube"), Error);
    cfg.m = 0;
    CHECK_THROWS_AS(build_graph(c, cfg), Error);
}

TEST_CASE("two identical pixel groups: neighbours drawn from own group") {
    // 5x5 cube, left columns material A, right columns material B.
    std::vector<float> data;
    for (int y = 0; y < 5; ++y) {
        for (int x = 0; x < 5; ++x) {
            const bool a = x < 3;
            for (int b = 0; b < 4; ++b) data.push_back(a ? 1.0f + 0.1f * b : 5.0f - 0.3f * b);
        }
    }
    const HsiCube c = cube_from(5, 5, 4, data);
    PatchConfig cfg;
    cfg.patch_radius = 0;
    cfg.m = 4;
    const auto g = build_graph(c, cfg);
    const auto exact = exact_patch_knn(c, cfg, 4);
    std::size_t agree = 0;
    for (std::size_t i = 0; i < 25; ++i) {
        const bool ai = (i % 5) < 3;
        for (auto j : g.neighbors(i)) CHECK(((j % 5) < 3) == ai);
        // Neighbour sets at equal distance are interchangeable; compare groups.
        for (auto j : exact[i]) agree += ((j % 5) < 3) == ai;
    }
    CHECK(agree == 100);
}

TEST_CASE("approximate kNN recall against brute force") {
    oracle::Rng rng(5);
    // Smooth-ish cube so that neighbours are meaningful: random blobs plus noise.
    const std::size_t rows = 40, cols = 45, bands = 6;
    std::vector<float> data(rows * cols * bands);
    std::normal_distribution<float> noise(0.0f, 0.05f);
    for (std::size_t y = 0; y < rows; ++y) {
        for (std::size_t x = 0; x < cols; ++x) {
            const std::size_t cls = (y / 10 + x / 15) % 4;
            for (std::size_t b = 0; b < bands; ++b) {
                data[(y * cols + x) * bands + b] = static_cast<float>(cls * 0.3 + 0.05 * b) + noise(rng);
            }
        }
    }
    const HsiCube c = cube_from(rows, cols, bands, data);
    PatchConfig cfg;
    const auto g = build_graph(c, cfg);
    const auto exact = exact_patch_knn(c, cfg, cfg.m);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < c.pixels(); ++i) {
        const std::set<std::uint32_t> truth(exact[i].begin(), exact[i].end());
        for (auto j : g.neighbors(i)) hits += truth.count(j);
    }
    const double recall = static_cast<double>(hits) / static_cast<double>(c.pixels() * cfg.m);
    MESSAGE("recall = " << recall);
    CHECK(recall >= 0.9);
}

TEST_CASE("build_graph is deterministic for a fixed seed") {
    oracle::Rng rng(6);
    const HsiCube c = random_cube(15, 15, 5, rng);
    PatchConfig cfg;
    cfg.seed = 42;
    const auto a = build_graph(c, cfg);
    const auto b = build_graph(c, cfg);
    CHECK(a.targets() == b.targets());
    CHECK(a.weights() == b.weights());
}

TEST_CASE("gradient examples") {
    const NonlocalGraph g(2, 1, {1, 0}, {1.0, 1.0});
    Matrix u(2, 1, std::vector<double>{0.0, 1.0});
    const auto grad = gradient(g, u);
    CHECK(grad.at(0, 0) == 1.0);
    CHECK(grad.at(1, 0) == -1.0);

    oracle::Rng rng(7);
    const auto rg = oracle::random_graph(30, 4, rng, false);
    Matrix cst(30, 3);
    for (std::size_t i = 0; i < 30; ++i) {
        cst(i, 0) = 0.2;
        cst(i, 1) = -1.5;
        cst(i, 2) = 7.0;
    }
    for (double v : gradient(rg, cst).values) CHECK(v == 0.0);
}

TEST_CASE("gradient and divergence match the dense formulas") {
    oracle::Rng rng(8);
    for (int t = 0; t < 20; ++t) {
        const std::size_t r = 8 + t, m = 1 + t % 5, k = 1 + t % 3;
        const auto g = oracle::random_graph(r, m, rng, t % 2 == 0);
        const auto w = oracle::dense_weights(g);
        const Matrix u = oracle::random_matrix(r, k, rng);
        const auto grad = gradient(g, u);
        EdgeField v(g.edges(), k);
        for (auto& x : v.values) x = std::uniform_real_distribution<double>(-1, 1)(rng);
        const Matrix div = divergence(g, v);
        for (std::size_t l = 0; l < k; ++l) {
            const auto dg = oracle::dense_gradient(w, u, l);
            Eigen::MatrixXd dv = Eigen::MatrixXd::Zero(r, r);
            for (std::size_t i = 0; i < r; ++i) {
                for (std::size_t s = 0; s < m; ++s) {
                    const std::size_t e = i * m + s;
                    CHECK(grad.at(e, l) == doctest::Approx(dg(i, g.targets()[e])).epsilon(1e-13));
                    dv(i, g.targets()[e]) = v.at(e, l);
                }
            }
            const auto dd = oracle::dense_divergence(w, dv);
            for (std::size_t i = 0; i < r; ++i) CHECK(div(i, l) == doctest::Approx(dd(i)).epsilon(1e-12));
        }
    }
}

TEST_CASE("divergence examples") {
    const NonlocalGraph g(2, 1, {1, 0}, {1.0, 1.0});
    EdgeField v(2, 1);
    const Matrix zero = divergence(g, v);
    CHECK(zero(0, 0) == 0.0);
    CHECK(zero(1, 0) == 0.0);
    v.at(0, 0) = 1.0;  // v(0,1) = 1, v(1,0) = 0
    const Matrix d = divergence(g, v);
    CHECK(d(0, 0) == 1.0);
    CHECK(d(1, 0) == -1.0);
}

TEST_CASE("adjointness of gradient and divergence") {
    oracle::Rng rng(9);
    std::uniform_int_distribution<std::size_t> rd(5, 500);
    for (int t = 0; t < 100; ++t) {
        const std::size_t r = rd(rng);
        const std::size_t m = 1 + t % std::min<std::size_t>(10, r - 1);
        const std::size_t k = 1 + t % 4;
        const auto g = oracle::random_graph(r, m, rng, t % 3 != 0);
        const Matrix u = oracle::random_matrix(r, k, rng);
        EdgeField v(g.edges(), k);
        for (auto& x : v.values) x = std::uniform_real_distribution<double>(-1, 1)(rng);
        const double lhs = inner(gradient(g, u), v);
        const double rhs = -inner(u, divergence(g, v));
        const double scale = norm(u.data()) * norm(v.values);
        CHECK(std::abs(lhs - rhs) <= 1e-10 * scale);
    }
}

TEST_CASE("l1 and linf norms") {
    const NonlocalGraph g(3, 2, {1, 2, 0, 2, 0, 1}, {1, 1, 1, 1, 1, 1});
    EdgeField v(6, 1);
    CHECK(l1_norm(g, v) == 0.0);
    CHECK(linf_norm(g, v) == 0.0);
    v.at(0, 0) = 3.0;
    v.at(1, 0) = 4.0;
    CHECK(l1_norm(g, v) == 5.0);
    CHECK(linf_norm(g, v) == 5.0);

    oracle::Rng rng(10);
    const auto rg = oracle::random_graph(25, 4, rng, false);
    const auto w = oracle::dense_weights(rg);
    const Matrix u = oracle::random_matrix(25, 3, rng);
    const auto grad = gradient(rg, u);
    CHECK(l1_norm(rg, grad) == doctest::Approx(oracle::dense_tv(w, u)).epsilon(1e-12));
    double mx = 0.0;
    for (std::size_t l = 0; l < 3; ++l) mx = std::max(mx, oracle::dense_gradient(w, u, l).rowwise().norm().maxCoeff());
    CHECK(linf_norm(rg, grad) == doctest::Approx(mx).epsilon(1e-12));
}

TEST_CASE("operator norm: two-pixel graph, empty graph, and upper bound") {
    const NonlocalGraph two(2, 1, {1, 0}, {1.0, 1.0});
    const double true_two = oracle::gradient_matrix(two).jacobiSvd().singularValues()(0);
    CHECK(true_two == doctest::Approx(2.0));
    CHECK(two.operator_norm() >= 2.0);
    CHECK(two.operator_norm() <= 2.0 * 1.05 + 1e-12);

    const NonlocalGraph empty(5, 0, {}, {});
    CHECK(empty.operator_norm() == 0.0);

    oracle::Rng rng(11);
    for (int t = 0; t < 30; ++t) {
        const std::size_t r = 10 + t * 3, m = 1 + t % 6;
        const auto g = oracle::random_graph(r, m, rng, t % 2 == 0);
        const double exact = oracle::gradient_matrix(g).jacobiSvd().singularValues()(0);
        CHECK(g.operator_norm() >= exact * (1.0 - 1e-12));
        // ||grad u|| <= norm * ||u|| for random u
        const Matrix u = oracle::random_matrix(r, 2, rng);
        CHECK(norm(gradient(g, u).values) <= g.operator_norm() * norm(u.data()) * (1 + 1e-12));
    }
}

TEST_CASE("graph file round trip and corruption") {
    oracle::Rng rng(12);
    const auto g = oracle::random_graph(40, 5, rng, false);
    const auto dir = std::filesystem::temp_directory_path() / "nltv_test_graph";
    std::filesystem::create_directories(dir);
    save_graph(g, dir / "g.bin");
    const auto back = load_graph(dir / "g.bin");
    CHECK(back.targets() == g.targets());
    CHECK(back.weights() == g.weights());
    CHECK(back.operator_norm() == g.operator_norm());
    std::filesystem::resize_file(dir / "g.bin", std::filesystem::file_size(dir / "g.bin") - 3);
    CHECK_THROWS_AS(load_graph(dir / "g.bin"), Error);
    CHECK_THROWS_AS(load_graph(dir / "missing.bin"), Error);
}

TEST_CASE("NonlocalGraph rejects self loops and negative weights") {
    CHECK_THROWS_AS(NonlocalGraph(2, 1, {0, 0}, {1, 1}), Error);
    CHECK_THROWS_AS(NonlocalGraph(2, 1, {1, 0}, {-1, 1}), Error);
    CHECK_THROWS_AS(NonlocalGraph(2, 1, {1, 2}, {1, 1}), Error);
}
