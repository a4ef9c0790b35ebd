#include <doctest.h>

#include <cmath>
#include <cstring>
#include <set>

#include "nltv/synth.hpp"

using namespace nltv;

namespace {

GbmConfig small_config() {
    GbmConfig cfg;
    cfg.rows = 40;
    cfg.cols = 50;
    cfg.bands = 20;
    cfg.smoothness = 5.0;
    return cfg;
}

}  // namespace

TEST_CASE("abundance rows lie on the simplex") {
    for (double scale : {0.1, 0.5, 2.0}) {
        GbmConfig cfg = small_config();
        cfg.mixing_scale = scale;
        const Matrix a = generate_abundances(cfg);
        REQUIRE(a.rows() == cfg.rows * cfg.cols);
        REQUIRE(a.cols() == cfg.p);
        for (std::size_t i = 0; i < a.rows(); ++i) {
            double s = 0.0;
            for (double v : a.row(i)) {
                CHECK(v >= 0.0);
                s += v;
            }
            CHECK(std::abs(s - 1.0) <= 1e-12);
        }
    }
}

TEST_CASE("constant fields give equal abundances") {
    const Matrix flat(7, 2, 0.3);
    const Matrix a = abundances_from_fields(flat, 0.5);
    for (std::size_t i = 0; i < 7; ++i) {
        CHECK(a(i, 0) == doctest::Approx(0.5));
        CHECK(a(i, 1) == doctest::Approx(0.5));
    }
    // A single pixel has no spatial variation at all.
    GbmConfig one;
    one.p = 2;
    one.rows = one.cols = 1;
    const Matrix b = generate_abundances(one);
    CHECK(b(0, 0) == doctest::Approx(0.5));
    CHECK(b(0, 1) == doctest::Approx(0.5));
}

TEST_CASE("default scene shape") {
    GbmConfig cfg;
    cfg.bands = 4;
    const Matrix a = generate_abundances(cfg);
    CHECK(a.rows() == 40000);
    CHECK(a.cols() == 5);
    const GroundTruth gt = synth_ground_truth(a, cfg.rows, cfg.cols);
    CHECK(gt.labels.size() == 40000);
    CHECK(gt.class_count() == 5);
    std::set<std::uint32_t> seen;
    for (const auto& l : gt.labels) seen.insert(*l);
    CHECK(seen.size() == 5);
}

TEST_CASE("fields are spatially smooth") {
    GbmConfig cfg = small_config();
    cfg.smoothness = 6.0;
    const Matrix f = gaussian_fields(cfg);
    // Lag-one correlation along rows is close to one for a wide kernel.
    double num = 0.0, den = 0.0;
    for (std::size_t y = 0; y < cfg.rows; ++y) {
        for (std::size_t x = 0; x + 1 < cfg.cols; ++x) {
            const double a = f(y * cfg.cols + x, 0), b = f(y * cfg.cols + x + 1, 0);
            num += a * b;
            den += a * a;
        }
    }
    CHECK(num / den > 0.9);
    cfg.smoothness = 0.0;
    const Matrix w = gaussian_fields(cfg);
    num = den = 0.0;
    for (std::size_t i = 0; i + 1 < w.rows(); ++i) {
        num += w(i, 0) * w(i + 1, 0);
        den += w(i, 0) * w(i, 0);
    }
    CHECK(std::abs(num / den) < 0.1);
}

TEST_CASE("ground truth is the argmax abundance with ties to the lowest index") {
    const Matrix a(3, 2, std::vector<double>{0.7, 0.3, 0.5, 0.5, 0.2, 0.8});
    const GroundTruth gt = synth_ground_truth(a, 1, 3);
    CHECK(*gt.labels[0] == 0);
    CHECK(*gt.labels[1] == 0);
    CHECK(*gt.labels[2] == 1);
}

TEST_CASE("gbm mixing identities") {
    const Matrix e(2, 3, std::vector<double>{0.2, 0.4, 0.6, 0.5, 0.1, 0.3});
    Matrix gamma(2, 2, 0.0);

    const Matrix pure = mix_gbm_clean(Matrix(1, 2, std::vector<double>{1.0, 0.0}), e, gamma);
    for (std::size_t q = 0; q < 3; ++q) CHECK(pure(0, q) == e(0, q));

    gamma(0, 1) = gamma(1, 0) = 1.0;
    const Matrix half = mix_gbm_clean(Matrix(1, 2, std::vector<double>{0.5, 0.5}), e, gamma);
    for (std::size_t q = 0; q < 3; ++q) {
        const double want = e(0, q) / 2 + e(1, q) / 2 + e(0, q) * e(1, q) / 4;
        CHECK(half(0, q) == doctest::Approx(want).epsilon(1e-15));
    }

    CHECK_THROWS_AS(mix_gbm_clean(Matrix(1, 3, 0.3), e, gamma), Error);
    Matrix negative = e;
    negative(1, 1) = -0.1;
    CHECK_THROWS_AS(mix_gbm_clean(Matrix(1, 2, 0.5), negative, gamma), Error);
}

TEST_CASE("noise-free cube is the scaled mixture") {
    GbmConfig cfg = small_config();
    cfg.add_noise = false;
    cfg.reflectance_scale = 100.0;
    const auto s = generate_scene(cfg);
    const Matrix clean = mix_gbm_clean(s.abundances, s.endmembers, draw_gammas(cfg.p, cfg.gamma_seed));
    for (std::size_t n = 0; n < clean.data().size(); n += 37) {
        CHECK(s.cube.data()[n] == doctest::Approx(100.0 * clean.data()[n]).epsilon(1e-6));
    }
}

TEST_CASE("gammas are uniform on [0,1] and symmetric") {
    const Matrix g = draw_gammas(6, 77);
    for (std::size_t i = 0; i < 6; ++i) {
        CHECK(g(i, i) == 0.0);
        for (std::size_t j = i + 1; j < 6; ++j) {
            CHECK(g(i, j) == g(j, i));
            CHECK(g(i, j) >= 0.0);
            CHECK(g(i, j) <= 1.0);
        }
    }
    CHECK(draw_gammas(6, 77) == g);
    CHECK_FALSE(draw_gammas(6, 78) == g);
}

TEST_CASE("measured SNR matches the target") {
    GbmConfig cfg;
    cfg.rows = 100;
    cfg.cols = 100;
    cfg.bands = 30;
    for (double snr : {10.0, 30.0, 45.0}) {
        cfg.snr_db = snr;
        const auto s = generate_scene(cfg);
        Matrix clean = mix_gbm_clean(s.abundances, s.endmembers, draw_gammas(cfg.p, cfg.gamma_seed));
        for (auto& v : clean.data()) v *= cfg.reflectance_scale;
        CHECK(std::abs(measured_snr_db(s.cube, clean) - snr) <= 0.5);
    }
}

TEST_CASE("scenes are deterministic per seed") {
    GbmConfig cfg = small_config();
    const auto a = generate_scene(cfg);
    const auto b = generate_scene(cfg);
    REQUIRE(a.cube.data().size() == b.cube.data().size());
    CHECK(std::memcmp(a.cube.data().data(), b.cube.data().data(), a.cube.data().size() * sizeof(float)) == 0);
    CHECK(a.truth.labels == b.truth.labels);
    cfg.noise_seed = 99;
    const auto c = generate_scene(cfg);
    CHECK(std::memcmp(a.cube.data().data(), c.cube.data().data(), a.cube.data().size() * sizeof(float)) != 0);
    CHECK(a.truth.labels == c.truth.labels);
}

TEST_CASE("default endmembers are smooth unit-reflectance spectra") {
    GbmConfig cfg;
    const Matrix e = default_endmembers(cfg);
    CHECK(e.rows() == 5);
    CHECK(e.cols() == 162);
    for (std::size_t q = 0; q < 5; ++q) {
        const auto row = e.row(q);
        const double peak = *std::max_element(row.begin(), row.end());
        CHECK(peak >= 0.4 - 1e-12);
        CHECK(peak <= 0.9 + 1e-12);
        CHECK(*std::min_element(row.begin(), row.end()) > 0.0);
    }
}

TEST_CASE("config validation") {
    GbmConfig cfg;
    cfg.p = 1;
    CHECK_THROWS_AS(cfg.validate(), Error);
    cfg = GbmConfig{};
    cfg.snr_db = std::nan("");
    CHECK_THROWS_AS(cfg.validate(), Error);
    cfg = GbmConfig{};
    cfg.rows = 0;
    CHECK_THROWS_AS(generate_scene(cfg), Error);
    cfg = GbmConfig{};
    Matrix wrong(4, cfg.bands, 0.5);
    CHECK_THROWS_AS(generate_scene(cfg, &wrong), Error);
}
