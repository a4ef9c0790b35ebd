#include "nltv/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

namespace nltv {

void ClusterConfig::validate() const {
    require(k >= 2, "k must be >= 2");
    require(!grid_h_given() || (grid_h > 0.0 && grid_h < 1.0), "grid_h must lie in (0, 1)");
    require(eta > 0.0, "eta must be > 0");
    require(outer_max >= 1, "outer_max must be >= 1");
    require(outer_tol >= 0.0, "outer_tol must be >= 0");
    if (lambda) require(std::isfinite(*lambda) && *lambda >= 0.0, "lambda must be finite and >= 0");
    if (mu) require(std::isfinite(*mu) && *mu >= 0.0, "mu must be finite and >= 0");
}

double ClusterConfig::effective_grid_h() const {
    if (grid_h_given()) return grid_h;
    return k <= 10 ? 0.1 : 0.25;
}

double ClusterConfig::effective_band_eps() const {
    return band_eps > 0.0 ? band_eps : effective_grid_h() / 2.0;
}

namespace {

double spectrum_norm2(std::span<const float> g) {
    double s = 0.0;
    for (float v : g) s += static_cast<double>(v) * v;
    return s;
}

bool same_spectrum(std::span<const float> a, std::span<const float> b) {
    return std::equal(a.begin(), a.end(), b.begin(), b.end());
}

void set_row(Matrix& m, std::size_t row, std::span<const float> g) {
    for (std::size_t b = 0; b < g.size(); ++b) m(row, b) = g[b];
}

}  // namespace

Matrix init_random(const HsiCube& cube, std::size_t k, std::uint64_t seed) {
    const std::size_t r = cube.pixels();
    require(k >= 1 && k <= r, "init_random: k must lie in [1, pixels]");
    std::mt19937_64 rng(seed);
    std::vector<std::size_t> order(r);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    Matrix c(k, cube.bands());
    std::vector<std::size_t> chosen;
    for (std::size_t idx : order) {
        if (chosen.size() == k) break;
        const auto g = cube.spectrum(idx);
        if (spectrum_norm2(g) == 0.0) continue;
        const bool dup = std::any_of(chosen.begin(), chosen.end(),
                                     [&](std::size_t q) { return same_spectrum(cube.spectrum(q), g); });
        if (dup) continue;
        set_row(c, chosen.size(), g);
        chosen.push_back(idx);
    }
    if (chosen.size() < k) fail(ErrorKind::InvalidArgument, "init_random: fewer distinct pixels than k");
    return c;
}

Matrix init_kmeanspp(const HsiCube& cube, std::size_t k, std::uint64_t seed, double mu) {
    const std::size_t r = cube.pixels();
    require(k >= 1, "init_kmeanspp: k must be >= 1");
    if (k > r) fail(ErrorKind::InvalidArgument, "init_kmeanspp: k exceeds the pixel count");
    std::mt19937_64 rng(seed);
    Matrix c(k, cube.bands());
    const std::size_t first = std::uniform_int_distribution<std::size_t>(0, r - 1)(rng);
    set_row(c, 0, cube.spectrum(first));

    std::vector<double> nearest(r, std::numeric_limits<double>::infinity());
    for (std::size_t chosen = 1; chosen < k; ++chosen) {
        double total = 0.0;
        for (std::size_t i = 0; i < r; ++i) {
            const double d = mixed_distance(cube.spectrum(i), c.row(chosen - 1), mu);
            nearest[i] = std::min(nearest[i], d * d);
            total += nearest[i];
        }
        if (!(total > 0.0)) fail(ErrorKind::InvalidArgument, "init_kmeanspp: fewer distinct pixels than k");
        double target = std::uniform_real_distribution<double>(0.0, total)(rng);
        std::size_t pick = r;
        for (std::size_t i = 0; i < r; ++i) {
            if (nearest[i] <= 0.0) continue;
            pick = i;
            target -= nearest[i];
            if (target < 0.0) break;
        }
        set_row(c, chosen, cube.spectrum(pick));
    }
    return c;
}

LabelMap assign_nearest(const HsiCube& cube, const Matrix& centroids, double mu) {
    std::vector<std::uint32_t> a(cube.pixels());
    for (std::size_t i = 0; i < cube.pixels(); ++i) {
        double best = std::numeric_limits<double>::infinity();
        std::uint32_t arg = 0;
        for (std::size_t l = 0; l < centroids.rows(); ++l) {
            const double d = mixed_distance(cube.spectrum(i), centroids.row(l), mu);
            if (d < best) {
                best = d;
                arg = static_cast<std::uint32_t>(l);
            }
        }
        a[i] = arg;
    }
    return LabelMap(cube.rows(), cube.cols(), centroids.rows(), std::move(a));
}

Matrix update_centroids(const HsiCube& cube, const LabelMap& map, std::size_t k, const Matrix& prev, double mu) {
    require(map.assignment.size() == cube.pixels(), "update_centroids: label map size mismatch");
    const std::size_t b = cube.bands();
    Matrix sums(k, b);
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < cube.pixels(); ++i) {
        const std::uint32_t l = map.assignment[i];
        require(l < k, "update_centroids: label out of range");
        ++counts[l];
        const auto g = cube.spectrum(i);
        auto row = sums.row(l);
        for (std::size_t q = 0; q < b; ++q) row[q] += g[q];
    }
    Matrix c(k, b);
    std::vector<bool> filled(k, false);
    for (std::size_t l = 0; l < k; ++l) {
        if (counts[l] == 0) continue;
        double n2 = 0.0;
        for (std::size_t q = 0; q < b; ++q) {
            c(l, q) = sums(l, q) / static_cast<double>(counts[l]);
            n2 += c(l, q) * c(l, q);
        }
        if (n2 == 0.0 && prev.rows() == k && prev.cols() == b) {
            for (std::size_t q = 0; q < b; ++q) c(l, q) = prev(l, q);
        }
        filled[l] = true;
    }
    for (std::size_t l = 0; l < k; ++l) {
        if (filled[l]) continue;
        double worst = -1.0;
        std::size_t pick = 0;
        for (std::size_t i = 0; i < cube.pixels(); ++i) {
            const auto g = cube.spectrum(i);
            if (spectrum_norm2(g) == 0.0) continue;
            double nearest = std::numeric_limits<double>::infinity();
            for (std::size_t q = 0; q < k; ++q) {
                if (filled[q]) nearest = std::min(nearest, mixed_distance(g, c.row(q), mu));
            }
            if (nearest > worst) {
                worst = nearest;
                pick = i;
            }
        }
        set_row(c, l, cube.spectrum(pick));
        filled[l] = true;
    }
    return c;
}

KMeansResult kmeans(const HsiCube& cube, std::size_t k, std::uint64_t seed, double mu, std::size_t max_iters) {
    KMeansResult res;
    res.centroids = init_kmeanspp(cube, k, seed, mu);
    res.labels = assign_nearest(cube, res.centroids, mu);
    for (res.iterations = 0; res.iterations < max_iters;) {
        ++res.iterations;
        res.centroids = update_centroids(cube, res.labels, k, res.centroids, mu);
        auto next = assign_nearest(cube, res.centroids, mu);
        const bool stable = next.assignment == res.labels.assignment;
        res.labels = std::move(next);
        if (stable) break;
    }
    return res;
}

LabelMap threshold_argmax(const Matrix& u, std::size_t rows, std::size_t cols) {
    require(u.rows() == rows * cols, "threshold_argmax: u rows must equal rows*cols");
    std::vector<std::uint32_t> a(u.rows());
    for (std::size_t i = 0; i < u.rows(); ++i) {
        const auto row = u.row(i);
        a[i] = static_cast<std::uint32_t>(std::max_element(row.begin(), row.end()) - row.begin());
    }
    return LabelMap(rows, cols, u.cols(), std::move(a));
}

namespace {

std::size_t grid_divisions(double h) {
    require(h > 0.0 && h < 1.0, "grid spacing must lie in (0, 1)");
    // Spacings that do not divide 1 are rounded to the nearest 1/n.
    return static_cast<std::size_t>(std::max(1.0, std::round(1.0 / h)));
}

void enumerate_compositions(std::size_t parts, std::size_t total, std::size_t min_part, std::vector<std::size_t>& cur,
                            std::vector<std::vector<std::size_t>>& out) {
    if (parts == 1) {
        if (total >= min_part) {
            cur.push_back(total);
            out.push_back(cur);
            cur.pop_back();
        }
        return;
    }
    const std::size_t reserve = min_part * (parts - 1);
    if (total < reserve + min_part) return;
    for (std::size_t n = min_part; n + reserve <= total; ++n) {
        cur.push_back(n);
        enumerate_compositions(parts - 1, total - n, min_part, cur, out);
        cur.pop_back();
    }
}

}  // namespace

std::vector<std::vector<double>> simplex_grid(std::size_t k, double h, bool interior_only) {
    require(k >= 1, "simplex_grid: k must be >= 1");
    const std::size_t n = grid_divisions(h);
    std::vector<std::vector<std::size_t>> comps;
    std::vector<std::size_t> cur;
    enumerate_compositions(k, n, interior_only ? 1 : 0, cur, comps);
    std::vector<std::vector<double>> grid;
    grid.reserve(comps.size());
    for (const auto& c : comps) {
        std::vector<double> d(k);
        for (std::size_t l = 0; l < k; ++l) d[l] = static_cast<double>(c[l]) / static_cast<double>(n);
        grid.push_back(std::move(d));
    }
    return grid;
}

namespace {

// Index of argmax_l (u_l - delta_l) (ties to the lowest index) and the gap to
// the runner-up.
std::pair<std::uint32_t, double> shifted_argmax(std::span<const double> u, std::span<const double> delta) {
    double top = -std::numeric_limits<double>::infinity();
    double second = -std::numeric_limits<double>::infinity();
    std::uint32_t arg = 0;
    for (std::size_t l = 0; l < u.size(); ++l) {
        const double v = u[l] - delta[l];
        if (v > top) {
            second = top;
            top = v;
            arg = static_cast<std::uint32_t>(l);
        } else if (v > second) {
            second = v;
        }
    }
    return {arg, top - second};
}

}  // namespace

double simplex_partition_score(const Matrix& u, std::span<const double> delta, double eta, double band_eps) {
    const std::size_t k = u.cols();
    require(delta.size() == k, "delta must have k entries");
    std::vector<std::size_t> counts(k, 0);
    std::size_t near_boundary = 0;
    for (std::size_t i = 0; i < u.rows(); ++i) {
        const auto [arg, margin] = shifted_argmax(u.row(i), delta);
        ++counts[arg];
        if (margin < band_eps) ++near_boundary;
    }
    const double r = static_cast<double>(u.rows());
    double score = 0.0;
    for (std::size_t c : counts) {
        if (c == 0) return std::numeric_limits<double>::infinity();
        score -= std::log(static_cast<double>(c) / r);
    }
    return score + eta * std::exp(static_cast<double>(near_boundary) / r);
}

SimplexClustering stable_simplex_cluster(const Matrix& u, std::size_t rows, std::size_t cols, const ClusterConfig& cfg) {
    require(u.rows() == rows * cols, "stable_simplex_cluster: u rows must equal rows*cols");
    require(u.cols() >= 2, "stable_simplex_cluster: k must be >= 2");
    const double h = cfg.effective_grid_h();
    const double eps = cfg.effective_band_eps();
    auto grid = simplex_grid(u.cols(), h, true);
    // A coarse grid may have no interior points when k > 1/h.
    if (grid.empty()) grid = simplex_grid(u.cols(), h, false);

    SimplexClustering best;
    best.score = std::numeric_limits<double>::infinity();
    best.delta = grid.front();
    for (const auto& delta : grid) {
        const double s = simplex_partition_score(u, delta, cfg.eta, eps);
        if (s < best.score) {
            best.score = s;
            best.delta = delta;
        }
    }
    std::vector<std::uint32_t> a(u.rows());
    for (std::size_t i = 0; i < u.rows(); ++i) a[i] = shifted_argmax(u.row(i), best.delta).first;
    best.labels = LabelMap(rows, cols, u.cols(), std::move(a));
    return best;
}

namespace {

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

ModelParams auto_params(const HsiCube& cube, const NonlocalGraph& graph, const Matrix& centroids,
                        std::optional<double> fixed_mu) {
    require(centroids.cols() == cube.bands(), "auto_params: centroid band count mismatch");
    require(graph.pixels() == cube.pixels(), "auto_params: graph does not match cube");
    ModelParams out;
    const std::size_t k = centroids.rows();
    std::vector<double> euclid, cosine;
    for (std::size_t a = 0; a < k; ++a) {
        for (std::size_t b = a + 1; b < k; ++b) {
            double d2 = 0.0;
            for (std::size_t q = 0; q < centroids.cols(); ++q) {
                const double d = centroids(a, q) - centroids(b, q);
                d2 += d * d;
            }
            euclid.push_back(std::sqrt(d2));
            cosine.push_back(mixed_distance(centroids.row(a), centroids.row(b), 0.0));
        }
    }
    const double med_euclid = euclid.empty() ? 0.0 : median(euclid);
    const double med_cosine = cosine.empty() ? 0.0 : median(cosine);
    if (fixed_mu) {
        out.mu = *fixed_mu;
    } else if (med_euclid > 0.0) {
        out.mu = 0.1 * med_cosine / med_euclid;
    } else {
        out.fallback = true;
        out.lambda = 1.0;
        out.mu = 0.0;
        return out;
    }

    const LabelMap labels = assign_nearest(cube, centroids, out.mu);
    Matrix u(cube.pixels(), k, 0.0);
    double fid = 0.0;
    for (std::size_t i = 0; i < cube.pixels(); ++i) {
        const std::uint32_t l = labels.assignment[i];
        u(i, l) = 1.0;
        const double d = mixed_distance(cube.spectrum(i), centroids.row(l), out.mu);
        fid += 0.5 * d * d;
    }
    const double tv = l1_norm(graph, gradient(graph, u));
    if (tv > 0.0 && fid > 0.0) {
        out.lambda = 10.0 * tv / fid;
    } else {
        out.fallback = true;
        out.lambda = 1.0;
        if (!fixed_mu) out.mu = 0.0;
    }
    return out;
}

Matrix initial_centroids(const HsiCube& cube, const ClusterConfig& cfg, double mu, const Matrix* external) {
    switch (cfg.init) {
        case InitMethod::Random:
            return init_random(cube, cfg.k, cfg.seed);
        case InitMethod::KMeansPlusPlus:
            return init_kmeanspp(cube, cfg.k, cfg.seed, mu);
        case InitMethod::KMeans:
            return kmeans(cube, cfg.k, cfg.seed, mu).centroids;
        case InitMethod::External:
            require(external != nullptr, "external centroids required for this init method");
            require(external->rows() == cfg.k, "external centroid count must equal k");
            require(external->cols() == cube.bands(), "external centroid band count mismatch");
            return *external;
    }
    fail(ErrorKind::InvalidArgument, "unknown init method");
}

namespace {

ClusterResult run_model(Model model, const HsiCube& cube, const NonlocalGraph& graph, const ClusterConfig& cfg,
                        const SolverConfig& solver, const Matrix* external, const ClusterHooks& hooks) {
    cfg.validate();
    require(graph.pixels() == cube.pixels(), "graph does not match cube");
    const std::size_t k = cfg.k;
    Matrix centroids = initial_centroids(cube, cfg, cfg.mu.value_or(0.0), external);

    ClusterResult res;
    if (cfg.lambda && cfg.mu) {
        res.lambda = *cfg.lambda;
        res.mu = *cfg.mu;
    } else {
        const auto p = auto_params(cube, graph, centroids, cfg.mu);
        res.lambda = cfg.lambda.value_or(p.lambda);
        res.mu = p.mu;
    }

    SaddleState state = make_state(graph, Matrix(cube.pixels(), k, 1.0 / static_cast<double>(k)), solver);
    std::vector<std::uint32_t> previous;
    for (std::size_t outer = 1; outer <= cfg.outer_max; ++outer) {
        const Matrix f = fidelity(cube, centroids, res.lambda, res.mu);
        const std::size_t inner = pdhg_solve(model, graph, f, solver, state, hooks.inner);
        const double e = energy(model, graph, f, state.u);
        LabelMap labels = model == Model::Linear
                              ? threshold_argmax(state.u, cube.rows(), cube.cols())
                              : stable_simplex_cluster(state.u, cube.rows(), cube.cols(), cfg).labels;
        double changed = 1.0;
        if (!previous.empty()) {
            std::size_t diff = 0;
            for (std::size_t i = 0; i < previous.size(); ++i) diff += previous[i] != labels.assignment[i];
            changed = static_cast<double>(diff) / static_cast<double>(previous.size());
        }
        centroids = update_centroids(cube, labels, k, centroids, res.mu);
        res.history.push_back({outer, inner, e, changed});
        previous = labels.assignment;
        res.labels = std::move(labels);
        if (changed < cfg.outer_tol) break;
    }
    res.centroids = std::move(centroids);
    res.u = std::move(state.u);
    return res;
}

}  // namespace

ClusterResult run_linear(const HsiCube& cube, const NonlocalGraph& graph, const ClusterConfig& cfg,
                         const SolverConfig& solver, const Matrix* external, const ClusterHooks& hooks) {
    return run_model(Model::Linear, cube, graph, cfg, solver, external, hooks);
}

ClusterResult run_quadratic(const HsiCube& cube, const NonlocalGraph& graph, const ClusterConfig& cfg,
                            const SolverConfig& solver, const Matrix* external, const ClusterHooks& hooks) {
    return run_model(Model::Quadratic, cube, graph, cfg, solver, external, hooks);
}

ClusterResult run_clustering(const HsiCube& cube, const NonlocalGraph& graph, const ClusterConfig& cfg,
                             const SolverConfig& solver, const Matrix* external, const ClusterHooks& hooks) {
    return run_model(cfg.model, cube, graph, cfg, solver, external, hooks);
}

}  // namespace nltv
