// Acceptance run: one PASS/FAIL line per criterion.
//
// Exit status is nonzero when a criterion fails that is not listed in
// kKnownShortfalls, or when a check cannot run at all. Known shortfalls still
// print FAIL; the analysis lives with the project notes.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <functional>
#include <numeric>
#include <set>
#include <string>

#include "nltv/cluster.hpp"
#include "nltv/metrics.hpp"
#include "nltv/pdhg.hpp"
#include "nltv/simplex.hpp"
#include "nltv/synth.hpp"
#include "oracles.hpp"
#include "scenes.hpp"

using namespace nltv;

namespace {

// Tolerances and limits, fixed here so a run cannot loosen them.
constexpr double kKktTol = 1e-12;
constexpr double kGridTol = 2e-3;
constexpr double kAdjointTol = 1e-10;
constexpr double kEnergyTol = 1e-4;
constexpr double kSimplexTol = 1e-12;
constexpr double kBallTol = 1e-12;
constexpr double kSynthAccuracy = 0.95;
constexpr double kIterationRatio = 1.0 / 3.0;
constexpr double kSensitivitySpread = 0.10;

const std::set<int> kKnownShortfalls{4, 5, 6};

struct Outcome {
    bool pass = false;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

int failures_unexpected = 0;
std::FILE* report_file = nullptr;

// Writes a line to stdout and to the report file.
void emit(const std::string& line) {
    std::printf("%s\n", line.c_str());
    std::fflush(stdout);
    if (report_file) {
        std::fprintf(report_file, "%s\n", line.c_str());
        std::fflush(report_file);
    }
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

void report(int id, const char* name, double limit_s, const std::function<Outcome()>& body) {
    const auto t0 = Clock::now();
    Outcome o;
    try {
        o = body();
    } catch (const std::exception& e) {
        o = {false, std::string("error: ") + e.what()};
    }
    const double s = seconds_since(t0);
    const bool in_time = limit_s <= 0.0 || s < limit_s;
    const bool pass = o.pass && in_time;
    std::string timing = limit_s > 0.0 ? fmt("%.1f s (limit %.0f s)", s, limit_s) : fmt("%.1f s", s);
    emit(fmt("%s %d %s: %s; %s", pass ? "PASS" : "FAIL", id, name, o.detail.c_str(), timing.c_str()));
    if (!pass && !kKnownShortfalls.count(id)) ++failures_unexpected;
}

Outcome simplex_projection() {
    oracle::Rng rng(101);
    std::uniform_real_distribution<double> ad(0.2, 5.0), yd(-3.0, 3.0);
    std::uniform_int_distribution<std::size_t> kd(2, 8);
    double kkt = 0.0, grid = 0.0;
    std::size_t compared = 0;
    for (int t = 0; t < 1000; ++t) {
        const std::size_t k = kd(rng);
        std::vector<double> a(k), y(k);
        for (std::size_t i = 0; i < k; ++i) {
            a[i] = ad(rng);
            y[i] = yd(rng);
        }
        const auto p = precond_proj_simplex(a, y);
        double sum = 0.0;
        for (std::size_t i = 0; i < k; ++i) {
            sum += p.u[i];
            kkt = std::max(kkt, -p.u[i]);
            if (p.u[i] > 0.0) kkt = std::max(kkt, std::abs(a[i] * a[i] * p.u[i] + p.lambda - a[i] * y[i]));
            else kkt = std::max(kkt, a[i] * y[i] - p.lambda);
        }
        kkt = std::max(kkt, std::abs(sum - 1.0));
        if (k <= 4) {
            const auto g = oracle::grid_precond_projection(a, y);
            for (std::size_t i = 0; i < k; ++i) grid = std::max(grid, std::abs(p.u[i] - g[i]));
            ++compared;
        }
    }
    return {kkt <= kKktTol && grid <= kGridTol,
            fmt("max KKT residual %.2e (tol %.0e), max grid gap %.2e over %zu cases (tol %.0e)", kkt, kKktTol, grid,
                compared, kGridTol)};
}

Outcome adjointness() {
    oracle::Rng rng(102);
    std::uniform_int_distribution<std::size_t> rd(2, 500);
    double worst = 0.0, worst_abs = 0.0;
    for (int t = 0; t < 100; ++t) {
        const std::size_t r = rd(rng);
        const std::size_t m = 1 + static_cast<std::size_t>(t) % std::min<std::size_t>(10, r - 1);
        const std::size_t k = 1 + static_cast<std::size_t>(t) % 5;
        const auto g = oracle::random_graph(r, m, rng, t % 2 == 0);
        const Matrix u = oracle::random_matrix(r, k, rng);
        EdgeField v(g.edges(), k);
        std::uniform_real_distribution<double> vd(-1.0, 1.0);
        for (auto& x : v.values) x = vd(rng);
        const double lhs = dot(gradient(g, u).values, v.values);
        const double rhs = -dot(u.data(), divergence(g, v).data());
        worst_abs = std::max(worst_abs, std::abs(lhs - rhs));
        worst = std::max(worst, std::abs(lhs - rhs) / std::sqrt(dot(u.data(), u.data()) * dot(v.values, v.values)));
    }
    // Both the plain difference and the one relative to |u||v| must be small.
    return {worst_abs <= kAdjointTol && worst <= kAdjointTol,
            fmt("max mismatch %.2e absolute, %.2e relative (tol %.0e)", worst_abs, worst, kAdjointTol)};
}

Outcome solver_optimality() {
    oracle::Rng rng(103);
    std::uniform_int_distribution<std::size_t> rd(3, 10), kd(2, 3);
    SolverConfig c;
    c.max_iters = 200000;
    c.rel_tol = 1e-13;
    double worst = 0.0;
    for (int t = 0; t < 20; ++t) {
        const std::size_t r = rd(rng), k = kd(rng);
        const std::size_t m = std::uniform_int_distribution<std::size_t>(1, std::min<std::size_t>(3, r - 1))(rng);
        const auto g = oracle::random_graph(r, m, rng, t % 2 == 0);
        const Matrix f = oracle::random_matrix(r, k, rng, 0.0, 3.0);
        const auto w = oracle::dense_weights(g);
        for (const Model model : {Model::Linear, Model::Quadratic}) {
            const auto kind = model == Model::Linear ? oracle::Energy::Linear : oracle::Energy::Quadratic;
            const double e_ref = oracle::dense_energy(w, f, oracle::smoothed_energy_minimizer(g, f, kind), kind);
            auto st = make_state(g, Matrix(r, k, 1.0 / static_cast<double>(k)), c);
            pdhg_solve(model, g, f, c, st);
            worst = std::max(worst, std::abs(energy(model, g, f, st.u) - e_ref));
        }
    }
    return {worst <= kEnergyTol, fmt("max energy gap %.2e over 40 solves (tol %.0e)", worst, kEnergyTol)};
}

// Shared by the synthetic-scene criteria.
struct SyntheticSetup {
    SyntheticScene scene;
    NonlocalGraph graph;
    double build_seconds = 0.0;
};

const SyntheticSetup& synthetic() {
    static const SyntheticSetup s = [] {
        const auto t0 = Clock::now();
        SyntheticSetup out;
        out.scene = generate_scene(GbmConfig{});
        out.graph = build_graph(out.scene.cube, PatchConfig{});
        out.build_seconds = seconds_since(t0);
        return out;
    }();
    return s;
}

ClusterConfig synthetic_config(double lambda) {
    ClusterConfig cfg;
    cfg.k = 5;
    cfg.model = Model::Quadratic;
    cfg.init = InitMethod::KMeansPlusPlus;
    cfg.lambda = lambda;
    cfg.mu = 1e-4;
    cfg.seed = 0;
    return cfg;
}

double synthetic_accuracy(double lambda, std::size_t* outer = nullptr) {
    const auto& s = synthetic();
    const auto res = run_clustering(s.scene.cube, s.graph, synthetic_config(lambda), SolverConfig{});
    if (outer) *outer = res.history.size();
    return overall_accuracy(res.labels, s.scene.truth).overall_accuracy;
}

double accuracy_at_default_lambda = -1.0;

Outcome synthetic_scene() {
    const auto& s = synthetic();
    std::size_t outer = 0;
    accuracy_at_default_lambda = synthetic_accuracy(0.1, &outer);
    const auto km = kmeans(s.scene.cube, 5, 0, 1e-4);
    const double km_acc = overall_accuracy(km.labels, s.scene.truth).overall_accuracy;
    return {accuracy_at_default_lambda >= kSynthAccuracy,
            fmt("accuracy %.4f (need >= %.2f), %zu outer iterations, k-means reference %.4f, graph %.1f s",
                accuracy_at_default_lambda, kSynthAccuracy, outer, km_acc, s.build_seconds)};
}

Outcome iteration_economy() {
    const auto toy = scenes::anomaly_toy(30.0);
    const auto g = build_graph(toy.cube, PatchConfig{});
    const auto [seed, init] = scenes::init_inside_a1(toy);
    std::size_t outer[2];
    double acc[2];
    for (int model = 0; model < 2; ++model) {
        ClusterConfig cfg;
        cfg.k = 2;
        cfg.lambda = 1.0;
        cfg.mu = 0.0;
        cfg.init = InitMethod::External;
        cfg.model = model == 0 ? Model::Linear : Model::Quadratic;
        const auto res = run_clustering(toy.cube, g, cfg, SolverConfig{}, &init);
        outer[model] = res.history.size();
        acc[model] = overall_accuracy(res.labels, toy.truth).overall_accuracy;
    }
    const double ratio = static_cast<double>(outer[1]) / static_cast<double>(outer[0]);
    return {ratio <= kIterationRatio,
            fmt("outer iterations linear %zu (acc %.3f), quadratic %zu (acc %.3f), ratio %.2f (need <= %.2f), "
                "init seed %llu",
                outer[0], acc[0], outer[1], acc[1], ratio, kIterationRatio, static_cast<unsigned long long>(seed))};
}

Outcome sensitivity() {
    std::string detail = "accuracy by lambda:";
    double lo = 1.0, hi = 0.0;
    for (double lambda : {1e-3, 1e-2, 1e-1, 1.0, 10.0}) {
        // The centre point was already run for the synthetic-scene criterion.
        const double acc = lambda == 1e-1 && accuracy_at_default_lambda >= 0.0 ? accuracy_at_default_lambda
                                                                               : synthetic_accuracy(lambda);
        lo = std::min(lo, acc);
        hi = std::max(hi, acc);
        detail += fmt(" %g->%.4f", lambda, acc);
    }
    detail += fmt(", spread %.1f points (need < %.0f)", 100.0 * (hi - lo), 100.0 * kSensitivitySpread);
    return {hi - lo < kSensitivitySpread, detail};
}

Outcome feasibility() {
    oracle::Rng rng(107);
    std::size_t iterations = 0;
    double simplex_err = 0.0, ball_excess = 0.0;
    auto watch = [&](const NonlocalGraph& g) {
        return [&, gp = &g](const SaddleState& s) {
            ++iterations;
            for (std::size_t i = 0; i < s.u.rows(); ++i) {
                double sum = 0.0;
                for (double v : s.u.row(i)) {
                    simplex_err = std::max(simplex_err, -v);
                    sum += v;
                }
                simplex_err = std::max(simplex_err, std::abs(sum - 1.0));
            }
            const std::size_t m = gp->m();
            for (std::size_t i = 0; i < gp->pixels(); ++i) {
                for (std::size_t l = 0; l < s.p.k; ++l) {
                    double n2 = 0.0;
                    for (std::size_t q = 0; q < m; ++q) n2 += s.p.at(i * m + q, l) * s.p.at(i * m + q, l);
                    ball_excess = std::max(ball_excess, std::sqrt(n2) - 1.0);
                }
            }
        };
    };
    for (int t = 0; t < 40; ++t) {
        const std::size_t r = 20 + 15 * static_cast<std::size_t>(t), k = 2 + static_cast<std::size_t>(t) % 7;
        const auto g = oracle::random_graph(r, 1 + static_cast<std::size_t>(t) % 8, rng, t % 2 == 0);
        const Matrix f = oracle::random_matrix(r, k, rng, 0.0, 5.0);
        SolverConfig c;
        c.max_iters = 200;
        c.randomize_dual = t % 3 == 0;
        c.seed = static_cast<std::uint64_t>(t);
        auto st = make_state(g, oracle::random_simplex_rows(r, k, rng), c);
        pdhg_solve(t % 2 ? Model::Linear : Model::Quadratic, g, f, c, st, watch(g));
    }
    // Full clustering runs on the anomaly toy, both models.
    const auto toy = scenes::anomaly_toy(20.0, 3);
    const auto g = build_graph(toy.cube, PatchConfig{});
    for (Model model : {Model::Linear, Model::Quadratic}) {
        ClusterConfig cfg;
        cfg.k = 3;
        cfg.model = model;
        cfg.init = InitMethod::Random;
        ClusterHooks hooks;
        hooks.inner = watch(g);
        run_clustering(toy.cube, g, cfg, SolverConfig{}, nullptr, hooks);
    }
    return {simplex_err <= kSimplexTol && ball_excess <= kBallTol,
            fmt("%zu iterations checked, worst simplex error %.2e (tol %.0e), worst dual-ball excess %.2e (tol %.0e)",
                iterations, simplex_err, kSimplexTol, std::max(0.0, ball_excess), kBallTol)};
}

Outcome matching() {
    oracle::Rng rng(108);
    std::uniform_int_distribution<std::size_t> kd(1, 6);
    int mismatches = 0;
    for (int t = 0; t < 100; ++t) {
        const std::size_t k = kd(rng), k_gt = kd(rng), n = 200;
        std::vector<std::uint32_t> pred(n);
        GroundTruth gt;
        gt.rows = 1;
        gt.cols = n;
        std::vector<std::vector<std::size_t>> counts(k, std::vector<std::size_t>(k_gt, 0));
        for (std::size_t i = 0; i < n; ++i) {
            const auto truth = static_cast<std::uint32_t>(rng() % k_gt);
            // Correlated labels so the matching is not trivial.
            pred[i] = static_cast<std::uint32_t>(rng() % 3 ? (truth * 7 + 3) % k : rng() % k);
            gt.labels.emplace_back(truth);
            ++counts[pred[i]][truth];
        }
        const auto rep = overall_accuracy(LabelMap(1, n, k, pred), gt);
        if (rep.n_correct != oracle::brute_force_matching_weight(counts)) ++mismatches;
    }
    return {mismatches == 0, fmt("%d of 100 random pairs disagree with exhaustive search", mismatches)};
}

}  // namespace

int main(int argc, char** argv) {
    report_file = std::fopen(argc > 1 ? argv[1] : "acceptance_report.txt", "w");
    try {
        report(1, "preconditioned simplex projection", 10.0, simplex_projection);
        report(2, "gradient/divergence adjointness", 5.0, adjointness);
        report(3, "PDHG energies vs long-run oracle", 60.0, solver_optimality);
        report(4, "synthetic scene accuracy", 300.0, synthetic_scene);
        report(5, "quadratic vs linear outer iterations", 120.0, iteration_economy);
        report(6, "lambda sensitivity", 900.0, sensitivity);
        report(7, "simplex and dual-ball invariants", 0.0, feasibility);
        report(8, "matching vs exhaustive search", 5.0, matching);
    } catch (const std::exception& e) {
        emit(std::string("acceptance run aborted: ") + e.what());
        return 2;
    }
    std::string known;
    for (int id : kKnownShortfalls) known += " " + std::to_string(id);
    emit(fmt("%d unexpected failure(s); known shortfalls:%s", failures_unexpected, known.c_str()));
    if (report_file) std::fclose(report_file);
    return failures_unexpected == 0 ? 0 : 1;
}
