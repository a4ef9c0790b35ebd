#include "nltv/pdhg.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "nltv/simplex.hpp"

namespace nltv {

SolverConfig SolverConfig::resolved(const NonlocalGraph& g) const {
    SolverConfig out = *this;
    const double norm = g.operator_norm();
    if (auto_steps) {
        out.tau = out.sigma = norm > 0.0 ? 1.0 / norm : 1.0;
    }
    require(out.tau > 0.0 && out.sigma > 0.0, "step sizes tau and sigma must be positive");
    require(theta >= 0.0 && theta <= 1.0, "theta must lie in [0, 1]");
    require(max_iters >= 1, "max_iters must be >= 1");
    require(rel_tol >= 0.0, "rel_tol must be >= 0");
    require(out.sigma * out.tau * norm * norm <= 1.0 + 1e-12,
            "step sizes violate sigma*tau*||grad_w||^2 <= 1");
    return out;
}

namespace {

template <class G>
double mixed_distance_impl(std::span<const G> g, std::span<const double> c, double mu) {
    require(g.size() == c.size(), "mixed_distance: band count mismatch");
    double gg = 0.0, cc = 0.0, gc = 0.0, diff2 = 0.0;
    bool equal = true;
    for (std::size_t b = 0; b < g.size(); ++b) {
        const double gv = g[b];
        const double cv = c[b];
        gg += gv * gv;
        cc += cv * cv;
        gc += gv * cv;
        const double d = gv - cv;
        diff2 += d * d;
        equal = equal && gv == cv;
    }
    if (gg <= 0.0 || cc <= 0.0) fail(ErrorKind::InvalidArgument, "mixed_distance: zero-norm spectrum");
    if (equal) return 0.0;
    const double cosine = std::max(0.0, 1.0 - gc / (std::sqrt(gg) * std::sqrt(cc)));
    return cosine + mu * std::sqrt(diff2);
}

}  // namespace

double mixed_distance(std::span<const float> g, std::span<const double> c, double mu) {
    return mixed_distance_impl(g, c, mu);
}

double mixed_distance(std::span<const double> g, std::span<const double> c, double mu) {
    return mixed_distance_impl(g, c, mu);
}

Matrix fidelity(const HsiCube& cube, const Matrix& centroids, double lambda, double mu) {
    require(centroids.cols() == cube.bands(), "fidelity: centroid band count mismatch");
    require(std::isfinite(lambda) && lambda >= 0.0, "lambda must be finite and >= 0");
    require(std::isfinite(mu) && mu >= 0.0, "mu must be finite and >= 0");
    Matrix f(cube.pixels(), centroids.rows());
    for (std::size_t i = 0; i < cube.pixels(); ++i) {
        const auto g = cube.spectrum(i);
        for (std::size_t l = 0; l < centroids.rows(); ++l) {
            const double d = mixed_distance(g, centroids.row(l), mu);
            f(i, l) = 0.5 * lambda * d * d;
        }
    }
    return f;
}

void proj_dual_ball(const NonlocalGraph& g, EdgeField& p) {
    require(p.edges == g.edges(), "proj_dual_ball: field does not match graph pattern");
    const std::size_t m = g.m();
    const std::size_t k = p.k;
    for (std::size_t i = 0; i < g.pixels(); ++i) {
        double* row = p.values.data() + i * m * k;
        for (std::size_t l = 0; l < k; ++l) {
            double n2 = 0.0;
            for (std::size_t s = 0; s < m; ++s) n2 += row[s * k + l] * row[s * k + l];
            // Slack of a few ulps so that projecting twice changes nothing.
            if (n2 > 1.0 + 8 * std::numeric_limits<double>::epsilon()) {
                const double scale = 1.0 / std::sqrt(n2);
                for (std::size_t s = 0; s < m; ++s) row[s * k + l] *= scale;
            }
        }
    }
}

SaddleState make_state(const NonlocalGraph& g, Matrix u0, const SolverConfig& cfg) {
    require(u0.rows() == g.pixels(), "initial u must have one row per pixel");
    require(u0.cols() >= 1, "initial u must have at least one column");
    SaddleState s;
    s.u_bar = u0;
    s.u = std::move(u0);
    s.p = EdgeField(g.edges(), s.u.cols());
    if (cfg.randomize_dual) {
        std::mt19937_64 rng(cfg.seed);
        std::normal_distribution<double> normal;
        for (auto& v : s.p.values) v = normal(rng);
        proj_dual_ball(g, s.p);
    }
    return s;
}

namespace {

// Dual ascent fused with the ball projection: p <- proj_P(p + sigma grad u_bar).
void dual_step(const NonlocalGraph& g, double sigma, const Matrix& u_bar, EdgeField& p) {
    const std::size_t m = g.m();
    const std::size_t k = p.k;
    const auto& tg = g.targets();
    const auto& sw = g.sqrt_weights();
    for (std::size_t i = 0; i < g.pixels(); ++i) {
        const double* ui = u_bar.row(i).data();
        double* row = p.values.data() + i * m * k;
        for (std::size_t s = 0; s < m; ++s) {
            const std::size_t e = i * m + s;
            const double* uj = u_bar.row(tg[e]).data();
            const double step = sigma * sw[e];
            double* pe = row + s * k;
            for (std::size_t l = 0; l < k; ++l) pe[l] += step * (uj[l] - ui[l]);
        }
        for (std::size_t l = 0; l < k; ++l) {
            double n2 = 0.0;
            for (std::size_t s = 0; s < m; ++s) n2 += row[s * k + l] * row[s * k + l];
            if (n2 > 1.0 + 8 * std::numeric_limits<double>::epsilon()) {
                const double scale = 1.0 / std::sqrt(n2);
                for (std::size_t s = 0; s < m; ++s) row[s * k + l] *= scale;
            }
        }
    }
}

template <class PrimalProx>
std::size_t run_pdhg(const NonlocalGraph& g, const Matrix& f, const SolverConfig& cfg_in, SaddleState& st,
                     const IterationObserver& observer, PrimalProx&& prox) {
    const SolverConfig cfg = cfg_in.resolved(g);
    const std::size_t r = g.pixels();
    const std::size_t k = st.u.cols();
    require(f.rows() == r && f.cols() == k, "fidelity matrix must be r x k");
    require(st.u.rows() == r && st.u_bar.rows() == r && st.u_bar.cols() == k, "state shape mismatch");
    require(st.p.edges == g.edges() && st.p.k == k, "dual field does not match graph pattern");

    Matrix div(r, k);
    std::vector<double> next(k);
    std::size_t it = 0;
    while (it < cfg.max_iters) {
        dual_step(g, cfg.sigma, st.u_bar, st.p);
        divergence(g, st.p, div);

        double change2 = 0.0;
        double norm2 = 0.0;
        for (std::size_t i = 0; i < r; ++i) {
            auto ui = st.u.row(i);
            prox(i, ui, div.row(i), cfg.tau, std::span<double>(next));
            auto bi = st.u_bar.row(i);
            for (std::size_t l = 0; l < k; ++l) {
                double v = next[l];
                if (v < 0.0 && v >= -1e-14) v = 0.0;
                const double d = v - ui[l];
                change2 += d * d;
                norm2 += ui[l] * ui[l];
                bi[l] = v + cfg.theta * d;
                ui[l] = v;
            }
        }
        ++it;
        st.iter += 1;
        st.rel_change = std::sqrt(change2) / std::max(1.0, std::sqrt(norm2));
        if (!std::isfinite(st.rel_change)) {
            fail(ErrorKind::Numeric, "non-finite values in PDHG iterate (check lambda scaling)");
        }
        if (observer) observer(st);
        if (st.rel_change < cfg.rel_tol) break;
    }
    return it;
}

}  // namespace

std::size_t pdhg_linear(const NonlocalGraph& g, const Matrix& f, const SolverConfig& cfg, SaddleState& state,
                        const IterationObserver& observer) {
    const std::size_t k = state.u.cols();
    std::vector<double> y(k);
    return run_pdhg(g, f, cfg, state, observer,
                    [&](std::size_t i, std::span<const double> u, std::span<const double> div, double tau,
                        std::span<double> out) {
                        const auto fi = f.row(i);
                        for (std::size_t l = 0; l < k; ++l) y[l] = u[l] + tau * div[l] - tau * fi[l];
                        proj_simplex(y, out);
                    });
}

std::size_t pdhg_quadratic(const NonlocalGraph& g, const Matrix& f, const SolverConfig& cfg, SaddleState& state,
                           const IterationObserver& observer) {
    const std::size_t k = state.u.cols();
    require(f.rows() == g.pixels() && f.cols() == k, "fidelity matrix must be r x k");
    const double tau = cfg.resolved(g).tau;
    // Diagonal preconditioner a = sqrt(1 + 2 tau f), fixed for the solve.
    Matrix a(f.rows(), k);
    for (std::size_t n = 0; n < f.data().size(); ++n) a.data()[n] = std::sqrt(1.0 + 2.0 * tau * f.data()[n]);
    std::vector<double> y(k);
    std::vector<int> order(k);
    return run_pdhg(g, f, cfg, state, observer,
                    [&](std::size_t i, std::span<const double> u, std::span<const double> div, double step,
                        std::span<double> out) {
                        const auto ai = a.row(i);
                        for (std::size_t l = 0; l < k; ++l) y[l] = (u[l] + step * div[l]) / ai[l];
                        precond_proj_simplex(ai, y, out, order);
                    });
}

std::size_t pdhg_solve(Model model, const NonlocalGraph& g, const Matrix& f, const SolverConfig& cfg,
                       SaddleState& state, const IterationObserver& observer) {
    return model == Model::Linear ? pdhg_linear(g, f, cfg, state, observer)
                                  : pdhg_quadratic(g, f, cfg, state, observer);
}

double energy_linear(const NonlocalGraph& g, const Matrix& f, const Matrix& u) {
    require(f.rows() == u.rows() && f.cols() == u.cols(), "energy: f and u shapes differ");
    double e = l1_norm(g, gradient(g, u));
    for (std::size_t n = 0; n < u.data().size(); ++n) e += u.data()[n] * f.data()[n];
    return e;
}

double energy_quadratic(const NonlocalGraph& g, const Matrix& f, const Matrix& u) {
    require(f.rows() == u.rows() && f.cols() == u.cols(), "energy: f and u shapes differ");
    double e = l1_norm(g, gradient(g, u));
    for (std::size_t n = 0; n < u.data().size(); ++n) e += u.data()[n] * u.data()[n] * f.data()[n];
    return e;
}

double energy(Model model, const NonlocalGraph& g, const Matrix& f, const Matrix& u) {
    return model == Model::Linear ? energy_linear(g, f, u) : energy_quadratic(g, f, u);
}

}  // namespace nltv
