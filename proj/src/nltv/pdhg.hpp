#pragma once

#include <cstdint>
#include <functional>
#include <span>

#include "nltv/common.hpp"
#include "nltv/graph.hpp"
#include "nltv/hsi.hpp"

namespace nltv {

enum class Model { Linear, Quadratic };

struct SolverConfig {
    double tau = 0.0;     // ignored when auto_steps
    double sigma = 0.0;   // ignored when auto_steps
    double theta = 1.0;
    std::size_t max_iters = 500;
    double rel_tol = 1e-5;
    bool auto_steps = true;           // tau = sigma = 1 / ||grad_w||
    bool randomize_dual = false;      // random feasible p0 instead of zero
    std::uint64_t seed = 0;

    // Resolves automatic step sizes and checks sigma*tau*||grad_w||^2 <= 1.
    SolverConfig resolved(const NonlocalGraph& g) const;
};

// Primal-dual iterate. u is r x k with rows on the unit simplex; p has the
// graph's sparsity pattern with every per-cluster row in the unit L2 ball.
struct SaddleState {
    Matrix u;
    Matrix u_bar;
    EdgeField p;
    std::size_t iter = 0;
    double rel_change = 0.0;
};

// Called after every iteration; used for diagnostics and invariant checks.
using IterationObserver = std::function<void(const SaddleState&)>;

// Cosine distance plus mu-scaled Euclidean distance.
double mixed_distance(std::span<const float> g, std::span<const double> c, double mu);
double mixed_distance(std::span<const double> g, std::span<const double> c, double mu);

// f(i,l) = lambda/2 * mixed_distance(g_i, c_l)^2, an r x k matrix.
Matrix fidelity(const HsiCube& cube, const Matrix& centroids, double lambda, double mu);

// Scales each per-cluster row of p to norm <= 1.
void proj_dual_ball(const NonlocalGraph& g, EdgeField& p);

// Initial iterate: the given u0 (rows must be on the simplex) and either a zero
// or a random feasible dual field.
SaddleState make_state(const NonlocalGraph& g, Matrix u0, const SolverConfig& cfg);

// Runs PDHG in place on `state` until the relative primal change drops below
// rel_tol or max_iters is reached. Returns the number of iterations taken.
std::size_t pdhg_linear(const NonlocalGraph& g, const Matrix& f, const SolverConfig& cfg,
                        SaddleState& state, const IterationObserver& observer = {});
std::size_t pdhg_quadratic(const NonlocalGraph& g, const Matrix& f, const SolverConfig& cfg,
                           SaddleState& state, const IterationObserver& observer = {});
std::size_t pdhg_solve(Model model, const NonlocalGraph& g, const Matrix& f, const SolverConfig& cfg,
                       SaddleState& state, const IterationObserver& observer = {});

// ||grad_w u||_L1 + <u, f>
double energy_linear(const NonlocalGraph& g, const Matrix& f, const Matrix& u);
// ||grad_w u||_L1 + <u, f . u>
double energy_quadratic(const NonlocalGraph& g, const Matrix& f, const Matrix& u);
double energy(Model model, const NonlocalGraph& g, const Matrix& f, const Matrix& u);

}  // namespace nltv
