#pragma once

#include <span>
#include <vector>

namespace nltv {

// Euclidean projection of y onto the unit simplex {x : sum x = 1, x >= 0}.
// Sort-and-threshold, O(k log k). Output may alias the input.
void proj_simplex(std::span<const double> y, std::span<double> out);
std::vector<double> proj_simplex(std::span<const double> y);

// Minimiser of 1/2 ||A u - y||^2 over the unit simplex with A = diag(a), a > 0.
//
// The solution is u_i = max((a_i y_i - lambda) / a_i^2, 0) where lambda is the
// unique root of sum_i max((a_i y_i - lambda) / a_i^2, 0) = 1. The root is found
// exactly by sorting the breakpoints a_i y_i in descending order and scanning
// the piecewise-linear left-hand side. Returns lambda.
//
// `out` may alias `y`; `scratch` must hold k entries.
double precond_proj_simplex(std::span<const double> a, std::span<const double> y,
                            std::span<double> out, std::span<int> scratch);

struct PrecondProjection {
    std::vector<double> u;
    double lambda;
};
PrecondProjection precond_proj_simplex(std::span<const double> a, std::span<const double> y);

}  // namespace nltv
