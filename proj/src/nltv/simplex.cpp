#include "nltv/simplex.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

#include "nltv/common.hpp"

namespace nltv {

void proj_simplex(std::span<const double> y, std::span<double> out) {
    const std::size_t k = y.size();
    require(out.size() == k && k > 0, "proj_simplex: size mismatch");
    thread_local std::vector<double> sorted;
    sorted.assign(y.begin(), y.end());
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    double cumsum = 0.0;
    double theta = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
        cumsum += sorted[j];
        const double t = (cumsum - 1.0) / static_cast<double>(j + 1);
        if (j + 1 == k || t >= sorted[j + 1]) {
            theta = t;
            break;
        }
    }
    for (std::size_t i = 0; i < k; ++i) out[i] = std::max(y[i] - theta, 0.0);
}

std::vector<double> proj_simplex(std::span<const double> y) {
    std::vector<double> out(y.size());
    proj_simplex(y, out);
    return out;
}

double precond_proj_simplex(std::span<const double> a, std::span<const double> y,
                            std::span<double> out, std::span<int> order) {
    const std::size_t k = y.size();
    require(a.size() == k && out.size() == k && order.size() >= k && k > 0,
            "precond_proj_simplex: size mismatch");

    if (k == 1) {
        out[0] = 1.0;
        return a[0] * y[0] - a[0] * a[0];
    }

    // Breakpoints beta_i = a_i y_i; the active set is a prefix of the
    // descending order of beta.
    for (std::size_t i = 0; i < k; ++i) order[i] = static_cast<int>(i);
    auto beta = [&](int i) { return a[i] * y[i]; };
    std::sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k),
              [&](int l, int r) { return beta(l) > beta(r) || (beta(l) == beta(r) && l < r); });

    double sum_bw = 0.0;  // sum of beta_i / a_i^2 over the active prefix
    double sum_w = 0.0;   // sum of 1 / a_i^2 over the active prefix
    double lambda = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
        const int i = order[j];
        const double w = 1.0 / (a[i] * a[i]);
        sum_bw += beta(i) * w;
        sum_w += w;
        lambda = (sum_bw - 1.0) / sum_w;
        if (j + 1 == k || lambda >= beta(order[j + 1])) break;
    }
    // Computed before writing so that out may alias y.
    for (std::size_t i = 0; i < k; ++i) {
        const double bi = a[i] * y[i];
        out[i] = bi > lambda ? (bi - lambda) / (a[i] * a[i]) : 0.0;
    }
    return lambda;
}

PrecondProjection precond_proj_simplex(std::span<const double> a, std::span<const double> y) {
    PrecondProjection res{std::vector<double>(y.size()), 0.0};
    std::vector<int> order(y.size());
    res.lambda = precond_proj_simplex(a, y, res.u, order);
    return res;
}

}  // namespace nltv
