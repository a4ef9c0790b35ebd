#include <doctest.h>

#include <random>

#include "nltv/simplex.hpp"
#include "oracles.hpp"

using namespace nltv;

namespace {

double row_sum(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
}

}  // namespace

TEST_CASE("proj_simplex examples") {
    const std::vector<double> on{0.2, 0.3, 0.5};
    const auto p = proj_simplex(on);
    for (std::size_t i = 0; i < 3; ++i) CHECK(p[i] == doctest::Approx(on[i]).epsilon(1e-15));

    const auto q = proj_simplex(std::vector<double>{2.0, 0.0});
    CHECK(q[0] == 1.0);
    CHECK(q[1] == 0.0);

    const auto r = proj_simplex(std::vector<double>{0.6, 0.8});
    CHECK(r[0] == doctest::Approx(0.4).epsilon(1e-14));
    CHECK(r[1] == doctest::Approx(0.6).epsilon(1e-14));
}

TEST_CASE("proj_simplex agrees with the active-set oracle") {
    oracle::Rng rng(11);
    std::uniform_real_distribution<double> d(-3.0, 3.0);
    std::uniform_int_distribution<int> kd(1, 9);
    for (int t = 0; t < 2000; ++t) {
        std::vector<double> y(kd(rng));
        for (auto& v : y) v = d(rng);
        auto expect = y;
        oracle::michelot_projection(expect);
        const auto got = proj_simplex(y);
        CHECK(row_sum(got) == doctest::Approx(1.0).epsilon(1e-12));
        for (std::size_t i = 0; i < y.size(); ++i) {
            CHECK(got[i] >= 0.0);
            CHECK(std::abs(got[i] - expect[i]) <= 1e-12);
        }
    }
}

TEST_CASE("precond_proj_simplex with unit weights is the plain projection") {
    oracle::Rng rng(3);
    std::uniform_real_distribution<double> d(-2.0, 2.0);
    for (int t = 0; t < 500; ++t) {
        std::vector<double> y(1 + t % 7);
        for (auto& v : y) v = d(rng);
        const std::vector<double> a(y.size(), 1.0);
        const auto pre = precond_proj_simplex(a, y);
        const auto plain = proj_simplex(y);
        for (std::size_t i = 0; i < y.size(); ++i) CHECK(std::abs(pre.u[i] - plain[i]) <= 1e-14);
    }
}

TEST_CASE("precond_proj_simplex with a single coordinate returns the point of the simplex") {
    const auto p = precond_proj_simplex(std::vector<double>{3.7}, std::vector<double>{-12.0});
    REQUIRE(p.u.size() == 1);
    CHECK(p.u[0] == 1.0);
}

TEST_CASE("precond_proj_simplex satisfies the optimality conditions") {
    oracle::Rng rng(5);
    std::uniform_real_distribution<double> ad(0.2, 5.0), yd(-3.0, 3.0);
    for (int t = 0; t < 1000; ++t) {
        const std::size_t k = 2 + t % 7;
        std::vector<double> a(k), y(k);
        for (std::size_t i = 0; i < k; ++i) {
            a[i] = ad(rng);
            y[i] = yd(rng);
        }
        const auto p = precond_proj_simplex(a, y);
        CHECK(std::abs(row_sum(p.u) - 1.0) <= 1e-12);
        for (std::size_t i = 0; i < k; ++i) {
            CHECK(p.u[i] >= 0.0);
            if (p.u[i] > 0.0) CHECK(std::abs(a[i] * a[i] * p.u[i] + p.lambda - a[i] * y[i]) <= 1e-12);
            else CHECK(a[i] * y[i] <= p.lambda + 1e-12);
        }
    }
}

TEST_CASE("precond_proj_simplex matches a refined grid search") {
    oracle::Rng rng(9);
    std::uniform_real_distribution<double> ad(0.3, 3.0), yd(-1.5, 1.5);
    for (int t = 0; t < 60; ++t) {
        const std::size_t k = 2 + t % 3;
        std::vector<double> a(k), y(k);
        for (std::size_t i = 0; i < k; ++i) {
            a[i] = ad(rng);
            y[i] = yd(rng);
        }
        const auto p = precond_proj_simplex(a, y);
        const auto g = oracle::grid_precond_projection(a, y);
        for (std::size_t i = 0; i < k; ++i) CHECK(std::abs(p.u[i] - g[i]) <= 2e-3);
    }
}

TEST_CASE("precond_proj_simplex handles ties and repeated breakpoints") {
    const std::vector<double> a{1.0, 2.0, 0.5, 1.0};
    const std::vector<double> y{0.5, 0.25, 1.0, 0.5};  // every a_i y_i = 0.5
    const auto p = precond_proj_simplex(a, y);
    CHECK(std::abs(row_sum(p.u) - 1.0) <= 1e-12);
    // Equal breakpoints: u_i proportional to 1 / a_i^2.
    const double w = 1.0 + 0.25 + 4.0 + 1.0;
    CHECK(p.u[0] == doctest::Approx(1.0 / w));
    CHECK(p.u[1] == doctest::Approx(0.25 / w));
    CHECK(p.u[2] == doctest::Approx(4.0 / w));
}

TEST_CASE("precond_proj_simplex is idempotent on its own output") {
    oracle::Rng rng(21);
    std::uniform_real_distribution<double> ad(0.2, 4.0), yd(-2.0, 2.0);
    for (int t = 0; t < 300; ++t) {
        const std::size_t k = 2 + t % 5;
        std::vector<double> a(k, 1.0), y(k);
        for (auto& v : y) v = yd(rng);
        // With a = 1 the projection of a feasible point is itself.
        const auto once = precond_proj_simplex(a, y);
        const auto twice = precond_proj_simplex(a, once.u);
        for (std::size_t i = 0; i < k; ++i) CHECK(std::abs(once.u[i] - twice.u[i]) <= 1e-14);
        // For general a, feeding y' = a u* (so that A u* = y') returns u*.
        for (auto& v : a) v = ad(rng);
        const auto p = precond_proj_simplex(a, y);
        std::vector<double> y2(k);
        for (std::size_t i = 0; i < k; ++i) y2[i] = a[i] * p.u[i];
        const auto q = precond_proj_simplex(a, y2);
        for (std::size_t i = 0; i < k; ++i) CHECK(std::abs(q.u[i] - p.u[i]) <= 1e-13);
    }
}

TEST_CASE("precond_proj_simplex output may alias its input") {
    std::vector<double> a{1.5, 0.7, 2.0}, y{0.9, -0.2, 0.4};
    const auto expect = precond_proj_simplex(a, y);
    std::vector<int> scratch(3);
    precond_proj_simplex(a, y, y, scratch);
    for (std::size_t i = 0; i < 3; ++i) CHECK(y[i] == expect.u[i]);
}
