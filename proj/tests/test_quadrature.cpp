#include <doctest.h>

#include <cmath>
#include <complex>
#include <numbers>

#include "freeconv/quadrature.hpp"

using namespace freeconv;
using cd = std::complex<double>;

namespace {

// Apply a bare rule on [-1,1] straight from its tabulated nodes and weights.
template <class F>
double apply_rule(const quad::GaussLegendre& rule, const F& f) {
    double acc = 0.0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) acc += rule.weights[i] * f(rule.nodes[i]);
    return acc;
}

}  // namespace

TEST_CASE("tabulated rules have symmetric nodes and weights summing to two") {
    for (const auto* rule : {&quad::gl8(), &quad::gl16()}) {
        const auto n = rule->nodes.size();
        REQUIRE(rule->weights.size() == n);
        double wsum = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            CHECK(rule->nodes[i] > -1.0);
            CHECK(rule->nodes[i] < 1.0);
            if (i > 0) CHECK(rule->nodes[i] > rule->nodes[i - 1]);
            CHECK(rule->weights[i] > 0.0);
            // symmetry x_i = -x_{n-1-i}, w_i = w_{n-1-i}
            CHECK(rule->nodes[i] == doctest::Approx(-rule->nodes[n - 1 - i]).epsilon(1e-15));
            CHECK(rule->weights[i] == doctest::Approx(rule->weights[n - 1 - i]).epsilon(1e-15));
            wsum += rule->weights[i];
        }
        CHECK(wsum == doctest::Approx(2.0).epsilon(1e-14));
    }
    CHECK(quad::gl8().nodes.size() == 8);
    CHECK(quad::gl16().nodes.size() == 16);
}

TEST_CASE("sixteen-point rule integrates monomials exactly through degree 31") {
    for (int k = 0; k <= 31; ++k) {
        const double got = apply_rule(quad::gl16(), [&](double x) { return std::pow(x, k); });
        const double exact = (k % 2 == 0) ? 2.0 / (k + 1) : 0.0;
        CHECK(std::abs(got - exact) < 5e-15);
    }
    // degree 32 must show a visible quadrature error (rule order is sharp)
    const double got32 = apply_rule(quad::gl16(), [](double x) { return std::pow(x, 32); });
    CHECK(std::abs(got32 - 2.0 / 33.0) > 1e-12);
}

TEST_CASE("eight-point rule integrates monomials exactly through degree 15") {
    for (int k = 0; k <= 15; ++k) {
        const double got = apply_rule(quad::gl8(), [&](double x) { return std::pow(x, k); });
        const double exact = (k % 2 == 0) ? 2.0 / (k + 1) : 0.0;
        CHECK(std::abs(got - exact) < 5e-15);
    }
}

TEST_CASE("adaptive integration of smooth functions meets its tolerance") {
    auto s = quad::integrate([](double x) { return std::sin(x); }, 0.0, std::numbers::pi);
    CHECK(s.converged);
    CHECK(std::abs(s.value - 2.0) < 1e-12);
    // complex-valued integrand: resolvent kernel of the uniform density on [0,1]
    const cd z(0.3, 0.7);
    auto g = quad::integrate([&](double t) { return 1.0 / (z - t); }, 0.0, 1.0);
    const cd exact = std::log(z) - std::log(z - 1.0);
    CHECK(g.converged);
    CHECK(std::abs(g.value - exact) < 1e-11);
}

TEST_CASE("integration width zero and reversed sqrt-endpoint ranges are empty") {
    auto zero = quad::integrate([](double x) { return x; }, 2.0, 2.0);
    CHECK(zero.value == 0.0);
    auto rev = quad::integrate_sqrt_endpoints([](double x) { return x; }, 1.0, -1.0);
    CHECK(rev.value == 0.0);
}

TEST_CASE("endpoint substitution handles inverse square-root singularities") {
    const double pi = std::numbers::pi;
    // arcsine density on (-1,1) integrates to 1
    auto total = quad::integrate_sqrt_endpoints(
        [&](double x) { return 1.0 / (pi * std::sqrt(1.0 - x * x)); }, -1.0, 1.0);
    CHECK(total.converged);
    CHECK(std::abs(total.value - 1.0) < 1e-10);
    // semicircle mass on its support
    auto sc = quad::integrate_sqrt_endpoints(
        [&](double x) { return std::sqrt(4.0 - x * x) / (2.0 * pi); }, -2.0, 2.0);
    CHECK(sc.converged);
    CHECK(std::abs(sc.value - 1.0) < 1e-10);
}

TEST_CASE("pre-graded mesh captures a narrow poisson kernel") {
    const double eps = 1e-5;
    auto p = quad::integrate_peaked(
        [&](double x) { return eps / (std::numbers::pi * (x * x + eps * eps)); }, -1.0, 1.0, 0.0,
        eps);
    const double exact = (2.0 / std::numbers::pi) * std::atan(1.0 / eps);
    CHECK(p.converged);
    CHECK(std::abs(p.value - exact) < 1e-10);
}

TEST_CASE("non-integrable behavior is reported instead of hidden") {
    // jump discontinuity (off the dyadic mesh, so some panel always straddles
    // it) with an unreachable tolerance and a shallow depth cap
    const double c = 1.0 / std::numbers::sqrt2;
    auto j = quad::integrate([&](double x) { return x < c ? 0.0 : 1.0; }, 0.0, 1.0, 1e-15, 6);
    CHECK(!j.converged);
    CHECK(j.error > 1e-15);
}
