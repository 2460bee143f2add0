#pragma once
#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <vector>

namespace freeconv::quad {

/// Nodes and weights of an n-point Gauss-Legendre rule on [-1,1].
struct GaussLegendre {
    std::vector<double> nodes, weights;
    explicit GaussLegendre(int n);
};

const GaussLegendre& gl8();
const GaussLegendre& gl16();

template <class T>
struct Integral {
    T value{};
    double error = 0;  // estimated absolute error
    long evaluations = 0;
    bool converged = true;
};

namespace detail {

inline double magnitude(double x) { return std::abs(x); }
inline double magnitude(const std::complex<double>& x) { return std::abs(x); }

// One GL panel together with the L1 mass of its weighted samples.  The L1 mass
// bounds the rounding base of the panel sum: under cancellation (oscillatory
// integrands) it can far exceed |value|, and it is the correct scale at which
// the computed sum stops carrying information.
template <class T>
struct PanelSum {
    T value{};
    double l1 = 0;
};

template <class F>
auto panel(const F& f, const GaussLegendre& rule, double a, double b)
    -> PanelSum<decltype(f(a))> {
    const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    PanelSum<decltype(f(a))> p;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
        const auto term = rule.weights[i] * f(mid + half * rule.nodes[i]);
        p.value += term;
        p.l1 += magnitude(term);
    }
    p.value = p.value * half;
    p.l1 *= std::abs(half);
    return p;
}

template <class F, class T>
void refine(const F& f, double a, double b, const PanelSum<T>& coarse, double tol, int depth,
            int max_depth, Integral<T>& out) {
    const double mid = 0.5 * (a + b);
    const PanelSum<T> left = panel(f, gl16(), a, mid);
    const PanelSum<T> right = panel(f, gl16(), mid, b);
    out.evaluations += 32;
    const double err = magnitude(coarse.value - (left.value + right.value));
    // Rounding-noise floor of the panel comparison.  Once the disagreement is
    // at this level, bisection only reshuffles rounding errors: the halved
    // per-level tolerance keeps the noise-to-tolerance ratio constant, so
    // without this acceptance a large peaked integrand (e.g. a Poisson kernel
    // of height 1/eps) forces a full 2^max_depth expansion of the subtree.
    const double noise = 64.0 * std::numeric_limits<double>::epsilon() *
                         (left.l1 + right.l1 + coarse.l1);
    if (err <= tol || err <= noise || depth >= max_depth) {
        out.value += left.value + right.value;
        out.error += err;
        if (err > tol && err > noise) out.converged = false;
        return;
    }
    refine(f, a, mid, left, 0.5 * tol, depth + 1, max_depth, out);
    refine(f, mid, b, right, 0.5 * tol, depth + 1, max_depth, out);
}

}  // namespace detail

/// Adaptive composite Gauss-Legendre on [a,b]; the value type is deduced from f
/// (double or complex<double>). Panels are bisected until the difference between
/// the one-panel and two-panel GL16 results meets the panel's share of tol.
template <class F>
auto integrate(F&& f, double a, double b, double tol = 1e-11, int max_depth = 30)
    -> Integral<decltype(f(a))> {
    Integral<decltype(f(a))> out;
    if (a == b) return out;
    const auto coarse = detail::panel(f, gl16(), a, b);
    out.evaluations = 16;
    detail::refine(f, a, b, coarse, tol, 0, max_depth, out);
    return out;
}

/// Integrate f over [a,b] when f may behave like 1/sqrt(distance) at either endpoint.
/// Each half is mapped by t = a + s^2 (resp. t = b - s^2), which turns such behavior
/// into a smooth integrand.
template <class F>
auto integrate_sqrt_endpoints(F&& f, double a, double b, double tol = 1e-11)
    -> Integral<decltype(f(a))> {
    using T = decltype(f(a));
    Integral<T> out;
    if (a >= b) return out;
    const double mid = 0.5 * (a + b), half = std::sqrt(0.5 * (b - a));
    auto lo = integrate([&](double s) -> T { return 2.0 * s * f(a + s * s); }, 0.0, half, 0.5 * tol);
    auto hi = integrate([&](double s) -> T { return 2.0 * s * f(b - s * s); }, 0.0, half, 0.5 * tol);
    (void)mid;
    out.value = lo.value + hi.value;
    out.error = lo.error + hi.error;
    out.evaluations = lo.evaluations + hi.evaluations;
    out.converged = lo.converged && hi.converged;
    return out;
}

/// Adaptive integration over [a,b] with a mesh pre-graded around a peak at x0 of
/// width w, so that sharply localized integrands (Poisson-type kernels) do not
/// force deep uniform bisection.
template <class F>
auto integrate_peaked(F&& f, double a, double b, double x0, double width, double tol = 1e-11)
    -> Integral<decltype(f(a))> {
    using T = decltype(f(a));
    std::vector<double> cuts{a, b};
    if (width > 0 && x0 > a && x0 < b) {
        for (double r = width; r < (b - a); r *= 4.0) {
            if (x0 - r > a) cuts.push_back(x0 - r);
            if (x0 + r < b) cuts.push_back(x0 + r);
        }
        cuts.push_back(x0);
    }
    std::sort(cuts.begin(), cuts.end());
    Integral<T> out;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        auto part = integrate(f, cuts[i], cuts[i + 1], tol / double(cuts.size()));
        out.value += part.value;
        out.error += part.error;
        out.evaluations += part.evaluations;
        out.converged = out.converged && part.converged;
    }
    return out;
}

}  // namespace freeconv::quad
