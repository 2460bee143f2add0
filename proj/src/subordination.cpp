#include "freeconv/subordination.hpp"

#include <cmath>
#include <limits>

#include "freeconv/transforms.hpp"

namespace freeconv {

namespace {

using cd = std::complex<double>;

/// Iterations grow in proportion to 1/dist near the domain boundary, up to a
/// factor of 100 over the configured budget.
long effective_max_iter(const SolveOptions& opt, double dist) {
    const double factor = std::clamp(1e-4 / std::max(dist, 1e-300), 1.0, 100.0);
    return static_cast<long>(static_cast<double>(opt.max_iter) * factor);
}

/// One evaluation of the fixed-point map w -> K(w) together with the paired
/// transform values whose difference vanishes exactly at the subordination
/// point (the working residual).
struct StepEval {
    cd mapped{0, 0};
    double residual = std::numeric_limits<double>::infinity();
    /// Magnitude of the larger of the two compared transform values.  Directly
    /// above an atom the Cauchy transform grows like mass/eps, and the residual
    /// cannot round below ~ ulp * scale^2 / mass (one factor of scale from the
    /// subtraction, one from evaluating the transform at an argument only known
    /// to ulp(|w|)); the scale lets the stop logic recognise that floor.
    double scale = 1.0;
};

/// Plateau detection: stop once the residual has not improved by 10% for a
/// stretch of iterations, which signals the rounding-noise floor.
struct StopState {
    double best = std::numeric_limits<double>::infinity();
    int stall = 0;
    bool plateau(double resid) {
        if (resid < 0.9 * best) {
            best = resid;
            stall = 0;
            return false;
        }
        return ++stall >= 25;
    }
};

struct FixedPointResult {
    cd w{0, 0};
    long iterations = 0;
    bool hit_target = false;
    double displacement = std::numeric_limits<double>::infinity();
};

/**
 * Newton iteration on K(w) - w = 0 with the plain fixed-point update as a
 * safeguard.  K is holomorphic, so its derivative comes from a one-sided
 * finite difference; steps are backtracked until either the displacement
 * |K(w)-w| or the residual improves, and a rejected step falls back to the
 * Picard update w <- K(w).  Plain iteration alone contracts like 1 - O(eps)
 * near the real axis, which is uselessly slow at density-recovery heights.
 *
 * The paired-transform residual alone is not a convergence certificate: it
 * has spurious zeros away from the fixed point (e.g. at w = i*eps for even
 * measures, where G(i*eps) and G(i/eps) agree to O(eps^3)), so the target
 * counts as hit only when the displacement is small as well.
 */
inline double displacement_tol(double tol, cd w) {
    return std::max(tol, 1e-13) * (1.0 + std::abs(w));
}

template <class Step, class Guard>
FixedPointResult newton_picard(const Step& step, const Guard& guard, cd w0, double tol,
                               long max_iter) {
    FixedPointResult out;
    cd w = guard(w0, w0);
    StepEval e = step(w);
    double fnorm = std::abs(e.mapped - w);
    StopState stop;
    long it = 0;
    bool hit = e.residual <= tol && fnorm <= displacement_tol(tol, w);
    while (!hit && it < max_iter) {
        ++it;
        if (!std::isfinite(w.real()) || !std::isfinite(w.imag())) break;
        const double delta = 1e-7 * (1.0 + std::abs(w));
        const StepEval shifted = step(w + delta);
        const cd kprime = (shifted.mapped - e.mapped) / delta;
        const cd denom = kprime - 1.0;
        const cd displacement = e.mapped - w;
        const cd dir = std::abs(denom) < 1e-12 ? displacement : -displacement / denom;
        bool accepted = false;
        double t = 1.0;
        for (int bt = 0; bt < 6 && !accepted; ++bt, t *= 0.5) {
            const cd wt = guard(w + t * dir, w);
            const StepEval et = step(wt);
            const double ft = std::abs(et.mapped - wt);
            if (ft < fnorm || et.residual < e.residual) {
                w = wt;
                e = et;
                fnorm = ft;
                accepted = true;
            }
        }
        if (!accepted) {
            const cd wt = guard(e.mapped, w);
            e = step(wt);
            w = wt;
            fnorm = std::abs(e.mapped - w);
        }
        if (e.residual <= tol && fnorm <= displacement_tol(tol, w)) {
            hit = true;
            break;
        }
        if (stop.plateau(std::min(e.residual, fnorm))) {
            // The iteration has reached its rounding-noise floor.  Where the
            // compared transforms are large (directly above an atom) the
            // absolute target is unattainable; accept a stalled iterate that
            // is an exact numerical fixed point whose residual is at machine
            // precision relative to the transform scale.  Absolute targets are
            // unaffected away from atoms because scale stays O(1) there.
            hit = fnorm <= displacement_tol(tol, w) &&
                  e.residual <= tol * e.scale * e.scale;
            break;
        }
    }
    out.w = w;
    out.iterations = it;
    out.hit_target = hit;
    out.displacement = fnorm;
    return out;
}

SubordinationSample conjugated(SubordinationSample s) {
    s.z = std::conj(s.z);
    s.omega1 = std::conj(s.omega1);
    s.omega2 = std::conj(s.omega2);
    s.value = std::conj(s.value);
    return s;
}

}  // namespace

SubordinationSample solve_additive(const RealMeasure& mu1, const RealMeasure& mu2,
                                   std::complex<double> z, const SolveOptions& opt) {
    if (!(z.imag() >= kDomainMargin))
        throw DomainError("additive subordination requires Im z >= 1e-12");
    const double im_floor = z.imag();
    auto guard = [&](cd v, cd prev) {
        if (v.imag() >= im_floor * (1.0 - 1e-12)) return v;
        cd r(v.real(), std::abs(v.imag()));
        r = prev + 0.5 * (r - prev);
        if (r.imag() < im_floor) r = cd(r.real(), im_floor);
        return r;
    };
    // w -> z + h2(z + h1(w)) with h_j(w) = F_j(w) - w; both half-steps raise
    // the imaginary part, so the map is a self-map of {Im w >= Im z}.
    auto step = [&](cd w) {
        const cd g1 = detail::cauchy_resolvent(mu1, w);
        const cd u = z + 1.0 / g1 - w;
        const cd g2 = detail::cauchy_resolvent(mu2, u);
        StepEval e;
        e.mapped = z + 1.0 / g2 - u;
        e.residual = std::abs(g1 - g2);
        e.scale = std::max({1.0, std::abs(g1), std::abs(g2)});
        return e;
    };
    // Starting above the axis avoids the spurious agreement region near w = z
    // at small Im z and enters the strong-contraction zone immediately.
    const auto fp = newton_picard(step, guard, z + cd(0.0, 1.0), opt.tol,
                                  effective_max_iter(opt, z.imag()));

    SubordinationSample out;
    out.z = z;
    out.iterations = fp.iterations;
    out.omega1 = fp.w;
    const cd g1 = detail::cauchy_resolvent(mu1, out.omega1);
    out.omega2 = z + 1.0 / g1 - out.omega1;
    out.value = g1;
    const cd g2f = detail::cauchy_resolvent(mu2, out.omega2);
    out.residual_subord = std::abs(g1 - g2f);
    out.residual_identity = std::abs(out.omega1 + out.omega2 - z - 1.0 / g1);
    const double scale = std::max({1.0, std::abs(g1), std::abs(g2f)});
    out.converged = fp.hit_target ||
                    (out.residual_subord <= opt.tol * scale * scale &&
                     fp.displacement <= displacement_tol(opt.tol, fp.w));
    return out;
}

namespace {

/// Core multiplicative solve shared by the half-line and circle carriers: the
/// carriers differ only in the eta evaluators, the domain guard and the
/// w -> 0 limits of eta(w)/w (the first moments).
template <class Eta1, class Eta2, class Guard>
SubordinationSample multiplicative_solve(const Eta1& eta1, const Eta2& eta2, const Guard& guard,
                                         cd z, cd k1_at_0, cd k2_at_0, const SolveOptions& opt,
                                         long max_iter) {
    auto ratio1 = [&](cd w) { return std::abs(w) < 1e-100 ? k1_at_0 : eta1(w) / w; };
    // w -> z k2(z k1(w)) with k_j(w) = eta_j(w)/w.
    auto step = [&](cd w) {
        const cd k1 = ratio1(w);
        const cd u = z * k1;
        const cd e2 = eta2(u);
        StepEval e;
        e.mapped = std::abs(u) < 1e-100 ? z * k2_at_0 : z * e2 / u;
        e.residual = std::abs(k1 * w - e2);  // eta1(w) - eta2(u)
        e.scale = std::max({1.0, std::abs(k1 * w), std::abs(e2)});
        return e;
    };
    const auto fp = newton_picard(step, guard, z, opt.tol, max_iter);

    SubordinationSample out;
    out.z = z;
    out.iterations = fp.iterations;
    out.omega1 = fp.w;
    out.value = ratio1(fp.w) * fp.w;  // eta1(omega1)
    out.omega2 = std::abs(fp.w) < 1e-100 ? z * k1_at_0 : z * out.value / fp.w;
    const cd e2f = eta2(out.omega2);
    out.residual_subord = std::abs(out.value - e2f);
    out.residual_identity = std::abs(out.omega1 * out.omega2 - z * out.value);
    const double scale = std::max({1.0, std::abs(out.value), std::abs(e2f)});
    out.converged = fp.hit_target ||
                    (out.residual_subord <= opt.tol * scale * scale &&
                     fp.displacement <= displacement_tol(opt.tol, fp.w));
    return out;
}

}  // namespace

SubordinationSample solve_multiplicative(const PosMeasure& mu1, const PosMeasure& mu2,
                                         std::complex<double> z, const SolveOptions& opt) {
    if (mu1.is_delta_zero() || mu2.is_delta_zero())
        throw Error("delta-zero-input", "multiplicative subordination is undefined for the point mass at 0");
    if (detail::near_positive_axis(z))
        throw DomainError("multiplicative subordination requires z off [0, infinity)");
    if (z.imag() < -kDomainMargin)
        return conjugated(solve_multiplicative(mu1, mu2, std::conj(z), opt));

    const bool on_negative_axis = std::abs(z.imag()) <= kDomainMargin;
    const double dist = on_negative_axis ? std::abs(z.real())
                        : (z.real() <= 0 ? std::abs(z) : z.imag());
    auto first_moment = [](const PosMeasure& mu) {
        double m = 0;
        for (const auto& a : mu.atoms()) m += a.mass * a.position;
        for (const auto& wp : mu.pieces()) m += wp.weight * wp.piece.mean();
        return cd(m, 0.0);
    };
    auto eta1 = [&](cd w) { return eta_transform(mu1, w); };
    auto eta2 = [&](cd w) { return eta_transform(mu2, w); };
    auto guard = [&](cd v, cd prev) {
        if (on_negative_axis) {
            // Exactly real input: the iteration lives on the negative axis.
            double x = v.real();
            if (!(x < 0)) x = 0.5 * (prev.real() + std::min(x, 0.0));
            return cd(std::min(x, -1e-300), 0.0);
        }
        if (v.imag() > 0) return v;
        cd r(v.real(), std::abs(v.imag()));
        r = prev + 0.5 * (r - prev);
        if (r.imag() <= 0) r = cd(r.real(), std::abs(z.imag()));
        return r;
    };
    return multiplicative_solve(eta1, eta2, guard, z, first_moment(mu1), first_moment(mu2), opt,
                                effective_max_iter(opt, dist));
}

SubordinationSample solve_multiplicative(const CircleMeasure& mu1, const CircleMeasure& mu2,
                                         std::complex<double> z, const SolveOptions& opt) {
    const cd m1 = mu1.first_moment(), m2 = mu2.first_moment();
    if (std::abs(m1) < 1e-12 || std::abs(m2) < 1e-12)
        throw Error("zero-first-moment",
                    "multiplicative subordination on the circle needs nonzero first moments");
    if (!(std::abs(z) <= 1.0 - kDomainMargin))
        throw DomainError("multiplicative subordination on the circle requires |z| <= 1 - 1e-12");
    if (std::abs(z) == 0.0) {
        SubordinationSample out;
        out.z = z;
        out.converged = true;
        return out;
    }
    const double rz = std::abs(z);
    auto eta1 = [&](cd w) { return eta_transform(mu1, w); };
    auto eta2 = [&](cd w) { return eta_transform(mu2, w); };
    auto guard = [&](cd v, cd prev) {
        const double r = std::abs(v);
        if (r <= rz) return v;
        cd proj = v * (rz / r);
        return prev + 0.5 * (proj - prev);
    };
    return multiplicative_solve(eta1, eta2, guard, z, m1, m2, opt,
                                effective_max_iter(opt, 1.0 - rz));
}

std::complex<double> convolution_cauchy(const RealMeasure& mu1, const RealMeasure& mu2,
                                        std::complex<double> z, const SolveOptions& opt) {
    auto s = solve_additive(mu1, mu2, z, opt);
    if (!s.converged) throw NonConvergenceError(s);
    return s.value;
}

std::complex<double> convolution_eta(const PosMeasure& mu1, const PosMeasure& mu2,
                                     std::complex<double> z, const SolveOptions& opt) {
    auto s = solve_multiplicative(mu1, mu2, z, opt);
    if (!s.converged) throw NonConvergenceError(s);
    return s.value;
}

std::complex<double> convolution_eta(const CircleMeasure& mu1, const CircleMeasure& mu2,
                                     std::complex<double> z, const SolveOptions& opt) {
    auto s = solve_multiplicative(mu1, mu2, z, opt);
    if (!s.converged) throw NonConvergenceError(s);
    return s.value;
}

std::complex<double> convolution_cauchy(const PosMeasure& mu1, const PosMeasure& mu2,
                                        std::complex<double> zeta, const SolveOptions& opt) {
    const cd eta = convolution_eta(mu1, mu2, 1.0 / zeta, opt);
    return 1.0 / (zeta * (1.0 - eta));
}

}  // namespace freeconv
