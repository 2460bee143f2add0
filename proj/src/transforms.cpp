#include "freeconv/transforms.hpp"

#include <cmath>

#include "freeconv/quadrature.hpp"

namespace freeconv {

namespace detail {

std::complex<double> cauchy_resolvent(const RealMeasure& mu, std::complex<double> z) {
    std::complex<double> acc = 0;
    for (const auto& a : mu.atoms()) acc += a.mass / (z - a.position);
    for (const auto& wp : mu.pieces()) acc += wp.weight * wp.piece.cauchy(z);
    return acc;
}

bool near_positive_axis(std::complex<double> z) {
    return std::abs(z.imag()) < kDomainMargin && z.real() > -kDomainMargin;
}

}  // namespace detail

std::complex<double> cauchy_transform(const RealMeasure& mu, std::complex<double> z) {
    if (!(z.imag() >= kDomainMargin))
        throw DomainError("cauchy transform requires Im z >= 1e-12");
    return detail::cauchy_resolvent(mu, z);
}

std::complex<double> reciprocal_cauchy(const RealMeasure& mu, std::complex<double> z) {
    const std::complex<double> g = cauchy_transform(mu, z);
    if (g == std::complex<double>(0, 0)) throw Error("internal", "cauchy transform vanished on C+");
    return 1.0 / g;
}

std::complex<double> psi_transform(const PosMeasure& mu, std::complex<double> z) {
    if (mu.is_delta_zero())
        throw Error("psi-undefined-for-delta-zero", "psi of the point mass at 0 is identically 0");
    if (detail::near_positive_axis(z))
        throw DomainError("psi on the half-line carrier requires z off [0, infinity)");
    std::complex<double> acc = 0;
    for (const auto& a : mu.atoms()) {
        if (a.position == 0) continue;
        acc += a.mass * a.position * z / (1.0 - a.position * z);
    }
    if (!mu.pieces().empty()) {
        // For the absolutely continuous part use z (psi(z)+1) = G(1/z), i.e.
        // psi(z) = G(1/z)/z - 1, with the resolvent valid off the support.
        const std::complex<double> w = 1.0 / z;
        for (const auto& wp : mu.pieces())
            acc += wp.weight * (wp.piece.cauchy(w) / z - 1.0);
    }
    return acc;
}

std::complex<double> eta_transform(const PosMeasure& mu, std::complex<double> z) {
    const std::complex<double> psi = psi_transform(mu, z);
    const std::complex<double> den = 1.0 + psi;
    if (std::abs(den) < 1e-14 * (1.0 + std::abs(psi)))
        throw Error("eta-pole", "1 + psi vanishes at the requested point");
    return psi / den;
}

std::complex<double> psi_transform(const CircleMeasure& mu, std::complex<double> z) {
    if (!(std::abs(z) <= 1.0 - kDomainMargin))
        throw DomainError("psi on the circle carrier requires |z| <= 1 - 1e-12");
    std::complex<double> acc = 0;
    for (const auto& a : mu.atoms()) {
        const std::complex<double> zeta_z = std::polar(1.0, a.position) * z;
        acc += a.mass * zeta_z / (1.0 - zeta_z);
    }
    if (!mu.pieces().empty()) {
        // The integrand peaks near the angle of 1/conj(z) with width 1 - |z|;
        // grade the mesh there so radial limits stay cheap and accurate.
        const double peak = std::fmod(-std::arg(z) + 4 * M_PI, 2 * M_PI);
        const double width = std::max(1.0 - std::abs(z), 1e-9);
        for (const auto& wp : mu.pieces()) {
            auto f = [&](double th) {
                const std::complex<double> zeta_z = std::polar(1.0, th) * z;
                return wp.piece.density(th) * zeta_z / (1.0 - zeta_z);
            };
            const double lo = wp.piece.support_lo(), hi = wp.piece.support_hi();
            auto in = quad::integrate_peaked(f, lo, hi, peak, width, 1e-12);
            if (!in.converged && in.error > 1e-12 * std::max(1.0, std::abs(in.value)))
                throw QuadratureError(1e-12, in.error);
            acc += wp.weight * in.value;
        }
    }
    return acc;
}

std::complex<double> eta_transform(const CircleMeasure& mu, std::complex<double> z) {
    const std::complex<double> psi = psi_transform(mu, z);
    const std::complex<double> den = 1.0 + psi;
    if (std::abs(den) < 1e-14 * (1.0 + std::abs(psi)))
        throw Error("eta-pole", "1 + psi vanishes at the requested point");
    return psi / den;
}

}  // namespace freeconv
