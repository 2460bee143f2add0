#pragma once
#include <complex>

#include "freeconv/measure.hpp"

namespace freeconv {

/// Points closer to the boundary of a transform's domain than this are rejected.
inline constexpr double kDomainMargin = 1e-12;

/**
 * Cauchy transform G(z) = int 1/(z - t) dmu(t) on the open upper half-plane.
 * Requires Im z >= 1e-12; for boundary behavior take limits along a ladder of
 * heights instead of evaluating on the axis.
 */
std::complex<double> cauchy_transform(const RealMeasure& mu, std::complex<double> z);

/// F(z) = 1/G(z).  Maps the upper half-plane into itself with Im F(z) >= Im z.
std::complex<double> reciprocal_cauchy(const RealMeasure& mu, std::complex<double> z);

/**
 * Moment generating transform psi(z) = int tz/(1 - tz) dmu(t) for a measure on
 * [0, infinity), defined for z off the closed half-line [0, infinity).  The
 * point mass at 0 has identically vanishing psi and is rejected, since its
 * eta carries no information.
 */
std::complex<double> psi_transform(const PosMeasure& mu, std::complex<double> z);

/// eta(z) = psi(z) / (1 + psi(z)) on the same domain as psi.
std::complex<double> eta_transform(const PosMeasure& mu, std::complex<double> z);

/// psi on the open unit disk for a measure on the unit circle.
std::complex<double> psi_transform(const CircleMeasure& mu, std::complex<double> z);

/// eta = psi/(1 + psi) on the open unit disk.
std::complex<double> eta_transform(const CircleMeasure& mu, std::complex<double> z);

namespace detail {

/// G(z) for z anywhere off the closed support (both half-planes, real gaps).
std::complex<double> cauchy_resolvent(const RealMeasure& mu, std::complex<double> z);

/// True if z is within kDomainMargin of the closed half-line [0, infinity).
bool near_positive_axis(std::complex<double> z);

}  // namespace detail

}  // namespace freeconv
