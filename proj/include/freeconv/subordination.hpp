#pragma once
#include <complex>

#include "freeconv/measure.hpp"

namespace freeconv {

struct SolveOptions {
    double tol = 1e-12;
    long max_iter = 10000;
};

/**
 * One solved point of the subordination system.  For the additive convolution
 * `value` is the Cauchy transform of mu1 boxplus mu2 at z; for the
 * multiplicative convolutions it is eta of mu1 boxtimes mu2 at z.
 *
 * residual_subord = |G1(omega1) - G2(omega2)| (resp. the eta version) and
 * residual_identity is the defect of omega1 + omega2 = z + 1/G (resp.
 * omega1 omega2 = z eta), which the construction makes vanish identically up
 * to rounding.
 */
struct SubordinationSample {
    std::complex<double> z;
    std::complex<double> omega1, omega2;
    std::complex<double> value;
    long iterations = 0;
    double residual_subord = 0;
    double residual_identity = 0;
    bool converged = false;
};

/// Fixed-point iteration stalled before reaching the residual target; the best
/// iterate is still available in sample().
class NonConvergenceError : public Error {
public:
    explicit NonConvergenceError(SubordinationSample s)
        : Error("non-convergence", "subordination iteration did not reach its residual target"),
          sample_(s) {}
    const SubordinationSample& sample() const { return sample_; }

private:
    SubordinationSample sample_;
};

/**
 * Subordination pair for the free additive convolution at z in the upper
 * half-plane: iterates w -> z + h2(z + h1(w)) with h_j(w) = F_j(w) - w, which
 * preserves {Im w >= Im z} and converges to omega1; omega2 is then read off
 * the sum identity, making residual_identity vanish by construction while the
 * subordination residual is measured independently.
 */
SubordinationSample solve_additive(const RealMeasure& mu1, const RealMeasure& mu2,
                                   std::complex<double> z, const SolveOptions& opt = {});

/**
 * Subordination pair for the free multiplicative convolution of measures on
 * [0, infinity), for z off that half-line.  Iterates w -> z k2(z k1(w)) with
 * k_j(w) = eta_j(w)/w; for Im z > 0 the sector {arg z <= arg w < pi} is
 * invariant, points with Im z < 0 are handled by conjugation, and negative
 * real z stay on the negative axis.
 */
SubordinationSample solve_multiplicative(const PosMeasure& mu1, const PosMeasure& mu2,
                                         std::complex<double> z, const SolveOptions& opt = {});

/**
 * Same fixed-point scheme on the open unit disk for measures on the unit
 * circle.  Both first moments must be nonzero; otherwise the iteration map
 * degenerates and the input is rejected with code "zero-first-moment".
 */
SubordinationSample solve_multiplicative(const CircleMeasure& mu1, const CircleMeasure& mu2,
                                         std::complex<double> z, const SolveOptions& opt = {});

/// G of mu1 boxplus mu2 at z; throws NonConvergenceError on a flagged sample.
std::complex<double> convolution_cauchy(const RealMeasure& mu1, const RealMeasure& mu2,
                                        std::complex<double> z, const SolveOptions& opt = {});

/// eta of the multiplicative convolution; throws NonConvergenceError when flagged.
std::complex<double> convolution_eta(const PosMeasure& mu1, const PosMeasure& mu2,
                                     std::complex<double> z, const SolveOptions& opt = {});
std::complex<double> convolution_eta(const CircleMeasure& mu1, const CircleMeasure& mu2,
                                     std::complex<double> z, const SolveOptions& opt = {});

/**
 * Cauchy transform of mu1 boxtimes mu2 (half-line carrier) at zeta off
 * [0, infinity), recovered from eta by G(zeta) = 1/(zeta (1 - eta(1/zeta))).
 */
std::complex<double> convolution_cauchy(const PosMeasure& mu1, const PosMeasure& mu2,
                                        std::complex<double> zeta, const SolveOptions& opt = {});

}  // namespace freeconv
