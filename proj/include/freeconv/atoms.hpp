#pragma once
#include <complex>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "freeconv/density.hpp"
#include "freeconv/measure.hpp"
#include "freeconv/subordination.hpp"

namespace freeconv {

/// Probed masses below this do not count as atoms.
inline constexpr double kAtomThreshold = 1e-3;

/**
 * A location where the convolution can carry an atom: a pair of component
 * atoms whose masses sum to more than 1.  The list of such pairs is exhaustive
 * for the atoms of the convolution (with mass mass1 + mass2 - 1), except that
 * on the half-line the product can additionally have an atom at 0, which is
 * probed directly instead.
 */
struct AtomCandidate {
    double alpha = 0;    // atom location: position, or angle on the circle
    double alpha1 = 0, alpha2 = 0;
    double mass1 = 0, mass2 = 0;
    double predicted_mass = 0;
};

std::vector<AtomCandidate> candidate_atoms(const RealMeasure& mu1, const RealMeasure& mu2);
std::vector<AtomCandidate> candidate_atoms(const PosMeasure& mu1, const PosMeasure& mu2);
std::vector<AtomCandidate> candidate_atoms(const CircleMeasure& mu1, const CircleMeasure& mu2);

struct ProbeResult {
    double mass = 0;
    double error = 0;
    bool flagged = true;
};

/**
 * Atom mass from the boundary behavior of the Cauchy transform:
 * (i eps) G(alpha + i eps) -> mass(alpha), extrapolated along the ladder.
 * Non-convergent rungs are dropped and flag the result; fewer than three
 * surviving rungs leave it fully flagged.
 */
ProbeResult atom_mass_probe(const TransformEvaluator& cauchy, double alpha,
                            const std::vector<double>& ladder = default_eps_ladder());

/**
 * Circle version along the radius: eps/2 times the Poisson integral
 * Re[(1 + eta)/(1 - eta)] at (1-eps) e^{-i angle} converges to the atom mass.
 * The evaluator returns psi on the disk.
 */
ProbeResult atom_mass_probe_circle(const TransformEvaluator& psi, double angle,
                                   const std::vector<double>& ladder = default_eps_ladder());

/**
 * One detected atom of a convolution together with the boundary data of the
 * subordination functions at it and the residuals of the identities that the
 * component decomposition must satisfy (locations compose to alpha, masses
 * satisfy m1 + m2 = mass + 1, and the Julia-Caratheodory quotients equal
 * m_j / mass).  theorem_applicable is false only for the half-line atom at 0,
 * which carries no component decomposition.
 */
struct AtomReport {
    double alpha = 0;
    double mass = 0;
    double mass_error = 0;
    double predicted_mass = 0;
    bool from_candidate = false;
    bool theorem_applicable = false;
    bool flagged = false;
    double alpha1 = 0, alpha2 = 0;
    double component_mass1 = 0, component_mass2 = 0;
    std::complex<double> omega_limit1{0, 0}, omega_limit2{0, 0};
    std::complex<double> quotient1{0, 0}, quotient2{0, 0};
    double residual_sum_identity = 0;
    double residual_mass_identity = 0;
    double residual_derivative1 = 0, residual_derivative2 = 0;
};

struct AtomIdentityResiduals {
    double sum_identity = 0;
    double mass_identity = 0;
    double derivative1 = 0, derivative2 = 0;
    double max() const;
};

/// Residuals of the atom identities collected from a report.
AtomIdentityResiduals verify_atom_theorem(const AtomReport& report);

struct AtomOptions {
    std::vector<double> ladder = default_eps_ladder();
    SolveOptions solve{};
    double threshold = kAtomThreshold;
};

/// Candidate construction, ladder probing and boundary extrapolation for all
/// atoms of the convolution, sorted by location.
std::vector<AtomReport> detect_atoms(const RealMeasure& mu1, const RealMeasure& mu2,
                                     const AtomOptions& opt = {});
std::vector<AtomReport> detect_atoms(const PosMeasure& mu1, const PosMeasure& mu2,
                                     const AtomOptions& opt = {});
std::vector<AtomReport> detect_atoms(const CircleMeasure& mu1, const CircleMeasure& mu2,
                                     const AtomOptions& opt = {});

/**
 * Every pair of atoms of a convolution must share a component: alpha1 equal or
 * alpha2 equal (angles compared modulo 2pi on the circle).  Checked on the
 * extrapolated boundary limits, so it exercises the numerics rather than the
 * exact candidate construction.
 */
bool shared_component_consistent(const std::vector<AtomReport>& reports, bool circle = false,
                                 double tol = 1e-6);

struct GapZeroResult {
    double gamma = 0;
    int sign_changes = 0;
    bool found = false;
    bool unique = false;
};

/**
 * In a gap (alpha, beta) of a measure with atoms at the endpoints, the real
 * boundary values of G decrease strictly from +infinity to -infinity and cross
 * zero exactly once.  Scans the extrapolated boundary values of Re G on the
 * interior and bisects the bracketing pair to locate the zero gamma.
 */
GapZeroResult find_gap_zero(const TransformEvaluator& cauchy, double alpha, double beta,
                            const std::vector<double>& ladder = default_eps_ladder(),
                            int scan_points = 64);

/// Evaluators wiring the solvers into the ladder-based pipelines; they throw
/// NonConvergenceError on flagged samples.
TransformEvaluator additive_cauchy_evaluator(RealMeasure mu1, RealMeasure mu2,
                                             SolveOptions opt = {});
TransformEvaluator multiplicative_cauchy_evaluator(PosMeasure mu1, PosMeasure mu2,
                                                   SolveOptions opt = {});
TransformEvaluator multiplicative_psi_evaluator(CircleMeasure mu1, CircleMeasure mu2,
                                                SolveOptions opt = {});

/// JSON report list ("schema": "freeconv/1").
void write_atom_reports_json(const std::vector<AtomReport>& reports, const std::string& operation,
                             const std::filesystem::path& path);

}  // namespace freeconv
