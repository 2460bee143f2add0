#pragma once
#include <complex>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <vector>

#include "freeconv/measure.hpp"

namespace freeconv {

/// Evaluates a transform on the open upper half-plane (or unit disk); throws
/// on domain violations or non-convergence.
using TransformEvaluator = std::function<std::complex<double>(std::complex<double>)>;

/// Heights used for boundary extrapolation, decreasing: 1e-2 ... 1e-6.
std::vector<double> default_eps_ladder();

/// Shorter ladder (down to 1e-5) used for density grids, where the quadratic
/// extrapolation converges well before the solver cost of the deepest rungs.
std::vector<double> density_eps_ladder();

struct Extrapolation {
    std::complex<double> limit{0, 0};
    std::complex<double> slope{0, 0};  // d/ds of the fit at s = 0
    double error = 0;
    bool ok = false;
};

/**
 * Quadratic fit through the last three (node, value) pairs via Newton divided
 * differences, evaluated at node 0; `error` is the distance to the extrapolant
 * of the window shifted back by one rung.  Nodes may be complex (real heights
 * eps for densities, i*eps for boundary values of subordination functions).
 */
Extrapolation richardson(const std::vector<std::complex<double>>& nodes,
                         const std::vector<std::complex<double>>& values);

struct DensityGrid {
    std::vector<double> abscissae;            // points x (angles on the circle)
    std::vector<double> density;
    std::vector<double> extrapolation_error;
    std::vector<std::uint8_t> flagged;        // 1: non-convergent or invalid point
    std::vector<double> eps_ladder;
};

/**
 * Recover the absolutely continuous density on [lo, hi] from a Cauchy
 * transform: density(x) = -Im G(x + i eps)/pi extrapolated to eps = 0 along
 * the ladder.  Evaluator failures and clearly negative extrapolants flag the
 * point; small negative round-off is clamped to zero.
 */
DensityGrid stieltjes_invert(const TransformEvaluator& cauchy, double lo, double hi, int n,
                             std::vector<double> ladder = density_eps_ladder());

/**
 * Density of the angle for a circle-carrier transform, from the radial limit
 * of the Herglotz kernel: density(theta) = Re(1 + 2 psi(r e^{-i theta}))/(2 pi)
 * as r -> 1; the ladder entries are the gaps 1 - r.
 */
DensityGrid circle_density(const TransformEvaluator& psi, double lo, double hi, int n,
                           std::vector<double> ladder = density_eps_ladder());

struct IntervalMass {
    double value = 0;
    bool flagged = false;
};

/**
 * Mass of the recovered density over (lo, hi) by composite Gauss-Legendre
 * quadrature of the extrapolated density, with small exclusion margins cut
 * around the listed atom positions (their mass is not counted).
 */
IntervalMass interval_mass_estimate(const TransformEvaluator& cauchy, double lo, double hi,
                                    const std::vector<double>& atom_positions,
                                    std::vector<double> ladder = density_eps_ladder());

/// Circle version; the interval is the counterclockwise arc from lo to hi.
IntervalMass interval_mass_estimate_circle(const TransformEvaluator& psi, double lo, double hi,
                                           const std::vector<double>& atom_angles,
                                           std::vector<double> ladder = density_eps_ladder());

/// CSV with header "x,density,extrapolation_error,flagged", one row per grid point.
void write_density_csv(const DensityGrid& grid, const std::filesystem::path& path);

/// JSON sidecar with the ladder, grid bounds and flag counts.
void write_density_sidecar(const DensityGrid& grid, const std::filesystem::path& path);

}  // namespace freeconv
