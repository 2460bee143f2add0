#pragma once
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "freeconv/density.hpp"
#include "freeconv/measure.hpp"

namespace freeconv {

/**
 * Random-matrix cross-check.  Each trial draws deterministic diagonal models
 * A, B from the input measures (eigenvalues at the quantile mid-grid
 * (i + 1/2)/N) and an independent Haar unitary U, then diagonalizes
 *
 *   add         A + U B U*
 *   mul-pos     A^{1/2} U B U* A^{1/2}
 *   mul-circle  A U B U*        (eigenvalue angles are reported)
 *
 * Streams are reproducible: trial t uses an mt19937_64 seeded from a
 * splitmix64 hash of (seed, t), so results are independent of trial order.
 */
struct EigenSample {
    std::string model;  // "add" | "mul-pos" | "mul-circle"
    int dimension = 0;
    int trials = 0;
    std::uint64_t seed = 0;
    // trials * dimension values, sorted ascending within each trial;
    // angles in [0, 2pi) for the circle model.
    std::vector<double> eigenvalues;
};

EigenSample sample_additive(const RealMeasure& m1, const RealMeasure& m2, int dimension,
                            int trials, std::uint64_t seed);
EigenSample sample_multiplicative(const PosMeasure& m1, const PosMeasure& m2, int dimension,
                                  int trials, std::uint64_t seed);
EigenSample sample_multiplicative(const CircleMeasure& m1, const CircleMeasure& m2, int dimension,
                                  int trials, std::uint64_t seed);

/**
 * Computed eigenvalues closer than this to a target atom are treated as lying
 * exactly on it when the KS distance is formed.  Diagonalization scatters a
 * spectral cluster by a few ulps around its true location (observed ~1e-13 at
 * dimension 3000); without collapsing that scatter the one-sided comparison at
 * the jump would read half the atom mass as error.  The tolerance sits far
 * above that noise floor and far below any genuine spectral spacing.
 */
inline constexpr double kAtomSnapTol = 1e-8;

/**
 * Kolmogorov-Smirnov distance between the pooled empirical distribution of
 * the sample and a target distribution function.  The supremum is taken
 * atom-aware: at every distinct sample value both one-sided deviations are
 * checked against the right-continuous CDF and its left limit, and sample
 * values within kAtomSnapTol of a target atom are snapped onto it, so atom
 * clusters (e.g. eigenvalues pinned at 0 or 1) are compared against atom
 * masses rather than smeared.  Circle samples are compared in the angle
 * coordinate.
 */
double ks_distance(const EigenSample& sample, const AnyMeasure& target);

/// Numerically recovered distribution: detected atoms plus a density grid
/// (trapezoid CDF between grid points, renormalized to total mass one).
struct RecoveredMeasure {
    std::vector<Atom> atoms;
    DensityGrid density;
};

double ks_distance(const EigenSample& sample, const RecoveredMeasure& target);

void write_eigenvalues_csv(const EigenSample& sample, const std::filesystem::path& path);
void write_sample_meta_json(const EigenSample& sample, const std::filesystem::path& path,
                            double ks = -1);

}  // namespace freeconv
