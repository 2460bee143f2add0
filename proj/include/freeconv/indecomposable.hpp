#pragma once
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "freeconv/measure.hpp"

namespace freeconv {

/// Default interior-mass threshold treated as an empty gap for measures known
/// only through numerical recovery; exactly represented measures use 0.
inline constexpr double kNumericGapTol = 1e-2;

struct GapRecord {
    double alpha = 0, beta = 0;  // endpoint atom positions; angles on the circle
    double mass_alpha = 0, mass_beta = 0;
    double interior_mass = 0;  // mass of the open interval (alpha, beta) / ccw arc
};

/// Interior mass between every pair of atoms (ordered pairs of distinct atoms
/// on the circle, arcs traversed counterclockwise).
std::vector<GapRecord> scan_gaps(const RealMeasure& m);
std::vector<GapRecord> scan_gaps(const PosMeasure& m);
std::vector<GapRecord> scan_gaps(const CircleMeasure& m);

/**
 * Certificate of free indecomposability: the measure cannot be written as a
 * free convolution of two measures, neither a point mass.  Rules:
 *
 *   gap-atoms-line      two atoms bounding an interval of zero mass,
 *   gap-atoms-halfline  the same with both atom positions > 0 (multiplicative
 *                       convolutions on the half-line),
 *   gap-atoms-circle    two atoms bounding an arc of zero mass,
 *   finite-support      purely atomic with at least two atoms,
 *   point-mass-trivial  point masses are outside the definition; reported as
 *                       a non-verdict rather than either side.
 *
 * "not certified" is explicitly a non-verdict: the tool never claims that a
 * measure is decomposable.
 */
struct Certificate {
    bool certified = false;
    std::string rule = "none";
    std::optional<GapRecord> witness;
    Carrier carrier = Carrier::Line;
    double gap_tol = 0;
};

Certificate certify_indecomposable(const RealMeasure& m, double gap_tol = 0);
Certificate certify_indecomposable(const PosMeasure& m, double gap_tol = 0);
Certificate certify_indecomposable(const CircleMeasure& m, double gap_tol = 0);
Certificate certify_indecomposable(const AnyMeasure& m, double gap_tol = 0);

void write_certificate_json(const Certificate& cert, const std::filesystem::path& path);
std::string certificate_summary(const Certificate& cert);

}  // namespace freeconv
