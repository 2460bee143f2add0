#pragma once
#include <complex>
#include <filesystem>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "freeconv/errors.hpp"

namespace freeconv {

enum class Carrier { Line, HalfLine, Circle };

std::string carrier_name(Carrier c);

/// Two atoms closer than this are considered coincident and rejected.
inline constexpr double kAtomCoincidenceTol = 1e-10;

struct Atom {
    double position = 0;  // point on the line / half-line, or angle in [0,2pi) on the circle
    double mass = 0;
};

enum class PieceKind { Semicircle, Arcsine, Uniform, MarchenkoPastur, Tabulated };

std::string piece_kind_name(PieceKind k);

/**
 * One unit-mass absolutely continuous density on a compact interval.  On the
 * circle carrier the variable is the angle and the support must lie in [0,2pi].
 * Closed-form families carry exact Cauchy transforms valid anywhere off the
 * support (both half-planes and both real rays); tabulated densities use
 * per-segment analytic integration of the linear interpolant, which is equally
 * valid arbitrarily close to the real axis.
 */
class DensityPiece {
public:
    static DensityPiece semicircle(double center, double radius);
    static DensityPiece arcsine(double a, double b);
    static DensityPiece uniform(double a, double b);
    static DensityPiece marchenko_pastur(double ratio);  // ratio in (0,1]
    static DensityPiece tabulated(std::vector<double> abscissae, std::vector<double> values);

    PieceKind kind() const { return kind_; }
    double support_lo() const { return lo_; }
    double support_hi() const { return hi_; }
    double param1() const { return p1_; }
    double param2() const { return p2_; }
    const std::vector<double>& abscissae() const { return xs_; }
    const std::vector<double>& values() const { return ys_; }

    double density(double x) const;
    double cdf(double x) const;
    double mass_on(double lo, double hi) const;

    /// Cauchy transform of the piece for z off [support_lo, support_hi].
    std::complex<double> cauchy(std::complex<double> z) const;

    /// Integral of density() by adaptive quadrature; construction checks it is 1.
    double quadrature_integral(double tol = 1e-11) const;

    /// Exact first moment of the piece.
    double mean() const;

private:
    DensityPiece() = default;
    PieceKind kind_ = PieceKind::Uniform;
    double lo_ = 0, hi_ = 0;
    double p1_ = 0, p2_ = 0;
    std::vector<double> xs_, ys_;   // tabulated knots, values normalized to unit mass
    std::vector<double> cum_;       // tabulated cumulative mass at knots
};

struct WeightedPiece {
    DensityPiece piece;
    double weight = 0;
};

/// Raw, not yet validated measure description: parser output, builder input.
struct MeasureData {
    Carrier carrier = Carrier::Line;
    std::vector<Atom> atoms;
    std::vector<WeightedPiece> pieces;
};

/// Diagnostic check; construction of the measure classes refuses any input for
/// which this returns a non-empty list.
std::vector<Violation> validate(const MeasureData& data);

/**
 * Probability measure on the real line: finitely many atoms plus a weighted
 * sum of absolutely continuous pieces.  Immutable after construction and safe
 * to share across threads.  Atoms are kept sorted by position.
 */
class RealMeasure {
public:
    RealMeasure(std::vector<Atom> atoms, std::vector<WeightedPiece> pieces = {});
    static RealMeasure point_mass(double position);

    const std::vector<Atom>& atoms() const { return atoms_; }
    const std::vector<WeightedPiece>& pieces() const { return pieces_; }
    bool is_atomic() const { return pieces_.empty(); }
    bool is_point_mass() const { return pieces_.empty() && atoms_.size() == 1; }

    /// Mass of the atom at `position` (within kAtomCoincidenceTol), or 0.
    double atom_mass_at(double position) const;

    /// Right-continuous distribution function.
    double cdf(double x) const;

    /// Generalized inverse of cdf: smallest x with cdf(x) >= u.
    double quantile(double u) const;

    /// Mass of the open interval (lo, hi); atoms at the endpoints are excluded.
    double mass_on_open(double lo, double hi) const;

    std::pair<double, double> support_hull() const;

private:
    std::vector<Atom> atoms_;
    std::vector<WeightedPiece> pieces_;
};

/// Probability measure supported on [0, infinity).
class PosMeasure {
public:
    explicit PosMeasure(RealMeasure base);
    PosMeasure(std::vector<Atom> atoms, std::vector<WeightedPiece> pieces = {});
    static PosMeasure point_mass(double position);

    const RealMeasure& real() const { return base_; }
    const std::vector<Atom>& atoms() const { return base_.atoms(); }
    const std::vector<WeightedPiece>& pieces() const { return base_.pieces(); }
    bool is_atomic() const { return base_.is_atomic(); }
    bool is_point_mass() const { return base_.is_point_mass(); }
    bool is_delta_zero() const;
    double atom_mass_at(double position) const { return base_.atom_mass_at(position); }
    double cdf(double x) const { return base_.cdf(x); }
    double quantile(double u) const { return base_.quantile(u); }
    double mass_on_open(double lo, double hi) const { return base_.mass_on_open(lo, hi); }
    std::pair<double, double> support_hull() const { return base_.support_hull(); }

private:
    RealMeasure base_;
};

/**
 * Probability measure on the unit circle, parametrized by the angle in
 * [0, 2pi).  Atom positions are angles; pieces are angular densities whose
 * support lies inside [0, 2pi].  The first moment (integral of e^{i theta})
 * is cached at construction since the multiplicative solver needs it.
 */
class CircleMeasure {
public:
    CircleMeasure(std::vector<Atom> atoms, std::vector<WeightedPiece> pieces = {});
    static CircleMeasure point_mass(double angle);

    const std::vector<Atom>& atoms() const { return atoms_; }
    const std::vector<WeightedPiece>& pieces() const { return pieces_; }
    bool is_atomic() const { return pieces_.empty(); }
    bool is_point_mass() const { return pieces_.empty() && atoms_.size() == 1; }
    std::complex<double> first_moment() const { return first_moment_; }

    /// Mass of the atom at `angle` (within kAtomCoincidenceTol, modulo 2pi), or 0.
    double atom_mass_at(double angle) const;

    /// Distribution function of the angle over [0, 2pi), right-continuous.
    double cdf_angle(double theta) const;
    double quantile_angle(double u) const;

    /// Mass of the open arc traversed counterclockwise from `from` to `to`.
    double mass_on_arc(double from, double to) const;

private:
    std::vector<Atom> atoms_;
    std::vector<WeightedPiece> pieces_;
    std::complex<double> first_moment_{0, 0};
};

using AnyMeasure = std::variant<RealMeasure, PosMeasure, CircleMeasure>;

Carrier carrier_of(const AnyMeasure& m);
std::vector<Violation> validate(const RealMeasure& m);
std::vector<Violation> validate(const PosMeasure& m);
std::vector<Violation> validate(const CircleMeasure& m);

/**
 * Parse the measure file format.  First content line is the carrier keyword
 * (real | pos | circle); the rest are "atom <position> <mass>" and
 * "piece <kind> <params...> <weight>" lines.  '#' starts a comment; numeric
 * tokens accept decimals and p/q fractions.  Tabulated pieces reference a
 * two-column CSV whose path is resolved against base_dir.
 */
AnyMeasure parse_measure(const std::string& text, const std::filesystem::path& base_dir = {});
AnyMeasure load_measure(const std::filesystem::path& file);

/**
 * Render a measure back into measure-file syntax.  Tabulated pieces are written
 * as CSV files named <stem>_tab<k>.csv inside tabulated_dir (which must be
 * given when such pieces are present).
 */
std::string serialize_measure(const AnyMeasure& m, const std::filesystem::path& tabulated_dir = {},
                              const std::string& stem = "measure");

/// Mass of the open interval (lo, hi).
double gap_mass(const RealMeasure& m, double lo, double hi);
double gap_mass(const PosMeasure& m, double lo, double hi);
/// Mass of the open arc from angle `from` counterclockwise to angle `to`.
double gap_mass(const CircleMeasure& m, double from, double to);

}  // namespace freeconv
