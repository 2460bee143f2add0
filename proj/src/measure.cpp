#include "freeconv/measure.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>

#include "freeconv/quadrature.hpp"

namespace freeconv {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

std::string fmt(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

/// sqrt((z-a)(z-b)) with the branch that is analytic off [a,b] and behaves
/// like +z at infinity: the product of principal square roots of the factors.
std::complex<double> sqrt_two_cuts(std::complex<double> z, double a, double b) {
    return std::sqrt(z - a) * std::sqrt(z - b);
}

double wrap_angle(double theta) {
    double t = std::fmod(theta, kTwoPi);
    if (t < 0) t += kTwoPi;
    if (t >= kTwoPi) t = 0;
    return t;
}

}  // namespace

std::string carrier_name(Carrier c) {
    switch (c) {
        case Carrier::Line: return "real";
        case Carrier::HalfLine: return "pos";
        case Carrier::Circle: return "circle";
    }
    return "real";
}

std::string piece_kind_name(PieceKind k) {
    switch (k) {
        case PieceKind::Semicircle: return "semicircle";
        case PieceKind::Arcsine: return "arcsine";
        case PieceKind::Uniform: return "uniform";
        case PieceKind::MarchenkoPastur: return "marchenko-pastur";
        case PieceKind::Tabulated: return "tabulated";
    }
    return "uniform";
}

// ---------------------------------------------------------------------------
// DensityPiece

DensityPiece DensityPiece::semicircle(double center, double radius) {
    if (!std::isfinite(center) || !(radius > 0))
        throw ValidationError(Violation{"piece-params", "semicircle requires finite center and radius > 0"});
    DensityPiece p;
    p.kind_ = PieceKind::Semicircle;
    p.p1_ = center;
    p.p2_ = radius;
    p.lo_ = center - radius;
    p.hi_ = center + radius;
    return p;
}

DensityPiece DensityPiece::arcsine(double a, double b) {
    if (!std::isfinite(a) || !std::isfinite(b) || !(a < b))
        throw ValidationError(Violation{"piece-params", "arcsine requires finite endpoints with a < b"});
    DensityPiece p;
    p.kind_ = PieceKind::Arcsine;
    p.p1_ = a;
    p.p2_ = b;
    p.lo_ = a;
    p.hi_ = b;
    return p;
}

DensityPiece DensityPiece::uniform(double a, double b) {
    if (!std::isfinite(a) || !std::isfinite(b) || !(a < b))
        throw ValidationError(Violation{"piece-params", "uniform requires finite endpoints with a < b"});
    DensityPiece p;
    p.kind_ = PieceKind::Uniform;
    p.p1_ = a;
    p.p2_ = b;
    p.lo_ = a;
    p.hi_ = b;
    return p;
}

DensityPiece DensityPiece::marchenko_pastur(double ratio) {
    if (!(ratio > 0) || !(ratio <= 1))
        throw ValidationError(Violation{"piece-params", "marchenko-pastur ratio must lie in (0,1]"});
    DensityPiece p;
    p.kind_ = PieceKind::MarchenkoPastur;
    p.p1_ = ratio;
    const double s = std::sqrt(ratio);
    p.lo_ = (1 - s) * (1 - s);
    p.hi_ = (1 + s) * (1 + s);
    return p;
}

DensityPiece DensityPiece::tabulated(std::vector<double> abscissae, std::vector<double> values) {
    if (abscissae.size() < 2 || abscissae.size() != values.size())
        throw ValidationError(Violation{"tabulated-shape", "tabulated piece needs >= 2 matching knots"});
    for (std::size_t i = 0; i < abscissae.size(); ++i) {
        if (!std::isfinite(abscissae[i]) || !std::isfinite(values[i]))
            throw ValidationError(Violation{"tabulated-shape", "tabulated knots must be finite"});
        if (values[i] < 0)
            throw ValidationError(Violation{"tabulated-negative", "tabulated density values must be >= 0"});
        if (i > 0 && !(abscissae[i] > abscissae[i - 1]))
            throw ValidationError(Violation{"tabulated-order", "tabulated abscissae must increase strictly"});
    }
    double trapz = 0;
    for (std::size_t i = 0; i + 1 < abscissae.size(); ++i)
        trapz += 0.5 * (values[i] + values[i + 1]) * (abscissae[i + 1] - abscissae[i]);
    if (std::abs(trapz - 1.0) > 1e-6)
        throw ValidationError(Violation{"tabulated-normalization",
                                "tabulated trapezoid integral is " + fmt(trapz) + ", expected 1 within 1e-6"});
    DensityPiece p;
    p.kind_ = PieceKind::Tabulated;
    p.lo_ = abscissae.front();
    p.hi_ = abscissae.back();
    p.xs_ = std::move(abscissae);
    p.ys_ = std::move(values);
    // Normalize so the piecewise-linear density integrates to exactly one.
    for (double& y : p.ys_) y /= trapz;
    p.cum_.assign(p.xs_.size(), 0.0);
    for (std::size_t i = 0; i + 1 < p.xs_.size(); ++i)
        p.cum_[i + 1] = p.cum_[i] + 0.5 * (p.ys_[i] + p.ys_[i + 1]) * (p.xs_[i + 1] - p.xs_[i]);
    return p;
}

double DensityPiece::density(double x) const {
    if (x < lo_ || x > hi_) return 0;
    switch (kind_) {
        case PieceKind::Semicircle: {
            const double u = x - p1_;
            const double d = p2_ * p2_ - u * u;
            return d > 0 ? 2.0 * std::sqrt(d) / (M_PI * p2_ * p2_) : 0.0;
        }
        case PieceKind::Arcsine: {
            const double d = (x - p1_) * (p2_ - x);
            return d > 0 ? 1.0 / (M_PI * std::sqrt(d)) : std::numeric_limits<double>::infinity();
        }
        case PieceKind::Uniform:
            return 1.0 / (p2_ - p1_);
        case PieceKind::MarchenkoPastur: {
            const double d = (hi_ - x) * (x - lo_);
            return d > 0 ? std::sqrt(d) / (2 * M_PI * p1_ * x) : 0.0;
        }
        case PieceKind::Tabulated: {
            auto it = std::upper_bound(xs_.begin(), xs_.end(), x);
            if (it == xs_.begin()) return ys_.front();
            if (it == xs_.end()) return ys_.back();
            const std::size_t i = static_cast<std::size_t>(it - xs_.begin()) - 1;
            const double t = (x - xs_[i]) / (xs_[i + 1] - xs_[i]);
            return ys_[i] + t * (ys_[i + 1] - ys_[i]);
        }
    }
    return 0;
}

double DensityPiece::cdf(double x) const {
    if (x <= lo_) return 0;
    if (x >= hi_) return 1;
    switch (kind_) {
        case PieceKind::Semicircle: {
            const double u = std::clamp((x - p1_) / p2_, -1.0, 1.0);
            return 0.5 + (u * std::sqrt(1 - u * u) + std::asin(u)) / M_PI;
        }
        case PieceKind::Arcsine: {
            const double u = std::clamp((x - p1_) / (p2_ - p1_), 0.0, 1.0);
            return (2.0 / M_PI) * std::asin(std::sqrt(u));
        }
        case PieceKind::Uniform:
            return (x - p1_) / (p2_ - p1_);
        case PieceKind::MarchenkoPastur: {
            auto in = quad::integrate_sqrt_endpoints([this](double t) { return density(t); }, lo_, x, 1e-12);
            return std::clamp(in.value, 0.0, 1.0);
        }
        case PieceKind::Tabulated: {
            auto it = std::upper_bound(xs_.begin(), xs_.end(), x);
            const std::size_t i = static_cast<std::size_t>(it - xs_.begin()) - 1;
            const double dx = x - xs_[i];
            const double y = density(x);
            return cum_[i] + 0.5 * (ys_[i] + y) * dx;
        }
    }
    return 0;
}

double DensityPiece::mass_on(double lo, double hi) const {
    if (hi <= lo) return 0;
    return cdf(std::min(hi, hi_)) - cdf(std::max(lo, lo_));
}

std::complex<double> DensityPiece::cauchy(std::complex<double> z) const {
    switch (kind_) {
        case PieceKind::Semicircle: {
            const std::complex<double> zeta = z - p1_;
            return 2.0 * (zeta - sqrt_two_cuts(zeta, -p2_, p2_)) / (p2_ * p2_);
        }
        case PieceKind::Arcsine:
            return 1.0 / sqrt_two_cuts(z, p1_, p2_);
        case PieceKind::Uniform:
            return std::log((z - p1_) / (z - p2_)) / (p2_ - p1_);
        case PieceKind::MarchenkoPastur:
            return (z + p1_ - 1.0 - sqrt_two_cuts(z, lo_, hi_)) / (2.0 * p1_ * z);
        case PieceKind::Tabulated: {
            // Exact transform of the linear interpolant, segment by segment:
            // int (c0 + c1 t)/(z - t) dt = -c1 dx + (c0 + c1 z) log((z-x0)/(z-x1)).
            std::complex<double> acc = 0;
            for (std::size_t i = 0; i + 1 < xs_.size(); ++i) {
                const double x0 = xs_[i], x1 = xs_[i + 1], dx = x1 - x0;
                const double c1 = (ys_[i + 1] - ys_[i]) / dx;
                const double c0 = ys_[i] - c1 * x0;
                acc += -c1 * dx + (c0 + c1 * z) * std::log((z - x0) / (z - x1));
            }
            return acc;
        }
    }
    return 0;
}

double DensityPiece::quadrature_integral(double tol) const {
    auto in = quad::integrate_sqrt_endpoints([this](double t) { return density(t); }, lo_, hi_, tol);
    return in.value;
}

double DensityPiece::mean() const {
    switch (kind_) {
        case PieceKind::Semicircle: return p1_;
        case PieceKind::Arcsine: return 0.5 * (p1_ + p2_);
        case PieceKind::Uniform: return 0.5 * (p1_ + p2_);
        case PieceKind::MarchenkoPastur: return 1.0;
        case PieceKind::Tabulated: {
            double acc = 0;
            for (std::size_t i = 0; i + 1 < xs_.size(); ++i) {
                const double x0 = xs_[i], x1 = xs_[i + 1];
                const double c1 = (ys_[i + 1] - ys_[i]) / (x1 - x0);
                const double c0 = ys_[i] - c1 * x0;
                acc += 0.5 * c0 * (x1 * x1 - x0 * x0) + c1 * (x1 * x1 * x1 - x0 * x0 * x0) / 3.0;
            }
            return acc;
        }
    }
    return 0;
}

// ---------------------------------------------------------------------------
// Validation

std::vector<Violation> validate(const MeasureData& data) {
    std::vector<Violation> out;
    double total = 0;
    for (const auto& a : data.atoms) {
        if (!std::isfinite(a.position))
            out.push_back({"non-finite", "atom position is not finite"});
        if (!(a.mass > 0) || !(a.mass <= 1))
            out.push_back({"atom-mass-range", "atom mass " + fmt(a.mass) + " outside (0,1]"});
        else
            total += a.mass;
        if (data.carrier == Carrier::HalfLine && a.position < 0)
            out.push_back({"negative-position", "atom at " + fmt(a.position) + " on the half-line"});
        if (data.carrier == Carrier::Circle && (a.position < 0 || a.position >= kTwoPi))
            out.push_back({"angle-range", "atom angle " + fmt(a.position) + " outside [0,2pi)"});
    }
    std::vector<double> pos;
    for (const auto& a : data.atoms) pos.push_back(a.position);
    std::sort(pos.begin(), pos.end());
    for (std::size_t i = 0; i + 1 < pos.size(); ++i)
        if (pos[i + 1] - pos[i] <= kAtomCoincidenceTol)
            out.push_back({"duplicate-position", "atoms at " + fmt(pos[i]) + " and " + fmt(pos[i + 1]) +
                                                     " coincide within 1e-10"});
    if (data.carrier == Carrier::Circle && pos.size() >= 2)
        if ((pos.front() + kTwoPi) - pos.back() <= kAtomCoincidenceTol)
            out.push_back({"duplicate-position", "atoms at " + fmt(pos.back()) + " and " + fmt(pos.front()) +
                                                     " coincide modulo 2pi"});
    for (const auto& wp : data.pieces) {
        if (!(wp.weight > 0) || !(wp.weight <= 1))
            out.push_back({"piece-weight-range", "piece weight " + fmt(wp.weight) + " outside (0,1]"});
        else
            total += wp.weight;
        const double integral = wp.piece.quadrature_integral();
        if (std::abs(integral - 1.0) > 1e-9)
            out.push_back({"piece-normalization", piece_kind_name(wp.piece.kind()) +
                                                      " piece integrates to " + fmt(integral)});
        if (data.carrier == Carrier::HalfLine && wp.piece.support_lo() < 0)
            out.push_back({"negative-position", "piece support reaches below 0 on the half-line"});
        if (data.carrier == Carrier::Circle &&
            (wp.piece.support_lo() < 0 || wp.piece.support_hi() > kTwoPi))
            out.push_back({"angle-range", "piece support outside [0,2pi]"});
    }
    if (data.atoms.empty() && data.pieces.empty())
        out.push_back({"total-mass", "measure is empty"});
    else if (std::abs(total - 1.0) > 1e-12)
        out.push_back({"total-mass", "total mass is " + fmt(total) + ", expected 1 within 1e-12"});
    return out;
}

namespace {

std::vector<Atom> checked_atoms(Carrier carrier, std::vector<Atom> atoms,
                                const std::vector<WeightedPiece>& pieces) {
    MeasureData data{carrier, atoms, pieces};
    auto violations = validate(data);
    if (!violations.empty()) throw ValidationError(std::move(violations));
    std::sort(atoms.begin(), atoms.end(),
              [](const Atom& a, const Atom& b) { return a.position < b.position; });
    return atoms;
}

}  // namespace

// ---------------------------------------------------------------------------
// RealMeasure

RealMeasure::RealMeasure(std::vector<Atom> atoms, std::vector<WeightedPiece> pieces)
    : pieces_(std::move(pieces)) {
    atoms_ = checked_atoms(Carrier::Line, std::move(atoms), pieces_);
}

RealMeasure RealMeasure::point_mass(double position) { return RealMeasure({{position, 1.0}}); }

double RealMeasure::atom_mass_at(double position) const {
    for (const auto& a : atoms_)
        if (std::abs(a.position - position) <= kAtomCoincidenceTol) return a.mass;
    return 0;
}

double RealMeasure::cdf(double x) const {
    double s = 0;
    for (const auto& a : atoms_)
        if (a.position <= x) s += a.mass;
    for (const auto& wp : pieces_) s += wp.weight * wp.piece.cdf(x);
    return s;
}

double RealMeasure::quantile(double u) const {
    u = std::clamp(u, 1e-300, 1.0);
    auto [lo, hi] = support_hull();
    double a = lo - 1, b = hi;
    for (int i = 0; i < 120; ++i) {
        const double m = 0.5 * (a + b);
        (cdf(m) >= u ? b : a) = m;
    }
    return b;
}

double RealMeasure::mass_on_open(double lo, double hi) const {
    if (hi <= lo) return 0;
    double s = 0;
    for (const auto& a : atoms_)
        if (a.position > lo && a.position < hi) s += a.mass;
    for (const auto& wp : pieces_) s += wp.weight * wp.piece.mass_on(lo, hi);
    return s;
}

std::pair<double, double> RealMeasure::support_hull() const {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const auto& a : atoms_) {
        lo = std::min(lo, a.position);
        hi = std::max(hi, a.position);
    }
    for (const auto& wp : pieces_) {
        lo = std::min(lo, wp.piece.support_lo());
        hi = std::max(hi, wp.piece.support_hi());
    }
    return {lo, hi};
}

// ---------------------------------------------------------------------------
// PosMeasure

namespace {

RealMeasure checked_halfline_base(std::vector<Atom> atoms, std::vector<WeightedPiece> pieces) {
    auto checked = checked_atoms(Carrier::HalfLine, std::move(atoms), pieces);
    return RealMeasure(std::move(checked), std::move(pieces));
}

}  // namespace

PosMeasure::PosMeasure(RealMeasure base)
    : base_(checked_halfline_base(base.atoms(), base.pieces())) {}

PosMeasure::PosMeasure(std::vector<Atom> atoms, std::vector<WeightedPiece> pieces)
    : base_(checked_halfline_base(std::move(atoms), std::move(pieces))) {}

PosMeasure PosMeasure::point_mass(double position) { return PosMeasure({{position, 1.0}}); }

bool PosMeasure::is_delta_zero() const {
    return is_point_mass() && std::abs(atoms()[0].position) <= kAtomCoincidenceTol;
}

// ---------------------------------------------------------------------------
// CircleMeasure

CircleMeasure::CircleMeasure(std::vector<Atom> atoms, std::vector<WeightedPiece> pieces)
    : pieces_(std::move(pieces)) {
    atoms_ = checked_atoms(Carrier::Circle, std::move(atoms), pieces_);
    std::complex<double> m1 = 0;
    for (const auto& a : atoms_) m1 += a.mass * std::polar(1.0, a.position);
    for (const auto& wp : pieces_) {
        auto in = quad::integrate(
            [&](double th) { return std::polar(wp.piece.density(th), th); },
            wp.piece.support_lo(), wp.piece.support_hi(), 1e-12);
        m1 += wp.weight * in.value;
    }
    first_moment_ = m1;
}

CircleMeasure CircleMeasure::point_mass(double angle) { return CircleMeasure({{angle, 1.0}}); }

double CircleMeasure::atom_mass_at(double angle) const {
    const double t = wrap_angle(angle);
    for (const auto& a : atoms_) {
        double d = std::abs(a.position - t);
        d = std::min(d, kTwoPi - d);
        if (d <= kAtomCoincidenceTol) return a.mass;
    }
    return 0;
}

double CircleMeasure::cdf_angle(double theta) const {
    double s = 0;
    for (const auto& a : atoms_)
        if (a.position <= theta) s += a.mass;
    for (const auto& wp : pieces_) s += wp.weight * wp.piece.cdf(theta);
    return s;
}

double CircleMeasure::quantile_angle(double u) const {
    u = std::clamp(u, 1e-300, 1.0);
    double a = -1e-9, b = kTwoPi;
    for (int i = 0; i < 120; ++i) {
        const double m = 0.5 * (a + b);
        (cdf_angle(m) >= u ? b : a) = m;
    }
    return std::max(b, 0.0);
}

double CircleMeasure::mass_on_arc(double from, double to) const {
    double f = wrap_angle(from), t = wrap_angle(to);
    if (t <= f) t += kTwoPi;
    double s = 0;
    for (const auto& a : atoms_)
        for (double p : {a.position, a.position + kTwoPi})
            if (p > f && p < t) s += a.mass;
    for (const auto& wp : pieces_) {
        s += wp.weight * wp.piece.mass_on(f, std::min(t, kTwoPi));
        if (t > kTwoPi) s += wp.weight * wp.piece.mass_on(0.0, t - kTwoPi);
    }
    return s;
}

// ---------------------------------------------------------------------------
// Variant helpers

Carrier carrier_of(const AnyMeasure& m) {
    if (std::holds_alternative<RealMeasure>(m)) return Carrier::Line;
    if (std::holds_alternative<PosMeasure>(m)) return Carrier::HalfLine;
    return Carrier::Circle;
}

std::vector<Violation> validate(const RealMeasure& m) {
    return validate(MeasureData{Carrier::Line, m.atoms(), m.pieces()});
}
std::vector<Violation> validate(const PosMeasure& m) {
    return validate(MeasureData{Carrier::HalfLine, m.atoms(), m.pieces()});
}
std::vector<Violation> validate(const CircleMeasure& m) {
    return validate(MeasureData{Carrier::Circle, m.atoms(), m.pieces()});
}

// ---------------------------------------------------------------------------
// Parsing

namespace {

double parse_number(const std::string& token, int line, int col) {
    auto parse_plain = [&](const std::string& s) {
        char* end = nullptr;
        const double v = std::strtod(s.c_str(), &end);
        if (end != s.c_str() + s.size() || s.empty())
            throw ParseError(line, col, "expected a number, got '" + token + "'");
        return v;
    };
    const auto slash = token.find('/');
    if (slash == std::string::npos) return parse_plain(token);
    const double p = parse_plain(token.substr(0, slash));
    const double q = parse_plain(token.substr(slash + 1));
    if (q == 0) throw ParseError(line, col, "zero denominator in '" + token + "'");
    return p / q;
}

struct Token {
    std::string text;
    int column;
};

std::vector<Token> tokenize_line(const std::string& raw) {
    std::vector<Token> out;
    std::string line = raw;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
        if (i >= line.size()) break;
        const std::size_t start = i;
        while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
        out.push_back({line.substr(start, i - start), static_cast<int>(start) + 1});
    }
    return out;
}

DensityPiece load_tabulated_csv(const std::filesystem::path& path, int line, int col) {
    std::ifstream in(path);
    if (!in) throw ParseError(line, col, "cannot open tabulated CSV '" + path.string() + "'");
    std::vector<double> xs, ys;
    std::string raw;
    int csv_line = 0;
    while (std::getline(in, raw)) {
        ++csv_line;
        if (auto hash = raw.find('#'); hash != std::string::npos) raw.resize(hash);
        std::replace(raw.begin(), raw.end(), ',', ' ');
        std::istringstream ss(raw);
        double x, y;
        if (!(ss >> x)) continue;
        if (!(ss >> y))
            throw ParseError(line, col, path.string() + ":" + std::to_string(csv_line) +
                                            ": expected two columns");
        xs.push_back(x);
        ys.push_back(y);
    }
    try {
        return DensityPiece::tabulated(std::move(xs), std::move(ys));
    } catch (const ValidationError& e) {
        throw ParseError(line, col, path.string() + ": " + e.what());
    }
}

}  // namespace

AnyMeasure parse_measure(const std::string& text, const std::filesystem::path& base_dir) {
    std::istringstream stream(text);
    std::string raw;
    int line_no = 0;
    bool have_carrier = false;
    MeasureData data;
    while (std::getline(stream, raw)) {
        ++line_no;
        auto tokens = tokenize_line(raw);
        if (tokens.empty()) continue;
        if (!have_carrier) {
            if (tokens.size() != 1)
                throw ParseError(line_no, tokens[1].column, "carrier line takes a single keyword");
            const std::string& kw = tokens[0].text;
            if (kw == "real") data.carrier = Carrier::Line;
            else if (kw == "pos") data.carrier = Carrier::HalfLine;
            else if (kw == "circle") data.carrier = Carrier::Circle;
            else throw ParseError(line_no, tokens[0].column, "unknown carrier '" + kw + "'");
            have_carrier = true;
            continue;
        }
        const std::string& kw = tokens[0].text;
        auto num = [&](std::size_t i) { return parse_number(tokens[i].text, line_no, tokens[i].column); };
        auto expect_count = [&](std::size_t n, const std::string& usage) {
            if (tokens.size() != n)
                throw ParseError(line_no, tokens[0].column, "expected '" + usage + "'");
        };
        if (kw == "atom") {
            expect_count(3, "atom <position> <mass>");
            data.atoms.push_back({num(1), num(2)});
        } else if (kw == "piece") {
            if (tokens.size() < 2) throw ParseError(line_no, tokens[0].column, "piece needs a kind");
            const std::string& kind = tokens[1].text;
            try {
                if (kind == "semicircle") {
                    expect_count(5, "piece semicircle <center> <radius> <weight>");
                    data.pieces.push_back({DensityPiece::semicircle(num(2), num(3)), num(4)});
                } else if (kind == "arcsine") {
                    expect_count(5, "piece arcsine <a> <b> <weight>");
                    data.pieces.push_back({DensityPiece::arcsine(num(2), num(3)), num(4)});
                } else if (kind == "uniform") {
                    expect_count(5, "piece uniform <a> <b> <weight>");
                    data.pieces.push_back({DensityPiece::uniform(num(2), num(3)), num(4)});
                } else if (kind == "marchenko-pastur") {
                    expect_count(4, "piece marchenko-pastur <ratio> <weight>");
                    data.pieces.push_back({DensityPiece::marchenko_pastur(num(2)), num(3)});
                } else if (kind == "tabulated") {
                    expect_count(4, "piece tabulated <csv-path> <weight>");
                    std::filesystem::path csv(tokens[2].text);
                    if (csv.is_relative() && !base_dir.empty()) csv = base_dir / csv;
                    data.pieces.push_back({load_tabulated_csv(csv, line_no, tokens[2].column), num(3)});
                } else {
                    throw ParseError(line_no, tokens[1].column, "unknown piece kind '" + kind + "'");
                }
            } catch (const ValidationError& e) {
                throw ParseError(line_no, tokens[1].column, e.what());
            }
        } else {
            throw ParseError(line_no, tokens[0].column, "unknown keyword '" + kw + "'");
        }
    }
    if (!have_carrier) throw ParseError(1, 1, "missing carrier line (real | pos | circle)");
    switch (data.carrier) {
        case Carrier::Line: return RealMeasure(std::move(data.atoms), std::move(data.pieces));
        case Carrier::HalfLine: return PosMeasure(std::move(data.atoms), std::move(data.pieces));
        case Carrier::Circle: return CircleMeasure(std::move(data.atoms), std::move(data.pieces));
    }
    throw Error("internal", "unreachable carrier");
}

AnyMeasure load_measure(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw Error("io", "cannot open measure file '" + file.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_measure(ss.str(), file.parent_path());
}

std::string serialize_measure(const AnyMeasure& m, const std::filesystem::path& tabulated_dir,
                              const std::string& stem) {
    const Carrier carrier = carrier_of(m);
    const std::vector<Atom>* atoms = nullptr;
    const std::vector<WeightedPiece>* pieces = nullptr;
    std::visit(
        [&](const auto& mm) {
            atoms = &mm.atoms();
            pieces = &mm.pieces();
        },
        m);
    std::ostringstream out;
    out << carrier_name(carrier) << "\n";
    for (const auto& a : *atoms) out << "atom " << fmt(a.position) << " " << fmt(a.mass) << "\n";
    int tab_index = 0;
    for (const auto& wp : *pieces) {
        const auto& p = wp.piece;
        switch (p.kind()) {
            case PieceKind::Semicircle:
                out << "piece semicircle " << fmt(p.param1()) << " " << fmt(p.param2());
                break;
            case PieceKind::Arcsine:
                out << "piece arcsine " << fmt(p.param1()) << " " << fmt(p.param2());
                break;
            case PieceKind::Uniform:
                out << "piece uniform " << fmt(p.param1()) << " " << fmt(p.param2());
                break;
            case PieceKind::MarchenkoPastur:
                out << "piece marchenko-pastur " << fmt(p.param1());
                break;
            case PieceKind::Tabulated: {
                if (tabulated_dir.empty())
                    throw Error("io", "serializing a tabulated piece requires a directory");
                const std::string name = stem + "_tab" + std::to_string(tab_index++) + ".csv";
                std::ofstream csv(tabulated_dir / name);
                if (!csv) throw Error("io", "cannot write '" + (tabulated_dir / name).string() + "'");
                for (std::size_t i = 0; i < p.abscissae().size(); ++i)
                    csv << fmt(p.abscissae()[i]) << "," << fmt(p.values()[i]) << "\n";
                out << "piece tabulated " << name;
                break;
            }
        }
        out << " " << fmt(wp.weight) << "\n";
    }
    return out.str();
}

double gap_mass(const RealMeasure& m, double lo, double hi) { return m.mass_on_open(lo, hi); }
double gap_mass(const PosMeasure& m, double lo, double hi) { return m.mass_on_open(lo, hi); }
double gap_mass(const CircleMeasure& m, double from, double to) { return m.mass_on_arc(from, to); }

}  // namespace freeconv
