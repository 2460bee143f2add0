#include "freeconv/indecomposable.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "freeconv/errors.hpp"

namespace freeconv {
namespace {

// Quadrature noise allowance when comparing interior mass against an exact
// gap tolerance of zero.
constexpr double kMassNoise = 1e-12;

template <class M>
std::vector<GapRecord> scan_line_like(const M& m) {
    std::vector<GapRecord> out;
    const auto& atoms = m.atoms();
    for (std::size_t i = 0; i < atoms.size(); ++i) {
        for (std::size_t j = i + 1; j < atoms.size(); ++j) {
            GapRecord g;
            g.alpha = atoms[i].position;
            g.beta = atoms[j].position;
            g.mass_alpha = atoms[i].mass;
            g.mass_beta = atoms[j].mass;
            g.interior_mass = gap_mass(m, g.alpha, g.beta);
            out.push_back(g);
        }
    }
    return out;
}

std::optional<GapRecord> best_gap(const std::vector<GapRecord>& gaps, double gap_tol,
                                  bool positive_endpoints) {
    std::optional<GapRecord> best;
    for (const auto& g : gaps) {
        if (positive_endpoints && !(g.alpha > kAtomCoincidenceTol && g.beta > kAtomCoincidenceTol))
            continue;
        if (g.interior_mass > gap_tol + kMassNoise) continue;
        if (!best || g.interior_mass < best->interior_mass) best = g;
    }
    return best;
}

template <class M>
Certificate certify_impl(const M& m, double gap_tol, Carrier carrier, const char* gap_rule,
                         bool positive_endpoints) {
    Certificate cert;
    cert.carrier = carrier;
    cert.gap_tol = gap_tol;
    if (m.is_point_mass()) {
        cert.rule = "point-mass-trivial";
        return cert;
    }
    if (auto g = best_gap(scan_gaps(m), gap_tol, positive_endpoints)) {
        cert.certified = true;
        cert.rule = gap_rule;
        cert.witness = *g;
        return cert;
    }
    if (m.is_atomic() && m.atoms().size() >= 2) {
        cert.certified = true;
        cert.rule = "finite-support";
        return cert;
    }
    return cert;
}

}  // namespace

std::vector<GapRecord> scan_gaps(const RealMeasure& m) { return scan_line_like(m); }
std::vector<GapRecord> scan_gaps(const PosMeasure& m) { return scan_line_like(m); }

std::vector<GapRecord> scan_gaps(const CircleMeasure& m) {
    std::vector<GapRecord> out;
    const auto& atoms = m.atoms();
    for (std::size_t i = 0; i < atoms.size(); ++i) {
        for (std::size_t j = 0; j < atoms.size(); ++j) {
            if (i == j) continue;
            GapRecord g;
            g.alpha = atoms[i].position;
            g.beta = atoms[j].position;
            g.mass_alpha = atoms[i].mass;
            g.mass_beta = atoms[j].mass;
            g.interior_mass = gap_mass(m, g.alpha, g.beta);
            out.push_back(g);
        }
    }
    return out;
}

Certificate certify_indecomposable(const RealMeasure& m, double gap_tol) {
    return certify_impl(m, gap_tol, Carrier::Line, "gap-atoms-line", false);
}

Certificate certify_indecomposable(const PosMeasure& m, double gap_tol) {
    return certify_impl(m, gap_tol, Carrier::HalfLine, "gap-atoms-halfline", true);
}

Certificate certify_indecomposable(const CircleMeasure& m, double gap_tol) {
    return certify_impl(m, gap_tol, Carrier::Circle, "gap-atoms-circle", false);
}

Certificate certify_indecomposable(const AnyMeasure& m, double gap_tol) {
    return std::visit([&](const auto& mm) { return certify_indecomposable(mm, gap_tol); }, m);
}

void write_certificate_json(const Certificate& cert, const std::filesystem::path& path) {
    nlohmann::json j;
    j["schema"] = "freeconv/1";
    j["carrier"] = carrier_name(cert.carrier);
    j["verdict"] = cert.certified ? "certified" : "not-certified";
    j["rule"] = cert.rule;
    j["gap_tol"] = cert.gap_tol;
    if (cert.witness) {
        j["witness"] = {{"alpha", cert.witness->alpha},
                        {"beta", cert.witness->beta},
                        {"mass_alpha", cert.witness->mass_alpha},
                        {"mass_beta", cert.witness->mass_beta},
                        {"gap_mass_estimate", cert.witness->interior_mass}};
    }
    std::ofstream out(path);
    if (!out) throw Error("io", "cannot write " + path.string());
    out << j.dump(2) << "\n";
}

std::string certificate_summary(const Certificate& cert) {
    std::ostringstream os;
    if (cert.certified) {
        os << "certified freely indecomposable (rule " << cert.rule;
        if (cert.witness)
            os << ", gap endpoints " << cert.witness->alpha << " and " << cert.witness->beta;
        os << ")";
    } else {
        os << "not certified (no verdict";
        if (cert.rule != "none") os << "; " << cert.rule;
        os << ")";
    }
    return os.str();
}

}  // namespace freeconv
