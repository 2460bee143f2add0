#include "freeconv/atoms.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include <nlohmann/json.hpp>

#include "freeconv/transforms.hpp"

namespace freeconv {

namespace {

using cd = std::complex<double>;

constexpr double kTwoPi = 2 * M_PI;

double wrap_angle(double theta) {
    double t = std::fmod(theta, kTwoPi);
    if (t < 0) t += kTwoPi;
    if (t >= kTwoPi) t = 0;
    return t;
}

double angle_distance(double a, double b) {
    const double d = std::abs(wrap_angle(a) - wrap_angle(b));
    return std::min(d, kTwoPi - d);
}

template <class M1, class M2, class Compose>
std::vector<AtomCandidate> candidate_pairs(const M1& mu1, const M2& mu2, const Compose& compose,
                                           bool require_positive) {
    std::vector<AtomCandidate> out;
    for (const auto& a : mu1.atoms()) {
        if (require_positive && !(a.position > 0)) continue;
        for (const auto& b : mu2.atoms()) {
            if (require_positive && !(b.position > 0)) continue;
            if (a.mass + b.mass > 1.0) {
                AtomCandidate c;
                c.alpha1 = a.position;
                c.alpha2 = b.position;
                c.mass1 = a.mass;
                c.mass2 = b.mass;
                c.alpha = compose(a.position, b.position);
                c.predicted_mass = a.mass + b.mass - 1.0;
                out.push_back(c);
            }
        }
    }
    std::sort(out.begin(), out.end(),
              [](const AtomCandidate& x, const AtomCandidate& y) { return x.alpha < y.alpha; });
    return out;
}

/// Complex ladder fit helper collecting (node, value) rungs and tracking drops.
struct LadderFit {
    std::vector<cd> nodes, values;
    bool dropped = false;

    void add(cd node, cd value, bool ok) {
        if (!ok || !std::isfinite(value.real()) || !std::isfinite(value.imag())) {
            dropped = true;
            return;
        }
        nodes.push_back(node);
        values.push_back(value);
    }
    bool usable() const { return values.size() >= 3; }
    Extrapolation fit() const { return richardson(nodes, values); }
};

ProbeResult probe_from_fit(const LadderFit& fit) {
    ProbeResult out;
    if (!fit.usable()) return out;
    const Extrapolation ex = fit.fit();
    out.mass = std::max(ex.limit.real(), 0.0);
    out.error = ex.error;
    out.flagged = fit.dropped;
    return out;
}

}  // namespace

std::vector<AtomCandidate> candidate_atoms(const RealMeasure& mu1, const RealMeasure& mu2) {
    return candidate_pairs(mu1, mu2, [](double a, double b) { return a + b; }, false);
}

std::vector<AtomCandidate> candidate_atoms(const PosMeasure& mu1, const PosMeasure& mu2) {
    return candidate_pairs(mu1, mu2, [](double a, double b) { return a * b; }, true);
}

std::vector<AtomCandidate> candidate_atoms(const CircleMeasure& mu1, const CircleMeasure& mu2) {
    return candidate_pairs(mu1, mu2, [](double a, double b) { return wrap_angle(a + b); }, false);
}

ProbeResult atom_mass_probe(const TransformEvaluator& cauchy, double alpha,
                            const std::vector<double>& ladder) {
    LadderFit fit;
    for (double eps : ladder) {
        try {
            const cd ieps(0.0, eps);
            fit.add(ieps, ieps * cauchy(cd(alpha, eps)), true);
        } catch (const Error&) {
            fit.dropped = true;
        }
    }
    return probe_from_fit(fit);
}

ProbeResult atom_mass_probe_circle(const TransformEvaluator& psi, double angle,
                                   const std::vector<double>& ladder) {
    LadderFit fit;
    for (double eps : ladder) {
        try {
            const cd z = std::polar(1.0 - eps, -angle);
            const cd herglotz = 1.0 + 2.0 * psi(z);
            fit.add(cd(eps, 0.0), 0.5 * eps * herglotz.real(), true);
        } catch (const Error&) {
            fit.dropped = true;
        }
    }
    return probe_from_fit(fit);
}

double AtomIdentityResiduals::max() const {
    return std::max({sum_identity, mass_identity, derivative1, derivative2});
}

AtomIdentityResiduals verify_atom_theorem(const AtomReport& report) {
    AtomIdentityResiduals r;
    r.sum_identity = report.residual_sum_identity;
    r.mass_identity = report.residual_mass_identity;
    r.derivative1 = report.residual_derivative1;
    r.derivative2 = report.residual_derivative2;
    return r;
}

namespace {

/// Fill the boundary data and identity residuals of a candidate-derived
/// report from ladders of subordination samples.  `compose_residual` maps the
/// two extrapolated omega limits to |composition - alpha|.
void finish_report(AtomReport& rep, const LadderFit& omega1, const LadderFit& omega2,
                   const std::function<cd(cd)>& limit_to_quotient1,
                   const std::function<cd(cd)>& limit_to_quotient2,
                   const std::function<double(cd, cd)>& compose_residual) {
    if (!omega1.usable() || !omega2.usable()) {
        rep.flagged = true;
        return;
    }
    const Extrapolation e1 = omega1.fit(), e2 = omega2.fit();
    rep.omega_limit1 = e1.limit;
    rep.omega_limit2 = e2.limit;
    rep.quotient1 = limit_to_quotient1(e1.slope);
    rep.quotient2 = limit_to_quotient2(e2.slope);
    rep.flagged = rep.flagged || omega1.dropped || omega2.dropped;
    rep.residual_sum_identity = compose_residual(e1.limit, e2.limit);
    rep.residual_mass_identity =
        std::abs(rep.component_mass1 + rep.component_mass2 - rep.mass - 1.0);
    if (rep.mass > 0) {
        rep.residual_derivative1 = std::abs(rep.quotient1 - cd(rep.component_mass1 / rep.mass, 0));
        rep.residual_derivative2 = std::abs(rep.quotient2 - cd(rep.component_mass2 / rep.mass, 0));
    }
}

AtomReport report_from_candidate(const AtomCandidate& c) {
    AtomReport rep;
    rep.alpha = c.alpha;
    rep.predicted_mass = c.predicted_mass;
    rep.from_candidate = true;
    rep.theorem_applicable = true;
    rep.alpha1 = c.alpha1;
    rep.alpha2 = c.alpha2;
    rep.component_mass1 = c.mass1;
    rep.component_mass2 = c.mass2;
    return rep;
}

}  // namespace

std::vector<AtomReport> detect_atoms(const RealMeasure& mu1, const RealMeasure& mu2,
                                     const AtomOptions& opt) {
    std::vector<AtomReport> out;
    for (const AtomCandidate& c : candidate_atoms(mu1, mu2)) {
        AtomReport rep = report_from_candidate(c);
        LadderFit probe, om1, om2;
        for (double eps : opt.ladder) {
            const auto s = solve_additive(mu1, mu2, cd(c.alpha, eps), opt.solve);
            const cd ieps(0.0, eps);
            probe.add(ieps, ieps * s.value, s.converged);
            om1.add(ieps, s.omega1, s.converged);
            om2.add(ieps, s.omega2, s.converged);
        }
        const ProbeResult pr = probe_from_fit(probe);
        if (pr.mass < opt.threshold) continue;
        rep.mass = pr.mass;
        rep.mass_error = pr.error;
        rep.flagged = pr.flagged;
        finish_report(
            rep, om1, om2, [](cd slope) { return slope; }, [](cd slope) { return slope; },
            [&](cd l1, cd l2) { return std::abs(l1 + l2 - cd(c.alpha, 0)); });
        out.push_back(rep);
    }
    return out;
}

std::vector<AtomReport> detect_atoms(const PosMeasure& mu1, const PosMeasure& mu2,
                                     const AtomOptions& opt) {
    std::vector<AtomReport> out;
    const TransformEvaluator cauchy = multiplicative_cauchy_evaluator(mu1, mu2, opt.solve);

    // The product can carry an atom at 0 whenever a factor does; it has no
    // component decomposition and is probed directly.
    if (mu1.atom_mass_at(0.0) > 0 || mu2.atom_mass_at(0.0) > 0) {
        const ProbeResult pr = atom_mass_probe(cauchy, 0.0, opt.ladder);
        if (pr.mass >= opt.threshold) {
            AtomReport rep;
            rep.alpha = 0;
            rep.mass = pr.mass;
            rep.mass_error = pr.error;
            rep.flagged = pr.flagged;
            out.push_back(rep);
        }
    }
    for (const AtomCandidate& c : candidate_atoms(mu1, mu2)) {
        AtomReport rep = report_from_candidate(c);
        const ProbeResult pr = atom_mass_probe(cauchy, c.alpha, opt.ladder);
        if (pr.mass < opt.threshold) continue;
        rep.mass = pr.mass;
        rep.mass_error = pr.error;
        rep.flagged = pr.flagged;
        LadderFit om1, om2;
        for (double eps : opt.ladder) {
            const auto s = solve_multiplicative(mu1, mu2, cd(1.0 / c.alpha, eps), opt.solve);
            const cd ieps(0.0, eps);
            om1.add(ieps, s.omega1, s.converged);
            om2.add(ieps, s.omega2, s.converged);
        }
        finish_report(
            rep, om1, om2, [](cd slope) { return slope; }, [](cd slope) { return slope; },
            [&](cd l1, cd l2) { return std::abs(1.0 / (l1 * l2) - cd(c.alpha, 0)); });
        out.push_back(rep);
    }
    std::sort(out.begin(), out.end(),
              [](const AtomReport& a, const AtomReport& b) { return a.alpha < b.alpha; });
    return out;
}

std::vector<AtomReport> detect_atoms(const CircleMeasure& mu1, const CircleMeasure& mu2,
                                     const AtomOptions& opt) {
    std::vector<AtomReport> out;
    for (const AtomCandidate& c : candidate_atoms(mu1, mu2)) {
        AtomReport rep = report_from_candidate(c);
        const cd alpha_bar = std::polar(1.0, -c.alpha);
        LadderFit probe, om1, om2;
        for (double eps : opt.ladder) {
            const auto s = solve_multiplicative(mu1, mu2, (1.0 - eps) * alpha_bar, opt.solve);
            const cd one_minus_eta = 1.0 - s.value;
            const cd herglotz = (1.0 + s.value) / one_minus_eta;
            probe.add(cd(eps, 0.0), 0.5 * eps * herglotz.real(), s.converged);
            om1.add(cd(eps, 0.0), s.omega1, s.converged);
            om2.add(cd(eps, 0.0), s.omega2, s.converged);
        }
        const ProbeResult pr = probe_from_fit(probe);
        if (pr.mass < opt.threshold) continue;
        rep.mass = pr.mass;
        rep.mass_error = pr.error;
        rep.flagged = pr.flagged;
        // With the fit variable s = 1 - r, the boundary quotient
        // lim (conj(alpha_j) - omega_j(r conj(alpha))) / ((1-r) conj(alpha))
        // equals -slope / conj(alpha).
        finish_report(
            rep, om1, om2, [&](cd slope) { return -slope / alpha_bar; },
            [&](cd slope) { return -slope / alpha_bar; },
            [&](cd l1, cd l2) { return std::abs(l1 * l2 - alpha_bar); });
        out.push_back(rep);
    }
    return out;
}

bool shared_component_consistent(const std::vector<AtomReport>& reports, bool circle, double tol) {
    auto component_positions = [&](const AtomReport& r) -> std::pair<double, double> {
        if (circle)
            return {wrap_angle(-std::arg(r.omega_limit1)), wrap_angle(-std::arg(r.omega_limit2))};
        return {r.omega_limit1.real(), r.omega_limit2.real()};
    };
    auto close = [&](double a, double b) {
        return circle ? angle_distance(a, b) <= tol : std::abs(a - b) <= tol;
    };
    for (std::size_t i = 0; i < reports.size(); ++i) {
        if (!reports[i].theorem_applicable) continue;
        for (std::size_t j = i + 1; j < reports.size(); ++j) {
            if (!reports[j].theorem_applicable) continue;
            const auto [a1, a2] = component_positions(reports[i]);
            const auto [b1, b2] = component_positions(reports[j]);
            if (!close(a1, b1) && !close(a2, b2)) return false;
        }
    }
    return true;
}

GapZeroResult find_gap_zero(const TransformEvaluator& cauchy, double alpha, double beta,
                            const std::vector<double>& ladder, int scan_points) {
    auto boundary_real = [&](double x) {
        LadderFit fit;
        for (double eps : ladder) {
            try {
                fit.add(cd(0.0, eps), cauchy(cd(x, eps)), true);
            } catch (const Error&) {
                fit.dropped = true;
            }
        }
        if (!fit.usable()) return std::numeric_limits<double>::quiet_NaN();
        return fit.fit().limit.real();
    };

    GapZeroResult out;
    const double margin = 0.02 * (beta - alpha);
    const double lo = alpha + margin, hi = beta - margin;
    double prev_x = lo, prev_g = boundary_real(lo);
    double bracket_lo = 0, bracket_hi = 0;
    for (int i = 1; i < scan_points; ++i) {
        const double x = lo + (hi - lo) * double(i) / double(scan_points - 1);
        const double g = boundary_real(x);
        if (std::isfinite(prev_g) && std::isfinite(g) && prev_g > 0 && g < 0) {
            if (out.sign_changes == 0) {
                bracket_lo = prev_x;
                bracket_hi = x;
            }
            ++out.sign_changes;
        } else if (std::isfinite(prev_g) && std::isfinite(g) && prev_g < 0 && g > 0) {
            ++out.sign_changes;  // increasing crossing: not the Nevanlinna pattern
        }
        prev_x = x;
        prev_g = g;
    }
    if (out.sign_changes >= 1) {
        double a = bracket_lo, b = bracket_hi;
        for (int i = 0; i < 60; ++i) {
            const double m = 0.5 * (a + b);
            const double g = boundary_real(m);
            if (!std::isfinite(g)) break;
            (g > 0 ? a : b) = m;
        }
        out.gamma = 0.5 * (a + b);
        out.found = true;
        out.unique = out.sign_changes == 1;
    }
    return out;
}

TransformEvaluator additive_cauchy_evaluator(RealMeasure mu1, RealMeasure mu2, SolveOptions opt) {
    return [mu1 = std::move(mu1), mu2 = std::move(mu2), opt](cd z) {
        return convolution_cauchy(mu1, mu2, z, opt);
    };
}

TransformEvaluator multiplicative_cauchy_evaluator(PosMeasure mu1, PosMeasure mu2,
                                                   SolveOptions opt) {
    return [mu1 = std::move(mu1), mu2 = std::move(mu2), opt](cd zeta) {
        return convolution_cauchy(mu1, mu2, zeta, opt);
    };
}

TransformEvaluator multiplicative_psi_evaluator(CircleMeasure mu1, CircleMeasure mu2,
                                                SolveOptions opt) {
    return [mu1 = std::move(mu1), mu2 = std::move(mu2), opt](cd z) {
        const cd eta = convolution_eta(mu1, mu2, z, opt);
        return eta / (1.0 - eta);
    };
}

void write_atom_reports_json(const std::vector<AtomReport>& reports, const std::string& operation,
                             const std::filesystem::path& path) {
    nlohmann::json j;
    j["schema"] = "freeconv/1";
    j["operation"] = operation;
    j["atoms"] = nlohmann::json::array();
    for (const auto& r : reports) {
        nlohmann::json a;
        a["alpha"] = r.alpha;
        a["mass"] = r.mass;
        a["mass_error"] = r.mass_error;
        a["predicted_mass"] = r.predicted_mass;
        a["from_candidate"] = r.from_candidate;
        a["theorem_applicable"] = r.theorem_applicable;
        a["flagged"] = r.flagged;
        if (r.theorem_applicable) {
            a["alpha1"] = r.alpha1;
            a["alpha2"] = r.alpha2;
            a["component_masses"] = {r.component_mass1, r.component_mass2};
            a["omega_limits"] = {{r.omega_limit1.real(), r.omega_limit1.imag()},
                                 {r.omega_limit2.real(), r.omega_limit2.imag()}};
            a["jc_quotients"] = {{r.quotient1.real(), r.quotient1.imag()},
                                 {r.quotient2.real(), r.quotient2.imag()}};
            a["residuals"] = {{"sum_identity", r.residual_sum_identity},
                              {"mass_identity", r.residual_mass_identity},
                              {"derivative_identity", {r.residual_derivative1, r.residual_derivative2}}};
        }
        j["atoms"].push_back(a);
    }
    std::ofstream out(path);
    if (!out) throw Error("io", "cannot write '" + path.string() + "'");
    out << j.dump(2) << "\n";
}

}  // namespace freeconv
