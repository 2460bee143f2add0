#include "freeconv/density.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include <nlohmann/json.hpp>

#include "freeconv/quadrature.hpp"

namespace freeconv {

namespace {

using cd = std::complex<double>;

constexpr double kNegativeDensityTol = 1e-6;

/// Margin cut around each excluded atom, relative to the interval length.
constexpr double kAtomExclusionFrac = 0.02;

std::vector<double> linspace(double lo, double hi, int n) {
    std::vector<double> xs(n);
    if (n == 1) {
        xs[0] = 0.5 * (lo + hi);
        return xs;
    }
    for (int i = 0; i < n; ++i) xs[i] = lo + (hi - lo) * double(i) / double(n - 1);
    return xs;
}

Extrapolation fit_window(const std::vector<cd>& nodes, const std::vector<cd>& values,
                         std::size_t last) {
    // Newton quadratic through indices last-2, last-1, last, evaluated at 0.
    const cd s1 = nodes[last - 2], s2 = nodes[last - 1], s3 = nodes[last];
    const cd v1 = values[last - 2], v2 = values[last - 1], v3 = values[last];
    const cd d1 = (v2 - v1) / (s2 - s1);
    const cd d2 = (v3 - v2) / (s3 - s2);
    const cd dd = (d2 - d1) / (s3 - s1);
    Extrapolation out;
    out.limit = v1 - d1 * s1 + dd * s1 * s2;
    out.slope = d1 - dd * (s1 + s2);
    out.ok = true;
    return out;
}

}  // namespace

std::vector<double> default_eps_ladder() {
    return {1e-2, 3e-3, 1e-3, 3e-4, 1e-4, 3e-5, 1e-5, 3e-6, 1e-6};
}

std::vector<double> density_eps_ladder() {
    return {1e-2, 3e-3, 1e-3, 3e-4, 1e-4, 3e-5, 1e-5};
}

Extrapolation richardson(const std::vector<cd>& nodes, const std::vector<cd>& values) {
    Extrapolation out;
    const std::size_t n = std::min(nodes.size(), values.size());
    if (n == 0) return out;
    if (n == 1) {
        out.limit = values[0];
        out.error = std::numeric_limits<double>::infinity();
        out.ok = true;
        return out;
    }
    if (n == 2) {
        const cd slope = (values[1] - values[0]) / (nodes[1] - nodes[0]);
        out.limit = values[1] - slope * nodes[1];
        out.slope = slope;
        out.error = std::abs(out.limit - values[1]);
        out.ok = true;
        return out;
    }
    out = fit_window(nodes, values, n - 1);
    if (n >= 4) {
        const Extrapolation prev = fit_window(nodes, values, n - 2);
        out.error = std::abs(out.limit - prev.limit);
    } else {
        out.error = std::abs(out.limit - values[n - 1]);
    }
    return out;
}

namespace {

/// Ladder of real boundary values v(eps), extrapolated to eps = 0.  `sample`
/// maps a ladder height to the boundary value; failures flag the point but
/// the surviving rungs are still used when at least three are available.
struct LadderPoint {
    double value = 0;
    double error = std::numeric_limits<double>::infinity();
    bool flagged = true;
};

template <class Sample>
LadderPoint extrapolate_ladder(const std::vector<double>& ladder, const Sample& sample) {
    std::vector<cd> nodes, values;
    bool failed = false;
    for (double eps : ladder) {
        try {
            const double v = sample(eps);
            if (!std::isfinite(v)) {
                failed = true;
                continue;
            }
            nodes.emplace_back(eps, 0.0);
            values.emplace_back(v, 0.0);
        } catch (const Error&) {
            failed = true;
        }
    }
    LadderPoint out;
    if (values.size() < 3) return out;
    const Extrapolation ex = richardson(nodes, values);
    out.value = ex.limit.real();
    out.error = ex.error;
    out.flagged = failed;
    return out;
}

DensityGrid recover(const std::vector<double>& xs, const std::vector<double>& ladder,
                    const std::function<double(double, double)>& boundary_density) {
    DensityGrid grid;
    grid.abscissae = xs;
    grid.eps_ladder = ladder;
    grid.density.resize(xs.size());
    grid.extrapolation_error.resize(xs.size());
    grid.flagged.resize(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double x = xs[i];
        LadderPoint p =
            extrapolate_ladder(ladder, [&](double eps) { return boundary_density(x, eps); });
        if (p.value < -kNegativeDensityTol) p.flagged = true;
        // An error estimate comparable to the value itself means the limit
        // does not exist there (atom spike or support edge singularity).
        if (p.error > std::max(5e-3, 0.25 * std::abs(p.value))) p.flagged = true;
        grid.density[i] = std::max(p.value, 0.0);
        grid.extrapolation_error[i] = p.error;
        grid.flagged[i] = p.flagged ? 1 : 0;
    }
    return grid;
}

}  // namespace

DensityGrid stieltjes_invert(const TransformEvaluator& cauchy, double lo, double hi, int n,
                             std::vector<double> ladder) {
    return recover(linspace(lo, hi, n), ladder, [&](double x, double eps) {
        return -cauchy(cd(x, eps)).imag() / M_PI;
    });
}

DensityGrid circle_density(const TransformEvaluator& psi, double lo, double hi, int n,
                           std::vector<double> ladder) {
    return recover(linspace(lo, hi, n), ladder, [&](double theta, double eps) {
        const cd z = std::polar(1.0 - eps, -theta);
        return (1.0 + 2.0 * psi(z)).real() / (2 * M_PI);
    });
}

namespace {

IntervalMass quadrature_of_recovered(double lo, double hi, const std::vector<double>& atoms,
                                     const std::function<LadderPoint(double)>& point) {
    // Cut exclusion margins around atoms, then integrate each remaining
    // subinterval with composite GL16.
    const double margin = kAtomExclusionFrac * (hi - lo);
    std::vector<std::pair<double, double>> parts{{lo, hi}};
    for (double a : atoms) {
        std::vector<std::pair<double, double>> next;
        for (auto [s, e] : parts) {
            const double cl = a - margin, cr = a + margin;
            if (cr <= s || cl >= e) {
                next.push_back({s, e});
                continue;
            }
            if (cl > s) next.push_back({s, cl});
            if (cr < e) next.push_back({cr, e});
        }
        parts = std::move(next);
    }
    IntervalMass out;
    const auto& rule = quad::gl16();
    for (auto [s, e] : parts) {
        const int panels = 6;
        for (int p = 0; p < panels; ++p) {
            const double a = s + (e - s) * p / panels, b = s + (e - s) * (p + 1) / panels;
            const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
            for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
                const LadderPoint lp = point(mid + half * rule.nodes[i]);
                if (lp.flagged && !std::isfinite(lp.value)) {
                    out.flagged = true;
                    continue;
                }
                if (lp.flagged) out.flagged = true;
                out.value += rule.weights[i] * half * std::max(lp.value, 0.0);
            }
        }
    }
    return out;
}

}  // namespace

IntervalMass interval_mass_estimate(const TransformEvaluator& cauchy, double lo, double hi,
                                    const std::vector<double>& atom_positions,
                                    std::vector<double> ladder) {
    return quadrature_of_recovered(lo, hi, atom_positions, [&](double x) {
        return extrapolate_ladder(ladder,
                                  [&](double eps) { return -cauchy(cd(x, eps)).imag() / M_PI; });
    });
}

IntervalMass interval_mass_estimate_circle(const TransformEvaluator& psi, double lo, double hi,
                                           const std::vector<double>& atom_angles,
                                           std::vector<double> ladder) {
    constexpr double kTwoPi = 2 * M_PI;
    double f = lo, t = hi;
    while (t <= f) t += kTwoPi;
    std::vector<double> atoms;
    for (double a : atom_angles)
        for (double shift : {0.0, kTwoPi, -kTwoPi})
            if (a + shift > f && a + shift < t) atoms.push_back(a + shift);
    return quadrature_of_recovered(f, t, atoms, [&](double theta) {
        return extrapolate_ladder(ladder, [&](double eps) {
            const cd z = std::polar(1.0 - eps, -theta);
            return (1.0 + 2.0 * psi(z)).real() / (2 * M_PI);
        });
    });
}

void write_density_csv(const DensityGrid& grid, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw Error("io", "cannot write '" + path.string() + "'");
    out << "x,density,extrapolation_error,flagged\n";
    char buf[120];
    for (std::size_t i = 0; i < grid.abscissae.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%d\n", grid.abscissae[i],
                      grid.density[i], grid.extrapolation_error[i], grid.flagged[i] ? 1 : 0);
        out << buf;
    }
}

void write_density_sidecar(const DensityGrid& grid, const std::filesystem::path& path) {
    nlohmann::json j;
    j["schema"] = "freeconv/1";
    j["eps_ladder"] = grid.eps_ladder;
    j["points"] = grid.abscissae.size();
    if (!grid.abscissae.empty()) {
        j["lo"] = grid.abscissae.front();
        j["hi"] = grid.abscissae.back();
    }
    int flagged = 0;
    for (auto f : grid.flagged) flagged += f;
    j["flagged_points"] = flagged;
    j["extrapolation"] = "richardson-order-2";
    double max_err = 0;
    for (std::size_t i = 0; i < grid.extrapolation_error.size(); ++i)
        if (!grid.flagged[i]) max_err = std::max(max_err, grid.extrapolation_error[i]);
    j["max_extrapolation_error"] = max_err;
    std::ofstream out(path);
    if (!out) throw Error("io", "cannot write '" + path.string() + "'");
    out << j.dump(2) << "\n";
}

}  // namespace freeconv
