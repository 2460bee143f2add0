#include <complex>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "freeconv/atoms.hpp"
#include "freeconv/density.hpp"
#include "freeconv/errors.hpp"
#include "freeconv/indecomposable.hpp"
#include "freeconv/measure.hpp"
#include "freeconv/rmoracle.hpp"
#include "freeconv/subordination.hpp"
#include "freeconv/transforms.hpp"

namespace fs = std::filesystem;
using namespace freeconv;
using json = nlohmann::json;
using cd = std::complex<double>;

namespace {

// Exit codes: 0 success, 2 input error, 3 numerical non-convergence, 4 internal.
int exit_code_for(const std::string& code) {
    static const std::vector<std::string> input = {
        "parse",         "invalid-measure",  "carrier-mismatch",
        "domain",        "io",               "delta-zero-input",
        "zero-first-moment", "psi-undefined-for-delta-zero", "cli"};
    static const std::vector<std::string> numerical = {"non-convergence", "quadrature-tolerance",
                                                       "eta-pole"};
    for (const auto& c : input)
        if (c == code) return 2;
    for (const auto& c : numerical)
        if (c == code) return 3;
    return 4;
}

int emit_error(const std::string& code, const std::string& message) {
    json j;
    j["schema"] = "freeconv/1";
    j["error"] = {{"code", code}, {"message", message}};
    std::cerr << j.dump() << "\n";
    return exit_code_for(code);
}

struct GridSpec {
    double min = 0, max = 0;
    int n = 0;
};

GridSpec parse_grid(const std::string& text) {
    GridSpec g;
    std::size_t p1 = text.find(':');
    std::size_t p2 = text.rfind(':');
    if (p1 == std::string::npos || p2 == p1)
        throw Error("domain", "--grid expects min:max:n");
    try {
        g.min = std::stod(text.substr(0, p1));
        g.max = std::stod(text.substr(p1 + 1, p2 - p1 - 1));
        g.n = std::stoi(text.substr(p2 + 1));
    } catch (const std::exception&) {
        throw Error("domain", "--grid expects numeric min:max:n");
    }
    if (!(g.min < g.max) || g.n < 2)
        throw Error("domain", "--grid needs min < max and n >= 2");
    return g;
}

std::vector<double> parse_ladder(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            out.push_back(std::stod(item));
        } catch (const std::exception&) {
            throw Error("domain", "--eps expects comma-separated numbers");
        }
    }
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (!(out[i] > 0)) throw Error("domain", "--eps entries must be positive");
        if (i && !(out[i] < out[i - 1])) throw Error("domain", "--eps must decrease strictly");
    }
    if (out.size() < 3) throw Error("domain", "--eps needs at least three entries");
    return out;
}

struct LoadedPair {
    AnyMeasure a, b;
    Carrier carrier = Carrier::Line;
};

LoadedPair load_pair(const std::string& file_a, const std::string& file_b, const std::string& op) {
    LoadedPair p{load_measure(file_a), load_measure(file_b)};
    Carrier ca = carrier_of(p.a), cb = carrier_of(p.b);
    if (ca != cb)
        throw Error("carrier-mismatch", "inputs live on different carriers (" + carrier_name(ca) +
                                            " vs " + carrier_name(cb) + ")");
    Carrier want = op == "add" ? Carrier::Line : op == "mul-pos" ? Carrier::HalfLine : Carrier::Circle;
    if (op == "add") {
        // Additive convolution accepts half-line inputs as measures on the line.
        if (ca == Carrier::Circle)
            throw Error("carrier-mismatch", "--op add needs measures on the line");
        if (ca == Carrier::HalfLine) {
            p.a = std::get<PosMeasure>(p.a).real();
            p.b = std::get<PosMeasure>(p.b).real();
        }
        p.carrier = Carrier::Line;
        return p;
    }
    if (ca != want)
        throw Error("carrier-mismatch", "--op " + op + " needs " + carrier_name(want) +
                                            " measures, got " + carrier_name(ca));
    p.carrier = ca;
    return p;
}

std::pair<double, double> default_bounds(const LoadedPair& p, const std::string& op) {
    if (op == "mul-circle") return {0.0, 2.0 * std::numbers::pi};
    auto hull = [](const AnyMeasure& m) {
        if (std::holds_alternative<RealMeasure>(m)) return std::get<RealMeasure>(m).support_hull();
        return std::get<PosMeasure>(m).support_hull();
    };
    auto [a_lo, a_hi] = hull(p.a);
    auto [b_lo, b_hi] = hull(p.b);
    double lo, hi;
    if (op == "add") {
        lo = a_lo + b_lo;
        hi = a_hi + b_hi;
    } else {
        lo = a_lo * b_lo;
        hi = a_hi * b_hi;
    }
    double pad = 0.05 * std::max(hi - lo, 1.0);
    return {lo - pad, hi + pad};
}

json grid_json(const GridSpec& g) { return json{{"min", g.min}, {"max", g.max}, {"n", g.n}}; }

void write_json(const json& j, const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw Error("io", "cannot write " + path.string());
    out << j.dump(2) << "\n";
}

struct ResidualStats {
    double max_residual = 0;
    double mean_iterations = 0;
    long max_iterations = 0;
    int probes = 0;
    int non_converged = 0;
};

json stats_json(const ResidualStats& s) {
    return json{{"probes", s.probes},
                {"max_residual", s.max_residual},
                {"mean_iterations", s.mean_iterations},
                {"max_iterations", s.max_iterations},
                {"non_converged", s.non_converged}};
}

ResidualStats probe_residuals(const LoadedPair& p, const std::string& op, const GridSpec& grid,
                              double eps, const SolveOptions& solve) {
    ResidualStats st;
    const int count = std::min(32, grid.n);
    double iter_sum = 0;
    for (int k = 0; k < count; ++k) {
        double x = grid.min + (grid.max - grid.min) * (k + 0.5) / count;
        SubordinationSample s;
        try {
            if (op == "add")
                s = solve_additive(std::get<RealMeasure>(p.a), std::get<RealMeasure>(p.b),
                                   cd(x, eps), solve);
            else if (op == "mul-pos")
                s = solve_multiplicative(std::get<PosMeasure>(p.a), std::get<PosMeasure>(p.b),
                                         1.0 / cd(x, eps), solve);
            else
                s = solve_multiplicative(std::get<CircleMeasure>(p.a), std::get<CircleMeasure>(p.b),
                                         std::polar(1.0 - eps, -x), solve);
        } catch (const Error&) {
            ++st.non_converged;
            continue;
        }
        ++st.probes;
        st.max_residual = std::max(st.max_residual, s.residual_subord);
        st.max_iterations = std::max(st.max_iterations, s.iterations);
        iter_sum += static_cast<double>(s.iterations);
        if (!s.converged) ++st.non_converged;
    }
    if (st.probes > 0) st.mean_iterations = iter_sum / st.probes;
    return st;
}

struct ConvolveArgs {
    std::string file_a, file_b, op = "add", out = ".";
    std::string grid_text, eps_text;
    double tol = 1e-12;
    long max_iter = 10000;
    std::uint64_t seed = 1;
};

int run_convolve(const ConvolveArgs& args) {
    LoadedPair pair = load_pair(args.file_a, args.file_b, args.op);
    SolveOptions solve{args.tol, args.max_iter};

    GridSpec grid;
    if (!args.grid_text.empty()) {
        grid = parse_grid(args.grid_text);
    } else {
        auto [lo, hi] = default_bounds(pair, args.op);
        grid = {lo, hi, 501};
    }
    std::vector<double> density_ladder =
        args.eps_text.empty() ? density_eps_ladder() : parse_ladder(args.eps_text);
    std::vector<double> atom_ladder =
        args.eps_text.empty() ? default_eps_ladder() : parse_ladder(args.eps_text);

    fs::path out_dir(args.out);
    fs::create_directories(out_dir);

    AtomOptions atom_opt;
    atom_opt.ladder = atom_ladder;
    atom_opt.solve = solve;

    DensityGrid density;
    std::vector<AtomReport> atoms;
    if (args.op == "add") {
        const auto& a = std::get<RealMeasure>(pair.a);
        const auto& b = std::get<RealMeasure>(pair.b);
        density = stieltjes_invert(additive_cauchy_evaluator(a, b, solve), grid.min, grid.max,
                                   grid.n, density_ladder);
        atoms = detect_atoms(a, b, atom_opt);
    } else if (args.op == "mul-pos") {
        const auto& a = std::get<PosMeasure>(pair.a);
        const auto& b = std::get<PosMeasure>(pair.b);
        density = stieltjes_invert(multiplicative_cauchy_evaluator(a, b, solve), grid.min,
                                   grid.max, grid.n, density_ladder);
        atoms = detect_atoms(a, b, atom_opt);
    } else {
        const auto& a = std::get<CircleMeasure>(pair.a);
        const auto& b = std::get<CircleMeasure>(pair.b);
        density = circle_density(multiplicative_psi_evaluator(a, b, solve), grid.min, grid.max,
                                 grid.n, density_ladder);
        atoms = detect_atoms(a, b, atom_opt);
    }

    write_density_csv(density, out_dir / "density.csv");
    write_density_sidecar(density, out_dir / "density.json");
    write_atom_reports_json(atoms, args.op, out_dir / "atoms.json");

    ResidualStats stats = probe_residuals(pair, args.op, grid, density_ladder.back(), solve);

    json meta;
    meta["schema"] = "freeconv/1";
    meta["command"] = "convolve";
    meta["op"] = args.op;
    meta["inputs"] = {args.file_a, args.file_b};
    meta["carrier"] = carrier_name(pair.carrier);
    meta["grid"] = grid_json(grid);
    meta["eps_ladder"] = density_ladder;
    meta["atom_eps_ladder"] = atom_ladder;
    meta["tol"] = args.tol;
    meta["max_iter"] = args.max_iter;
    meta["seed"] = args.seed;
    meta["atoms_detected"] = atoms.size();
    std::size_t flagged = 0;
    for (auto f : density.flagged) flagged += f;
    meta["density_points_flagged"] = flagged;
    meta["residual_statistics"] = stats_json(stats);
    write_json(meta, out_dir / "meta.json");

    std::cout << "wrote density.csv (" << grid.n << " points, " << flagged << " flagged), atoms.json ("
              << atoms.size() << " atoms), meta.json to " << out_dir.string() << "\n";
    return 0;
}

struct CertifyArgs {
    std::string file, out = ".";
    double gap_tol = 0;
};

int run_certify(const CertifyArgs& args) {
    AnyMeasure m = load_measure(args.file);
    Certificate cert = certify_indecomposable(m, args.gap_tol);
    fs::path out_dir(args.out);
    fs::create_directories(out_dir);
    write_certificate_json(cert, out_dir / "certificate.json");

    json meta;
    meta["schema"] = "freeconv/1";
    meta["command"] = "certify";
    meta["input"] = args.file;
    meta["carrier"] = carrier_name(cert.carrier);
    meta["gap_tol"] = args.gap_tol;
    meta["verdict"] = cert.certified ? "certified" : "not-certified";
    meta["rule"] = cert.rule;
    write_json(meta, out_dir / "meta.json");

    std::cout << certificate_summary(cert) << "\n";
    return 0;
}

struct OracleArgs {
    std::string file_a, file_b, op = "add", out = ".";
    std::string grid_text, eps_text;
    int dim = 200, trials = 10;
    std::uint64_t seed = 1;
    double tol = 1e-12;
    long max_iter = 10000;
    bool solver_reference = false;
};

int run_oracle(const OracleArgs& args) {
    LoadedPair pair = load_pair(args.file_a, args.file_b, args.op);
    fs::path out_dir(args.out);
    fs::create_directories(out_dir);

    EigenSample sample;
    if (args.op == "add")
        sample = sample_additive(std::get<RealMeasure>(pair.a), std::get<RealMeasure>(pair.b),
                                 args.dim, args.trials, args.seed);
    else if (args.op == "mul-pos")
        sample = sample_multiplicative(std::get<PosMeasure>(pair.a), std::get<PosMeasure>(pair.b),
                                       args.dim, args.trials, args.seed);
    else
        sample = sample_multiplicative(std::get<CircleMeasure>(pair.a),
                                       std::get<CircleMeasure>(pair.b), args.dim, args.trials,
                                       args.seed);
    write_eigenvalues_csv(sample, out_dir / "eigs.csv");

    json meta;
    meta["schema"] = "freeconv/1";
    meta["command"] = "oracle";
    meta["op"] = args.op;
    meta["inputs"] = {args.file_a, args.file_b};
    meta["model"] = sample.model;
    meta["dimension"] = args.dim;
    meta["trials"] = args.trials;
    meta["seed"] = args.seed;
    meta["solver_reference"] = args.solver_reference;

    double ks = -1;
    if (args.solver_reference) {
        SolveOptions solve{args.tol, args.max_iter};
        GridSpec grid;
        if (!args.grid_text.empty()) {
            grid = parse_grid(args.grid_text);
        } else {
            auto [lo, hi] = default_bounds(pair, args.op);
            grid = {lo, hi, 501};
        }
        std::vector<double> ladder =
            args.eps_text.empty() ? density_eps_ladder() : parse_ladder(args.eps_text);
        AtomOptions atom_opt;
        atom_opt.solve = solve;

        RecoveredMeasure recovered;
        if (args.op == "add") {
            const auto& a = std::get<RealMeasure>(pair.a);
            const auto& b = std::get<RealMeasure>(pair.b);
            recovered.density = stieltjes_invert(additive_cauchy_evaluator(a, b, solve), grid.min,
                                                 grid.max, grid.n, ladder);
            for (const auto& r : detect_atoms(a, b, atom_opt))
                if (!r.flagged) recovered.atoms.push_back({r.alpha, r.mass});
        } else if (args.op == "mul-pos") {
            const auto& a = std::get<PosMeasure>(pair.a);
            const auto& b = std::get<PosMeasure>(pair.b);
            recovered.density = stieltjes_invert(multiplicative_cauchy_evaluator(a, b, solve),
                                                 grid.min, grid.max, grid.n, ladder);
            for (const auto& r : detect_atoms(a, b, atom_opt))
                if (!r.flagged) recovered.atoms.push_back({r.alpha, r.mass});
        } else {
            const auto& a = std::get<CircleMeasure>(pair.a);
            const auto& b = std::get<CircleMeasure>(pair.b);
            recovered.density = circle_density(multiplicative_psi_evaluator(a, b, solve), grid.min,
                                               grid.max, grid.n, ladder);
            for (const auto& r : detect_atoms(a, b, atom_opt))
                if (!r.flagged) recovered.atoms.push_back({r.alpha, r.mass});
        }
        // Negative round-off and flagged grid points would bias the CDF; zero them.
        for (std::size_t i = 0; i < recovered.density.density.size(); ++i)
            if (recovered.density.flagged[i] || recovered.density.density[i] < 0)
                recovered.density.density[i] = 0;
        ks = ks_distance(sample, recovered);

        json kj;
        kj["schema"] = "freeconv/1";
        kj["model"] = sample.model;
        kj["dimension"] = args.dim;
        kj["trials"] = args.trials;
        kj["seed"] = args.seed;
        kj["ks_distance"] = ks;
        kj["reference"] = {{"grid", grid_json(grid)},
                           {"eps_ladder", ladder},
                           {"atoms", recovered.atoms.size()}};
        write_json(kj, out_dir / "ks.json");
        meta["ks_distance"] = ks;
        meta["grid"] = grid_json(grid);
        meta["eps_ladder"] = ladder;
    }
    write_json(meta, out_dir / "meta.json");

    std::cout << "wrote eigs.csv (" << args.trials << " x " << args.dim << " eigenvalues)";
    if (args.solver_reference) std::cout << ", ks.json (distance " << ks << ")";
    std::cout << ", meta.json to " << out_dir.string() << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"numerical free convolution toolkit"};
    app.require_subcommand(1);

    ConvolveArgs conv;
    auto* c = app.add_subcommand("convolve",
                                 "convolve two measures and recover density and atoms");
    c->add_option("measure_a", conv.file_a, "first measure file")->required();
    c->add_option("measure_b", conv.file_b, "second measure file")->required();
    c->add_option("--op", conv.op, "operation: add | mul-pos | mul-circle")
        ->check(CLI::IsMember({"add", "mul-pos", "mul-circle"}));
    c->add_option("--grid", conv.grid_text, "density grid as min:max:n");
    c->add_option("--eps", conv.eps_text, "extrapolation ladder, comma-separated decreasing");
    c->add_option("--tol", conv.tol, "solver residual target");
    c->add_option("--max-iter", conv.max_iter, "solver iteration cap");
    c->add_option("--seed", conv.seed, "recorded in meta.json");
    c->add_option("--out", conv.out, "output directory");

    CertifyArgs cert;
    auto* t = app.add_subcommand("certify", "certify free indecomposability of one measure");
    t->add_option("measure", cert.file, "measure file")->required();
    t->add_option("--gap-tol", cert.gap_tol, "interior mass treated as an empty gap");
    t->add_option("--out", cert.out, "output directory");

    OracleArgs orc;
    auto* o = app.add_subcommand("oracle", "random-matrix eigenvalue cross-check");
    o->add_option("measure_a", orc.file_a, "first measure file")->required();
    o->add_option("measure_b", orc.file_b, "second measure file")->required();
    o->add_option("--op", orc.op, "operation: add | mul-pos | mul-circle")
        ->check(CLI::IsMember({"add", "mul-pos", "mul-circle"}));
    o->add_option("--dim", orc.dim, "matrix dimension");
    o->add_option("--trials", orc.trials, "number of independent trials");
    o->add_option("--seed", orc.seed, "random seed");
    o->add_flag("--solver-reference", orc.solver_reference,
                "also recover the convolution and write ks.json");
    o->add_option("--grid", orc.grid_text, "reference density grid as min:max:n");
    o->add_option("--eps", orc.eps_text, "reference extrapolation ladder");
    o->add_option("--tol", orc.tol, "solver residual target");
    o->add_option("--max-iter", orc.max_iter, "solver iteration cap");
    o->add_option("--out", orc.out, "output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        return emit_error("cli", e.what());
    }

    try {
        if (*c) return run_convolve(conv);
        if (*t) return run_certify(cert);
        if (*o) return run_oracle(orc);
    } catch (const Error& e) {
        return emit_error(e.code(), e.what());
    } catch (const std::exception& e) {
        return emit_error("internal", e.what());
    }
    return emit_error("internal", "no subcommand dispatched");
}
