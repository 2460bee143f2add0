#include "freeconv/rmoracle.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <fstream>
#include <numbers>
#include <random>

#include <Eigen/Dense>
#include <json.hpp>

#include "freeconv/errors.hpp"

namespace freeconv {
namespace {

using Eigen::MatrixXcd;
using Eigen::VectorXd;
using cd = std::complex<double>;

std::uint64_t splitmix64_next(std::uint64_t& state) {
    state += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

std::mt19937_64 trial_rng(std::uint64_t seed, std::uint64_t trial) {
    std::uint64_t state = seed ^ (0xD6E8FEB86659FD93ULL * (trial + 1));
    std::uint64_t a = splitmix64_next(state);
    std::uint64_t b = splitmix64_next(state);
    std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                      static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
    return std::mt19937_64(seq);
}

// Uniform in (0,1] and [0,1) from the top 53 bits; Box-Muller keeps the
// normal stream identical across standard libraries.
double uniform_open(std::mt19937_64& rng) {
    return (static_cast<double>(rng() >> 11) + 1.0) * 0x1.0p-53;
}
double uniform_half_open(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

cd complex_gaussian(std::mt19937_64& rng) {
    double u1 = uniform_open(rng);
    double u2 = uniform_half_open(rng);
    double r = std::sqrt(-2.0 * std::log(u1));
    double phase = 2.0 * std::numbers::pi * u2;
    // variance 1 in total, 1/2 per component
    return cd(r * std::cos(phase), r * std::sin(phase)) / std::sqrt(2.0);
}

MatrixXcd haar_unitary(int n, std::mt19937_64& rng) {
    MatrixXcd g(n, n);
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) g(i, j) = complex_gaussian(rng);
    Eigen::HouseholderQR<MatrixXcd> qr(g);
    MatrixXcd q = qr.householderQ();
    MatrixXcd r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (int j = 0; j < n; ++j) {
        cd d = r(j, j);
        double a = std::abs(d);
        q.col(j) *= (a > 0 ? d / a : cd(1, 0));
    }
    return q;
}

template <class M>
VectorXd quantile_diagonal(const M& m, int n) {
    VectorXd d(n);
    for (int i = 0; i < n; ++i) d(i) = m.quantile((i + 0.5) / n);
    return d;
}

void check_sample_args(int dimension, int trials) {
    if (dimension < 1) throw Error("domain", "matrix dimension must be positive");
    if (trials < 1) throw Error("domain", "trial count must be positive");
}

// One-sided KS deviations at every distinct sample value.  `cdf` is the
// right-continuous target CDF and `atom_at` its jump at a point.
template <class Cdf, class AtomAt>
double ks_sorted(const std::vector<double>& sorted, Cdf cdf, AtomAt atom_at) {
    const double n = static_cast<double>(sorted.size());
    double worst = 0;
    std::size_t i = 0;
    while (i < sorted.size()) {
        std::size_t j = i;
        while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
        double v = sorted[i];
        double f_right = cdf(v);
        double f_left = f_right - atom_at(v);
        worst = std::max(worst, std::abs(f_right - static_cast<double>(j) / n));
        worst = std::max(worst, std::abs(f_left - static_cast<double>(i) / n));
        i = j;
    }
    return worst;
}

double wrap_angle(double t) {
    const double two_pi = 2.0 * std::numbers::pi;
    double w = std::fmod(t, two_pi);
    if (w < 0) w += two_pi;
    // Adding two_pi to a tiny negative remainder rounds to two_pi itself;
    // keep the contract of a half-open interval by identifying it with 0.
    if (w >= two_pi) w = 0.0;
    return w;
}

}  // namespace

EigenSample sample_additive(const RealMeasure& m1, const RealMeasure& m2, int dimension,
                            int trials, std::uint64_t seed) {
    check_sample_args(dimension, trials);
    EigenSample out{"add", dimension, trials, seed, {}};
    out.eigenvalues.reserve(static_cast<std::size_t>(dimension) * trials);
    VectorXd a = quantile_diagonal(m1, dimension);
    VectorXd b = quantile_diagonal(m2, dimension);
    for (int t = 0; t < trials; ++t) {
        auto rng = trial_rng(seed, t);
        MatrixXcd u = haar_unitary(dimension, rng);
        MatrixXcd m = u * b.asDiagonal() * u.adjoint();
        m.diagonal() += a.cast<cd>();
        Eigen::SelfAdjointEigenSolver<MatrixXcd> es(m, Eigen::EigenvaluesOnly);
        if (es.info() != Eigen::Success) throw Error("internal", "eigensolver failed");
        const VectorXd& ev = es.eigenvalues();
        out.eigenvalues.insert(out.eigenvalues.end(), ev.data(), ev.data() + dimension);
    }
    return out;
}

EigenSample sample_multiplicative(const PosMeasure& m1, const PosMeasure& m2, int dimension,
                                  int trials, std::uint64_t seed) {
    check_sample_args(dimension, trials);
    EigenSample out{"mul-pos", dimension, trials, seed, {}};
    out.eigenvalues.reserve(static_cast<std::size_t>(dimension) * trials);
    VectorXd a = quantile_diagonal(m1, dimension);
    VectorXd b = quantile_diagonal(m2, dimension);
    // Rows of A^{1/2} M A^{1/2} with a_i = 0 vanish identically, so those
    // eigenvalues are exact zeros; only the positive block is diagonalized.
    std::vector<int> pos;
    for (int i = 0; i < dimension; ++i)
        if (a(i) > 0) pos.push_back(i);
    const int k = static_cast<int>(pos.size());
    VectorXd sa(k);
    for (int i = 0; i < k; ++i) sa(i) = std::sqrt(a(pos[i]));
    for (int t = 0; t < trials; ++t) {
        auto rng = trial_rng(seed, t);
        MatrixXcd u = haar_unitary(dimension, rng);
        MatrixXcd conj = u * b.asDiagonal() * u.adjoint();
        MatrixXcd block(k, k);
        for (int c = 0; c < k; ++c)
            for (int r = 0; r < k; ++r) block(r, c) = sa(r) * conj(pos[r], pos[c]) * sa(c);
        std::vector<double> ev(static_cast<std::size_t>(dimension), 0.0);
        if (k > 0) {
            Eigen::SelfAdjointEigenSolver<MatrixXcd> es(block, Eigen::EigenvaluesOnly);
            if (es.info() != Eigen::Success) throw Error("internal", "eigensolver failed");
            for (int i = 0; i < k; ++i) ev[static_cast<std::size_t>(dimension - k + i)] = es.eigenvalues()(i);
        }
        std::sort(ev.begin(), ev.end());
        out.eigenvalues.insert(out.eigenvalues.end(), ev.begin(), ev.end());
    }
    return out;
}

EigenSample sample_multiplicative(const CircleMeasure& m1, const CircleMeasure& m2, int dimension,
                                  int trials, std::uint64_t seed) {
    check_sample_args(dimension, trials);
    EigenSample out{"mul-circle", dimension, trials, seed, {}};
    out.eigenvalues.reserve(static_cast<std::size_t>(dimension) * trials);
    Eigen::VectorXcd a(dimension), b(dimension);
    for (int i = 0; i < dimension; ++i) {
        a(i) = std::polar(1.0, m1.quantile_angle((i + 0.5) / dimension));
        b(i) = std::polar(1.0, m2.quantile_angle((i + 0.5) / dimension));
    }
    for (int t = 0; t < trials; ++t) {
        auto rng = trial_rng(seed, t);
        MatrixXcd u = haar_unitary(dimension, rng);
        MatrixXcd m = a.asDiagonal() * (u * b.asDiagonal() * u.adjoint());
        Eigen::ComplexEigenSolver<MatrixXcd> es(m, false);
        if (es.info() != Eigen::Success) throw Error("internal", "eigensolver failed");
        std::vector<double> angles(static_cast<std::size_t>(dimension));
        for (int i = 0; i < dimension; ++i) angles[static_cast<std::size_t>(i)] = wrap_angle(std::arg(es.eigenvalues()(i)));
        std::sort(angles.begin(), angles.end());
        out.eigenvalues.insert(out.eigenvalues.end(), angles.begin(), angles.end());
    }
    return out;
}

// Collapse the diagonalization scatter of atom clusters: every sample value
// within kAtomSnapTol of a listed atom position becomes that position exactly.
void snap_to_atoms(std::vector<double>& sorted, const std::vector<Atom>& atoms, bool circle) {
    if (atoms.empty()) return;
    for (double& v : sorted) {
        for (const auto& a : atoms) {
            double d = std::abs(v - a.position);
            if (circle) {
                double w = std::fmod(d, 2.0 * std::numbers::pi);
                d = std::min(w, 2.0 * std::numbers::pi - w);
            }
            if (d <= kAtomSnapTol) {
                v = a.position;
                break;
            }
        }
    }
    std::sort(sorted.begin(), sorted.end());
}

double ks_distance(const EigenSample& sample, const AnyMeasure& target) {
    Carrier c = carrier_of(target);
    bool circle_sample = sample.model == "mul-circle";
    if ((c == Carrier::Circle) != circle_sample)
        throw Error("domain", "sample and target live on different carriers");
    std::vector<double> sorted = sample.eigenvalues;
    std::sort(sorted.begin(), sorted.end());
    if (sorted.empty()) throw Error("domain", "empty sample");
    if (c == Carrier::Circle) {
        const auto& m = std::get<CircleMeasure>(target);
        snap_to_atoms(sorted, m.atoms(), true);
        return ks_sorted(
            sorted, [&](double t) { return m.cdf_angle(t); },
            [&](double t) { return m.atom_mass_at(t); });
    }
    auto with_real = [&](const RealMeasure& m) {
        snap_to_atoms(sorted, m.atoms(), false);
        return ks_sorted(
            sorted, [&](double x) { return m.cdf(x); },
            [&](double x) { return m.atom_mass_at(x); });
    };
    if (c == Carrier::HalfLine) return with_real(std::get<PosMeasure>(target).real());
    return with_real(std::get<RealMeasure>(target));
}

double ks_distance(const EigenSample& sample, const RecoveredMeasure& target) {
    const auto& xs = target.density.abscissae;
    const auto& ds = target.density.density;
    if (xs.size() != ds.size() || xs.size() < 2)
        throw Error("domain", "density grid needs at least two points");
    // Piecewise-linear CDF of the trapezoid density plus the atom jumps,
    // renormalized so the total mass is exactly one.
    std::vector<double> cum(xs.size(), 0.0);
    for (std::size_t i = 1; i < xs.size(); ++i)
        cum[i] = cum[i - 1] + 0.5 * (ds[i] + ds[i - 1]) * (xs[i] - xs[i - 1]);
    double atom_total = 0;
    for (const auto& a : target.atoms) atom_total += a.mass;
    double total = cum.back() + atom_total;
    if (!(total > 0)) throw Error("domain", "recovered measure has no mass");
    std::vector<Atom> atoms = target.atoms;
    std::sort(atoms.begin(), atoms.end(), [](const Atom& p, const Atom& q) { return p.position < q.position; });
    auto cdf = [&](double x) {
        double acc = 0;
        for (const auto& a : atoms)
            if (a.position <= x) acc += a.mass;
        if (x >= xs.back()) acc += cum.back();
        else if (x > xs.front()) {
            auto it = std::upper_bound(xs.begin(), xs.end(), x);
            std::size_t i = static_cast<std::size_t>(it - xs.begin()) - 1;
            double t = x - xs[i];
            double slope = (ds[i + 1] - ds[i]) / (xs[i + 1] - xs[i]);
            acc += cum[i] + ds[i] * t + 0.5 * slope * t * t;
        }
        return acc / total;
    };
    auto atom_at = [&](double x) {
        for (const auto& a : atoms)
            if (std::abs(a.position - x) <= kAtomCoincidenceTol) return a.mass / total;
        return 0.0;
    };
    std::vector<double> sorted = sample.eigenvalues;
    std::sort(sorted.begin(), sorted.end());
    if (sorted.empty()) throw Error("domain", "empty sample");
    snap_to_atoms(sorted, atoms, sample.model == "mul-circle");
    return ks_sorted(sorted, cdf, atom_at);
}

void write_eigenvalues_csv(const EigenSample& sample, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw Error("io", "cannot write " + path.string());
    out << "trial,eigenvalue\n";
    out.precision(17);
    for (int t = 0; t < sample.trials; ++t)
        for (int i = 0; i < sample.dimension; ++i)
            out << t << ',' << sample.eigenvalues[static_cast<std::size_t>(t) * sample.dimension + i] << '\n';
}

void write_sample_meta_json(const EigenSample& sample, const std::filesystem::path& path,
                            double ks) {
    nlohmann::json j;
    j["schema"] = "freeconv/1";
    j["model"] = sample.model;
    j["dimension"] = sample.dimension;
    j["trials"] = sample.trials;
    j["seed"] = sample.seed;
    if (ks >= 0) j["ks_distance"] = ks;
    std::ofstream out(path);
    if (!out) throw Error("io", "cannot write " + path.string());
    out << j.dump(2) << "\n";
}

}  // namespace freeconv
