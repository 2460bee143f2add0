#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <fstream>
#include <iterator>
#include <numbers>
#include <string>

#include "freeconv/atoms.hpp"
#include "freeconv/errors.hpp"
#include "freeconv/measure.hpp"
#include "freeconv/transforms.hpp"

using namespace freeconv;
using cd = std::complex<double>;

namespace {

const AtomReport* report_at(const std::vector<AtomReport>& rs, double alpha, double tol = 1e-9) {
    for (const auto& r : rs)
        if (std::abs(r.alpha - alpha) < tol) return &r;
    return nullptr;
}

}  // namespace

TEST_CASE("additive candidates need mass sum above one") {
    RealMeasure m1({{0.0, 0.6}, {1.0, 0.4}});
    RealMeasure m2({{0.0, 0.7}, {2.0, 0.3}});
    auto cands = candidate_atoms(m1, m2);
    // qualifying pairs: 0.6 + 0.7 > 1 at 0+0 and 0.4 + 0.7 > 1 at 1+0
    REQUIRE(cands.size() == 2);
    CHECK(cands[0].alpha == 0.0);
    CHECK(cands[0].alpha1 == 0.0);
    CHECK(cands[0].alpha2 == 0.0);
    CHECK(cands[0].predicted_mass == doctest::Approx(0.3));
    CHECK(cands[1].alpha == 1.0);
    CHECK(cands[1].alpha1 == 1.0);
    CHECK(cands[1].alpha2 == 0.0);
    CHECK(cands[1].predicted_mass == doctest::Approx(0.1));
}

TEST_CASE("half-line product candidates multiply positive locations only") {
    PosMeasure m1({{0.0, 0.3}, {2.0, 0.7}});
    PosMeasure m2({{1.0, 0.8}, {5.0, 0.2}});
    auto cands = candidate_atoms(m1, m2);
    REQUIRE(cands.size() == 1);  // 0.7 + 0.8 > 1 at location 2*1
    CHECK(cands[0].alpha == doctest::Approx(2.0));
    CHECK(cands[0].predicted_mass == doctest::Approx(0.5));
}

TEST_CASE("circle candidates add angles modulo 2 pi") {
    const double pi = std::numbers::pi;
    CircleMeasure m1({{3 * pi / 2, 0.8}, {0.0, 0.2}});
    CircleMeasure m2({{pi, 0.9}, {1.0, 0.1}});
    auto cands = candidate_atoms(m1, m2);
    // 0.8 + 0.9 > 1 at 3pi/2 + pi = pi/2 mod 2pi, and 0.2 + 0.9 > 1 at pi
    REQUIRE(cands.size() == 2);
    CHECK(cands[0].alpha == doctest::Approx(pi / 2));
    CHECK(cands[0].predicted_mass == doctest::Approx(0.7));
    CHECK(cands[1].alpha == doctest::Approx(pi));
    CHECK(cands[1].predicted_mass == doctest::Approx(0.1));
}

TEST_CASE("atom probe recovers a point mass exactly") {
    // G(z) = 0.4/z + 0.6/(z-1): probe at 0 gives 0.4, at 1 gives 0.6, at 0.5 gives 0
    auto ev = [](cd z) { return 0.4 / z + 0.6 / (z - 1.0); };
    auto p0 = atom_mass_probe(ev, 0.0);
    CHECK(!p0.flagged);
    CHECK(p0.mass == doctest::Approx(0.4).epsilon(1e-8));
    auto pmid = atom_mass_probe(ev, 0.5);
    CHECK(!pmid.flagged);
    CHECK(std::abs(pmid.mass) < 1e-8);
}

TEST_CASE("atom probe flags evaluators that keep failing") {
    auto p = atom_mass_probe([](cd) -> cd { throw DomainError("nope"); }, 0.0);
    CHECK(p.flagged);
}

TEST_CASE("circle atom probe reads the radial poisson limit") {
    const double pi = std::numbers::pi;
    CircleMeasure m({{0.0, 0.25}, {pi / 3, 0.75}});
    auto ev = [&](cd z) { return psi_transform(m, z); };
    auto p = atom_mass_probe_circle(ev, pi / 3);
    CHECK(!p.flagged);
    CHECK(p.mass == doctest::Approx(0.75).epsilon(1e-6));
    auto off = atom_mass_probe_circle(ev, 1.0);
    CHECK(std::abs(off.mass) < 1e-6);
}

TEST_CASE("two-coin additive convolution carries the predicted atoms") {
    // (0.6, 0.4) at {0,1} plus (0.7, 0.3) at {0,1}: candidates at 0 (0.6+0.7-1)
    // and at 1 (0.4+0.7-1); both survive as genuine atoms of the convolution
    RealMeasure m1({{0.0, 0.6}, {1.0, 0.4}});
    RealMeasure m2({{0.0, 0.7}, {1.0, 0.3}});
    auto reports = detect_atoms(m1, m2);
    REQUIRE(reports.size() == 2);
    const auto* r0 = report_at(reports, 0.0);
    REQUIRE(r0 != nullptr);
    CHECK(r0->from_candidate);
    CHECK(r0->theorem_applicable);
    CHECK(!r0->flagged);
    CHECK(r0->mass == doctest::Approx(0.3).epsilon(1e-6));
    CHECK(r0->component_mass1 == doctest::Approx(0.6));
    CHECK(r0->component_mass2 == doctest::Approx(0.7));
    // omega_j(alpha + i eps) -> alpha_j
    CHECK(std::abs(r0->omega_limit1 - cd(0.0, 0.0)) < 1e-5);
    CHECK(std::abs(r0->omega_limit2 - cd(0.0, 0.0)) < 1e-5);
    // derivative quotients omega_j' = m_j / mass
    CHECK(std::abs(r0->quotient1 - cd(2.0, 0.0)) < 1e-4);
    CHECK(std::abs(r0->quotient2 - cd(7.0 / 3.0, 0.0)) < 1e-4);
    auto res = verify_atom_theorem(*r0);
    CHECK(res.sum_identity < 1e-6);
    CHECK(res.mass_identity < 1e-4);
    CHECK(res.derivative1 < 1e-4);
    CHECK(res.derivative2 < 1e-4);
    CHECK(res.max() < 1e-4);

    const auto* r1 = report_at(reports, 1.0);
    REQUIRE(r1 != nullptr);
    CHECK(r1->theorem_applicable);
    CHECK(!r1->flagged);
    CHECK(r1->mass == doctest::Approx(0.1).epsilon(1e-5));
    CHECK(r1->component_mass1 == doctest::Approx(0.4));
    CHECK(r1->component_mass2 == doctest::Approx(0.7));
    CHECK(std::abs(r1->omega_limit1 - cd(1.0, 0.0)) < 1e-5);
    CHECK(std::abs(r1->omega_limit2 - cd(0.0, 0.0)) < 1e-5);
    CHECK(std::abs(r1->quotient1 - cd(4.0, 0.0)) < 1e-3);
    CHECK(std::abs(r1->quotient2 - cd(7.0, 0.0)) < 1e-3);
    CHECK(verify_atom_theorem(*r1).max() < 1e-3);
}

TEST_CASE("half-line product detects atoms at zero and at the candidate") {
    // mu1 = (1/3) delta_0 + (2/3) delta_1, mu2 = (2/3) delta_1 + (1/3) delta_2:
    // product has atom 1/3 at 0 (max of the zero masses) and 1/3 at 1 (2/3+2/3-1)
    PosMeasure m1({{0.0, 1.0 / 3.0}, {1.0, 2.0 / 3.0}});
    PosMeasure m2({{1.0, 2.0 / 3.0}, {2.0, 1.0 / 3.0}});
    auto reports = detect_atoms(m1, m2);
    REQUIRE(reports.size() == 2);
    const auto* at0 = report_at(reports, 0.0);
    REQUIRE(at0 != nullptr);
    CHECK(!at0->theorem_applicable);  // the zero atom has no component split
    CHECK(at0->mass == doctest::Approx(1.0 / 3.0).epsilon(1e-6));
    const auto* at1 = report_at(reports, 1.0);
    REQUIRE(at1 != nullptr);
    CHECK(at1->theorem_applicable);
    CHECK(at1->mass == doctest::Approx(1.0 / 3.0).epsilon(1e-4));
    CHECK(at1->predicted_mass == doctest::Approx(1.0 / 3.0));
    CHECK(std::abs(at1->quotient1 - cd(2.0, 0.0)) < 1e-3);
    CHECK(std::abs(at1->quotient2 - cd(2.0, 0.0)) < 1e-3);
    CHECK(verify_atom_theorem(*at1).max() < 1e-3);
}

TEST_CASE("circle product atoms at composed angles") {
    const double pi = std::numbers::pi;
    CircleMeasure m1({{0.0, 0.7}, {pi / 2, 0.3}});
    CircleMeasure m2({{0.0, 0.6}, {pi, 0.4}});
    auto reports = detect_atoms(m1, m2);
    REQUIRE(reports.size() == 2);
    const auto* at0 = report_at(reports, 0.0);
    REQUIRE(at0 != nullptr);
    CHECK(at0->mass == doctest::Approx(0.3).epsilon(1e-5));
    const auto* atpi = report_at(reports, pi);
    REQUIRE(atpi != nullptr);
    CHECK(atpi->mass == doctest::Approx(0.1).epsilon(1e-3));
    CHECK(shared_component_consistent(reports, true));
}

TEST_CASE("atoms below the detection threshold are dropped") {
    RealMeasure m1({{0.0, 0.9996}, {1.0, 0.0004}});
    RealMeasure m2({{0.0, 0.0004}, {1.0, 0.9996}});
    // only qualifying pair: 0.9996 + 0.9996 > 1 at 0+1, predicted mass 0.9992
    // (the 0+0 pair sums to exactly 1, which does not qualify)
    auto reports = detect_atoms(m1, m2);
    REQUIRE(reports.size() == 1);
    CHECK(reports[0].alpha == 1.0);
    CHECK(reports[0].mass == doctest::Approx(0.9992).epsilon(1e-5));

    AtomOptions strict;
    strict.threshold = 0.9995;  // raises the bar above the only atom
    auto none = detect_atoms(m1, m2, strict);
    CHECK(none.empty());
}

TEST_CASE("shared component consistency distinguishes good and bad lists") {
    // the check compares the extrapolated subordination limits, which carry
    // the component locations the solver actually saw
    AtomReport a, b;
    a.omega_limit1 = cd(0.0, 0.0);
    a.omega_limit2 = cd(1.0, 0.0);
    a.theorem_applicable = true;
    b.omega_limit1 = cd(0.0, 0.0);
    b.omega_limit2 = cd(2.0, 0.0);
    b.theorem_applicable = true;
    CHECK(shared_component_consistent({a, b}));
    b.omega_limit1 = cd(0.5, 0.0);  // now neither component matches
    CHECK(!shared_component_consistent({a, b}));
}

TEST_CASE("gap zero location for a two-atom measure") {
    // mu = (1/4) delta_0 + (3/4) delta_2: G(x) = 0.25/x + 0.75/(x-2) vanishes
    // where 0.25 (x-2) + 0.75 x = 0, i.e. x = 1/2
    RealMeasure m({{0.0, 0.25}, {2.0, 0.75}});
    auto ev = [&](cd z) { return detail::cauchy_resolvent(m, z); };
    auto gz = find_gap_zero(ev, 0.0, 2.0);
    CHECK(gz.found);
    CHECK(gz.unique);
    CHECK(gz.sign_changes == 1);
    CHECK(gz.gamma == doctest::Approx(0.5).epsilon(1e-6));
}

TEST_CASE("atom reports serialize to json") {
    namespace fs = std::filesystem;
    RealMeasure m1({{0.0, 0.6}, {1.0, 0.4}});
    RealMeasure m2({{0.0, 0.7}, {1.0, 0.3}});
    auto reports = detect_atoms(m1, m2);
    auto dir = fs::temp_directory_path() / "freeconv_atom_tests";
    fs::create_directories(dir);
    write_atom_reports_json(reports, "add", dir / "atoms.json");
    std::ifstream in(dir / "atoms.json");
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    CHECK(text.find("\"schema\": \"freeconv/1\"") != std::string::npos);
    CHECK(text.find("\"operation\": \"add\"") != std::string::npos);
    CHECK(text.find("\"alpha\"") != std::string::npos);
}
