#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "freeconv/errors.hpp"
#include "freeconv/measure.hpp"
#include "freeconv/rmoracle.hpp"
#include "freeconv/transforms.hpp"

using namespace freeconv;

TEST_CASE("eigenvalue sampling is deterministic in the seed") {
    RealMeasure m({{-1.0, 0.5}, {1.0, 0.5}});
    auto a = sample_additive(m, m, 16, 3, 42);
    auto b = sample_additive(m, m, 16, 3, 42);
    REQUIRE(a.eigenvalues.size() == 48);
    CHECK(a.eigenvalues == b.eigenvalues);
    auto c = sample_additive(m, m, 16, 3, 43);
    CHECK(a.eigenvalues != c.eigenvalues);
    // trial streams are independent of the trial count
    auto first = sample_additive(m, m, 16, 1, 42);
    CHECK(std::equal(first.eigenvalues.begin(), first.eigenvalues.end(), a.eigenvalues.begin()));
}

TEST_CASE("additive sample of two coins stays within the arcsine support") {
    RealMeasure m({{-1.0, 0.5}, {1.0, 0.5}});
    auto s = sample_additive(m, m, 64, 2, 7);
    for (double x : s.eigenvalues) {
        CHECK(x > -2.0 - 1e-9);
        CHECK(x < 2.0 + 1e-9);
    }
    // sorted within each trial
    for (int t = 0; t < 2; ++t)
        CHECK(std::is_sorted(s.eigenvalues.begin() + 64 * t, s.eigenvalues.begin() + 64 * (t + 1)));
}

TEST_CASE("additive ks distance shrinks against the true limit") {
    RealMeasure m({{-1.0, 0.5}, {1.0, 0.5}});
    RealMeasure arcsine({}, {{DensityPiece::arcsine(-2.0, 2.0), 1.0}});
    auto s = sample_additive(m, m, 300, 4, 11);
    double d = ks_distance(s, AnyMeasure(arcsine));
    CHECK(d < 0.05);
    // against a wrong target the distance is large
    RealMeasure wrong({}, {{DensityPiece::uniform(-2.0, 2.0), 1.0}});
    CHECK(ks_distance(s, AnyMeasure(wrong)) > 0.05);
}

TEST_CASE("multiplicative sample preserves exact zero eigenvalues") {
    // A has floor(N/3) zero quantile eigenvalues; the product keeps them exactly
    PosMeasure a({{0.0, 1.0 / 3.0}, {1.0, 2.0 / 3.0}});
    PosMeasure b({{1.0, 2.0 / 3.0}, {2.0, 1.0 / 3.0}});
    const int n = 30;
    auto s = sample_multiplicative(a, b, n, 2, 5);
    for (int t = 0; t < 2; ++t) {
        int zeros = 0;
        for (int i = 0; i < n; ++i)
            if (s.eigenvalues[t * n + i] == 0.0) ++zeros;
        CHECK(zeros == n / 3);
    }
    for (double x : s.eigenvalues) CHECK(x >= 0.0);
}

TEST_CASE("circle sample reports angles in range") {
    const double pi = std::numbers::pi;
    CircleMeasure m1({{0.0, 0.7}, {pi / 2, 0.3}});
    CircleMeasure m2({{0.0, 0.6}, {pi, 0.4}});
    auto s = sample_multiplicative(m1, m2, 32, 2, 9);
    REQUIRE(s.eigenvalues.size() == 64);
    for (double th : s.eigenvalues) {
        CHECK(th >= 0.0);
        CHECK(th < 2 * pi);
    }
    CHECK(s.model == "mul-circle");
}

TEST_CASE("ks distance is atom-aware for pinned values") {
    // sample with every value exactly at the atom: the jump must be compared
    // against the atom mass, not smeared across it
    EigenSample s;
    s.model = "mul-pos";
    s.dimension = 20;
    s.trials = 1;
    s.seed = 0;
    s.eigenvalues.assign(10, 0.0);
    s.eigenvalues.insert(s.eigenvalues.end(), 10, 1.0);
    PosMeasure law({{0.0, 0.5}, {1.0, 0.5}});
    CHECK(ks_distance(s, AnyMeasure(law)) < 1e-12);
    // against a measure with the atoms elsewhere the distance saturates
    CHECK(ks_distance(s, AnyMeasure(PosMeasure::point_mass(2.0))) == doctest::Approx(1.0));
    // unbalanced masses are seen at the jump itself
    PosMeasure skew({{0.0, 0.3}, {1.0, 0.7}});
    CHECK(ks_distance(s, AnyMeasure(skew)) == doctest::Approx(0.2));
}

TEST_CASE("ks distance snaps diagonalization scatter onto atoms") {
    // a cluster spread a few ulps around the atom must not register as error
    EigenSample s;
    s.model = "mul-pos";
    s.dimension = 6;
    s.trials = 1;
    s.seed = 0;
    s.eigenvalues = {1.0 - 3e-13, 1.0 - 1e-13, 1.0, 1.0, 1.0 + 2e-13, 1.0 + 4e-13};
    PosMeasure one = PosMeasure::point_mass(1.0);
    CHECK(ks_distance(s, AnyMeasure(one)) < 1e-12);
    // scatter wider than the snap tolerance is genuine error again
    s.eigenvalues = {0.5, 0.7, 0.9, 1.1, 1.3, 1.5};
    CHECK(ks_distance(s, AnyMeasure(one)) == doctest::Approx(0.5));
}

TEST_CASE("ks distance rejects carrier mismatches") {
    RealMeasure m({{-1.0, 0.5}, {1.0, 0.5}});
    auto s = sample_additive(m, m, 8, 1, 1);
    CHECK_THROWS_AS(ks_distance(s, AnyMeasure(CircleMeasure::point_mass(0.0))), Error);
}

TEST_CASE("ks distance against a recovered measure") {
    // recovered object: atom of 1/2 at 0 plus a flat density of mass 1/2 on [1,2]
    RecoveredMeasure rec;
    rec.atoms = {{0.0, 0.5}};
    const int n = 41;
    for (int i = 0; i < n; ++i) {
        double x = 1.0 + i / double(n - 1);
        rec.density.abscissae.push_back(x);
        rec.density.density.push_back(0.5);
        rec.density.extrapolation_error.push_back(0.0);
        rec.density.flagged.push_back(0);
    }
    // exact sampler for the same law
    PosMeasure law({{0.0, 0.5}}, {{DensityPiece::uniform(1.0, 2.0), 0.5}});
    auto s = sample_multiplicative(law, PosMeasure::point_mass(1.0), 400, 3, 17);
    double d = ks_distance(s, rec);
    CHECK(d < 0.05);
}

TEST_CASE("csv and meta outputs") {
    namespace fs = std::filesystem;
    RealMeasure m({{-1.0, 0.5}, {1.0, 0.5}});
    auto s = sample_additive(m, m, 4, 2, 99);
    auto dir = fs::temp_directory_path() / "freeconv_oracle_tests";
    fs::create_directories(dir);
    write_eigenvalues_csv(s, dir / "eigs.csv");
    std::ifstream in(dir / "eigs.csv");
    std::string header;
    std::getline(in, header);
    CHECK(header == "trial,eigenvalue");
    int rows = 0;
    for (std::string line; std::getline(in, line);)
        if (!line.empty()) ++rows;
    CHECK(rows == 8);

    write_sample_meta_json(s, dir / "meta.json", 0.25);
    std::stringstream ss;
    std::ifstream js(dir / "meta.json");
    ss << js.rdbuf();
    CHECK(ss.str().find("\"model\": \"add\"") != std::string::npos);
    CHECK(ss.str().find("\"ks_distance\": 0.25") != std::string::npos);
}
