#include "doctest.h"

#include "homogenize/error.hpp"
#include "homogenize/harness.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace homog;

namespace {

ProblemSpec spec_with(const std::string& f, const std::string& H) {
    const auto sv = coeffex::space_vars(1);
    auto s = registry(BenchmarkId::BM3_x1_free);
    s.name = "oracle";
    s.f = coeffex::parse_or_throw(f, coeffex::generator_vars(1), "f");
    s.H = coeffex::parse_or_throw(H, sv, "H");
    s.separable.reset();
    return s;
}

Grid small_grid() {
    Grid g;
    g.L1 = g.L2 = 2.0;
    g.h1 = 1.0 / 16;
    g.h2 = 1.0 / 4;
    return g;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("report formatting") {
    ConvergenceReport r;
    r.kind = ReportKind::eps_sweep;
    r.benchmark = "demo";
    r.columns = {"eps", "error"};
    r.rows = {{1.0, 0.1}, {0.5, 1.0 / 3.0}};
    r.add_meta("t", 0.5);
    r.check("small", "error", 0.25, "<=", 0.5);
    r.check("large", "error", 2.0, "<", 1.0);
    CHECK(r.csv() == "eps,error\n1,0.10000000000000001\n0.5,0.33333333333333331\n");
    const auto lines = r.verdict_lines();
    REQUIRE(lines.size() == 2);
    CHECK(lines[0] == "PASS eps_sweep/small: error = 0.25 <= 0.5");
    CHECK(lines[1] == "FAIL eps_sweep/large: error = 2 < 1");
    CHECK_FALSE(r.passed());
    CHECK(r.series("error")[1] == doctest::Approx(1.0 / 3.0));
    CHECK_THROWS_AS(r.column("missing"), Error);
    CHECK_THROWS_AS(r.check("x", "y", 1.0, "~", 1.0), Error);
    CHECK(r.metadata_text().find("t = 0.5\n") != std::string::npos);

    ConvergenceReport nan_report;
    nan_report.check("nan", "x", NAN, "<=", 1.0);
    CHECK_FALSE(nan_report.passed());

    const auto dir = std::filesystem::temp_directory_path() / "homogenize_report_test";
    write_report(r, dir.string(), "demo");
    CHECK(slurp((dir / "demo.csv").string()) == r.csv());
    CHECK(slurp((dir / "demo.svg").string()).find("<polyline") != std::string::npos);
    CHECK(slurp((dir / "demo.verdict").string()).find("FAIL eps_sweep/large") != std::string::npos);
    std::filesystem::remove_all(dir);
}

TEST_CASE("identity detection") {
    CHECK(averaging_is_identity(registry(BenchmarkId::BM3_x1_free)));
    CHECK_FALSE(averaging_is_identity(registry(BenchmarkId::BM1_tanh_fast)));
    CHECK_FALSE(averaging_is_identity(registry(BenchmarkId::BM2_periodic)));
}

TEST_CASE("eps sweep of the x1-free benchmark is exact") {
    EpsSweepParams p;
    p.t = 0.1;
    p.grid = small_grid();
    const auto r = eps_sweep(registry(BenchmarkId::BM3_x1_free), {1.0, 0.5}, p);
    REQUIRE_FALSE(r.partial);
    CHECK(r.passed());
    for (double e : r.series("error")) CHECK(e == 0.0);
    CHECK_THROWS_AS(eps_sweep(registry(BenchmarkId::BM3_x1_free), {0.5, 1.0}, p), Error);
}

TEST_CASE("unresolved eps marks the sweep partial") {
    EpsSweepParams p;
    p.t = 0.1;
    p.grid = small_grid();
    const auto r = eps_sweep(registry(BenchmarkId::BM1_tanh_fast), {1.0, 0.25}, p);
    CHECK(r.partial);
    CHECK_FALSE(r.passed());
    CHECK(r.verdict_lines().back().rfind("FAIL eps_sweep/completed", 0) == 0);
}

TEST_CASE("tightness of a constant solution") {
    LawParams p;
    p.t = 0.25;
    p.s_list = {0.125};
    p.n_paths = 400;
    p.record_steps = 8;
    const auto law = law_sweep(spec_with("0", "2.5"), {1.0, 0.5}, p);
    REQUIRE_FALSE(law.report.partial);
    CHECK(law.report.passed());
    const auto t = tightness_report(law);
    REQUIRE_FALSE(t.partial);
    for (double v : t.series("statistic")) CHECK(v == doctest::Approx(2.5).epsilon(1e-12));
    for (double v : t.series("sup_y_plus_m")) CHECK(v == doctest::Approx(2.5).epsilon(1e-12));
    for (int k = 1; k <= 3; ++k) {
        for (double v : t.series("up_" + std::to_string(k))) CHECK(v == 0.0);
    }
    CHECK(t.passed());
}

TEST_CASE("law sweep is reproducible") {
    LawParams p;
    p.t = 0.25;
    p.s_list = {0.125};
    p.n_paths = 300;
    p.record_steps = 8;
    const auto spec = spec_with("-y + 0.5*z_1", "sin(x2_1)");
    const auto a = law_sweep(spec, {1.0, 0.5}, p);
    p.threads = 3;
    const auto b = law_sweep(spec, {1.0, 0.5}, p);
    REQUIRE_FALSE(a.report.partial);
    CHECK(a.report.csv() == b.report.csv());
    CHECK(tightness_report(a).csv() == tightness_report(b).csv());
}

TEST_CASE("auxiliary process vanishes for a z-free generator") {
    AuxParams p;
    p.t = 0.25;
    p.n_paths = 300;
    p.record_steps = 8;
    p.grid = small_grid();
    p.grid.L1 = p.grid.L2 = 4.0;
    const auto r = auxproc_report(spec_with("-y + cos(x2_1)", "exp(-x2_1^2)"), 0.5, {4, 8}, p);
    REQUIRE_FALSE(r.partial);
    for (double a : r.series("mean_abs_A")) CHECK(a == 0.0);
    CHECK(r.passed());
}

TEST_CASE("mollification sweep") {
    MollSweepParams p;
    p.t = 0.1;
    p.region = Region{0.1, 1.0};
    p.grid = small_grid();
    const auto flat = moll_sweep(spec_with("-y + 0.5*z_1 + cos(x2_1)", "exp(-x2_1^2)"), {4, 8}, p);
    REQUIRE_FALSE(flat.partial);
    for (double s : flat.series("sup_diff")) CHECK(s == 0.0);
    CHECK(flat.passed());
    const auto bump = moll_sweep(registry(BenchmarkId::BM3_x1_free), {4, 8, 16}, p);
    REQUIRE_FALSE(bump.partial);
    const auto s = bump.series("sup_diff");
    CHECK(s[2] < s[0]);
    CHECK(bump.passed());
}
