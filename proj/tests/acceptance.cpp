// Acceptance suite: one PASS/FAIL line per criterion. Exit status is nonzero
// if any criterion fails.

#include "homogenize/bsde.hpp"
#include "homogenize/cesaro.hpp"
#include "homogenize/coeffex.hpp"
#include "homogenize/corrector.hpp"
#include "homogenize/error.hpp"
#include "homogenize/harness.hpp"
#include "homogenize/pdesolve.hpp"
#include "homogenize/rng.hpp"
#include "homogenize/sdesim.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include <sys/wait.h>

using namespace homog;

namespace {

const std::string kOut = "acceptance_out";

struct Outcome {
    bool pass = false;
    std::string detail;
};

class Detail {
public:
    template <class T>
    Detail& operator<<(const T& v) {
        os_ << v;
        return *this;
    }
    std::string str() const { return os_.str(); }

private:
    std::ostringstream os_;
};

Vec pt(double a, double b) {
    Vec x(2);
    x << a, b;
    return x;
}

Vec v1(double a) { return Vec::Constant(1, a); }

ProblemSpec variant(ProblemSpec s, const std::string& f, const std::string& H = "") {
    s.name += "_variant";
    s.f = coeffex::parse_or_throw(f, coeffex::generator_vars(1), "f");
    if (!H.empty()) s.H = coeffex::parse_or_throw(H, coeffex::space_vars(1), "H");
    s.separable.reset();
    return s;
}

ProblemSpec unit_diffusion(const std::string& f, const std::string& H, const std::string& drift) {
    const auto sv = coeffex::space_vars(1);
    auto s = registry(BenchmarkId::BM3_x1_free);
    s.name = "unit";
    s.phi = {coeffex::parse_or_throw("1", sv, "phi"), coeffex::parse_or_throw("0", sv, "phi")};
    s.sigma_tilde = {{coeffex::parse_or_throw("0", sv, "s"), coeffex::parse_or_throw("1", sv, "s")}};
    s.b_tilde = {coeffex::parse_or_throw(drift, sv, "b")};
    return variant(s, f, H);
}

std::string verdict_summary(const ConvergenceReport& r) {
    std::string out;
    for (const auto& a : r.verdict) {
        char buf[160];
        std::snprintf(buf, sizeof buf, "%s%s %s=%.4g", out.empty() ? "" : "; ", a.passed ? "ok" : "FAILED", a.name.c_str(),
                      a.observed);
        out += buf;
    }
    if (r.partial) out += (out.empty() ? "" : "; ") + std::string("partial: ") + r.error;
    return out;
}

// ---- 1 ----

double tanh_oracle(double X) {
    const double a = std::abs(X);
    const double lncosh = a + std::log1p(std::exp(-2.0 * a)) - std::log(2.0);
    return 2.0 + (X > 0 ? 1.0 : -1.0) * lncosh / a;
}

Outcome cesaro_oracle() {
    const AveragingControl ctl;
    auto g_tanh = [](double t) { return 2.0 + std::tanh(t); };
    auto g_sin = [](double t) { return 2.0 + std::sin(t); };
    const double tp = cesaro_limit(g_tanh, Direction::plus, ctl).limit;
    const double tm = cesaro_limit(g_tanh, Direction::minus, ctl).limit;
    const double sp = cesaro_limit(g_sin, Direction::plus, ctl).limit;
    const double sm = cesaro_limit(g_sin, Direction::minus, ctl).limit;
    const double e = std::max({std::abs(tp - tanh_oracle(1e9)), std::abs(tm - tanh_oracle(-1e9)), std::abs(tp - 3.0),
                               std::abs(tm - 1.0), std::abs(sp - 2.0), std::abs(sm - 2.0)});
    Detail d;
    d << "tanh+ " << tp << ", tanh- " << tm << ", sin+ " << sp << ", sin- " << sm << ", max err " << e << " <= 1e-3";
    return {e <= 1e-3, d.str()};
}

// ---- 2 ----

Outcome averaged_oracle() {
    const auto spec = registry(BenchmarkId::BM1_tanh_fast);
    const auto m = build_averaged_model(spec);
    double e = 0.0;
    for (std::uint32_t i = 0; i < 20; ++i) {
        const double x2 = -3.0 + 6.0 * rng::uniform(2024, i, 0);
        const double y = -2.0 + 4.0 * rng::uniform(2024, i, 1);
        RowVec z = RowVec::Zero(2);
        z[0] = -2.0 + 4.0 * rng::uniform(2024, i, 2);
        z[1] = -2.0 + 4.0 * rng::uniform(2024, i, 3);
        for (double side : {1.0, -1.0}) {
            const Vec x = pt(0.5 * side, x2);
            e = std::max(e, std::abs(m->bbar(x)[1] - side));
            e = std::max(e, std::abs(fbar_eval(*m, x, y, z) - (side * std::cos(x2) - y + 0.5 * z[1])));
        }
    }
    Detail d;
    d << "max |bbar - (+-1)|, |fbar - (+-cos x2 - y + z1/2)| over 20 points = " << e << " <= 1e-3";
    return {e <= 1e-3, d.str()};
}

// ---- 3 ----

Outcome structural_identity() {
    const auto spec = registry(BenchmarkId::BM3_x1_free);
    const auto avg = build_averaged_model(spec);
    const Grid g = default_sweep_grid();
    const Field a = solve_semilinear(EpsilonModel(spec, 0.125), 0.5, g);
    const Field b = solve_semilinear(*avg, 0.5, g);
    const bool bitwise = a.values == b.values;
    EpsSweepParams p;
    p.control = false;
    const auto r = eps_sweep(spec, {1.0, 0.5, 0.25, 0.125}, p);
    write_report(r, kOut, "c3_eps_sweep_bm3");
    const auto e = r.series("error");
    const double worst = e.empty() ? INFINITY : *std::max_element(e.begin(), e.end());
    Detail d;
    d << "bitwise " << (bitwise ? "yes" : "no") << ", max e(eps) = " << worst << " <= 1e-10";
    return {bitwise && r.passed() && worst <= 1e-10, d.str()};
}

// ---- 4 ----

Outcome corrector_oracle() {
    CorrectorParams p;
    p.eps = 1.0;
    p.x2 = v1(0.0);
    p.z = RowVec::Zero(2);
    const auto s = solve_corrector_rhs([](double x, int) { return std::sin(x); }, p, 10.0, 1e-3);
    double err = 0.0;
    for (std::size_t i = 0; i < s.x1.size(); ++i) err = std::max(err, std::abs(s.u[i] - (s.x1[i] - std::sin(s.x1[i]))));
    const auto spec = registry(BenchmarkId::BM1_tanh_fast);
    const auto avg = build_averaged_model(spec);
    double res = 0.0;
    for (double eps : {1.0, 0.25}) {
        CorrectorParams q = p;
        q.eps = eps;
        q.x2 = v1(0.4);
        q.y = 0.1;
        q.z[1] = -0.3;
        res = std::max(res, corrector_residual(spec, *avg, solve_corrector(spec, *avg, q, 10.0, 1e-3)));
    }
    Detail d;
    d << "manufactured max err " << err << " <= 1e-6, BM1 residual " << res << " <= 1e-4";
    return {err <= 1e-6 && res <= 1e-4, d.str()};
}

// ---- 5 ----

Outcome homogenization_trend() {
    bool ok = true;
    Detail d;
    for (auto id : {BenchmarkId::BM1_tanh_fast, BenchmarkId::BM2_periodic}) {
        const auto r = eps_sweep(registry(id), {1.0, 0.5, 0.25, 0.125});
        write_report(r, kOut, "c5_eps_sweep_" + to_string(id));
        d << to_string(id) << " e = [";
        const auto e = r.series("error");
        for (std::size_t i = 0; i < e.size(); ++i) d << (i ? ", " : "") << e[i];
        d << "] " << verdict_summary(r) << ". ";
        ok &= r.passed();
    }
    return {ok, d.str()};
}

// ---- 6 ----

Outcome feynman_kac() {
    const auto spec = registry(BenchmarkId::BM1_tanh_fast);
    LawParams p;
    p.n_paths = 10000;
    p.seed = 606;
    bool ok = true;
    Detail d;
    for (double eps : {0.0, 0.25}) {
        const auto c = feynman_kac_check(spec, eps, p);
        d << (eps > 0 ? "eps=1/4" : "averaged") << ": |y0 " << c.y0 << " - v " << c.v << "| = " << c.discrepancy
          << " <= 3*" << c.y0_stderr << " + " << c.fd_budget << (c.passed ? " ok" : " FAILED") << ". ";
        ok &= c.passed;
    }
    return {ok, d.str()};
}

// ---- 7 ----

Outcome mollification() {
    const auto r = moll_sweep(registry(BenchmarkId::BM1_tanh_fast), {4, 8, 16, 32});
    write_report(r, kOut, "c7_moll_sweep_BM1");
    Detail d;
    d << "sup|v^n - v| = [";
    const auto s = r.series("sup_diff");
    for (std::size_t i = 0; i < s.size(); ++i) d << (i ? ", " : "") << s[i];
    d << "] " << verdict_summary(r);
    return {r.passed(), d.str()};
}

// ---- 8, 9 ----

std::optional<LawSweepResult> g_law;

Outcome law_convergence() {
    LawParams p;
    p.n_paths = 10000;
    g_law = law_sweep(registry(BenchmarkId::BM1_tanh_fast), {1.0, 0.25, 0.0625}, p);
    const auto& r = g_law->report;
    write_report(r, kOut, "c8_law_sweep_BM1");
    Detail d;
    for (const char* c : {"ks_Y_s0.125", "ks_Y_s0.25"}) {
        d << c << " = [";
        const auto v = r.partial ? std::vector<double>{} : r.series(c);
        for (std::size_t i = 0; i < v.size(); ++i) d << (i ? ", " : "") << v[i];
        d << "] ";
    }
    d << verdict_summary(r);
    return {r.passed(), d.str()};
}

Outcome tightness() {
    if (!g_law) return {false, "law sweep artifacts unavailable"};
    const auto r = tightness_report(*g_law);
    write_report(r, kOut, "c9_tightness_BM1");
    Detail d;
    d << "statistic = [";
    const auto v = r.partial ? std::vector<double>{} : r.series("statistic");
    for (std::size_t i = 0; i < v.size(); ++i) d << (i ? ", " : "") << v[i];
    d << "] " << verdict_summary(r);
    return {r.passed(), d.str()};
}

// ---- 10 ----

Outcome auxiliary() {
    const auto spec = registry(BenchmarkId::BM1_tanh_fast);
    const auto r = auxproc_report(spec, 0.125, {8, 16, 32});
    write_report(r, kOut, "c10_auxproc_BM1");
    AuxParams p;
    p.n_paths = 2000;
    auto zfree = spec;
    zfree.name += "_zfree";
    zfree.f = coeffex::parse_or_throw("tanh(x1)*cos(x2_1) - y", coeffex::generator_vars(1), "f");
    zfree.separable->ell = coeffex::parse_or_throw("-y", coeffex::generator_vars(1), "ell");
    const auto free = auxproc_report(zfree, 0.125, {8, 16, 32}, p);
    write_report(free, kOut, "c10_auxproc_BM1_zfree");
    Detail d;
    d << "E|A| = [";
    const auto a = r.partial ? std::vector<double>{} : r.series("mean_abs_A");
    for (std::size_t i = 0; i < a.size(); ++i) d << (i ? ", " : "") << a[i];
    d << "] " << verdict_summary(r) << "; z-free: " << verdict_summary(free);
    return {r.passed() && free.passed(), d.str()};
}

// ---- 11 ----

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Outcome determinism() {
    const std::filesystem::path dir = std::filesystem::path(kOut) / "c11";
    std::filesystem::create_directories(dir);
    {
        std::ofstream cfg(dir / "run.toml");
        cfg << "benchmark = \"BM1\"\nt = 0.25\neps_list = [1.0, 0.5]\nn_paths = 2000\nrecord_steps = 16\nseed = 99\n"
            << "s_list = [0.125]\n[grid]\nL1 = 2.0\nL2 = 2.0\nh1 = 0.03125\nh2 = 0.25\n";
    }
    const std::string kit = HOMOGENIZE_KIT;
    std::vector<std::string> stems{"law_sweep", "tightness", "eps_sweep"};
    std::string texts[2][3];
    for (int run = 0; run < 2; ++run) {
        const auto out = dir / ("run" + std::to_string(run));
        for (const char* cmd : {"sweep-law", "sweep-eps"}) {
            const std::string line = "\"" + kit + "\" --config \"" + (dir / "run.toml").string() + "\" --serial --out \"" +
                                     out.string() + "\" " + cmd + " > \"" + (out.string() + "." + cmd + ".log") + "\" 2>&1";
            std::filesystem::create_directories(out);
            const int rc = std::system(line.c_str());
            if (rc == -1 || WEXITSTATUS(rc) == 1) return {false, std::string("homogenize-kit ") + cmd + " errored"};
        }
        for (int k = 0; k < 3; ++k) texts[run][k] = slurp(out / (stems[k] + ".csv"));
    }
    bool same = true;
    std::size_t bytes = 0;
    for (int k = 0; k < 3; ++k) {
        same &= !texts[0][k].empty() && texts[0][k] == texts[1][k];
        bytes += texts[0][k].size();
    }
    Detail d;
    d << "sweep-law, tightness and sweep-eps CSVs from two --serial runs: " << (same ? "byte-identical" : "DIFFER") << " ("
      << bytes << " bytes)";
    return {same, d.str()};
}

// ---- 12 ----

struct Golden {
    const char* src;
    std::map<std::string, double> env;
    double value;
};

Outcome unit_oracles() {
    Detail d;
    bool ok = true;

    // Heat kernel exp(-r^2/q)/q, q = 1 + 2s.
    {
        auto spec = unit_diffusion("0", "exp(-x1^2 - x2_1^2)", "0");
        Grid g;
        g.L1 = g.L2 = 4.0;
        g.h1 = g.h2 = 1.0 / 16;
        const Field v = solve_semilinear(EpsilonModel(spec, 1.0), 0.5, g);
        const int last = static_cast<int>(v.times.size()) - 1;
        double err = 0.0;
        for (int i = 8; i < g.n1() - 8; ++i) {
            for (int j = 8; j < g.n2() - 8; ++j) {
                const double x1 = g.x1(i), x2 = g.x2(j);
                err = std::max(err, std::abs(v.at(last, i, j) - std::exp(-(x1 * x1 + x2 * x2) / 2.0) / 2.0));
            }
        }
        d << "heat err " << err << " <= 5e-3; ";
        ok &= err <= 5e-3;
    }
    // Discrete maximum principle on the averaged BM1 model without generator.
    {
        const auto avg = build_averaged_model(variant(registry(BenchmarkId::BM1_tanh_fast), "0"));
        Grid g;
        g.L1 = g.L2 = 3.0;
        g.h1 = 1.0 / 32;
        g.h2 = 1.0 / 16;
        const Field v = solve_semilinear(*avg, 0.5, g);
        const auto& h = v.values[0];
        const double lo = *std::min_element(h.begin(), h.end()), hi = *std::max_element(h.begin(), h.end());
        double below = 0.0, above = 0.0;
        for (const auto& snap : v.values) {
            for (double x : snap) {
                below = std::max(below, lo - x);
                above = std::max(above, x - hi);
            }
        }
        d << "max principle overshoot " << std::max(below, above) << "; ";
        ok &= below <= 1e-12 && above <= 1e-9;
    }
    // BSDE: drifted mean y0 = x2 + 0.3 t and exponential decay c e^{-t}.
    {
        const EpsilonModel m(unit_diffusion("0", "x2_1", "0.3"), 1.0);
        const auto ens = simulate(m, pt(0.2, 0.5), 1.0, 1.0 / 32, 4000, 11);
        const auto sol = solve_regression(ens, m);
        const double e = std::abs(sol.y0 - 0.8);
        d << "drifted mean |y0 - 0.8| = " << e << " <= " << 3.0 * sol.y0_stderr + 1e-12 << "; ";
        ok &= e <= 3.0 * sol.y0_stderr + 1e-12;
    }
    {
        const double dt = 1.0 / 64;
        const EpsilonModel m(unit_diffusion("-y", "2", "0.3"), 1.0);
        const auto ens = simulate(m, pt(0.2, 0.5), 1.0, dt, 200, 13);
        const auto sol = solve_regression(ens, m);
        const double e = std::abs(sol.y0 - 2.0 * std::exp(-1.0));
        d << "decay |y0 - 2/e| = " << e << " <= " << 3.0 * sol.y0_stderr + 2.0 * dt << "; ";
        ok &= e <= 3.0 * sol.y0_stderr + 2.0 * dt;
    }
    // Parser golden suite.
    {
        const std::vector<Golden> golden = {
            {"1+2*3", {}, 7.0},
            {"2^3^2", {}, 512.0},
            {"-2^2", {}, -4.0},
            {"(-2)^2", {}, 4.0},
            {"2^-1", {}, 0.5},
            {"8/4/2", {}, 1.0},
            {"10-4-3", {}, 3.0},
            {"2*(3+4)*5", {}, 70.0},
            {"--3", {}, 3.0},
            {"3 - 2 * -1", {}, 5.0},
            {"abs(-2.5)+sqrt(16)", {}, 6.5},
            {"max(x1, y) - min(x1, y)", {{"x1", -1.0}, {"y", 4.0}}, 5.0},
            {"min(1, exp(x1))", {{"x1", -1.0}}, 0.36787944117144233},
            {"tanh(x1)*cos(x2_1) - y + 0.5*z_1", {{"x1", 0.3}, {"x2_1", -1.2}, {"y", 0.4}, {"z_1", 2.0}}, 0.7055593840986919},
            {"sqrt(2/(2+tanh(x1)))", {{"x1", 1.0}}, 0.8510107974089762},
            {"exp(-x1^2 - x2_1^2)", {{"x1", 0.5}, {"x2_1", -0.25}}, 0.7316156289466418},
            {"1.5e2*t", {{"t", 0.5}}, 75.0},
            {"2*x2_2 + z_0*z_3", {{"x2_2", 1.25}, {"z_0", -2.0}, {"z_3", 0.5}}, 1.5},
            {"sin(x1)^2 + cos(x1)^2", {{"x1", 0.7}}, 1.0},
            {"x1*x2_1", {{"x1", 2.0}, {"x2_1", 3.0}}, 6.0},
        };
        int hits = 0;
        for (const auto& g : golden) {
            const auto e = coeffex::parse(g.src);
            if (!e.ok()) continue;
            const auto r = coeffex::eval(*e, g.env);
            hits += r.ok() && *r == g.value;
        }
        d << "parser golden " << hits << "/" << golden.size();
        ok &= hits == static_cast<int>(golden.size());
    }
    return {ok, d.str()};
}

}  // namespace

int main() {
    std::filesystem::create_directories(kOut);
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"cesaro oracle", cesaro_oracle},
        {"averaged-model oracle (BM1)", averaged_oracle},
        {"structural identity (BM3)", structural_identity},
        {"corrector closed form", corrector_oracle},
        {"homogenization trend (BM1, BM2)", homogenization_trend},
        {"Feynman-Kac cross-validation", feynman_kac},
        {"mollification sweep", mollification},
        {"law convergence", law_convergence},
        {"tightness statistic", tightness},
        {"auxiliary processes", auxiliary},
        {"determinism", determinism},
        {"solver unit oracles", unit_oracles},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("error: ") + e.what()};
        }
        const double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::printf("%s %zu %s [%.1fs]: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(), sec,
                    o.detail.c_str());
        std::fflush(stdout);
        failed += !o.pass;
    }
    std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
