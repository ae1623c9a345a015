#include "homogenize/harness.hpp"

#include "homogenize/error.hpp"
#include "homogenize/stats.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

namespace homog {

namespace {

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string short_num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

class Stopwatch {
public:
    double seconds() const { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count(); }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

Vec point(double a, double b) {
    Vec x(2);
    x << a, b;
    return x;
}

double ratio_max_min(const std::vector<double>& v) {
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    if (*hi == 0.0) return 1.0;
    if (*lo <= 0.0) return INFINITY;
    return *hi / *lo;
}

// Non-increasing with a relative slack: v[k+1] <= (1 + slack) v[k]; returns the
// worst v[k+1] / v[k].
double worst_step_ratio(const std::vector<double>& v) {
    double worst = 0.0;
    for (std::size_t k = 1; k < v.size(); ++k) {
        const double r = v[k - 1] > 0 ? v[k] / v[k - 1] : (v[k] > 0 ? INFINITY : 0.0);
        worst = std::max(worst, r);
    }
    return worst;
}

void describe_grid(ConvergenceReport& r, const Grid& g) {
    r.add_meta("grid.L1", g.L1);
    r.add_meta("grid.L2", g.L2);
    r.add_meta("grid.h1", g.h1);
    r.add_meta("grid.h2", g.h2);
}

void require_decreasing(const std::vector<double>& eps_list) {
    if (eps_list.empty()) throw Error(ErrorKind::InvalidArgument, "empty eps list");
    for (std::size_t i = 1; i < eps_list.size(); ++i) {
        if (!(eps_list[i] < eps_list[i - 1])) throw Error(ErrorKind::InvalidArgument, "eps list must be strictly decreasing");
    }
    if (!(eps_list.back() > 0)) throw Error(ErrorKind::InvalidArgument, "eps must be positive");
}

}  // namespace

std::string to_string(ReportKind kind) {
    switch (kind) {
        case ReportKind::eps_sweep: return "eps_sweep";
        case ReportKind::moll_sweep: return "moll_sweep";
        case ReportKind::law_sweep: return "law_sweep";
        case ReportKind::tightness: return "tightness";
        case ReportKind::auxproc: return "auxproc";
    }
    return "unknown";
}

bool ConvergenceReport::passed() const {
    if (partial || verdict.empty()) return false;
    return std::all_of(verdict.begin(), verdict.end(), [](const Assertion& a) { return a.passed; });
}

int ConvergenceReport::column(const std::string& name) const {
    const auto it = std::find(columns.begin(), columns.end(), name);
    if (it == columns.end()) throw Error(ErrorKind::InvalidArgument, "no column '" + name + "'");
    return static_cast<int>(it - columns.begin());
}

std::vector<double> ConvergenceReport::series(const std::string& name) const {
    const int c = column(name);
    std::vector<double> out;
    for (const auto& r : rows) out.push_back(r[c]);
    return out;
}

void ConvergenceReport::add_meta(const std::string& key, const std::string& value) { metadata.emplace_back(key, value); }
void ConvergenceReport::add_meta(const std::string& key, double value) { metadata.emplace_back(key, num(value)); }

void ConvergenceReport::check(const std::string& name, const std::string& statistic, double observed,
                              const std::string& relation, double threshold) {
    bool ok = false;
    if (relation == "<=") ok = observed <= threshold;
    else if (relation == "<") ok = observed < threshold;
    else if (relation == ">=") ok = observed >= threshold;
    else if (relation == ">") ok = observed > threshold;
    else if (relation == "==") ok = observed == threshold;
    else throw Error(ErrorKind::InvalidArgument, "unknown relation " + relation);
    verdict.push_back({name, statistic, observed, relation, threshold, ok && std::isfinite(observed)});
}

std::string ConvergenceReport::csv() const {
    std::ostringstream os;
    for (std::size_t c = 0; c < columns.size(); ++c) os << (c ? "," : "") << columns[c];
    os << "\n";
    for (const auto& r : rows) {
        for (std::size_t c = 0; c < r.size(); ++c) os << (c ? "," : "") << num(r[c]);
        os << "\n";
    }
    return os.str();
}

std::vector<std::string> ConvergenceReport::verdict_lines() const {
    std::vector<std::string> out;
    const std::string k = to_string(kind);
    for (const auto& a : verdict) {
        out.push_back(std::string(a.passed ? "PASS " : "FAIL ") + k + "/" + a.name + ": " + a.statistic + " = " +
                      short_num(a.observed) + " " + a.relation + " " + short_num(a.threshold));
    }
    if (partial) out.push_back("FAIL " + k + "/completed: " + error);
    return out;
}

std::string ConvergenceReport::metadata_text() const {
    std::ostringstream os;
    os << "kind = " << to_string(kind) << "\n";
    os << "benchmark = " << benchmark << "\n";
    for (const auto& [k, v] : metadata) os << k << " = " << v << "\n";
    os << "partial = " << (partial ? "true" : "false") << "\n";
    if (partial) os << "error = " << error << "\n";
    os << "passed = " << (passed() ? "true" : "false") << "\n";
    os << "wall_seconds = " << short_num(wall_seconds) << "\n";
    return os.str();
}

std::string ConvergenceReport::svg(const std::vector<std::string>& ys) const {
    const double W = 640, H = 400, m = 50;
    std::vector<std::vector<double>> series_y;
    for (const auto& name : ys) series_y.push_back(series(name));
    const std::vector<double> xs = rows.empty() ? std::vector<double>{} : series(columns[0]);
    auto lx = [](double v) { return v > 0 ? std::log2(v) : 0.0; };
    double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
    for (double v : xs) {
        x0 = std::min(x0, lx(v));
        x1 = std::max(x1, lx(v));
    }
    for (const auto& s : series_y) {
        for (double v : s) {
            if (!std::isfinite(v)) continue;
            y0 = std::min(y0, v);
            y1 = std::max(y1, v);
        }
    }
    if (!(x1 > x0)) { x0 -= 1; x1 += 1; }
    if (!(y1 > y0)) { y0 -= 1; y1 += 1; }
    const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << m << "\" y=\"20\" font-family=\"sans-serif\" font-size=\"14\">" << to_string(kind) << " "
       << benchmark << " (x: log2 " << (columns.empty() ? "" : columns[0]) << ")</text>\n";
    os << "<line x1=\"" << m << "\" y1=\"" << H - m << "\" x2=\"" << W - m << "\" y2=\"" << H - m << "\" stroke=\"black\"/>\n";
    os << "<line x1=\"" << m << "\" y1=\"" << m << "\" x2=\"" << m << "\" y2=\"" << H - m << "\" stroke=\"black\"/>\n";
    os << "<text x=\"5\" y=\"" << m << "\" font-family=\"sans-serif\" font-size=\"10\">" << short_num(y1) << "</text>\n";
    os << "<text x=\"5\" y=\"" << H - m << "\" font-family=\"sans-serif\" font-size=\"10\">" << short_num(y0) << "</text>\n";
    for (std::size_t k = 0; k < series_y.size(); ++k) {
        os << "<polyline fill=\"none\" stroke=\"" << colors[k % 6] << "\" stroke-width=\"2\" points=\"";
        for (std::size_t i = 0; i < xs.size(); ++i) {
            if (!std::isfinite(series_y[k][i])) continue;
            const double px = m + (lx(xs[i]) - x0) / (x1 - x0) * (W - 2 * m);
            const double py = H - m - (series_y[k][i] - y0) / (y1 - y0) * (H - 2 * m);
            os << short_num(px) << "," << short_num(py) << " ";
        }
        os << "\"/>\n";
        os << "<text x=\"" << W - m - 120 << "\" y=\"" << m + 14 * k << "\" fill=\"" << colors[k % 6]
           << "\" font-family=\"sans-serif\" font-size=\"11\">" << ys[k] << "</text>\n";
    }
    os << "</svg>\n";
    return os.str();
}

bool averaging_is_identity(const ProblemSpec& spec) {
    const int x1 = coeffex::slot::x1;
    for (const auto& e : spec.phi) if (e.uses(x1)) return false;
    for (const auto& e : spec.b_tilde) if (e.uses(x1)) return false;
    for (const auto& row : spec.sigma_tilde) for (const auto& e : row) if (e.uses(x1)) return false;
    return !spec.f.uses(x1);
}

Grid default_sweep_grid() {
    Grid g;
    g.L1 = g.L2 = 3.0;
    g.h1 = 1.0 / 64;
    g.h2 = 1.0 / 8;
    return g;
}

// ---- eps sweep ----

namespace {

std::vector<double> eps_errors(const ProblemSpec& spec, const std::vector<double>& eps_list, const EpsSweepParams& p,
                               ConvergenceReport* report) {
    const auto avg = build_averaged_model(spec);
    PdeOptions po;
    po.threads = p.threads;
    const Field v = solve_semilinear(*avg, p.t, p.grid, po);
    const double vbar = v.value(p.t, p.x_ref1, p.x_ref2);
    std::vector<double> errors;
    for (double eps : eps_list) {
        const Field ve = solve_semilinear(EpsilonModel(spec, eps), p.t, p.grid, po);
        const double x = ve.value(p.t, p.x_ref1, p.x_ref2);
        errors.push_back(std::abs(x - vbar));
        if (report) report->rows.push_back({eps, x, vbar, errors.back()});
        if (report && errors.size() == 1) report->add_meta("ds", ve.grid.ds);
    }
    return errors;
}

}  // namespace

ConvergenceReport eps_sweep(const ProblemSpec& spec, const std::vector<double>& eps_list, const EpsSweepParams& params) {
    Stopwatch clock;
    ConvergenceReport r;
    r.kind = ReportKind::eps_sweep;
    r.benchmark = spec.name;
    r.columns = {"eps", "v_eps", "v_avg", "error"};
    require_decreasing(eps_list);
    r.add_meta("t", params.t);
    r.add_meta("x_ref", num(params.x_ref1) + " " + num(params.x_ref2));
    describe_grid(r, params.grid);
    r.add_meta("smallest_eps_resolved", 8.0 * params.grid.h1);
    try {
        const auto e = eps_errors(spec, eps_list, params, &r);
        if (averaging_is_identity(spec)) {
            r.check("identity", "max e(eps)", *std::max_element(e.begin(), e.end()), "<=", 1e-10);
        } else {
            double worst = e.size() > 1 ? -INFINITY : 0.0;
            for (std::size_t i = 1; i < e.size(); ++i) worst = std::max(worst, e[i] - e[i - 1]);
            r.check("strictly_decreasing", "max_k e(eps_{k+1}) - e(eps_k)", worst, "<", 0.0);
            r.check("terminal_ratio", "e(eps_min) / e(eps_max)", e.back() / e.front(), "<=", 0.5);
            if (params.control) {
                const auto ctl = eps_errors(registry(BenchmarkId::BM3_x1_free), eps_list, params, nullptr);
                const double c = *std::max_element(ctl.begin(), ctl.end());
                r.add_meta("control_error", c);
                r.check("control", "BM3 control error / e(eps_min)", c / e.back(), "<=", 0.1);
            }
        }
    } catch (const Error& ex) {
        r.partial = true;
        r.error = ex.what();
    }
    r.wall_seconds = clock.seconds();
    return r;
}

// ---- mollification sweep ----

ConvergenceReport moll_sweep(const ProblemSpec& spec, const std::vector<int>& n_list, const MollSweepParams& params) {
    Stopwatch clock;
    ConvergenceReport r;
    r.kind = ReportKind::moll_sweep;
    r.benchmark = spec.name;
    r.columns = {"n", "sup_diff", "growth"};
    for (double p : params.p_list) {
        const std::string s = short_num(p);
        for (const char* c : {"lp_v_p", "lp_dsv_p", "lp_grad_p", "lp_hess_p", "gn_p"}) r.columns.push_back(c + s);
    }
    if (n_list.empty()) throw Error(ErrorKind::InvalidArgument, "empty n list");
    for (std::size_t i = 1; i < n_list.size(); ++i) {
        if (n_list[i] <= n_list[i - 1]) throw Error(ErrorKind::InvalidArgument, "n list must be increasing");
    }
    r.add_meta("t", params.t);
    r.add_meta("region.R", params.region.R);
    describe_grid(r, params.grid);
    try {
        const auto avg = build_averaged_model(spec);
        PdeOptions po;
        po.threads = params.threads;
        const Field v = solve_semilinear(*avg, params.t, params.grid, po);
        const Grid& g = v.grid;
        const int last = static_cast<int>(v.times.size()) - 1;
        const double R = params.region.R;
        for (int n : n_list) {
            const auto mn = mollify(avg, n);
            const Field vn = solve_semilinear(*mn, params.t, params.grid, po);
            double sup = 0.0, growth = 0.0;
            for (int s = 0; s <= last; ++s) {
                for (int i = 0; i < g.n1(); ++i) {
                    for (int j = 0; j < g.n2(); ++j) {
                        const double x1 = g.x1(i), x2 = g.x2(j);
                        const double val = vn.at(s, i, j);
                        growth = std::max(growth, std::abs(val) / (1.0 + std::pow(std::hypot(x1, x2), spec.bounds.p)));
                        if (std::abs(x1) <= R + 1e-12 && std::abs(x2) <= R + 1e-12) sup = std::max(sup, std::abs(val - v.at(s, i, j)));
                    }
                }
            }
            std::vector<double> row{static_cast<double>(n), sup, growth};
            const Region half{params.region.t, 0.5 * R};
            for (double p : params.p_list) {
                const auto nm = sobolev_norms(vn, p, half);
                row.insert(row.end(), {nm.lp_v, nm.lp_dsv, nm.lp_grad, nm.lp_hess, gagliardo_nirenberg_ratio(vn, p, half)});
            }
            r.rows.push_back(std::move(row));
        }
        const auto sup = r.series("sup_diff");
        if (averaging_is_identity(spec) && !spec.H.uses(coeffex::slot::x1)) {
            r.check("identity", "max sup|v^n - v|", *std::max_element(sup.begin(), sup.end()), "<=", 1e-10);
        } else {
            r.check("uniform_convergence", "max_k sup_{n_{k+1}} / sup_{n_k}", worst_step_ratio(sup), "<=", 1.05);
        }
        r.check("growth_bound", "max/min over n of max|v^n|/(1+|x|^p)", ratio_max_min(r.series("growth")), "<=", 10.0);
        for (double p : params.p_list) {
            const std::string s = short_num(p);
            for (const char* c : {"lp_v_p", "lp_dsv_p", "lp_grad_p", "lp_hess_p"}) {
                r.check(std::string("sobolev_") + c + s, std::string("max/min over n of ") + c + s,
                        ratio_max_min(r.series(c + s)), "<=", 10.0);
            }
            r.check("gn_bounded_p" + s, "max/min over n of gn_p" + s, ratio_max_min(r.series("gn_p" + s)), "<=", 10.0);
        }
    } catch (const Error& ex) {
        r.partial = true;
        r.error = ex.what();
    }
    r.wall_seconds = clock.seconds();
    return r;
}

// ---- law sweep ----

namespace {

int euler_count(double t, double limit, int record_steps) {
    int n = record_steps;
    while (t / n > limit) n *= 2;
    return n;
}

std::vector<std::vector<double>> martingale_paths(const BsdeSolution& sol, const PathEnsemble& ens, const DiffusionModel& model) {
    std::vector<std::vector<double>> out(static_cast<std::size_t>(sol.n_paths));
    Vec b;
    Mat sigma;
    for (int p = 0; p < sol.n_paths; ++p) {
        auto& m = out[p];
        m.assign(static_cast<std::size_t>(sol.n_steps) + 1, 0.0);
        for (int i = 0; i < sol.n_steps; ++i) {
            model.drift_diffusion(ens.state_vec(p, i), b, sigma);
            const RowVec zs = sol.Z(p, i) * sigma;
            const double* w = ens.increment(p, i);
            double inc = 0.0;
            for (int c = 0; c < ens.k; ++c) inc += zs[c] * w[c];
            m[i + 1] = m[i] + inc;
        }
    }
    return out;
}

std::vector<double> column_at(const std::vector<std::vector<double>>& paths, int step) {
    std::vector<double> out;
    out.reserve(paths.size());
    for (const auto& p : paths) out.push_back(p[step]);
    return out;
}

}  // namespace

LawSweepResult law_sweep(const ProblemSpec& spec, const std::vector<double>& eps_list, const LawParams& params) {
    Stopwatch clock;
    LawSweepResult out;
    out.spec = spec;
    ConvergenceReport& r = out.report;
    r.kind = ReportKind::law_sweep;
    r.benchmark = spec.name;
    require_decreasing(eps_list);
    for (double s : params.s_list) {
        if (!(s > 0 && s < params.t)) throw Error(ErrorKind::InvalidArgument, "law times must lie in (0, t)");
    }
    r.columns = {"eps"};
    for (const char* c : {"ks_Y", "ks_M", "ks_YM"}) {
        for (double s : params.s_list) r.columns.push_back(std::string(c) + "_s" + short_num(s));
    }
    for (const char* c : {"ks_X2_t", "mean_X2_t", "se_X2_t", "y0", "y0_stderr"}) r.columns.push_back(c);
    r.add_meta("t", params.t);
    r.add_meta("x_ref", num(params.x_ref1) + " " + num(params.x_ref2));
    r.add_meta("n_paths", params.n_paths);
    r.add_meta("seed", std::to_string(params.seed));
    r.add_meta("record_steps", params.record_steps);
    r.add_meta("basis", params.bsde.basis.describe());
    try {
        const Vec x0 = point(params.x_ref1, params.x_ref2);
        out.averaged = build_averaged_model(spec);
        std::vector<int> counts;
        for (double eps : eps_list) counts.push_back(euler_count(params.t, multiscale_step_limit(spec, eps, x0), params.record_steps));
        const int n_avg = params.record_steps * params.averaged_substeps;
        int noise = n_avg;
        for (int c : counts) noise = std::lcm(noise, c);
        r.add_meta("noise_steps", noise);
        std::string steps;
        for (int c : counts) steps += (steps.empty() ? "" : " ") + std::to_string(c);
        r.add_meta("euler_steps", steps);
        r.add_meta("averaged_euler_steps", n_avg);

        SimOptions so;
        so.record_steps = params.record_steps;
        so.noise_steps = noise;
        so.threads = params.threads;
        BsdeOptions bo = params.bsde;
        bo.threads = params.threads;
        for (std::size_t k = 0; k < eps_list.size(); ++k) {
            LawArtifact a;
            a.eps = eps_list[k];
            const EpsilonModel m(spec, a.eps);
            a.ensemble = simulate_multiscale(spec, a.eps, x0, params.t, params.t / counts[k], params.n_paths, params.seed, so);
            a.solution = solve_regression(a.ensemble, m, bo);
            a.martingale = martingale_paths(a.solution, a.ensemble, m);
            out.runs.push_back(std::move(a));
        }
        {
            LawArtifact a;
            a.eps = 0.0;
            a.ensemble = simulate_averaged(*out.averaged, x0, params.t, params.t / n_avg, params.n_paths, params.seed, so);
            a.solution = solve_regression(a.ensemble, *out.averaged, bo);
            a.martingale = martingale_paths(a.solution, a.ensemble, *out.averaged);
            out.runs.push_back(std::move(a));
        }
        const LawArtifact& ref = out.runs.back();
        auto ym = [](const LawArtifact& a, int step) {
            auto y = a.solution.y_marginal(step);
            const auto m = column_at(a.martingale, step);
            for (std::size_t i = 0; i < y.size(); ++i) y[i] += m[i];
            return y;
        };
        const auto x2_ref = ref.ensemble.marginal(ref.ensemble.n_steps, 1);
        for (std::size_t k = 0; k < eps_list.size(); ++k) {
            const LawArtifact& a = out.runs[k];
            std::vector<double> row{a.eps};
            std::vector<double> ks_y, ks_m, ks_ym;
            for (double s : params.s_list) {
                const int i = a.ensemble.step_of(s), j = ref.ensemble.step_of(s);
                ks_y.push_back(stats::ks_two_sample(a.solution.y_marginal(i), ref.solution.y_marginal(j)));
                ks_m.push_back(stats::ks_two_sample(column_at(a.martingale, i), column_at(ref.martingale, j)));
                ks_ym.push_back(stats::ks_two_sample(ym(a, i), ym(ref, j)));
            }
            row.insert(row.end(), ks_y.begin(), ks_y.end());
            row.insert(row.end(), ks_m.begin(), ks_m.end());
            row.insert(row.end(), ks_ym.begin(), ks_ym.end());
            const auto x2 = a.ensemble.marginal(a.ensemble.n_steps, 1);
            row.push_back(stats::ks_two_sample(x2, x2_ref));
            row.push_back(stats::mean(x2));
            row.push_back(stats::standard_error(x2));
            row.push_back(a.solution.y0);
            row.push_back(a.solution.y0_stderr);
            r.rows.push_back(std::move(row));
        }
        const double mean_ref = stats::mean(x2_ref), se_ref = stats::standard_error(x2_ref);
        r.add_meta("averaged.mean_X2_t", mean_ref);
        r.add_meta("averaged.se_X2_t", se_ref);
        r.add_meta("averaged.y0", ref.solution.y0);
        r.add_meta("averaged.y0_stderr", ref.solution.y0_stderr);
        const double crit = stats::ks_critical_two_sample(0.01, params.n_paths, params.n_paths);
        r.add_meta("ks_critical_1pct", crit);
        if (averaging_is_identity(spec)) {
            double worst = 0.0;
            for (const auto& row : r.rows) {
                for (std::size_t c = 1; c < 1 + 3 * params.s_list.size() + 1; ++c) worst = std::max(worst, row[c]);
            }
            r.check("self_noise", "max KS statistic", worst, "<=", crit);
        } else {
            for (double s : params.s_list) {
                const std::string c = "ks_Y_s" + short_num(s);
                const auto v = r.series(c);
                double worst = -INFINITY;
                for (std::size_t i = 1; i < v.size(); ++i) worst = std::max(worst, v[i] - v[i - 1]);
                if (v.size() < 2) worst = 0.0;
                r.check("ks_Y_nonincreasing_s" + short_num(s), "max_k " + c + "(eps_{k+1}) - " + c + "(eps_k)", worst, "<=", 0.0);
            }
        }
        const auto& last = r.rows.back();
        const double pooled = std::sqrt(std::pow(last[r.column("se_X2_t")], 2) + se_ref * se_ref);
        r.check("x2_mean", "|mean X2_t(eps_min) - mean X2_t(avg)| / pooled SE",
                pooled > 0 ? std::abs(last[r.column("mean_X2_t")] - mean_ref) / pooled : 0.0, "<=", 4.0);
    } catch (const Error& ex) {
        r.partial = true;
        r.error = ex.what();
    }
    r.wall_seconds = clock.seconds();
    return out;
}

// ---- tightness ----

ConvergenceReport tightness_report(const LawSweepResult& law) {
    Stopwatch clock;
    ConvergenceReport r;
    r.kind = ReportKind::tightness;
    r.benchmark = law.report.benchmark;
    r.columns = {"eps", "cv", "sup_y", "sup_y_plus_m", "statistic", "up_1", "up_2", "up_3"};
    std::vector<const LawArtifact*> runs;
    for (const auto& a : law.runs) {
        if (a.eps > 0) runs.push_back(&a);
    }
    if (runs.empty() || law.report.partial) {
        r.partial = true;
        r.error = law.report.partial ? "law sweep incomplete: " + law.report.error : "no eps runs";
        return r;
    }
    std::vector<double> pooled;
    for (const auto* a : runs) pooled.insert(pooled.end(), a->solution.y.begin(), a->solution.y.end());
    std::sort(pooled.begin(), pooled.end());
    auto q = [&](double u) { return pooled[static_cast<std::size_t>(u * (pooled.size() - 1))]; };
    const std::pair<double, double> levels[3] = {{q(0.1), q(0.5)}, {q(0.5), q(0.9)}, {q(0.25), q(0.75)}};
    for (int k = 0; k < 3; ++k) r.add_meta("levels_" + std::to_string(k + 1), num(levels[k].first) + " " + num(levels[k].second));
    try {
        for (const auto* a : runs) {
            const EpsilonModel m(law.spec, a->eps);
            const double cv = conditional_variation_bound(a->solution, a->ensemble, m);
            const double sup_y = expected_sup_abs(a->solution);
            double sup_ym = 0.0;
            for (int p = 0; p < a->solution.n_paths; ++p) {
                double s = 0.0;
                for (int i = 0; i <= a->solution.n_steps; ++i) s = std::max(s, std::abs(a->solution.Y(p, i)) + std::abs(a->martingale[p][i]));
                sup_ym += s;
            }
            sup_ym /= a->solution.n_paths;
            std::vector<double> row{a->eps, cv, sup_y, sup_ym, cv + sup_ym};
            for (const auto& [la, lb] : levels) {
                double total = 0.0;
                if (lb > la) {
                    for (int p = 0; p < a->solution.n_paths; ++p) {
                        const auto first = a->solution.y.begin() + static_cast<std::ptrdiff_t>(p) * (a->solution.n_steps + 1);
                        total += upcrossings(std::vector<double>(first, first + a->solution.n_steps + 1), la, lb);
                    }
                }
                row.push_back(total / a->solution.n_paths);
            }
            r.rows.push_back(std::move(row));
        }
        r.check("statistic_bounded", "max/min over eps of CV + E sup(|Y| + |M|)", ratio_max_min(r.series("statistic")), "<=", 5.0);
        for (int k = 1; k <= 3; ++k) {
            const auto u = r.series("up_" + std::to_string(k));
            const auto [mn, mx] = std::minmax_element(u.begin(), u.end());
            r.check("upcrossings_" + std::to_string(k), "max mean N^{a,b} - (2 min + 1)", *mx - (2.0 * *mn + 1.0), "<=", 0.0);
        }
    } catch (const Error& ex) {
        r.partial = true;
        r.error = ex.what();
    }
    r.wall_seconds = clock.seconds();
    return r;
}

// ---- auxiliary processes ----

ConvergenceReport auxproc_report(const ProblemSpec& spec, double eps, const std::vector<int>& n_list, const AuxParams& params) {
    Stopwatch clock;
    ConvergenceReport r;
    r.kind = ReportKind::auxproc;
    r.benchmark = spec.name;
    r.columns = {"n", "mean_abs_A", "var_M_n", "isometry_M_n", "exit_fraction"};
    r.add_meta("eps", eps);
    r.add_meta("t", params.t);
    r.add_meta("n_paths", params.n_paths);
    r.add_meta("seed", std::to_string(params.seed));
    describe_grid(r, params.grid);
    try {
        if (n_list.empty()) throw Error(ErrorKind::InvalidArgument, "empty n list");
        const Vec x0 = point(params.x_ref1, params.x_ref2);
        const EpsilonModel m(spec, eps);
        const int n_euler = euler_count(params.t, multiscale_step_limit(spec, eps, x0), params.record_steps);
        SimOptions so;
        so.record_steps = params.record_steps;
        so.threads = params.threads;
        const PathEnsemble ens = simulate_multiscale(spec, eps, x0, params.t, params.t / n_euler, params.n_paths, params.seed, so);
        BsdeOptions bo = params.bsde;
        bo.threads = params.threads;
        const BsdeSolution sol = solve_regression(ens, m, bo);
        r.add_meta("euler_steps", n_euler);

        const Grid& g = params.grid;
        std::vector<char> inside(static_cast<std::size_t>(ens.n_paths), 1);
        int exits = 0;
        for (int p = 0; p < ens.n_paths; ++p) {
            for (int i = 0; i <= ens.n_steps; ++i) {
                const double* x = ens.state(p, i);
                if (std::abs(x[0]) > g.L1 || std::abs(x[1]) > g.L2) {
                    inside[p] = 0;
                    break;
                }
            }
            exits += !inside[p];
        }
        const double exit_fraction = static_cast<double>(exits) / ens.n_paths;
        if (exit_fraction >= 0.05) {
            throw Error(ErrorKind::ExcessiveBoxExit, "fraction " + short_num(exit_fraction) + " of paths leave the grid box");
        }
        const auto avg = build_averaged_model(spec);
        PdeOptions po;
        po.threads = params.threads;
        po.snapshots = params.record_steps;
        for (int n : n_list) {
            const auto mn = mollify(avg, n);
            const Field vn = solve_semilinear(*mn, params.t, g, po);
            double sum_abs_a = 0.0, sum_m = 0.0, sum_m2 = 0.0, iso = 0.0;
            int kept = 0;
            Vec b;
            Mat sigma;
            for (int p = 0; p < ens.n_paths; ++p) {
                if (!inside[p]) continue;
                ++kept;
                double a_t = 0.0, m_t = 0.0;
                for (int i = 0; i < ens.n_steps; ++i) {
                    const Vec x = ens.state_vec(p, i);
                    const double s = ens.t_grid[i];
                    // Z^{eps,n}_s = grad v^n(t - s, X_s), linear in time between snapshots.
                    const double tau = params.t - s;
                    const int k = std::min(static_cast<int>(vn.times.size()) - 1,
                                           static_cast<int>(std::upper_bound(vn.times.begin(), vn.times.end(), tau) - vn.times.begin()));
                    RowVec zn;
                    if (k == 0 || vn.times[k - 1] == tau) {
                        zn = vn.gradient(std::max(0, k - 1), x[0], x[1]);
                    } else {
                        const double w = (tau - vn.times[k - 1]) / (vn.times[k] - vn.times[k - 1]);
                        zn = (1 - w) * vn.gradient(k - 1, x[0], x[1]) + w * vn.gradient(k, x[0], x[1]);
                    }
                    const double y = sol.Y(p, i);
                    a_t += (m.generator(x, y, sol.Z(p, i)) - m.generator(x, y, zn)) * ens.dt;
                    m.drift_diffusion(x, b, sigma);
                    const RowVec zs = zn * sigma;
                    const double* dw = ens.increment(p, i);
                    for (int c = 0; c < ens.k; ++c) m_t += zs[c] * dw[c];
                    iso += zs.squaredNorm() * ens.dt;
                }
                sum_abs_a += std::abs(a_t);
                sum_m += m_t;
                sum_m2 += m_t * m_t;
            }
            const double mean_m = sum_m / kept;
            const double var_m = (sum_m2 - kept * mean_m * mean_m) / (kept - 1);
            r.rows.push_back({static_cast<double>(n), sum_abs_a / kept, var_m, iso / kept, exit_fraction});
        }
        const auto a = r.series("mean_abs_A");
        const bool z_free = [&] {
            for (int j = 0; j <= spec.d; ++j) if (spec.f.uses(coeffex::slot::z(j))) return false;
            return true;
        }();
        if (z_free) {
            r.check("z_free_identity", "max E|A^{eps,n}_t|", *std::max_element(a.begin(), a.end()), "==", 0.0);
        } else {
            r.check("A_nonincreasing", "max_k E|A_{n_{k+1}}| / E|A_{n_k}|", worst_step_ratio(a), "<=", 1.10);
        }
        double iso_worst = 0.0;
        for (const auto& row : r.rows) {
            if (row[3] > 0) iso_worst = std::max(iso_worst, std::abs(row[2] / row[3] - 1.0));
        }
        r.check("ito_isometry", "max_n |Var M^{eps,n}_t / E sum |Z^{eps,n} sigma|^2 dt - 1|", iso_worst, "<=", 0.2);
        r.check("box_exit", "exit fraction", exit_fraction, "<", 0.05);
    } catch (const Error& ex) {
        r.partial = true;
        r.error = ex.what();
    }
    r.wall_seconds = clock.seconds();
    return r;
}

// ---- Feynman-Kac cross-check ----

FeynmanKacCheck feynman_kac_check(const ProblemSpec& spec, double eps, const LawParams& params, const Grid& grid) {
    FeynmanKacCheck out;
    const Vec x0 = point(params.x_ref1, params.x_ref2);
    SimOptions so;
    so.record_steps = params.record_steps;
    so.threads = params.threads;
    BsdeOptions bo = params.bsde;
    bo.threads = params.threads;
    PdeOptions po;
    po.threads = params.threads;
    Grid coarse = grid;
    coarse.h1 *= 2;
    coarse.h2 *= 2;
    coarse.ds = 0;
    if (eps > 0) {
        const EpsilonModel m(spec, eps);
        const int n = euler_count(params.t, multiscale_step_limit(spec, eps, x0), params.record_steps);
        const auto ens = simulate_multiscale(spec, eps, x0, params.t, params.t / n, params.n_paths, params.seed, so);
        const auto sol = solve_regression(ens, m, bo);
        out.y0 = sol.y0;
        out.y0_stderr = sol.y0_stderr;
        out.v = solve_semilinear(m, params.t, grid, po).value(params.t, params.x_ref1, params.x_ref2);
        if (coarse.h1 <= eps / 8.0 * (1 + 1e-12)) {
            out.fd_budget = std::abs(out.v - solve_semilinear(m, params.t, coarse, po).value(params.t, params.x_ref1, params.x_ref2));
        } else {
            Grid fine = grid;
            fine.h1 /= 2;
            fine.h2 /= 2;
            fine.ds = 0;
            out.fd_budget = std::abs(out.v - solve_semilinear(m, params.t, fine, po).value(params.t, params.x_ref1, params.x_ref2));
        }
    } else {
        const auto avg = build_averaged_model(spec);
        const int n = params.record_steps * params.averaged_substeps;
        const auto ens = simulate_averaged(*avg, x0, params.t, params.t / n, params.n_paths, params.seed, so);
        const auto sol = solve_regression(ens, *avg, bo);
        out.y0 = sol.y0;
        out.y0_stderr = sol.y0_stderr;
        out.v = solve_semilinear(*avg, params.t, grid, po).value(params.t, params.x_ref1, params.x_ref2);
        out.fd_budget = std::abs(out.v - solve_semilinear(*avg, params.t, coarse, po).value(params.t, params.x_ref1, params.x_ref2));
    }
    out.discrepancy = std::abs(out.y0 - out.v);
    out.passed = out.discrepancy <= 3.0 * out.y0_stderr + out.fd_budget;
    return out;
}

void write_report(const ConvergenceReport& report, const std::string& dir, const std::string& stem, bool svg) {
    std::filesystem::create_directories(dir);
    auto write = [&](const std::string& ext, const std::string& text) {
        const std::string path = (std::filesystem::path(dir) / (stem + ext)).string();
        std::ofstream out(path);
        if (!out) throw Error(ErrorKind::Io, "cannot write '" + path + "'");
        out << text;
    };
    write(".csv", report.csv());
    write(".meta", report.metadata_text());
    std::string v;
    for (const auto& line : report.verdict_lines()) v += line + "\n";
    write(".verdict", v);
    if (svg && report.columns.size() >= 2 && !report.rows.empty()) {
        std::vector<std::string> ys(report.columns.begin() + 1, report.columns.begin() + std::min<std::size_t>(report.columns.size(), 4));
        write(".svg", report.svg(ys));
    }
}

}  // namespace homog
