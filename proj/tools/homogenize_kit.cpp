// homogenize-kit: command-line front end for the averaging laboratory.
//
// Exit codes: 0 when every verdict assertion passes, 2 when one fails,
// 1 on any error.

#include "CLI11.hpp"

#include "homogenize/bsde.hpp"
#include "homogenize/corrector.hpp"
#include "homogenize/error.hpp"
#include "homogenize/harness.hpp"
#include "homogenize/pdesolve.hpp"
#include "homogenize/rng.hpp"
#include "homogenize/sdesim.hpp"
#include "homogenize/toml_lite.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

using namespace homog;

namespace {

constexpr const char* kVersion = "0.1.0";

struct RunConfig {
    std::string benchmark = "BM1";
    std::string problem;  // problem file, overrides benchmark
    double t = 0.5;
    double x1 = 0.3, x2 = 0.0;
    double eps = 0.25;
    std::vector<double> eps_list{1.0, 0.5, 0.25, 0.125};
    std::vector<int> n_list{4, 8, 16, 32};
    std::vector<double> s_list;  // empty: t/4, t/2
    int n_paths = 10000;
    int record_steps = 64;
    std::uint64_t seed = 20240611;
    Grid grid = default_sweep_grid();
    double region_R = 1.0;
    BasisSpec basis;
    double corrector_L = 10.0;
    double corrector_h = 1e-3;
    std::string ensemble;  // persisted ensemble for solve-bsde
    int threads = 1;
    bool serial = false;
    bool svg = true;
    std::string out = "out";

    std::vector<std::pair<std::string, std::string>> echo() const;
};

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

template <class T>
std::string join(const std::vector<T>& v) {
    std::ostringstream os;
    for (std::size_t i = 0; i < v.size(); ++i) os << (i ? " " : "") << fmt(static_cast<double>(v[i]));
    return os.str();
}

std::vector<std::pair<std::string, std::string>> RunConfig::echo() const {
    return {{"benchmark", problem.empty() ? benchmark : "file:" + problem},
            {"t", fmt(t)},
            {"x_ref", fmt(x1) + " " + fmt(x2)},
            {"eps", fmt(eps)},
            {"eps_list", join(eps_list)},
            {"n_list", join(n_list)},
            {"s_list", join(s_list)},
            {"n_paths", std::to_string(n_paths)},
            {"record_steps", std::to_string(record_steps)},
            {"seed", std::to_string(seed)},
            {"grid", fmt(grid.L1) + " " + fmt(grid.L2) + " " + fmt(grid.h1) + " " + fmt(grid.h2)},
            {"region.R", fmt(region_R)},
            {"basis", basis.describe()},
            {"threads", std::to_string(threads)},
            {"serial", serial ? "true" : "false"},
            {"rng", std::string(rng::kAlgorithmId)},
            {"version", std::string("homogenize-kit ") + kVersion}};
}

void load_config(const std::string& path, RunConfig& c) {
    const auto doc = toml::parse_file(path);
    c.benchmark = doc.get_string("benchmark", c.benchmark);
    if (doc.contains("problem")) {
        c.problem = doc.get_string("problem");
        const auto p = std::filesystem::path(c.problem);
        if (p.is_relative()) c.problem = (std::filesystem::path(path).parent_path() / p).string();
    }
    c.t = doc.get_double("t", c.t);
    if (doc.contains("x_ref")) {
        const auto x = doc.get_doubles("x_ref");
        if (x.size() != 2) throw Error(ErrorKind::Config, "x_ref needs two entries");
        c.x1 = x[0];
        c.x2 = x[1];
    }
    c.eps = doc.get_double("eps", c.eps);
    c.eps_list = doc.get_doubles("eps_list", c.eps_list);
    if (doc.contains("n_list")) {
        c.n_list.clear();
        for (double n : doc.get_doubles("n_list")) c.n_list.push_back(static_cast<int>(n));
    }
    c.s_list = doc.get_doubles("s_list", c.s_list);
    c.n_paths = static_cast<int>(doc.get_int("n_paths", c.n_paths));
    c.record_steps = static_cast<int>(doc.get_int("record_steps", c.record_steps));
    c.seed = static_cast<std::uint64_t>(doc.get_int("seed", static_cast<std::int64_t>(c.seed)));
    c.grid.L1 = doc.get_double("grid.L1", c.grid.L1);
    c.grid.L2 = doc.get_double("grid.L2", c.grid.L2);
    c.grid.h1 = doc.get_double("grid.h1", c.grid.h1);
    c.grid.h2 = doc.get_double("grid.h2", c.grid.h2);
    c.region_R = doc.get_double("region.R", c.region_R);
    c.basis.degree = static_cast<int>(doc.get_int("bsde.degree", c.basis.degree));
    c.basis.include_indicator = doc.get_bool("bsde.indicator", c.basis.include_indicator);
    c.corrector_L = doc.get_double("corrector.L", c.corrector_L);
    c.corrector_h = doc.get_double("corrector.h", c.corrector_h);
    c.ensemble = doc.get_string("ensemble", c.ensemble);
    c.threads = static_cast<int>(doc.get_int("threads", c.threads));
    c.svg = doc.get_bool("svg", c.svg);
    c.out = doc.get_string("out", c.out);
}

ProblemSpec problem_of(const RunConfig& c) {
    return c.problem.empty() ? registry(benchmark_from_string(c.benchmark)) : load_problem(c.problem);
}

Vec x_ref(const RunConfig& c) {
    Vec x(2);
    x << c.x1, c.x2;
    return x;
}

std::vector<double> s_list_of(const RunConfig& c) {
    return c.s_list.empty() ? std::vector<double>{0.25 * c.t, 0.5 * c.t} : c.s_list;
}

std::string out_path(const RunConfig& c, const std::string& name) {
    std::filesystem::create_directories(c.out);
    return (std::filesystem::path(c.out) / name).string();
}

void write_run_meta(const RunConfig& c, const std::string& command, double seconds,
                    const std::vector<std::pair<std::string, std::string>>& extra = {}) {
    std::ofstream out(out_path(c, command + ".run.meta"));
    out << "command = " << command << "\n";
    for (const auto& [k, v] : c.echo()) out << k << " = " << v << "\n";
    for (const auto& [k, v] : extra) out << k << " = " << v << "\n";
    out << "wall_seconds = " << seconds << "\n";
}

int emit(const RunConfig& c, const std::vector<ConvergenceReport>& reports, const std::vector<std::string>& stems) {
    bool ok = true;
    for (std::size_t i = 0; i < reports.size(); ++i) {
        auto r = reports[i];
        for (const auto& [k, v] : c.echo()) r.add_meta("run." + k, v);
        write_report(r, c.out, stems[i], c.svg);
        for (const auto& line : r.verdict_lines()) std::cout << line << "\n";
        std::cout << "wrote " << (std::filesystem::path(c.out) / (stems[i] + ".csv")).string() << "\n";
        ok &= r.passed();
    }
    return ok ? 0 : 2;
}

// ---- subcommands ----

int cmd_average(const RunConfig& c) {
    const auto spec = problem_of(c);
    const auto m = build_averaged_model(spec);
    const int d = spec.d;
    std::ofstream out(out_path(c, "average.csv"));
    out << "x2,rho_plus,rho_minus";
    for (const char* side : {"plus", "minus"}) {
        for (int i = 1; i <= d; ++i) out << ",bbar_" << side << "_" << i;
        for (int i = 0; i <= d; ++i) {
            for (int j = i; j <= d; ++j) out << ",abar_" << side << "_" << i << j;
        }
    }
    out << "\n";
    for (double x : m->lattice()) {
        Vec x2 = Vec::Constant(d, x);
        out << fmt(x) << "," << fmt(m->rho(Direction::plus, x2)) << "," << fmt(m->rho(Direction::minus, x2));
        for (Direction dir : {Direction::plus, Direction::minus}) {
            const Vec b = m->bbar_branch(dir, x2);
            const Mat a = m->abar_branch(dir, x2);
            for (int i = 1; i <= d; ++i) out << "," << fmt(b[i]);
            for (int i = 0; i <= d; ++i) {
                for (int j = i; j <= d; ++j) out << "," << fmt(a(i, j));
            }
        }
        out << "\n";
    }
    std::cout << "max Cesaro residual " << m->max_residual() << "\n";
    std::cout << "wrote " << out_path(c, "average.csv") << "\n";
    return 0;
}

int cmd_simulate(const RunConfig& c, bool averaged, int dump_paths) {
    const auto spec = problem_of(c);
    SimOptions so;
    so.record_steps = c.record_steps;
    so.threads = c.threads;
    PathEnsemble ens;
    if (averaged) {
        const auto m = build_averaged_model(spec);
        ens = simulate_averaged(*m, x_ref(c), c.t, c.t / (4.0 * c.record_steps), c.n_paths, c.seed, so);
    } else {
        const double limit = multiscale_step_limit(spec, c.eps, x_ref(c));
        long long n = c.record_steps;
        while (c.t / n > limit) n *= 2;
        std::cerr << "eps = " << c.eps << ": " << n << " Euler steps x " << c.n_paths << " paths = "
                  << static_cast<double>(n) * c.n_paths << " step updates\n";
        ens = simulate_multiscale(spec, c.eps, x_ref(c), c.t, c.t / n, c.n_paths, c.seed, so);
    }
    save_ensemble(ens, out_path(c, "ensemble.bin"));
    if (dump_paths != 0) write_paths_csv(ens, out_path(c, "paths.csv"), dump_paths);
    const auto [m2, se] = sup_second_moment(ens);
    std::cout << "E sup|X|^2 = " << m2 << " +- " << se << "\n";
    std::cout << "wrote " << out_path(c, "ensemble.bin") << "\n";
    return 0;
}

int cmd_solve_pde(const RunConfig& c, bool averaged, int mollify_n) {
    const auto spec = problem_of(c);
    std::shared_ptr<DiffusionModel> model;
    if (averaged || mollify_n > 0) {
        auto avg = build_averaged_model(spec);
        model = mollify_n > 0 ? std::shared_ptr<DiffusionModel>(mollify(avg, mollify_n)) : avg;
    } else {
        model = std::make_shared<EpsilonModel>(spec, c.eps);
    }
    PdeOptions po;
    po.threads = c.threads;
    const Field v = solve_semilinear(*model, c.t, c.grid, po);
    const int last = static_cast<int>(v.times.size()) - 1;
    write_field_csv(v, last, out_path(c, "field.csv"));
    std::ofstream out(out_path(c, "pde_norms.csv"));
    out << "p,lp_v,lp_dsv,lp_grad,lp_hess,gn_ratio\n";
    const Region region{c.t, c.region_R};
    for (double p : {2.0, 3.0, 4.0}) {
        const auto nm = sobolev_norms(v, p, region);
        out << fmt(p) << "," << fmt(nm.lp_v) << "," << fmt(nm.lp_dsv) << "," << fmt(nm.lp_grad) << "," << fmt(nm.lp_hess)
            << "," << fmt(gagliardo_nirenberg_ratio(v, p, region)) << "\n";
    }
    std::cout << model->tag() << ": v(t, x_ref) = " << fmt(v.value(c.t, c.x1, c.x2)) << " (ds = " << v.grid.ds
              << ", " << v.grid.n_time << " steps)\n";
    std::cout << "wrote " << out_path(c, "field.csv") << "\n";
    return 0;
}

int cmd_solve_bsde(const RunConfig& c, bool averaged) {
    const auto spec = problem_of(c);
    BsdeOptions bo;
    bo.basis = c.basis;
    bo.threads = c.threads;
    std::shared_ptr<DiffusionModel> model;
    if (averaged) {
        model = build_averaged_model(spec);
    } else {
        model = std::make_shared<EpsilonModel>(spec, c.eps);
    }
    PathEnsemble ens;
    if (!c.ensemble.empty()) {
        ens = load_ensemble(c.ensemble);
    } else {
        SimOptions so;
        so.record_steps = c.record_steps;
        so.threads = c.threads;
        if (averaged) {
            ens = simulate_averaged(static_cast<const AveragedModel&>(*model), x_ref(c), c.t, c.t / (4.0 * c.record_steps),
                                    c.n_paths, c.seed, so);
        } else {
            const double limit = multiscale_step_limit(spec, c.eps, x_ref(c));
            int n = c.record_steps;
            while (c.t / n > limit) n *= 2;
            ens = simulate_multiscale(spec, c.eps, x_ref(c), c.t, c.t / n, c.n_paths, c.seed, so);
        }
    }
    const auto sol = solve_regression(ens, *model, bo);
    const auto ap = apriori_bound_estimate(sol, ens, *model);
    std::ofstream out(out_path(c, "bsde.csv"));
    out << "y0,y0_stderr,sup_y_sq,z_energy,cv_bound,e_sup_abs_y,dropped_columns,picard_iters\n";
    out << fmt(sol.y0) << "," << fmt(sol.y0_stderr) << "," << fmt(ap.sup_y_sq) << "," << fmt(ap.z_energy) << ","
        << fmt(conditional_variation_bound(sol, ens, *model)) << "," << fmt(expected_sup_abs(sol)) << ","
        << sol.dropped_columns << "," << sol.picard_iters << "\n";
    for (const auto& w : sol.warnings) std::cerr << "warning: " << w << "\n";
    std::cout << "y0 = " << fmt(sol.y0) << " +- " << sol.y0_stderr << "\n";
    std::cout << "wrote " << out_path(c, "bsde.csv") << "\n";
    return 0;
}

int cmd_corrector(const RunConfig& c, double y, double z1) {
    const auto spec = problem_of(c);
    const auto m = build_averaged_model(spec);
    std::vector<CorrectorSolution> sols;
    for (double eps : c.eps_list) {
        CorrectorParams p;
        p.eps = eps;
        p.x2 = Vec::Constant(spec.d, c.x2);
        p.y = y;
        p.z = RowVec::Zero(spec.dim());
        if (spec.dim() > 1) p.z[1] = z1;
        sols.push_back(solve_corrector(spec, *m, p, c.corrector_L, c.corrector_h));
        std::cout << "eps = " << eps << ": residual " << corrector_residual(spec, *m, sols.back()) << "\n";
    }
    write_corrector_csv(sols, out_path(c, "corrector.csv"));
    std::ofstream out(out_path(c, "corrector_scaling.csv"));
    out << "eps,sup_beta2,sup_beta1\n";
    for (const auto& r : scaling_diagnostic(sols)) out << fmt(r.eps) << "," << fmt(r.sup_beta2) << "," << fmt(r.sup_beta1) << "\n";
    std::cout << "wrote " << out_path(c, "corrector.csv") << "\n";
    return 0;
}

int cmd_sweep_eps(const RunConfig& c) {
    EpsSweepParams p;
    p.t = c.t;
    p.x_ref1 = c.x1;
    p.x_ref2 = c.x2;
    p.grid = c.grid;
    p.threads = c.threads;
    return emit(c, {eps_sweep(problem_of(c), c.eps_list, p)}, {"eps_sweep"});
}

int cmd_sweep_n(const RunConfig& c) {
    MollSweepParams p;
    p.t = c.t;
    p.region = Region{c.t, c.region_R};
    p.grid = c.grid;
    p.threads = c.threads;
    return emit(c, {moll_sweep(problem_of(c), c.n_list, p)}, {"moll_sweep"});
}

LawParams law_params(const RunConfig& c) {
    LawParams p;
    p.t = c.t;
    p.x_ref1 = c.x1;
    p.x_ref2 = c.x2;
    p.s_list = s_list_of(c);
    p.n_paths = c.n_paths;
    p.seed = c.seed;
    p.record_steps = c.record_steps;
    p.bsde.basis = c.basis;
    p.threads = c.threads;
    return p;
}

int cmd_sweep_law(const RunConfig& c) {
    const auto law = law_sweep(problem_of(c), c.eps_list, law_params(c));
    return emit(c, {law.report, tightness_report(law)}, {"law_sweep", "tightness"});
}

int cmd_diagnose(const RunConfig& c, int samples, bool aux) {
    const auto spec = problem_of(c);
    const auto v = validate(spec, SampleBox{}, samples, c.seed);
    std::ofstream out(out_path(c, "validation.csv"));
    out << "min_ellipticity,max_a00,max_slow_growth,max_f_growth,max_h_growth,max_lipschitz,max_asymmetry,passed\n";
    out << fmt(v.min_ellipticity) << "," << fmt(v.max_a00) << "," << fmt(v.max_slow_growth) << "," << fmt(v.max_f_growth)
        << "," << fmt(v.max_h_growth) << "," << fmt(v.max_lipschitz) << "," << fmt(v.max_asymmetry) << ","
        << (v.passed ? 1 : 0) << "\n";
    std::cout << (v.passed ? "PASS" : "FAIL") << " validation: " << samples << " samples\n";
    for (const auto& f : v.failures) std::cout << "  " << f << "\n";
    int code = v.passed ? 0 : 2;
    if (aux) {
        AuxParams p;
        p.t = c.t;
        p.x_ref1 = c.x1;
        p.x_ref2 = c.x2;
        p.n_paths = c.n_paths;
        p.seed = c.seed;
        p.record_steps = c.record_steps;
        p.grid = c.grid;
        p.bsde.basis = c.basis;
        p.threads = c.threads;
        code = std::max(code, emit(c, {auxproc_report(spec, c.eps, c.n_list, p)}, {"auxproc"}));
    }
    return code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Numerical laboratory for averaging multiscale forward-backward systems"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    RunConfig cfg;
    std::string config_path;
    std::uint64_t seed = 0;
    int threads = 0;
    std::string out_dir;
    bool serial = false;
    app.add_option("--config", config_path, "TOML run configuration")->check(CLI::ExistingFile);
    app.add_option("--seed", seed, "RNG seed (overrides the config)");
    app.add_option("--out", out_dir, "output directory");
    app.add_flag("--serial", serial, "single worker (bit-exact reference mode)");
    app.add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);

    std::string benchmark;
    std::string problem;
    auto add_problem = [&](CLI::App* sub) {
        sub->add_option("--benchmark", benchmark, "BM1 | BM2 | BM3");
        sub->add_option("--problem", problem, "problem definition file")->check(CLI::ExistingFile);
    };
    double eps = 0.0;
    bool averaged = false;
    int dump_paths = 0, mollify_n = 0, samples = 2000;
    double y = 0.0, z1 = 0.0;
    bool aux = false;

    auto* average = app.add_subcommand("average", "Cesaro limits and averaged coefficients on the x2 lattice");
    add_problem(average);
    auto* simulate = app.add_subcommand("simulate", "Euler-Maruyama ensemble of the eps-scaled or averaged forward equation");
    add_problem(simulate);
    simulate->add_option("--eps", eps, "scale parameter");
    simulate->add_flag("--averaged", averaged, "simulate the averaged model");
    simulate->add_option("--dump-paths", dump_paths, "write this many paths to paths.csv (-1: all)");
    auto* solve_pde = app.add_subcommand("solve-pde", "explicit finite-difference solve of the semilinear PDE");
    add_problem(solve_pde);
    solve_pde->add_option("--eps", eps, "scale parameter");
    solve_pde->add_flag("--averaged", averaged, "solve the averaged PDE");
    solve_pde->add_option("--mollify", mollify_n, "solve the mollified averaged PDE with this n");
    auto* solve_bsde = app.add_subcommand("solve-bsde", "regression Monte Carlo for the backward equation");
    add_problem(solve_bsde);
    solve_bsde->add_option("--eps", eps, "scale parameter");
    solve_bsde->add_flag("--averaged", averaged, "use the averaged model");
    solve_bsde->add_option("--ensemble", cfg.ensemble, "persisted ensemble file")->check(CLI::ExistingFile);
    auto* corrector = app.add_subcommand("corrector", "corrector ODE in x1 for each eps in eps_list");
    add_problem(corrector);
    corrector->add_option("--y", y, "frozen y");
    corrector->add_option("--z1", z1, "frozen z_1");
    auto* sweep_eps = app.add_subcommand("sweep-eps", "PDE error against the averaged solve over eps_list");
    add_problem(sweep_eps);
    auto* sweep_n = app.add_subcommand("sweep-n", "mollified solves over n_list");
    add_problem(sweep_n);
    auto* sweep_law = app.add_subcommand("sweep-law", "law comparison and tightness over eps_list");
    add_problem(sweep_law);
    auto* diagnose = app.add_subcommand("diagnose", "structural validation, optionally the auxiliary-process report");
    add_problem(diagnose);
    diagnose->add_option("--samples", samples, "validation samples");
    diagnose->add_option("--eps", eps, "scale parameter for --auxproc");
    diagnose->add_flag("--auxproc", aux, "also run the auxiliary-process report over n_list");

    CLI11_PARSE(app, argc, argv);

    const auto start = std::chrono::steady_clock::now();
    try {
        if (!config_path.empty()) load_config(config_path, cfg);
        if (!benchmark.empty()) {
            cfg.benchmark = benchmark;
            cfg.problem.clear();
        }
        if (!problem.empty()) cfg.problem = problem;
        if (app.get_option("--seed")->count() > 0) cfg.seed = seed;
        if (!out_dir.empty()) cfg.out = out_dir;
        if (threads > 0) cfg.threads = threads;
        if (eps > 0) cfg.eps = eps;
        cfg.serial = serial;
        if (serial) cfg.threads = 1;

        const std::string name = app.get_subcommands().front()->get_name();
        int code = 0;
        if (name == "average") code = cmd_average(cfg);
        else if (name == "simulate") code = cmd_simulate(cfg, averaged, dump_paths);
        else if (name == "solve-pde") code = cmd_solve_pde(cfg, averaged, mollify_n);
        else if (name == "solve-bsde") code = cmd_solve_bsde(cfg, averaged);
        else if (name == "corrector") code = cmd_corrector(cfg, y, z1);
        else if (name == "sweep-eps") code = cmd_sweep_eps(cfg);
        else if (name == "sweep-n") code = cmd_sweep_n(cfg);
        else if (name == "sweep-law") code = cmd_sweep_law(cfg);
        else if (name == "diagnose") code = cmd_diagnose(cfg, samples, aux);
        const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        write_run_meta(cfg, name, seconds);
        return code;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
