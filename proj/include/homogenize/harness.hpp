#pragma once

// Convergence experiments: eps-sweeps of the PDE, mollification n-sweeps,
// law comparisons of the forward-backward pair, tightness statistics and the
// auxiliary-process report. Every report carries its CSV table, metadata and
// named pass/fail assertions.

#include "homogenize/bsde.hpp"
#include "homogenize/pdesolve.hpp"
#include "homogenize/sdesim.hpp"

#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace homog {

enum class ReportKind { eps_sweep, moll_sweep, law_sweep, tightness, auxproc };

std::string to_string(ReportKind kind);

struct Assertion {
    std::string name;
    std::string statistic;
    double observed = 0.0;
    std::string relation;  // "<=", "<", ">=" ...
    double threshold = 0.0;
    bool passed = false;
};

struct ConvergenceReport {
    ReportKind kind = ReportKind::eps_sweep;
    std::string benchmark;
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
    std::vector<std::pair<std::string, std::string>> metadata;
    std::vector<Assertion> verdict;
    bool partial = false;
    std::string error;
    double wall_seconds = 0.0;

    bool passed() const;
    int column(const std::string& name) const;
    std::vector<double> series(const std::string& name) const;
    void add_meta(const std::string& key, const std::string& value);
    void add_meta(const std::string& key, double value);
    void check(const std::string& name, const std::string& statistic, double observed, const std::string& relation,
               double threshold);

    /// Header plus rows, every number printed with %.17g.
    std::string csv() const;
    /// "PASS|FAIL <kind>/<name>: <statistic> = <observed> <relation> <threshold>".
    std::vector<std::string> verdict_lines() const;
    /// key = value lines, wall time last.
    std::string metadata_text() const;
    /// Self-contained SVG with one polyline per listed column against column 0.
    std::string svg(const std::vector<std::string>& ys) const;
};

/// True when no coefficient and no generator reads x1 (averaging is the identity).
bool averaging_is_identity(const ProblemSpec& spec);

/// [-3, 3]^2 with h1 = 1/64, h2 = 1/8: resolves eps >= 1/8.
Grid default_sweep_grid();

struct EpsSweepParams {
    double t = 0.5;
    double x_ref1 = 0.3, x_ref2 = 0.0;
    Grid grid = default_sweep_grid();
    bool control = true;  // also sweep the x1-free benchmark on the same grid
    int threads = 1;
};

ConvergenceReport eps_sweep(const ProblemSpec& spec, const std::vector<double>& eps_list, const EpsSweepParams& params = {});

struct MollSweepParams {
    double t = 0.5;
    Region region{0.5, 1.0};
    Grid grid = default_sweep_grid();
    std::vector<double> p_list{2.0, 3.0, 4.0};
    int threads = 1;
};

ConvergenceReport moll_sweep(const ProblemSpec& spec, const std::vector<int>& n_list, const MollSweepParams& params = {});

struct LawParams {
    double t = 0.5;
    double x_ref1 = 0.3, x_ref2 = 0.0;
    std::vector<double> s_list{0.125, 0.25};
    int n_paths = 10000;
    std::uint64_t seed = 20240611;
    int record_steps = 64;
    int averaged_substeps = 4;  // Euler steps per recorded step for the averaged model
    BsdeOptions bsde;
    int threads = 1;
};

struct LawArtifact {
    double eps = 0.0;  // 0 for the averaged model
    PathEnsemble ensemble;
    BsdeSolution solution;
    std::vector<std::vector<double>> martingale;  // [path][step] int_0^s Z dM
};

struct LawSweepResult {
    ConvergenceReport report;
    std::vector<LawArtifact> runs;  // eps runs in sweep order, averaged run last
    ProblemSpec spec;
    std::shared_ptr<AveragedModel> averaged;
};

LawSweepResult law_sweep(const ProblemSpec& spec, const std::vector<double>& eps_list, const LawParams& params = {});

/// Per eps: CV bound + E sup_s(|Y_s| + |M_s|), and mean up-crossing counts
/// for the level pairs (q10, q50), (q50, q90), (q25, q75) of the pooled Y values.
ConvergenceReport tightness_report(const LawSweepResult& law);

struct AuxParams {
    double t = 0.5;
    double x_ref1 = 0.3, x_ref2 = 0.0;
    int n_paths = 10000;
    std::uint64_t seed = 777;
    int record_steps = 64;
    Grid grid = default_sweep_grid();
    BsdeOptions bsde;
    int threads = 1;
};

ConvergenceReport auxproc_report(const ProblemSpec& spec, double eps, const std::vector<int>& n_list, const AuxParams& params = {});

struct FeynmanKacCheck {
    double y0 = 0.0;
    double y0_stderr = 0.0;
    double v = 0.0;         // PDE value at (t, x_ref)
    double fd_budget = 0.0; // |v(h) - v(2h)| grid-refinement estimate
    double discrepancy = 0.0;
    bool passed = false;
};

/// y0 by regression on n_paths ensemble paths against the PDE value; eps <= 0
/// selects the averaged model.
FeynmanKacCheck feynman_kac_check(const ProblemSpec& spec, double eps, const LawParams& params,
                                  const Grid& grid = default_sweep_grid());

/// Write <dir>/<stem>.csv, <stem>.meta, <stem>.verdict and optionally <stem>.svg.
void write_report(const ConvergenceReport& report, const std::string& dir, const std::string& stem, bool svg = true);

}  // namespace homog
