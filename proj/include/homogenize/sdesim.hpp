#pragma once

// Euler-Maruyama ensembles for the epsilon-scaled and averaged forward
// equations. Brownian increments come from counter-based streams keyed by
// (seed, path, noise step), so any path can be regenerated on its own.

#include "homogenize/cesaro.hpp"
#include "homogenize/model.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace homog {

struct PathEnsemble {
    int n_paths = 0;
    int n_steps = 0;    // recorded steps
    int dim = 0;        // d + 1
    int k = 0;          // Brownian dimension
    double dt = 0.0;    // recorded step
    double t = 0.0;
    int substeps = 1;   // Euler steps per recorded step
    std::uint64_t seed = 0;
    std::string model_tag;
    std::vector<double> t_grid;  // n_steps + 1
    std::vector<double> states;  // [path][step 0..n_steps][dim]
    std::vector<double> dW;      // [path][step 0..n_steps-1][k], summed over substeps

    const double* state(int path, int step) const {
        return states.data() + (static_cast<std::size_t>(path) * (n_steps + 1) + step) * dim;
    }
    double* state(int path, int step) {
        return states.data() + (static_cast<std::size_t>(path) * (n_steps + 1) + step) * dim;
    }
    const double* increment(int path, int step) const {
        return dW.data() + (static_cast<std::size_t>(path) * n_steps + step) * k;
    }
    Vec state_vec(int path, int step) const;
    /// Coordinate c of every path at a recorded step.
    std::vector<double> marginal(int step, int c) const;
    /// Nearest recorded step to time s.
    int step_of(double s) const;
};

struct SimOptions {
    int record_steps = 0;   // 0 records every Euler step
    int noise_steps = 0;    // Brownian grid; 0 means the Euler grid. Must be a multiple of it.
    int threads = 1;
    double eta_res = 4.0;   // fast-resolution factor of the multiscale step rule
};

/// Euler-Maruyama for any model. dt is the Euler step; it is shrunk so that
/// the Euler grid divides [0, t] and is a multiple of record_steps.
PathEnsemble simulate(const DiffusionModel& model, const Vec& x0, double t, double dt, int n_paths,
                      std::uint64_t seed, const SimOptions& opts = {});

/// Largest Euler step allowed for the epsilon-scaled system:
/// (eps / (eta_res * phi_max))^2.
double multiscale_step_limit(const ProblemSpec& spec, double eps, const Vec& x0, double eta_res = 4.0);

/// Throws StepTooCoarse if dt violates the fast-resolution rule.
PathEnsemble simulate_multiscale(const ProblemSpec& spec, double eps, const Vec& x0, double t, double dt,
                                 int n_paths, std::uint64_t seed, const SimOptions& opts = {});

PathEnsemble simulate_averaged(const AveragedModel& model, const Vec& x0, double t, double dt, int n_paths,
                               std::uint64_t seed, const SimOptions& opts = {});

struct MarginalRow {
    double time = 0.0;
    int coord = 0;
    double mean_a = 0.0, var_a = 0.0;
    double mean_b = 0.0, var_b = 0.0;
    double ks = 0.0;
};

struct MarginalComparison {
    std::vector<MarginalRow> rows;
    std::vector<std::string> warnings;
};

MarginalComparison weak_marginal_report(const PathEnsemble& a, const PathEnsemble& b, const std::vector<double>& times);

/// Per path: sum_i sigma(X_i) dW_i along the recorded grid ([path][dim]).
std::vector<double> martingale_part(const PathEnsemble& ens, const DiffusionModel& model);
/// Per path: X_t - x0 - sum_i b(X_i) dt ([path][dim]).
std::vector<double> drift_residual(const PathEnsemble& ens, const DiffusionModel& model);

/// Ensemble estimate of E sup_s |X_s|^2 over the recorded grid, with its standard error.
std::pair<double, double> sup_second_moment(const PathEnsemble& ens);

void save_ensemble(const PathEnsemble& ens, const std::string& path);
PathEnsemble load_ensemble(const std::string& path);
void write_paths_csv(const PathEnsemble& ens, const std::string& path, int max_paths = -1);

}  // namespace homog
