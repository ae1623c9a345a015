#pragma once

// Least-squares regression Monte Carlo for the backward equation
// Y_s = H(X_t) + int_s^t f(X, Y, Z) dr - int_s^t Z dM, with M = int sigma dW,
// along a stored PathEnsemble.

#include "homogenize/model.hpp"
#include "homogenize/sdesim.hpp"

#include <string>
#include <vector>

namespace homog {

struct BasisSpec {
    int degree = 3;                  // total degree in standardized (X1, X2)
    bool include_indicator = false;  // split every column by sign(X1)

    std::string describe() const;
};

struct BsdeOptions {
    BasisSpec basis;
    int picard_max = 50;
    double picard_tol = 1e-14;
    double rank_tol = 1e-9;  // relative pivot below which a column is dropped
    int threads = 1;
};

struct BsdeSolution {
    int n_paths = 0;
    int n_steps = 0;
    int dim = 0;
    double dt = 0.0;
    std::vector<double> y;  // [path][step 0..n_steps]
    std::vector<double> z;  // [path][step 0..n_steps-1][dim]
    double y0 = 0.0;
    double y0_stderr = 0.0;  // standard error of H(X_t) + sum f dt over paths
    std::string basis_spec;
    int picard_iters = 0;
    int dropped_columns = 0;  // summed over steps
    std::vector<std::string> warnings;

    double Y(int path, int step) const { return y[static_cast<std::size_t>(path) * (n_steps + 1) + step]; }
    RowVec Z(int path, int step) const;
    std::vector<double> y_marginal(int step) const;
};

/// Backward induction: zeta_i = E[(Y_{i+1} - C_i) dW_i | X_i]/dt with
/// C_i = E[Y_{i+1} | X_i]; Z_i = zeta_i sigma(X_i)^{-1};
/// Y_i = C_i + f(X_i, Y_i, Z_i) dt by Picard iteration.
/// Throws ContractionViolated if K dt >= 1.
BsdeSolution solve_regression(const PathEnsemble& ens, const DiffusionModel& model, const BsdeOptions& opts = {});

struct AprioriBound {
    double sup_y_sq = 0.0;  // E sup_s |Y_s|^2
    double z_energy = 0.0;  // E sum_i |Z_i sigma(X_i)|^2 dt
};

AprioriBound apriori_bound_estimate(const BsdeSolution& sol, const PathEnsemble& ens, const DiffusionModel& model);

/// E int_0^t |f(X, Y, Z)| ds (Riemann sum on the recorded grid).
double conditional_variation_bound(const BsdeSolution& sol, const PathEnsemble& ens, const DiffusionModel& model);

/// E sup_s |Y_s|.
double expected_sup_abs(const BsdeSolution& sol);

/// Completed up-crossings of [a, b] by a discrete path. Requires a < b.
int upcrossings(const std::vector<double>& path, double a, double b);

/// Per path: sum_i Z_i sigma(X_i) dW_i.
std::vector<double> stochastic_integral(const BsdeSolution& sol, const PathEnsemble& ens, const DiffusionModel& model);

}  // namespace homog
