#pragma once

// Corrector ODE a00(x1/eps, x2) u'' = f(x1/eps, x2, y, z) - fbar(x, y, z) in x1,
// with u(0) = u'(0) = 0, for frozen (x2, y, z).

#include "homogenize/cesaro.hpp"

#include <functional>
#include <string>
#include <vector>

namespace homog {

struct CorrectorParams {
    double eps = 1.0;
    Vec x2;
    double y = 0.0;
    RowVec z;
};

struct CorrectorSolution {
    CorrectorParams params;
    double h = 0.0;
    std::vector<double> x1;   // symmetric, x1[center] = 0
    std::vector<double> u;
    std::vector<double> du;
    std::vector<double> rhs;  // u'' target; one-sided at x1 = 0 (stores the "+" limit)
    std::vector<double> beta1;  // du / (|x1| w), 0 at the center node
    std::vector<double> beta2;  // u / (x1^2 w), 0 at the center node
    int center = 0;

    /// 1 + |x2|^2 + |y|^2 + |z|^2.
    double weight() const;
};

/// Cumulative trapezoid of rho (f - fbar) outward from 0 in both directions
/// (left and right limits of fbar at x1 = 0), then of du.
CorrectorSolution solve_corrector(const ProblemSpec& spec, const AveragedModel& model, const CorrectorParams& params,
                                  double L, double h);

/// Same double integration with u'' given directly: rhs(x1, side) where side
/// is +1 when integrating to the right and -1 to the left.
CorrectorSolution solve_corrector_rhs(const std::function<double(double, int)>& rhs, const CorrectorParams& params,
                                      double L, double h);

/// max over nodes other than x1 = 0 of |a00 u'' - (f - fbar)| with u'' by
/// second differences.
double corrector_residual(const ProblemSpec& spec, const AveragedModel& model, const CorrectorSolution& sol);

struct ScalingRow {
    double eps = 0.0;
    double sup_beta2 = 0.0;  // over |x1| >= sqrt(eps)
    double sup_beta1 = 0.0;
};

/// One row per solution, sorted by decreasing eps. Throws on an empty sweep.
std::vector<ScalingRow> scaling_diagnostic(const std::vector<CorrectorSolution>& sols);

struct ParameterSensitivity {
    double du_dx2 = 0.0;  // max over the grid of |d u / d x2_1|
    double du_dy = 0.0;
    double du_dz = 0.0;   // max over components
};

/// Central differences of solve_corrector in (x2, y, z) with step delta.
ParameterSensitivity parameter_sensitivity(const ProblemSpec& spec, const AveragedModel& model,
                                           const CorrectorParams& params, double L, double h, double delta = 1e-4);

/// Rows (eps, x1, u, du, beta2) for each solution.
void write_corrector_csv(const std::vector<CorrectorSolution>& sols, const std::string& path);

}  // namespace homog
