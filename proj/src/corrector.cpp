#include "homogenize/corrector.hpp"

#include "homogenize/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

namespace homog {

double CorrectorSolution::weight() const {
    return 1.0 + params.x2.squaredNorm() + params.y * params.y + params.z.squaredNorm();
}

CorrectorSolution solve_corrector_rhs(const std::function<double(double, int)>& rhs, const CorrectorParams& params,
                                      double L, double h) {
    if (!(h > 0) || !(L > 0)) throw Error(ErrorKind::InvalidArgument, "corrector grid needs L > 0 and h > 0");
    const int m = static_cast<int>(std::llround(L / h));
    if (m < 1) throw Error(ErrorKind::InvalidArgument, "corrector grid has no nodes besides 0");
    CorrectorSolution s;
    s.params = params;
    s.h = h;
    s.center = m;
    const int n = 2 * m + 1;
    s.x1.resize(n);
    s.u.assign(n, 0.0);
    s.du.assign(n, 0.0);
    s.rhs.assign(n, 0.0);
    for (int i = 0; i < n; ++i) s.x1[i] = (i - m) * h;
    for (int side : {1, -1}) {
        double prev = rhs(0.0, side);
        if (side == 1) s.rhs[m] = prev;
        for (int k = 1; k <= m; ++k) {
            const int i = m + side * k, p = i - side;
            const double r = rhs(s.x1[i], side);
            s.rhs[i] = r;
            s.du[i] = s.du[p] + side * 0.5 * h * (prev + r);
            s.u[i] = s.u[p] + side * 0.5 * h * (s.du[p] + s.du[i]);
            prev = r;
        }
    }
    const double w = s.weight();
    s.beta1.assign(n, 0.0);
    s.beta2.assign(n, 0.0);
    for (int i = 0; i < n; ++i) {
        if (i == m) continue;
        s.beta1[i] = s.du[i] / (std::abs(s.x1[i]) * w);
        s.beta2[i] = s.u[i] / (s.x1[i] * s.x1[i] * w);
    }
    return s;
}

namespace {

double corrector_source(const ProblemSpec& spec, const AveragedModel& model, const CorrectorParams& p, double x1,
                        int side, double* a00_out = nullptr) {
    const PointCoefficients c = eval_coefficients(spec, x1 / p.eps, p.x2);
    const Direction dir = x1 > 0 || (x1 == 0 && side > 0) ? Direction::plus : Direction::minus;
    if (a00_out) *a00_out = c.a00;
    if (spec.separable) {
        // The (y, z) part cancels.
        const auto env = space_env(x1 / p.eps, p.x2);
        const double gh = coeffex::eval_or_throw(spec.separable->g, env) * coeffex::eval_or_throw(spec.separable->h, env);
        return gh - model.source_branch(dir, p.x2);
    }
    const double f = eval_generator(spec, x1 / p.eps, p.x2, p.y, p.z);
    return f - model.fbar_branch(dir, p.x2, p.y, p.z);
}

}  // namespace

CorrectorSolution solve_corrector(const ProblemSpec& spec, const AveragedModel& model, const CorrectorParams& params,
                                  double L, double h) {
    if (!(params.eps > 0)) throw Error(ErrorKind::InvalidArgument, "eps must be positive");
    if (params.x2.size() != spec.d || params.z.size() != spec.dim()) {
        throw Error(ErrorKind::InvalidArgument, "corrector parameters do not match the problem dimension");
    }
    return solve_corrector_rhs(
        [&](double x1, int side) {
            double a00 = 0.0;
            const double g = corrector_source(spec, model, params, x1, side, &a00);
            return g / a00;
        },
        params, L, h);
}

double corrector_residual(const ProblemSpec& spec, const AveragedModel& model, const CorrectorSolution& sol) {
    double worst = 0.0;
    const double h2 = sol.h * sol.h;
    for (int i = 1; i + 1 < static_cast<int>(sol.x1.size()); ++i) {
        if (i == sol.center) continue;
        double a00 = 0.0;
        const double g = corrector_source(spec, model, sol.params, sol.x1[i], i > sol.center ? 1 : -1, &a00);
        const double d2 = (sol.u[i + 1] - 2 * sol.u[i] + sol.u[i - 1]) / h2;
        worst = std::max(worst, std::abs(a00 * d2 - g));
    }
    return worst;
}

std::vector<ScalingRow> scaling_diagnostic(const std::vector<CorrectorSolution>& sols) {
    if (sols.empty()) throw Error(ErrorKind::InvalidArgument, "empty corrector sweep");
    std::vector<ScalingRow> rows;
    for (const auto& s : sols) {
        ScalingRow r;
        r.eps = s.params.eps;
        const double cut = std::sqrt(s.params.eps);
        for (std::size_t i = 0; i < s.x1.size(); ++i) {
            if (static_cast<int>(i) == s.center || std::abs(s.x1[i]) < cut) continue;
            r.sup_beta2 = std::max(r.sup_beta2, std::abs(s.beta2[i]));
            r.sup_beta1 = std::max(r.sup_beta1, std::abs(s.beta1[i]));
        }
        rows.push_back(r);
    }
    std::stable_sort(rows.begin(), rows.end(), [](const ScalingRow& a, const ScalingRow& b) { return a.eps > b.eps; });
    return rows;
}

ParameterSensitivity parameter_sensitivity(const ProblemSpec& spec, const AveragedModel& model,
                                           const CorrectorParams& params, double L, double h, double delta) {
    auto diff = [&](auto perturb) {
        CorrectorParams a = params, b = params;
        perturb(a, delta);
        perturb(b, -delta);
        const auto sa = solve_corrector(spec, model, a, L, h);
        const auto sb = solve_corrector(spec, model, b, L, h);
        double m = 0.0;
        for (std::size_t i = 0; i < sa.u.size(); ++i) m = std::max(m, std::abs(sa.u[i] - sb.u[i]) / (2 * delta));
        return m;
    };
    ParameterSensitivity out;
    out.du_dx2 = diff([](CorrectorParams& p, double d) { p.x2[0] += d; });
    out.du_dy = diff([](CorrectorParams& p, double d) { p.y += d; });
    for (int j = 0; j < params.z.size(); ++j) {
        out.du_dz = std::max(out.du_dz, diff([j](CorrectorParams& p, double d) { p.z[j] += d; }));
    }
    return out;
}

void write_corrector_csv(const std::vector<CorrectorSolution>& sols, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorKind::Io, "cannot write '" + path + "'");
    out << "eps,x1,u,du,beta2\n";
    char buf[160];
    for (const auto& s : sols) {
        for (std::size_t i = 0; i < s.x1.size(); ++i) {
            std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g\n", s.params.eps, s.x1[i], s.u[i], s.du[i], s.beta2[i]);
            out << buf;
        }
    }
}

}  // namespace homog
