#include "homogenize/model.hpp"

#include "homogenize/error.hpp"

#include <cstdio>

namespace homog {

EpsilonModel::EpsilonModel(ProblemSpec spec, double eps) : spec_(std::move(spec)), eps_(eps) {
    if (!(eps > 0)) throw Error(ErrorKind::InvalidArgument, "eps must be positive");
    spec_.check_structure();
}

void EpsilonModel::drift_diffusion(const Vec& x, Vec& b, Mat& sigma) const {
    eval_drift_diffusion(spec_, x[0] / eps_, slow_part(x), b, sigma);
}

double EpsilonModel::generator(const Vec& x, double y, const RowVec& z) const {
    if (spec_.separable) return generator_source(x) + generator_yz(y, z);
    return eval_generator(spec_, x[0] / eps_, slow_part(x), y, z);
}

double EpsilonModel::generator_source(const Vec& x) const {
    const auto env = space_env(x[0] / eps_, slow_part(x));
    return coeffex::eval_or_throw(spec_.separable->g, env) * coeffex::eval_or_throw(spec_.separable->h, env);
}

double EpsilonModel::generator_yz(double y, const RowVec& z) const {
    const Vec none = Vec::Zero(spec_.d);
    return coeffex::eval_or_throw(spec_.separable->ell, generator_env(0.0, none, y, z));
}

double EpsilonModel::terminal(const Vec& x) const { return eval_terminal(spec_, x[0], slow_part(x)); }

std::string EpsilonModel::tag() const {
    char buf[64];
    std::snprintf(buf, sizeof buf, "epsilon(%.17g)", eps_);
    return buf;
}

}  // namespace homog
