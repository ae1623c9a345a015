#include "doctest.h"

#include "homogenize/corrector.hpp"
#include "homogenize/error.hpp"

#include <cmath>

using namespace homog;

namespace {

CorrectorParams params(double eps, double x2, double y, double z1) {
    CorrectorParams p;
    p.eps = eps;
    p.x2 = Vec::Constant(1, x2);
    p.y = y;
    p.z = RowVec::Zero(2);
    p.z[1] = z1;
    return p;
}

}  // namespace

TEST_CASE("manufactured corrector u = x1 - sin x1") {
    const auto s = solve_corrector_rhs([](double x, int) { return std::sin(x); }, params(1, 0, 0, 0), 10.0, 1e-3);
    REQUIRE(s.x1[s.center] == 0.0);
    CHECK(s.u[s.center] == 0.0);
    CHECK(s.du[s.center] == 0.0);
    double err = 0.0;
    for (std::size_t i = 0; i < s.x1.size(); ++i) err = std::max(err, std::abs(s.u[i] - (s.x1[i] - std::sin(s.x1[i]))));
    CHECK(err <= 1e-6);
    // Odd right side: du even, u odd.
    for (int k = 1; k <= s.center; ++k) {
        CHECK(s.du[s.center + k] == s.du[s.center - k]);
        CHECK(s.u[s.center + k] == -s.u[s.center - k]);
    }
}

TEST_CASE("x1-free benchmark has a vanishing corrector") {
    const auto spec = registry(BenchmarkId::BM3_x1_free);
    const auto avg = build_averaged_model(spec);
    const auto s = solve_corrector(spec, *avg, params(0.5, 0.3, 0.2, 0.5), 4.0, 1e-2);
    for (std::size_t i = 0; i < s.u.size(); ++i) {
        CHECK(s.u[i] == 0.0);
        CHECK(s.du[i] == 0.0);
    }
    std::vector<CorrectorSolution> sweep;
    for (double eps : {1.0, 0.25, 0.0625}) sweep.push_back(solve_corrector(spec, *avg, params(eps, 0.3, 0.2, 0.5), 4.0, 1e-2));
    for (const auto& r : scaling_diagnostic(sweep)) {
        CHECK(r.sup_beta2 == 0.0);
        CHECK(r.sup_beta1 == 0.0);
    }
}

TEST_CASE("BM1 residual self-consistency") {
    const auto spec = registry(BenchmarkId::BM1_tanh_fast);
    const auto avg = build_averaged_model(spec);
    const auto s = solve_corrector(spec, *avg, params(1.0, 0.0, 0.0, 0.0), 10.0, 1e-3);
    CHECK(corrector_residual(spec, *avg, s) <= 1e-4);
    // Right of 0 the target is rho (tanh - gbar+) h, left of 0 it uses gbar-.
    CHECK(s.rhs[s.center] == doctest::Approx(2.0 * (0.0 - 1.0)).epsilon(1e-3));
}

TEST_CASE("BM1 scaling diagnostic decreases with eps") {
    const auto spec = registry(BenchmarkId::BM1_tanh_fast);
    const auto avg = build_averaged_model(spec);
    std::vector<CorrectorSolution> sweep;
    for (double eps : {0.0625, 1.0, 0.25}) sweep.push_back(solve_corrector(spec, *avg, params(eps, 0.4, 0.1, -0.3), 4.0, 1e-3));
    const auto rows = scaling_diagnostic(sweep);
    REQUIRE(rows.size() == 3);
    CHECK(rows[0].eps == 1.0);
    CHECK(rows[2].eps == 0.0625);
    CHECK(rows[1].sup_beta2 < rows[0].sup_beta2);
    CHECK(rows[2].sup_beta2 < rows[1].sup_beta2);
    for (const auto& r : rows) CHECK(r.sup_beta1 < 10.0);
    CHECK_THROWS_AS(scaling_diagnostic({}), Error);
}

TEST_CASE("parameter sensitivities stay bounded") {
    const auto spec = registry(BenchmarkId::BM1_tanh_fast);
    const auto avg = build_averaged_model(spec);
    const auto ps = parameter_sensitivity(spec, *avg, params(0.25, 0.4, 0.1, -0.3), 2.0, 1e-3);
    CHECK(std::isfinite(ps.du_dx2));
    CHECK(ps.du_dx2 > 0.0);
    // The (y, z) part of the generator is not averaged, so it drops out.
    CHECK(ps.du_dy == 0.0);
    CHECK(ps.du_dz == 0.0);
}
