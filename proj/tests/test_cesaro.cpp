#include "doctest.h"

#include "homogenize/cesaro.hpp"
#include "homogenize/error.hpp"
#include "homogenize/rng.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>

using namespace homog;

namespace {

Vec v1(double a) { return Vec::Constant(1, a); }
Vec pt(double x1, double x2) {
    Vec x(2);
    x << x1, x2;
    return x;
}

// (1/X) int_0^X (2 + tanh t) dt = 2 + ln cosh(X)/X, with ln cosh evaluated
// stably; X -> -X gives the minus branch.
double tanh_oracle(double X) {
    const double a = std::abs(X);
    const double lncosh = a + std::log1p(std::exp(-2.0 * a)) - std::log(2.0);
    return 2.0 + (X > 0 ? 1.0 : -1.0) * lncosh / a;
}

}  // namespace

TEST_CASE("cesaro limits of scalar functions") {
    AveragingControl ctl;
    const auto c = cesaro_limit([](double) { return 5.0; }, Direction::plus, ctl);
    CHECK(c.limit == doctest::Approx(5.0).epsilon(1e-13));
    CHECK(c.residual <= 1e-13);

    const auto tp = cesaro_limit([](double t) { return 2.0 + std::tanh(t); }, Direction::plus, ctl);
    const auto tm = cesaro_limit([](double t) { return 2.0 + std::tanh(t); }, Direction::minus, ctl);
    CHECK(std::abs(tp.limit - tanh_oracle(1e6)) < 1e-3);
    CHECK(std::abs(tm.limit - tanh_oracle(-1e6)) < 1e-3);
    CHECK(tanh_oracle(1e6) == doctest::Approx(3.0).epsilon(1e-6));

    for (auto dir : {Direction::plus, Direction::minus}) {
        const auto s = cesaro_limit([](double t) { return 2.0 + std::sin(t); }, dir, ctl);
        CHECK(std::abs(s.limit - 2.0) < 1e-3);
    }
}

TEST_CASE("non-stabilizing averages are reported") {
    AveragingControl ctl;
    ctl.j_max = 8;
    // Oscillation on a logarithmic scale never settles.
    CHECK_THROWS_AS(cesaro_limit([](double t) { return std::sin(std::log1p(std::abs(t))); }, Direction::plus, ctl),
                    Error);
    AveragingControl bad;
    bad.growth = 1.0;
    CHECK_THROWS_AS(cesaro_limit([](double) { return 1.0; }, Direction::plus, bad), Error);
}

TEST_CASE("linearity") {
    AveragingControl ctl;
    std::vector<std::function<double(double)>> pool = {
        [](double t) { return std::tanh(t); },
        [](double t) { return std::sin(t); },
        [](double t) { return 1.0 / (2.0 + std::cos(t)); },
        [](double t) { return std::exp(-t * t); },
        [](double) { return 0.7; },
    };
    for (std::uint32_t trial = 0; trial < 12; ++trial) {
        const double a = -2.0 + 4.0 * rng::uniform(5, trial, 0);
        const double b = -2.0 + 4.0 * rng::uniform(5, trial, 1);
        const auto& g = pool[trial % pool.size()];
        const auto& h = pool[(trial * 3 + 1) % pool.size()];
        for (auto dir : {Direction::plus, Direction::minus}) {
            const double lhs = cesaro_limit([&](double t) { return a * g(t) + b * h(t); }, dir, ctl).limit;
            const double rhs = a * cesaro_limit(g, dir, ctl).limit + b * cesaro_limit(h, dir, ctl).limit;
            CHECK(std::abs(lhs - rhs) <= 2.0 * ctl.tol);
        }
    }
}

TEST_CASE("BM3 averaging is the identity") {
    const auto spec = registry(BenchmarkId::BM3_x1_free);
    const auto m = build_averaged_model(spec);
    for (double x1 : {-2.0, 0.0, 1e-12, 3.0}) {
        for (double x2 : {-1.5, 0.0, 0.8}) {
            const Vec x = pt(x1, x2);
            CHECK(m->bbar(x)[0] == 0.0);
            CHECK(m->bbar(x)[1] == -0.2 * x2);
            CHECK((m->abar(x) - 0.5 * Mat::Identity(2, 2)).norm() == 0.0);
            RowVec z(2);
            z << 0.3, -1.1;
            CHECK(m->fbar(x, 0.4, z) == eval_generator(spec, x1, v1(x2), 0.4, z));
        }
        CHECK(m->rho(Direction::plus, v1(0.0)) == 2.0);
        CHECK(m->rho(Direction::minus, v1(0.0)) == 2.0);
    }
    CHECK_FALSE(m->drift_jumps());
}

TEST_CASE("BM1 averaged coefficients") {
    const auto spec = registry(BenchmarkId::BM1_tanh_fast);
    const auto m = build_averaged_model(spec);
    CHECK(std::abs(m->rho(Direction::plus, v1(0.0)) - tanh_oracle(1e6)) < 1e-3);
    CHECK(std::abs(m->rho(Direction::minus, v1(0.0)) - tanh_oracle(-1e6)) < 1e-3);
    CHECK(std::abs(m->bbar(pt(1.0, 0.0))[1] - 1.0) < 1e-3);
    CHECK(std::abs(m->bbar(pt(-1.0, 0.0))[1] + 1.0) < 1e-3);
    CHECK(std::abs(m->abar(pt(1.0, 0.0))(0, 0) - 1.0 / 3.0) < 1e-3);
    CHECK(std::abs(m->abar(pt(-1.0, 0.0))(0, 0) - 1.0) < 1e-3);
    CHECK(std::abs(m->abar(pt(1.0, 0.0))(1, 1) - 0.5) < 1e-3);
    RowVec z0 = RowVec::Zero(2);
    CHECK(std::abs(fbar_eval(*m, pt(1.0, 0.0), 0.0, z0) - 1.0) < 1e-3);
    CHECK(std::abs(fbar_eval(*m, pt(-1.0, 0.0), 0.0, z0) + 1.0) < 1e-3);
    CHECK(m->drift_jumps());
}

TEST_CASE("jump convention and ellipticity") {
    const auto spec = registry(BenchmarkId::BM1_tanh_fast);
    const auto m = build_averaged_model(spec);
    for (double x2 : {-2.0, 0.0, 1.0}) {
        CHECK(m->abar(pt(1e-12, x2)) == m->abar_branch(Direction::plus, v1(x2)));
        CHECK(m->abar(pt(0.0, x2)) == m->abar_branch(Direction::minus, v1(x2)));
        CHECK(m->abar(pt(0.0, x2)) != m->abar(pt(1e-12, x2)));
        for (double x1 : {-1.0, 1.0}) {
            const Mat a = m->abar(pt(x1, x2));
            CHECK((a - a.transpose()).norm() == 0.0);
            Eigen::SelfAdjointEigenSolver<Mat> es(a);
            CHECK(es.eigenvalues().minCoeff() >= spec.bounds.lambda - 1e-8);
            const Mat s = m->sigbar(pt(x1, x2));
            CHECK((s * s.transpose() - 2.0 * a).cwiseAbs().maxCoeff() <= 1e-10);
        }
    }
}

TEST_CASE("generic generator uses memoized Cesaro averages") {
    auto spec = registry(BenchmarkId::BM1_tanh_fast);
    spec.separable.reset();
    const auto m = build_averaged_model(spec);
    RowVec z(2);
    z << 0.0, 0.4;
    const double plus = m->fbar(pt(1.0, 0.0), 0.0, z);
    CHECK(std::abs(plus - (1.0 + 0.2)) < 2e-3);
    CHECK(std::abs(m->fbar(pt(-1.0, 0.0), 0.0, z) - (-1.0 + 0.2)) < 2e-3);
    CHECK(m->memo_size() == 2);
    CHECK(m->fbar(pt(2.0, 0.0), 0.0, z) == plus);
    CHECK(m->memo_size() == 2);

    // Sampled Lipschitz quotient of fbar in (y, z).
    double worst = 0.0;
    for (std::uint32_t i = 0; i < 6; ++i) {
        const double y1 = -1.0 + 2.0 * rng::uniform(3, i, 0), y2 = -1.0 + 2.0 * rng::uniform(3, i, 1);
        RowVec za(2), zb(2);
        za << 0.0, -1.0 + 2.0 * rng::uniform(3, i, 2);
        zb << 0.0, -1.0 + 2.0 * rng::uniform(3, i, 3);
        const double q = std::abs(m->fbar(pt(0.5, 0.3), y1, za) - m->fbar(pt(0.5, 0.3), y2, zb)) /
                         (std::abs(y1 - y2) + (za - zb).norm());
        worst = std::max(worst, q);
    }
    CHECK(worst <= spec.bounds.K + 1e-6 + 4e-3);
}

TEST_CASE("fbar Lipschitz on the separable path") {
    const auto spec = registry(BenchmarkId::BM1_tanh_fast);
    const auto m = build_averaged_model(spec);
    double worst = 0.0;
    for (std::uint32_t i = 0; i < 2000; ++i) {
        auto u = [&](std::uint32_t k) { return -3.0 + 6.0 * rng::uniform(8, i, k); };
        const Vec x = pt(u(0), u(1));
        RowVec za(2), zb(2);
        za << u(2), u(3);
        zb << u(4), u(5);
        if (i % 2 == 0) zb = za;
        const double y1 = u(6), y2 = u(7);
        const double q = std::abs(m->fbar(x, y1, za) - m->fbar(x, y2, zb)) / (std::abs(y1 - y2) + (za - zb).norm());
        worst = std::max(worst, q);
    }
    CHECK(worst <= spec.bounds.K + 1e-6);
}
