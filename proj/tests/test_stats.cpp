#include "doctest.h"

#include "homogenize/rng.hpp"
#include "homogenize/stats.hpp"

#include <cmath>

using namespace homog;

TEST_CASE("moments") {
    const std::vector<double> x = {1.0, 2.0, 3.0, 4.0};
    CHECK(stats::mean(x) == 2.5);
    CHECK(stats::variance(x) == doctest::Approx(5.0 / 3.0));
    CHECK(stats::standard_error(x) == doctest::Approx(std::sqrt(5.0 / 12.0)));
}

TEST_CASE("KS statistics") {
    const std::vector<double> a = {0.1, 0.4, 0.7};
    CHECK(stats::ks_two_sample(a, a) == 0.0);
    CHECK(stats::ks_two_sample({0.0, 1.0}, {2.0, 3.0}) == 1.0);
    // Hand trace: F_a jumps at 1, 2, 3; G_b at 1.5, 2.5.
    CHECK(stats::ks_two_sample({1.0, 2.0, 3.0}, {1.5, 2.5}) == doctest::Approx(1.0 / 3.0));
    // Uniform sample at the midpoints of n cells: D = 1/(2n).
    std::vector<double> u;
    for (int i = 0; i < 10; ++i) u.push_back((i + 0.5) / 10.0);
    CHECK(stats::ks_one_sample(u, [](double x) { return x; }) == doctest::Approx(0.05));
}

TEST_CASE("critical values") {
    CHECK(stats::ks_critical_two_sample(0.01, 10000, 10000) == doctest::Approx(1.62762 * std::sqrt(2.0e-4)).epsilon(1e-5));
    CHECK(stats::ks_critical_one_sample(0.05, 100) == doctest::Approx(0.135810).epsilon(1e-5));
}

TEST_CASE("normal sample passes one-sample KS") {
    std::vector<double> x;
    for (std::uint32_t i = 0; i < 5000; ++i) {
        const auto z = rng::normal_pair(3, 0, i, 0);
        x.push_back(z[0]);
        x.push_back(z[1]);
    }
    CHECK(stats::ks_one_sample(x, stats::normal_cdf) < stats::ks_critical_one_sample(0.01, x.size()));
    CHECK(stats::normal_cdf(0.0) == 0.5);
}
