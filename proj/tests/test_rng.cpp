#include "doctest.h"

#include "homogenize/rng.hpp"

#include <cmath>
#include <set>

using namespace homog::rng;

// Known-answer vectors of the Philox4x32-10 reference implementation.
TEST_CASE("philox known answers") {
    CHECK(philox4x32_10({0, 0, 0, 0}, {0, 0}) ==
          std::array<std::uint32_t, 4>{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});
    CHECK(philox4x32_10({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu}) ==
          std::array<std::uint32_t, 4>{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});
    CHECK(philox4x32_10({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u}) ==
          std::array<std::uint32_t, 4>{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
}

TEST_CASE("open unit interval") {
    CHECK(to_open_unit(0, 0) > 0.0);
    CHECK(to_open_unit(0xffffffffu, 0xffffffffu) < 1.0);
}

TEST_CASE("normals are reproducible and roughly standard") {
    CHECK(normal_pair(7, 3, 11, 0) == normal_pair(7, 3, 11, 0));
    CHECK(normal_pair(7, 3, 11, 0) != normal_pair(7, 3, 12, 0));
    CHECK(normal_pair(7, 3, 11, 0) != normal_pair(8, 3, 11, 0));
    double s = 0, s2 = 0;
    const int n = 200000;
    for (int i = 0; i < n / 2; ++i) {
        auto p = normal_pair(42, 1, static_cast<std::uint32_t>(i), 0);
        s += p[0] + p[1];
        s2 += p[0] * p[0] + p[1] * p[1];
    }
    const double mean = s / n;
    const double var = s2 / n - mean * mean;
    CHECK(std::abs(mean) < 4.0 / std::sqrt(n));
    CHECK(std::abs(var - 1.0) < 4.0 * std::sqrt(2.0 / n));
}

TEST_CASE("uniform streams are distinct") {
    std::set<double> seen;
    for (std::uint32_t i = 0; i < 1000; ++i) seen.insert(uniform(1, 2, i));
    CHECK(seen.size() == 1000);
    CHECK(uniform(1, 2, 3) != uniform(1, 3, 3));
}
