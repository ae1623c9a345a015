#pragma once

// Counter-based random numbers: every variate is a pure function of
// (seed, stream, counter), so a Monte Carlo path can be regenerated without
// replaying any other path.

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <string_view>

namespace homog::rng {

inline constexpr std::string_view kAlgorithmId = "philox4x32-10+box-muller";

/// Philox4x32 with 10 rounds (Salmon et al., SC'11).
inline std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> ctr,
                                                  std::array<std::uint32_t, 2> key) {
    constexpr std::uint32_t kM0 = 0xD2511F53u;
    constexpr std::uint32_t kM1 = 0xCD9E8D57u;
    constexpr std::uint32_t kW0 = 0x9E3779B9u;
    constexpr std::uint32_t kW1 = 0xBB67AE85u;
    for (int round = 0; round < 10; ++round) {
        const std::uint64_t p0 = static_cast<std::uint64_t>(kM0) * ctr[0];
        const std::uint64_t p1 = static_cast<std::uint64_t>(kM1) * ctr[2];
        const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
        const auto lo0 = static_cast<std::uint32_t>(p0);
        const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
        const auto lo1 = static_cast<std::uint32_t>(p1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        key[0] += kW0;
        key[1] += kW1;
    }
    return ctr;
}

/// Uniform in the open interval (0, 1): the top 52 of 64 random bits, offset
/// by half a unit so neither endpoint is reachable.
inline double to_open_unit(std::uint32_t hi, std::uint32_t lo) {
    const std::uint64_t bits = (static_cast<std::uint64_t>(hi) << 32) | lo;
    return (static_cast<double>(bits >> 12) + 0.5) * 0x1.0p-52;
}

/// Pair of independent standard normals for (seed, stream, step, lane).
inline std::array<double, 2> normal_pair(std::uint64_t seed, std::uint32_t stream,
                                         std::uint32_t step, std::uint32_t lane) {
    const auto r = philox4x32_10({step, lane, stream, 0u},
                                 {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)});
    const double u1 = to_open_unit(r[0], r[1]);
    const double u2 = to_open_unit(r[2], r[3]);
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    return {radius * std::cos(angle), radius * std::sin(angle)};
}

/// Uniform variate in (0, 1) for (seed, stream, index), for sampling tasks.
inline double uniform(std::uint64_t seed, std::uint32_t stream, std::uint32_t index) {
    const auto r = philox4x32_10({index, 0xFFFFFFFFu, stream, 1u},
                                 {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)});
    return to_open_unit(r[0], r[1]);
}

}  // namespace homog::rng
