#pragma once

#include "homogenize/coeffex.hpp"

#include <Eigen/Dense>

namespace homog {

/// Largest state dimension d+1 supported.
inline constexpr int kMaxDim = coeffex::kMaxSlowDim + 1;

// Stack-allocated dynamic-size types; no heap traffic in inner loops.
using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxDim, 1>;
using RowVec = Eigen::Matrix<double, 1, Eigen::Dynamic, Eigen::RowMajor, 1, kMaxDim>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxDim, kMaxDim>;

}  // namespace homog
