#pragma once

#include <Eigen/Dense>

namespace tsfb {

// Time values are plain doubles in seconds; rates (p, alpha) are 1/s.
using Seconds = double;

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Absolute tolerance used for time-scale membership and node lookups.
inline constexpr double kTimeTolerance = 1e-12;

}  // namespace tsfb
