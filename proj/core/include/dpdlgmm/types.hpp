#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Core>

namespace dpdlgmm {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Random engine used for every stochastic operation. Streams are
/// reproducible for a given seed and can be copied to replay noise.
using Rng = std::mt19937_64;

/// Lower bound applied to every variance the system produces.
inline constexpr double kVarianceFloor = 1e-6;

}  // namespace dpdlgmm
