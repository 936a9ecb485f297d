#pragma once

#include <Eigen/Core>
#include <utility>

#include "llrl/common.hpp"

namespace llrl {

inline constexpr int kFeatureDim = 3;
inline constexpr double kAoiRef = 10.0;

// Linear-Gaussian policy over the normalized action: y ~ N(theta^T x, sigma^2),
// eps = clip(y, 0, 1) * eps_max.
struct GaussianPolicy {
  Eigen::Vector3d theta = Eigen::Vector3d::Zero();
  double sigma = 0.1;
};

// (aoi / kAoiRef, backlog / eps_max, 1)
struct Features {
  Eigen::Vector3d x = Eigen::Vector3d::Zero();
};

Features featurize(double aoi, double backlog, double eps_max);

// Returns (eps, y_raw). The raw sample feeds the score function; the clip is
// part of the environment mapping.
std::pair<double, double> act(const GaussianPolicy& policy, const Features& feats,
                              double eps_max, Rng& rng);

}  // namespace llrl
