#pragma once

#include <span>

#include <Eigen/Core>

#include "llrl/env.hpp"
#include "llrl/policy.hpp"

namespace llrl {

struct GradientEstimate {
  Eigen::Vector3d grad = Eigen::Vector3d::Zero();
  int n_traj = 0;
  double mean_return = 0.0;
};

// (1/T) * sum_t gamma^t * r_t
double trajectory_return(const Trajectory& traj, double gamma);

// REINFORCE estimate of grad J: the batch mean of
// (return - baseline) * sum_t sigma^-2 (y_raw - theta^T x) x.
GradientEstimate reinforce_gradient(const GaussianPolicy& policy,
                                    std::span<const Trajectory> trajs, double gamma,
                                    double eps_max, bool use_baseline);

// One ascent step with the gradient rescaled to norm <= clip_norm.
GaussianPolicy pg_step(const GaussianPolicy& policy, const GradientEstimate& grad,
                       double lr, double clip_norm);

// Gamma = batch mean of sum_t sigma^-2 x x^T; symmetric PSD.
Eigen::Matrix3d hessian(std::span<const Trajectory> trajs, double sigma, double eps_max);

// Monte Carlo value of the policy: mean discounted return over n_traj rollouts.
double estimate_J(const GaussianPolicy& policy, const Task& task, int n_traj, int T,
                  double gamma, double beta, Rng& rng);

}  // namespace llrl
