#include "llrl/learner.hpp"

#include <stdexcept>
#include <vector>

namespace llrl {

double trajectory_return(const Trajectory& traj, double gamma) {
  if (traj.steps.empty())
    throw std::invalid_argument("trajectory_return: empty trajectory");
  if (!(gamma > 0.0 && gamma <= 1.0))
    throw std::invalid_argument("trajectory_return: gamma must lie in (0,1]");
  double acc = 0.0;
  double w = 1.0;
  for (const StepRecord& rec : traj.steps) {
    acc += w * rec.reward;
    w *= gamma;
  }
  return acc / static_cast<double>(traj.steps.size());
}

GradientEstimate reinforce_gradient(const GaussianPolicy& policy,
                                    std::span<const Trajectory> trajs, double gamma,
                                    double eps_max, bool use_baseline) {
  if (trajs.empty()) throw std::invalid_argument("reinforce_gradient: empty batch");
  if (!(policy.sigma > 0.0))
    throw std::invalid_argument("reinforce_gradient: sigma must be > 0");

  const double inv_var = 1.0 / (policy.sigma * policy.sigma);
  const auto n = trajs.size();

  std::vector<double> returns;
  returns.reserve(n);
  double mean_return = 0.0;
  for (const Trajectory& traj : trajs) {
    returns.push_back(trajectory_return(traj, gamma));
    mean_return += returns.back();
  }
  mean_return /= static_cast<double>(n);
  const double baseline = use_baseline ? mean_return : 0.0;

  Eigen::Vector3d grad = Eigen::Vector3d::Zero();
  for (std::size_t i = 0; i < n; ++i) {
    Eigen::Vector3d score = Eigen::Vector3d::Zero();
    for (const StepRecord& rec : trajs[i].steps) {
      const Eigen::Vector3d x =
          featurize(static_cast<double>(rec.obs_aoi), rec.obs_backlog, eps_max).x;
      score += inv_var * (rec.y_raw - policy.theta.dot(x)) * x;
    }
    grad += (returns[i] - baseline) * score;
  }
  grad /= static_cast<double>(n);
  return {grad, static_cast<int>(n), mean_return};
}

GaussianPolicy pg_step(const GaussianPolicy& policy, const GradientEstimate& grad,
                       double lr, double clip_norm) {
  if (!(lr > 0.0)) throw std::invalid_argument("pg_step: lr must be > 0");
  if (!(clip_norm > 0.0)) throw std::invalid_argument("pg_step: clip_norm must be > 0");
  Eigen::Vector3d g = grad.grad;
  const double norm = g.norm();
  if (norm > clip_norm) g *= clip_norm / norm;
  return {policy.theta + lr * g, policy.sigma};
}

Eigen::Matrix3d hessian(std::span<const Trajectory> trajs, double sigma, double eps_max) {
  if (trajs.empty()) throw std::invalid_argument("hessian: empty batch");
  if (!(sigma > 0.0)) throw std::invalid_argument("hessian: sigma must be > 0");
  const double inv_var = 1.0 / (sigma * sigma);
  Eigen::Matrix3d acc = Eigen::Matrix3d::Zero();
  for (const Trajectory& traj : trajs) {
    for (const StepRecord& rec : traj.steps) {
      const Eigen::Vector3d x =
          featurize(static_cast<double>(rec.obs_aoi), rec.obs_backlog, eps_max).x;
      acc += inv_var * x * x.transpose();
    }
  }
  return acc / static_cast<double>(trajs.size());
}

double estimate_J(const GaussianPolicy& policy, const Task& task, int n_traj, int T,
                  double gamma, double beta, Rng& rng) {
  if (n_traj < 1) throw std::invalid_argument("estimate_J: n_traj must be >= 1");
  double acc = 0.0;
  for (int i = 0; i < n_traj; ++i)
    acc += trajectory_return(rollout(policy, task, T, rng, beta), gamma);
  return acc / static_cast<double>(n_traj);
}

}  // namespace llrl
