#pragma once

#include <optional>
#include <span>
#include <utility>

#include "llrl/common.hpp"
#include "llrl/env.hpp"

namespace llrl {

struct TaskRanges {
  double lambda_min = 1.0;
  double lambda_max = 5.0;
  double abar_min = 1e7;
  double abar_max = 5e7;
  double avar = 5e6;
  double alpha = 1e-21;
  double eps_max_min = 3e6;
  double eps_max_max = 8e6;

  void validate() const;
};

// Tuple recovered from a trajectory; alpha and eps_max are reported by the
// device rather than estimated.
struct TaskEstimate {
  double lambda_hat = 0.0;
  double abar_hat = 0.0;
  double alpha = 0.0;
  double eps_max = 0.0;
  std::int64_t q_count = 0;
};

Task generate_task(const TaskRanges& ranges, Rng& rng);

// Detect arrivals from the recorded backlog transitions with the spent
// cycles added back; lambda_hat = slots / arrivals, abar_hat the mean
// detected increment. Returns nullopt when no arrival is detectable.
std::optional<TaskEstimate> discover_task(const Trajectory& traj, double device_alpha,
                                          double device_eps_max);

// Pooled variant over a batch of trajectories from the same environment.
std::optional<TaskEstimate> discover_task(std::span<const Trajectory> trajs,
                                          double device_alpha, double device_eps_max);

// Registered task whose (lambda, abar, alpha, eps_max) all sit within
// rel_tol relative distance of the estimate; smallest id wins.
std::optional<int> match_task(const TaskEstimate& est,
                              std::span<const std::pair<int, Task>> registry,
                              double rel_tol);

}  // namespace llrl
