#include "llrl/tasks.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace llrl {

void TaskRanges::validate() const {
  if (!(lambda_min >= 1.0) || lambda_min > lambda_max)
    throw std::invalid_argument("TaskRanges: bad lambda range");
  if (!(abar_min > 0.0) || abar_min > abar_max)
    throw std::invalid_argument("TaskRanges: bad abar range");
  if (!(avar >= 0.0)) throw std::invalid_argument("TaskRanges: avar must be >= 0");
  if (!(alpha > 0.0)) throw std::invalid_argument("TaskRanges: alpha must be > 0");
  if (!(eps_max_min > 0.0) || eps_max_min > eps_max_max)
    throw std::invalid_argument("TaskRanges: bad eps_max range");
}

namespace {

double draw_uniform(double lo, double hi, Rng& rng) {
  if (lo == hi) return lo;
  std::uniform_real_distribution<double> dist(lo, hi);
  return dist(rng);
}

struct ArrivalScan {
  std::int64_t slots = 0;
  std::int64_t q = 0;
  double size_sum = 0.0;

  void add(const Trajectory& traj) {
    const auto& steps = traj.steps;
    const std::size_t n = steps.size();
    slots += static_cast<std::int64_t>(n);
    for (std::size_t t = 0; t < n; ++t) {
      const double b_next =
          (t + 1 < n) ? steps[t + 1].obs_backlog : traj.final_backlog;
      const double inc = b_next + steps[t].action_eps - steps[t].obs_backlog;
      // Slots that drain to zero can hide wasted cycles behind the clamp, so
      // they are not counted; real sizes are at least one cycle, the margin
      // absorbs rounding.
      if (b_next > 0.0 && inc > 0.5) {
        ++q;
        size_sum += inc;
      }
    }
  }

  std::optional<TaskEstimate> finish(double device_alpha, double device_eps_max) const {
    if (q == 0) return std::nullopt;
    TaskEstimate est;
    est.lambda_hat = static_cast<double>(slots) / static_cast<double>(q);
    est.abar_hat = size_sum / static_cast<double>(q);
    est.alpha = device_alpha;
    est.eps_max = device_eps_max;
    est.q_count = q;
    return est;
  }
};

}  // namespace

Task generate_task(const TaskRanges& ranges, Rng& rng) {
  ranges.validate();
  Task task;
  task.lambda = draw_uniform(ranges.lambda_min, ranges.lambda_max, rng);
  task.abar = draw_uniform(ranges.abar_min, ranges.abar_max, rng);
  task.avar = ranges.avar;
  task.alpha = ranges.alpha;
  task.eps_max = draw_uniform(ranges.eps_max_min, ranges.eps_max_max, rng);
  return task;
}

std::optional<TaskEstimate> discover_task(const Trajectory& traj, double device_alpha,
                                          double device_eps_max) {
  if (traj.steps.empty()) throw std::invalid_argument("discover_task: empty trajectory");
  ArrivalScan scan;
  scan.add(traj);
  return scan.finish(device_alpha, device_eps_max);
}

std::optional<TaskEstimate> discover_task(std::span<const Trajectory> trajs,
                                          double device_alpha, double device_eps_max) {
  if (trajs.empty()) throw std::invalid_argument("discover_task: empty batch");
  ArrivalScan scan;
  for (const Trajectory& traj : trajs) {
    if (traj.steps.empty())
      throw std::invalid_argument("discover_task: empty trajectory");
    scan.add(traj);
  }
  return scan.finish(device_alpha, device_eps_max);
}

std::optional<int> match_task(const TaskEstimate& est,
                              std::span<const std::pair<int, Task>> registry,
                              double rel_tol) {
  if (!(rel_tol > 0.0)) throw std::invalid_argument("match_task: rel_tol must be > 0");
  const auto rel = [](double a, double b) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300});
  };
  std::optional<int> best;
  for (const auto& [id, task] : registry) {
    if (rel(est.lambda_hat, task.lambda) <= rel_tol &&
        rel(est.abar_hat, task.abar) <= rel_tol &&
        rel(est.alpha, task.alpha) <= rel_tol &&
        rel(est.eps_max, task.eps_max) <= rel_tol) {
      if (!best || id < *best) best = id;
    }
  }
  return best;
}

}  // namespace llrl
