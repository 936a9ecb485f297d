#include "llrl/env.hpp"

#include <cmath>
#include <stdexcept>

#include "llrl/policy.hpp"

namespace llrl {

void Task::validate() const {
  if (!(lambda >= 1.0)) throw std::invalid_argument("Task: lambda must be >= 1");
  if (!(abar > 0.0)) throw std::invalid_argument("Task: abar must be > 0");
  if (!(avar >= 0.0)) throw std::invalid_argument("Task: avar must be >= 0");
  if (!(alpha > 0.0)) throw std::invalid_argument("Task: alpha must be > 0");
  if (!(eps_max > 0.0)) throw std::invalid_argument("Task: eps_max must be > 0");
}

std::pair<bool, double> sample_packet(const Task& task, Rng& rng) {
  std::bernoulli_distribution arrive(1.0 / task.lambda);
  if (!arrive(rng)) return {false, 0.0};
  if (task.avar == 0.0) return {true, task.abar};
  std::normal_distribution<double> size(task.abar, std::sqrt(task.avar));
  return {true, std::max(1.0, size(rng))};
}

double queue_update(double backlog, bool arrived, double size, double eps) {
  if (backlog < 0.0 || size < 0.0 || eps < 0.0)
    throw std::invalid_argument("queue_update: negative input");
  const double next = backlog + (arrived ? size : 0.0) - eps;
  return next > 0.0 ? next : 0.0;
}

std::int64_t aoi_update(std::int64_t aoi, std::int64_t t_next, bool completed,
                        std::int64_t u_latest) {
  if (!completed) return aoi + 1;
  if (u_latest >= t_next)
    throw std::invalid_argument("aoi_update: completion must predate t_next");
  return t_next - u_latest;
}

double cost(double aoi, double eps, double alpha, double beta) {
  if (!(beta >= 0.0 && beta <= 1.0))
    throw std::invalid_argument("cost: beta must lie in [0,1]");
  return beta * aoi + (1.0 - beta) * alpha * eps * eps * eps;
}

StepRecord step(DeviceState& state, double eps, const Task& task, Rng& rng, double beta) {
  if (!(eps >= 0.0 && eps <= task.eps_max))
    throw std::invalid_argument("step: eps outside [0, eps_max]");

  StepRecord rec;
  rec.obs_aoi = state.aoi;
  rec.obs_backlog = state.backlog;
  rec.action_eps = eps;

  const auto [arrived, size] = sample_packet(task, rng);
  rec.arrived = arrived;
  rec.arrived_size = size;
  if (arrived) state.queue.push_back({state.t, size});

  rec.reward = -cost(static_cast<double>(rec.obs_aoi), eps, task.alpha, beta);

  // FCFS; cycles cross packet boundaries within the slot.
  double left = eps;
  bool completed = false;
  std::int64_t u_latest = 0;
  while (left > 0.0 && !state.queue.empty()) {
    PendingPacket& head = state.queue.front();
    if (head.remaining_cycles <= left) {
      left -= head.remaining_cycles;
      u_latest = head.arrival_slot;
      completed = true;
      state.queue.pop_front();
    } else {
      head.remaining_cycles -= left;
      left = 0.0;
    }
  }
  rec.completed = completed;

  state.backlog =
      state.queue.empty() ? 0.0 : queue_update(rec.obs_backlog, arrived, size, eps);
  state.t += 1;
  state.aoi = aoi_update(rec.obs_aoi, state.t, completed, u_latest);
  if (completed) state.last_completed_arrival = u_latest;
  return rec;
}

Trajectory rollout(const GaussianPolicy& policy, const Task& task, int T, Rng& rng,
                   double beta) {
  if (T < 1) throw std::invalid_argument("rollout: T must be >= 1");
  task.validate();

  Trajectory traj;
  traj.steps.reserve(static_cast<std::size_t>(T));
  DeviceState state;
  for (int t = 0; t < T; ++t) {
    const Features feats =
        featurize(static_cast<double>(state.aoi), state.backlog, task.eps_max);
    const auto [eps, y_raw] = act(policy, feats, task.eps_max, rng);
    StepRecord rec = step(state, eps, task, rng, beta);
    rec.y_raw = y_raw;
    traj.steps.push_back(rec);
  }
  traj.final_backlog = state.backlog;
  return traj;
}

}  // namespace llrl
