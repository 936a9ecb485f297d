#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <utility>
#include <vector>

#include "llrl/common.hpp"

namespace llrl {

struct GaussianPolicy;  // policy.hpp

// Environment descriptor for one stationary MDP: Bernoulli packet arrivals
// with mean inter-arrival time `lambda`, packet sizes in CPU cycles, chip
// energy constant and per-slot CPU cap.
struct Task {
  double lambda = 1.0;   // mean inter-arrival time in slots (>= 1)
  double abar = 1.0;     // mean packet size, cycles
  double avar = 0.0;     // packet size variance, cycles^2
  double alpha = 1e-21;  // chip energy constant, J/cycle^3
  double eps_max = 1.0;  // CPU cycle cap per slot

  void validate() const;
};

struct PendingPacket {
  std::int64_t arrival_slot = 0;
  double remaining_cycles = 0.0;
};

// Full simulator state for one device. `aoi` tracks slots elapsed since the
// arrival of the most recently completed packet (virtual packet at t = 0
// before any completion), `backlog` the aggregate pending cycles of `queue`.
struct DeviceState {
  std::int64_t t = 0;
  std::int64_t aoi = 0;
  double backlog = 0.0;
  std::deque<PendingPacket> queue;
  std::optional<std::int64_t> last_completed_arrival;
};

struct StepRecord {
  std::int64_t obs_aoi = 0;  // AoI at the start of the slot
  double obs_backlog = 0.0;  // pending cycles before this slot's arrival
  double action_eps = 0.0;   // cycles allocated this slot
  double y_raw = 0.0;        // unclipped normalized action, kept for the gradient
  double reward = 0.0;
  bool completed = false;    // at least one packet finished this slot
  bool arrived = false;
  double arrived_size = 0.0; // cycles, 0 when nothing arrived
};

struct Trajectory {
  std::optional<int> task_id_hint;
  std::vector<StepRecord> steps;
  double final_backlog = 0.0;  // pending cycles after the last slot
};

// One packet draw: arrives with probability 1/lambda; sizes are normal with
// mean abar and variance avar, never below one cycle.
std::pair<bool, double> sample_packet(const Task& task, Rng& rng);

// max(backlog + arrived*size - eps, 0)
double queue_update(double backlog, bool arrived, double size, double eps);

// Age either increments or resets to the latest completed packet's age.
std::int64_t aoi_update(std::int64_t aoi, std::int64_t t_next, bool completed,
                        std::int64_t u_latest);

// beta*aoi + (1-beta)*alpha*eps^3
double cost(double aoi, double eps, double alpha, double beta);

// Advance one slot: arrival, reward at the observed state, FCFS processing,
// queue/backlog update, clock and AoI advance.
StepRecord step(DeviceState& state, double eps, const Task& task, Rng& rng, double beta);

// T steps from a fresh state under the policy. Deterministic given the
// engine state; concurrent rollouts need independent engines.
Trajectory rollout(const GaussianPolicy& policy, const Task& task, int T, Rng& rng,
                   double beta);

}  // namespace llrl
