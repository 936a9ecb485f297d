#pragma once

#include <span>
#include <vector>

#include "llrl/kb.hpp"
#include "llrl/learner.hpp"
#include "llrl/tasks.hpp"

namespace llrl {

struct Device {
  int id = 0;
  Task current_task;      // hidden from the orchestrator's estimators
  GaussianPolicy policy;
  double alpha = 0.0;     // device-reported chip constant
  double eps_max = 0.0;   // device-reported CPU cap
  std::vector<Trajectory> pending;
};

struct TrainConfig {
  int n_devices = 3;
  int n_tasks = 10;
  int n_traj_per_visit = 100;
  int T = 50;
  double beta = 0.5;
  double gamma = 0.9;
  double lr = 0.1;
  // Exploration must reach packet completions within a 50-slot horizon at
  // Mica2-scale packet sizes; colder policies only ever see the energy term.
  double sigma = 0.8;
  double clip_norm = 10.0;
  // The curvature weights carry the sigma^-2 sum over T slots, so the L1
  // term needs this scale before it shrinks codes toward shared components.
  double eta1 = 1.0;
  double eta2 = 0.1;
  int h = 4;
  double rel_tol = 0.1;
  int conv_window = 5;
  // Below the Monte Carlo noise floor of a 100-rollout evaluation; a looser
  // range test fires on a lucky cluster long before learning levels off.
  double conv_threshold = 0.001;
  int max_visits_per_task = 200;
  std::uint64_t seed = 0;
  TaskRanges ranges;

  void validate() const;
};

struct VisitReport {
  int visit_index = 0;
  int device_id = 0;
  int task_id = -1;
  bool is_new_task = false;
  bool aborted = false;  // task discovery found no arrivals
  double mean_return_before = 0.0;
  double mean_return_after = 0.0;
};

struct VisitUpdate {
  KnowledgeBase kb;
  Device device;
  int task_id = -1;
  bool is_new_task = false;
  bool aborted = false;
};

struct VisitResult {
  KnowledgeBase kb;
  Device device;
  VisitReport report;
};

struct TrainResult {
  KnowledgeBase kb;
  std::vector<VisitReport> log;
};

// theta ~ N(0, 0.01^2) entrywise.
GaussianPolicy random_policy(double sigma, Rng& rng);

// Range of the last `window` entries no larger than
// rel_threshold * max(1, |window mean|).
bool converged(std::span<const double> history, int window, double rel_threshold);

// Knowledge-base refinement from an already collected batch: discovery and
// matching, same-task subtraction, base-learner step, Lasso code, accumulator
// update, basis re-solve, policy push-back. Inputs are untouched; a failed
// solve throws and a failed discovery returns aborted with the inputs copied.
VisitUpdate visit_update(const KnowledgeBase& kb, const Device& device,
                         const TrainConfig& cfg, std::span<const Trajectory> batch,
                         Rng& rng);

// Full visit: collect n_traj_per_visit rollouts, run visit_update, then
// re-evaluate the pushed policy for the report.
VisitResult visit(const KnowledgeBase& kb, const Device& device, const TrainConfig& cfg,
                  Rng& rng);

// Training protocol: n_tasks tasks round-robin over n_devices devices, each
// activating only when its predecessor converged; the visit target is drawn
// uniformly among devices with an active unconverged task.
TrainResult train(const TrainConfig& cfg);

}  // namespace llrl
