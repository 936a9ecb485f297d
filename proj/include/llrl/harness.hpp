#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "llrl/uav.hpp"

namespace llrl {

struct ExperimentConfig {
  TrainConfig train;
  int n_test_tasks = 20;
  int n_eval_iterations = 100;
  int n_sequential_tasks = 10;
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};

  void validate() const;
};

struct CurvePoint {
  double mean_return = 0.0;
  double mean_aoi = 0.0;
  double mean_energy = 0.0;
};

struct LearningCurve {
  std::string algo;
  int task_id = 0;
  std::uint64_t seed = 0;
  std::vector<CurvePoint> points;
};

// Batch averages: discounted return per trajectory, observed AoI and energy
// per slot.
CurvePoint batch_stats(std::span<const Trajectory> batch, double gamma, double alpha);

// Plain policy gradient from a random N(0, 0.01^2) start; point k is the
// evaluation of the policy before update k, so iters = 0 yields the initial
// point only. Each iteration consumes one batch of n_traj_per_visit rollouts.
LearningCurve run_baseline_pg(const Task& task, int iters, const TrainConfig& cfg,
                              Rng& rng);

// Same recording protocol, but the policy comes from a knowledge-base
// bootstrap (one unrecorded visit) and each update is a visit to this task.
// The knowledge base is copied; the caller's instance is untouched.
LearningCurve run_llrl_on_new_task(const KnowledgeBase& kb, const Task& task, int iters,
                                   const TrainConfig& cfg, Rng& rng);

// Smallest iteration whose mean_return reaches the threshold.
std::optional<int> iterations_to_threshold(const LearningCurve& curve, double threshold);

struct SeedOutcome {
  std::uint64_t seed = 0;
  double jumpstart = 0.0;
  int iters_pg = 0;
  std::optional<int> iters_llrl;
  std::optional<double> speedup;
};

struct TaskComparison {
  int task_id = 0;
  double jumpstart_mean = 0.0;
  std::vector<SeedOutcome> per_seed;
};

struct ComparisonReport {
  std::vector<TaskComparison> tasks;
  double mean_jumpstart = 0.0;
  int n_tasks_jumpstart_ge_5pct = 0;
  std::optional<double> median_speedup;
  std::optional<double> best_speedup;
  std::optional<double> worst_speedup;
  std::vector<double> sequential_gaps;  // per seed: mean(llrl) - mean(pg)
  double sequential_mean_gap = 0.0;
  int n_curve_pairs = 0;
};

// Test-task comparison plus the sequential experiment, writing curves.csv and
// report.json under out_dir. Deterministic for a fixed config.
ComparisonReport evaluate_comparison(const KnowledgeBase& kb, const ExperimentConfig& cfg,
                                     const std::filesystem::path& out_dir);

// train + evaluate_comparison.
ComparisonReport run_comparison(const ExperimentConfig& cfg,
                                const std::filesystem::path& out_dir);

void write_training_log(const std::vector<VisitReport>& log,
                        const std::filesystem::path& path);

}  // namespace llrl
