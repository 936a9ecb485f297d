#include "llrl/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace llrl {

namespace {

using ordered_json = nlohmann::ordered_json;

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::string& header) : out_(path) {
    if (!out_) throw std::runtime_error("cannot open " + path.string());
    out_ << header << '\n';
  }

  void row(const LearningCurve& curve) {
    for (std::size_t i = 0; i < curve.points.size(); ++i) {
      const CurvePoint& p = curve.points[i];
      out_ << curve.algo << ',' << curve.task_id << ',' << curve.seed << ',' << i << ','
           << fmt_double(p.mean_return) << ',' << fmt_double(p.mean_aoi) << ','
           << fmt_double(p.mean_energy) << '\n';
    }
  }

 private:
  std::ofstream out_;
};

std::vector<Trajectory> collect_batch(const GaussianPolicy& policy, const Task& task,
                                      const TrainConfig& cfg, Rng& rng) {
  std::vector<Trajectory> batch;
  batch.reserve(static_cast<std::size_t>(cfg.n_traj_per_visit));
  for (int i = 0; i < cfg.n_traj_per_visit; ++i)
    batch.push_back(rollout(policy, task, cfg.T, rng, cfg.beta));
  return batch;
}

std::vector<double> curve_returns(const LearningCurve& curve) {
  std::vector<double> r;
  r.reserve(curve.points.size());
  for (const CurvePoint& p : curve.points) r.push_back(p.mean_return);
  return r;
}

// Point k evaluates the policy entering iteration k; the same batch drives
// the update, so both algorithms spend one batch per recorded point.
LearningCurve run_pg_curve(const Task& task, const TrainConfig& cfg, int max_iters,
                           bool stop_on_converged, Rng& rng) {
  LearningCurve curve;
  curve.algo = "pg";
  GaussianPolicy policy = random_policy(cfg.sigma, rng);
  for (int it = 0;; ++it) {
    const auto batch = collect_batch(policy, task, cfg, rng);
    curve.points.push_back(batch_stats(batch, cfg.gamma, task.alpha));
    if (it == max_iters) break;
    if (stop_on_converged &&
        converged(curve_returns(curve), cfg.conv_window, cfg.conv_threshold))
      break;
    policy = pg_step(policy, reinforce_gradient(policy, batch, cfg.gamma, task.eps_max, true),
                     cfg.lr, cfg.clip_norm);
  }
  return curve;
}

LearningCurve run_llrl_curve(KnowledgeBase& kb, const Task& task, const TrainConfig& cfg,
                             int max_iters, bool stop_on_converged, Rng& rng) {
  LearningCurve curve;
  curve.algo = "llrl";
  Device dev;
  dev.id = 0;
  dev.current_task = task;
  dev.alpha = task.alpha;
  dev.eps_max = task.eps_max;
  dev.policy = random_policy(cfg.sigma, rng);

  // Bootstrap visit: seeds the device policy from the basis before the first
  // recorded point.
  {
    const auto batch = collect_batch(dev.policy, task, cfg, rng);
    VisitUpdate up = visit_update(kb, dev, cfg, batch, rng);
    if (!up.aborted) {
      kb = std::move(up.kb);
      dev = std::move(up.device);
    }
  }

  for (int it = 0;; ++it) {
    const auto batch = collect_batch(dev.policy, task, cfg, rng);
    curve.points.push_back(batch_stats(batch, cfg.gamma, task.alpha));
    if (it == max_iters) break;
    if (stop_on_converged &&
        converged(curve_returns(curve), cfg.conv_window, cfg.conv_threshold))
      break;
    VisitUpdate up = visit_update(kb, dev, cfg, batch, rng);
    if (!up.aborted) {
      kb = std::move(up.kb);
      dev = std::move(up.device);
    }
  }
  return curve;
}

double mean_of(std::span<const double> xs) {
  double acc = 0.0;
  for (double x : xs) acc += x;
  return xs.empty() ? 0.0 : acc / static_cast<double>(xs.size());
}

std::uint64_t eval_stream(int task_id, int algo) {
  return 0x100 + 2 * static_cast<std::uint64_t>(task_id) + static_cast<std::uint64_t>(algo);
}

std::uint64_t seq_stream(int task_index, int algo) {
  return 0x80000 + 2 * static_cast<std::uint64_t>(task_index) +
         static_cast<std::uint64_t>(algo);
}

}  // namespace

void ExperimentConfig::validate() const {
  train.validate();
  if (n_test_tasks < 1)
    throw std::invalid_argument("ExperimentConfig: n_test_tasks must be >= 1");
  if (n_eval_iterations < 1)
    throw std::invalid_argument("ExperimentConfig: n_eval_iterations must be >= 1");
  if (n_sequential_tasks < 0)
    throw std::invalid_argument("ExperimentConfig: n_sequential_tasks must be >= 0");
  if (seeds.empty()) throw std::invalid_argument("ExperimentConfig: seeds must be non-empty");
}

CurvePoint batch_stats(std::span<const Trajectory> batch, double gamma, double alpha) {
  if (batch.empty()) throw std::invalid_argument("batch_stats: empty batch");
  CurvePoint p;
  std::size_t n_steps = 0;
  for (const Trajectory& traj : batch) {
    p.mean_return += trajectory_return(traj, gamma);
    for (const StepRecord& rec : traj.steps) {
      p.mean_aoi += static_cast<double>(rec.obs_aoi);
      p.mean_energy += alpha * rec.action_eps * rec.action_eps * rec.action_eps;
      ++n_steps;
    }
  }
  p.mean_return /= static_cast<double>(batch.size());
  p.mean_aoi /= static_cast<double>(n_steps);
  p.mean_energy /= static_cast<double>(n_steps);
  return p;
}

LearningCurve run_baseline_pg(const Task& task, int iters, const TrainConfig& cfg,
                              Rng& rng) {
  if (iters < 0) throw std::invalid_argument("run_baseline_pg: iters must be >= 0");
  task.validate();
  cfg.validate();
  return run_pg_curve(task, cfg, iters, false, rng);
}

LearningCurve run_llrl_on_new_task(const KnowledgeBase& kb, const Task& task, int iters,
                                   const TrainConfig& cfg, Rng& rng) {
  if (iters < 0) throw std::invalid_argument("run_llrl_on_new_task: iters must be >= 0");
  if (kb.M < 1)
    throw std::invalid_argument("run_llrl_on_new_task: knowledge base is untrained");
  task.validate();
  cfg.validate();
  KnowledgeBase scratch = kb;
  return run_llrl_curve(scratch, task, cfg, iters, false, rng);
}

std::optional<int> iterations_to_threshold(const LearningCurve& curve, double threshold) {
  if (curve.points.empty())
    throw std::invalid_argument("iterations_to_threshold: empty curve");
  for (std::size_t i = 0; i < curve.points.size(); ++i)
    if (curve.points[i].mean_return >= threshold) return static_cast<int>(i);
  return std::nullopt;
}

ComparisonReport evaluate_comparison(const KnowledgeBase& kb, const ExperimentConfig& cfg,
                                     const std::filesystem::path& out_dir) {
  cfg.validate();
  if (kb.M < 1) throw std::invalid_argument("evaluate_comparison: knowledge base is untrained");
  std::filesystem::create_directories(out_dir);

  CsvWriter curves(out_dir / "curves.csv",
                   "algo,task_id,seed,iteration,mean_return,mean_aoi,mean_energy");

  Rng test_rng = make_rng(cfg.train.seed, 10);
  std::vector<Task> test_tasks;
  for (int t = 0; t < cfg.n_test_tasks; ++t)
    test_tasks.push_back(generate_task(cfg.train.ranges, test_rng));

  ComparisonReport report;
  std::vector<double> speedups;
  for (int t = 0; t < cfg.n_test_tasks; ++t) {
    TaskComparison cmp;
    cmp.task_id = t;
    for (const std::uint64_t seed : cfg.seeds) {
      Rng rng_pg = make_rng(seed, eval_stream(t, 0));
      LearningCurve pg = run_pg_curve(test_tasks[static_cast<std::size_t>(t)], cfg.train,
                                      cfg.n_eval_iterations, false, rng_pg);
      pg.task_id = t;
      pg.seed = seed;

      Rng rng_ll = make_rng(seed, eval_stream(t, 1));
      KnowledgeBase scratch = kb;
      LearningCurve ll = run_llrl_curve(scratch, test_tasks[static_cast<std::size_t>(t)],
                                        cfg.train, cfg.n_eval_iterations, false, rng_ll);
      ll.task_id = t;
      ll.seed = seed;

      curves.row(pg);
      curves.row(ll);
      report.n_curve_pairs += 1;

      SeedOutcome outcome;
      outcome.seed = seed;
      const double pg0 = pg.points.front().mean_return;
      const double ll0 = ll.points.front().mean_return;
      outcome.jumpstart = (ll0 - pg0) / std::max(std::abs(pg0), 1e-12);

      const auto pg_returns = curve_returns(pg);
      const double hi = *std::max_element(pg_returns.begin(), pg_returns.end());
      const double lo = *std::min_element(pg_returns.begin(), pg_returns.end());
      const double threshold = pg_returns.back() - 0.05 * (hi - lo);
      outcome.iters_pg = *iterations_to_threshold(pg, threshold);
      outcome.iters_llrl = iterations_to_threshold(ll, threshold);
      // A flat baseline that starts at its threshold carries no speed
      // information; a jumpstart past the threshold counts as one iteration.
      if (outcome.iters_pg >= 1 && outcome.iters_llrl) {
        outcome.speedup = static_cast<double>(outcome.iters_pg) /
                          static_cast<double>(std::max(1, *outcome.iters_llrl));
        speedups.push_back(*outcome.speedup);
      }
      cmp.per_seed.push_back(outcome);
    }
    double js = 0.0;
    for (const SeedOutcome& o : cmp.per_seed) js += o.jumpstart;
    cmp.jumpstart_mean = js / static_cast<double>(cmp.per_seed.size());
    report.tasks.push_back(std::move(cmp));
  }

  double total_js = 0.0;
  for (const TaskComparison& cmp : report.tasks) {
    total_js += cmp.jumpstart_mean;
    if (cmp.jumpstart_mean >= 0.05) report.n_tasks_jumpstart_ge_5pct += 1;
  }
  report.mean_jumpstart = total_js / static_cast<double>(report.tasks.size());

  if (!speedups.empty()) {
    std::sort(speedups.begin(), speedups.end());
    const std::size_t n = speedups.size();
    report.median_speedup = (n % 2 == 1)
                                ? speedups[n / 2]
                                : 0.5 * (speedups[n / 2 - 1] + speedups[n / 2]);
    report.best_speedup = speedups.back();
    report.worst_speedup = speedups.front();
  }

  // Sequential experiment: one continuing knowledge base sees the tasks one
  // after another; the comparator is a fresh PG learner per task.
  Rng seq_rng = make_rng(cfg.train.seed, 11);
  std::vector<Task> seq_tasks;
  for (int k = 0; k < cfg.n_sequential_tasks; ++k)
    seq_tasks.push_back(generate_task(cfg.train.ranges, seq_rng));

  for (const std::uint64_t seed : cfg.seeds) {
    if (seq_tasks.empty()) break;
    KnowledgeBase continuing = kb;
    std::vector<double> ll_points, pg_points;
    for (int k = 0; k < cfg.n_sequential_tasks; ++k) {
      const Task& task = seq_tasks[static_cast<std::size_t>(k)];
      // The lifelong learner's convergence decides when the next task
      // emerges; the fresh baseline gets the same iteration budget so the
      // two series stay point-by-point comparable.
      Rng rng_ll = make_rng(seed, seq_stream(k, 1));
      LearningCurve ll = run_llrl_curve(continuing, task, cfg.train,
                                        cfg.n_eval_iterations, true, rng_ll);
      ll.algo = "llrl_seq";
      ll.task_id = k;
      ll.seed = seed;

      Rng rng_pg = make_rng(seed, seq_stream(k, 0));
      LearningCurve pg = run_pg_curve(task, cfg.train,
                                      static_cast<int>(ll.points.size()) - 1, false,
                                      rng_pg);
      pg.algo = "pg_seq";
      pg.task_id = k;
      pg.seed = seed;

      curves.row(ll);
      curves.row(pg);
      for (const CurvePoint& p : ll.points) ll_points.push_back(p.mean_return);
      for (const CurvePoint& p : pg.points) pg_points.push_back(p.mean_return);
    }
    report.sequential_gaps.push_back(mean_of(ll_points) - mean_of(pg_points));
  }
  report.sequential_mean_gap = mean_of(report.sequential_gaps);

  ordered_json j;
  j["n_test_tasks"] = cfg.n_test_tasks;
  j["n_eval_iterations"] = cfg.n_eval_iterations;
  j["seeds"] = cfg.seeds;
  j["n_curve_pairs"] = report.n_curve_pairs;
  j["mean_jumpstart"] = report.mean_jumpstart;
  j["n_tasks_jumpstart_ge_5pct"] = report.n_tasks_jumpstart_ge_5pct;
  j["median_speedup"] = report.median_speedup ? ordered_json(*report.median_speedup)
                                              : ordered_json(nullptr);
  j["best_speedup"] =
      report.best_speedup ? ordered_json(*report.best_speedup) : ordered_json(nullptr);
  j["worst_speedup"] =
      report.worst_speedup ? ordered_json(*report.worst_speedup) : ordered_json(nullptr);
  j["sequential_gaps"] = report.sequential_gaps;
  j["sequential_mean_gap"] = report.sequential_mean_gap;
  auto& tasks_json = j["tasks"] = ordered_json::array();
  for (const TaskComparison& cmp : report.tasks) {
    ordered_json tj;
    tj["task_id"] = cmp.task_id;
    tj["jumpstart_mean"] = cmp.jumpstart_mean;
    auto& per_seed = tj["per_seed"] = ordered_json::array();
    for (const SeedOutcome& o : cmp.per_seed) {
      ordered_json oj;
      oj["seed"] = o.seed;
      oj["jumpstart"] = o.jumpstart;
      oj["iters_pg"] = o.iters_pg;
      oj["iters_llrl"] = o.iters_llrl ? ordered_json(*o.iters_llrl) : ordered_json(nullptr);
      oj["speedup"] = o.speedup ? ordered_json(*o.speedup) : ordered_json(nullptr);
      per_seed.push_back(std::move(oj));
    }
    tasks_json.push_back(std::move(tj));
  }
  std::ofstream rf(out_dir / "report.json");
  if (!rf) throw std::runtime_error("cannot open " + (out_dir / "report.json").string());
  rf << j.dump(2) << '\n';

  return report;
}

ComparisonReport run_comparison(const ExperimentConfig& cfg,
                                const std::filesystem::path& out_dir) {
  cfg.validate();
  const TrainResult trained = train(cfg.train);
  return evaluate_comparison(trained.kb, cfg, out_dir);
}

void write_training_log(const std::vector<VisitReport>& log,
                        const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  out << "visit,device_id,task_id,is_new_task,mean_return_before,mean_return_after\n";
  for (const VisitReport& r : log) {
    out << r.visit_index << ',' << r.device_id << ',' << r.task_id << ','
        << (r.is_new_task ? 1 : 0) << ',' << fmt_double(r.mean_return_before) << ','
        << fmt_double(r.mean_return_after) << '\n';
  }
}

}  // namespace llrl
