#include "doctest.h"

#include <cmath>
#include <vector>

#include "llrl/uav.hpp"
#include "support/oracles.hpp"

using namespace llrl;

namespace {

// Sized so pooled discovery (n_traj_per_visit * T slots) stays well inside
// the matching tolerance; with tiny batches revisit matching gets noisy.
TrainConfig small_cfg() {
  TrainConfig cfg;
  cfg.n_devices = 2;
  cfg.n_tasks = 3;
  cfg.n_traj_per_visit = 40;
  cfg.T = 50;
  cfg.conv_window = 3;
  cfg.max_visits_per_task = 5;
  cfg.ranges.lambda_max = 3.0;
  cfg.seed = 77;
  return cfg;
}

Device test_device(const Task& task, std::uint64_t seed, double sigma) {
  Device dev;
  dev.id = 0;
  dev.current_task = task;
  dev.alpha = task.alpha;
  dev.eps_max = task.eps_max;
  Rng rng = make_rng(seed, 90);
  dev.policy = random_policy(sigma, rng);
  return dev;
}

}  // namespace

TEST_CASE("converged: window arithmetic") {
  CHECK(converged(std::vector<double>{-2.0, -2.0, -2.0, -2.0, -2.0}, 5, 0.01));
  CHECK_FALSE(converged(std::vector<double>{-2.0, -2.0}, 5, 0.01));

  std::vector<double> improving;
  double v = -10.0;
  for (int i = 0; i < 8; ++i) {
    improving.push_back(v);
    v *= 0.9;  // 10% better each step
  }
  CHECK_FALSE(converged(improving, 5, 0.01));

  const std::vector<double> example{-5.0, -4.0, -3.95, -3.96, -3.94};
  CHECK(converged(example, 3, 0.01));

  CHECK_THROWS_AS(converged(example, 1, 0.01), std::invalid_argument);
}

TEST_CASE("visit: first contact registers a new task") {
  TrainConfig cfg = small_cfg();
  Rng task_rng = make_rng(78, 0);
  const Task task = generate_task(cfg.ranges, task_rng);
  const Device dev = test_device(task, 1, cfg.sigma);
  const KnowledgeBase kb = KnowledgeBase::init(kFeatureDim, cfg.h, cfg.eta1, cfg.eta2);

  Rng rng = make_rng(79, 0);
  const VisitResult first = visit(kb, dev, cfg, rng);
  CHECK_FALSE(first.report.aborted);
  CHECK(first.report.is_new_task);
  CHECK(first.kb.M == 1);
  CHECK(first.kb.registry.size() == 1);
  CHECK(first.kb.registry.at(0).visits == 1);
  CHECK(first.device.pending.empty());

  // Pushed policy reproduces L s exactly.
  const auto& rec = first.kb.registry.at(first.report.task_id);
  const GaussianPolicy recomposed = compose_policy(first.kb.L, rec.s, cfg.sigma);
  CHECK((first.device.policy.theta - recomposed.theta).lpNorm<Eigen::Infinity>() <= 1e-12);

  // Same device, unchanged environment: the subtraction branch runs.
  const VisitResult second = visit(first.kb, first.device, cfg, rng);
  CHECK_FALSE(second.report.aborted);
  CHECK_FALSE(second.report.is_new_task);
  CHECK(second.report.task_id == first.report.task_id);
  CHECK(second.kb.M == 1);
  CHECK(second.kb.registry.at(0).visits == 2);

  // Incremental accumulators agree with the dense recomputation.
  const auto [a_ref, b_ref] = oracles::recompute_accumulators(second.kb);
  CHECK((second.kb.A - a_ref).lpNorm<Eigen::Infinity>() <=
        1e-8 * std::max(1.0, a_ref.lpNorm<Eigen::Infinity>()));
  CHECK((second.kb.b - b_ref).lpNorm<Eigen::Infinity>() <=
        1e-8 * std::max(1.0, b_ref.lpNorm<Eigen::Infinity>()));

  // The original inputs were never mutated.
  CHECK(kb.M == 0);
  CHECK(dev.policy.theta == test_device(task, 1, cfg.sigma).policy.theta);
}

TEST_CASE("train: deterministic for a fixed master seed") {
  const TrainConfig cfg = small_cfg();
  const TrainResult a = train(cfg);
  const TrainResult b = train(cfg);
  REQUIRE(a.log.size() == b.log.size());
  for (std::size_t i = 0; i < a.log.size(); ++i) {
    CHECK(a.log[i].device_id == b.log[i].device_id);
    CHECK(a.log[i].task_id == b.log[i].task_id);
    CHECK(a.log[i].is_new_task == b.log[i].is_new_task);
    CHECK(a.log[i].mean_return_before == b.log[i].mean_return_before);
    CHECK(a.log[i].mean_return_after == b.log[i].mean_return_after);
  }
  CHECK((a.kb.L - b.kb.L).lpNorm<Eigen::Infinity>() == 0.0);
  CHECK(a.kb.M == b.kb.M);
}

TEST_CASE("train: bookkeeping invariants") {
  const TrainConfig cfg = small_cfg();
  const TrainResult res = train(cfg);

  CHECK(res.kb.M == static_cast<int>(res.kb.registry.size()));
  for (const auto& [id, rec] : res.kb.registry) CHECK(rec.visits >= 2);

  const auto [a_ref, b_ref] = oracles::recompute_accumulators(res.kb);
  CHECK((res.kb.A - a_ref).lpNorm<Eigen::Infinity>() <=
        1e-8 * std::max(1.0, a_ref.lpNorm<Eigen::Infinity>()));
  CHECK((res.kb.b - b_ref).lpNorm<Eigen::Infinity>() <=
        1e-8 * std::max(1.0, b_ref.lpNorm<Eigen::Infinity>()));

  int visits_accounted = 0;
  for (const auto& [id, rec] : res.kb.registry) visits_accounted += rec.visits;
  int not_aborted = 0;
  for (const auto& r : res.log)
    if (!r.aborted) ++not_aborted;
  CHECK(visits_accounted == not_aborted);
}

TEST_CASE("train: round-robin split over devices") {
  TrainConfig cfg = small_cfg();
  cfg.n_devices = 3;
  cfg.n_tasks = 10;
  cfg.max_visits_per_task = 1;  // one visit per scheduled task
  const TrainResult res = train(cfg);
  REQUIRE(res.log.size() == 10);
  std::vector<int> per_device(3, 0);
  for (const auto& r : res.log) per_device[static_cast<std::size_t>(r.device_id)] += 1;
  std::sort(per_device.begin(), per_device.end());
  CHECK(per_device == std::vector<int>{3, 3, 4});
}

TEST_CASE("train: rejects invalid configuration") {
  TrainConfig cfg = small_cfg();
  cfg.beta = 1.5;
  CHECK_THROWS_AS(train(cfg), std::invalid_argument);
  cfg = small_cfg();
  cfg.conv_window = 1;
  CHECK_THROWS_AS(train(cfg), std::invalid_argument);
}
