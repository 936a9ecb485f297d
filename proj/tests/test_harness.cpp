#include "doctest.h"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "llrl/config.hpp"
#include "llrl/harness.hpp"
#include "llrl/snapshot.hpp"
#include "support/oracles.hpp"

using namespace llrl;
namespace fs = std::filesystem;

namespace {

TrainConfig tiny_cfg() {
  TrainConfig cfg;
  cfg.n_devices = 2;
  cfg.n_tasks = 3;
  cfg.n_traj_per_visit = 12;
  cfg.T = 20;
  cfg.conv_window = 3;
  cfg.max_visits_per_task = 5;
  cfg.seed = 99;
  return cfg;
}

fs::path fresh_dir(const std::string& tag) {
  const fs::path dir = fs::temp_directory_path() / ("llrl_test_" + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

LearningCurve synthetic_curve(const std::vector<double>& returns) {
  LearningCurve c;
  for (double r : returns) c.points.push_back({r, 0.0, 0.0});
  return c;
}

}  // namespace

TEST_CASE("iterations_to_threshold: crossing logic") {
  const LearningCurve curve =
      synthetic_curve({-9, -8, -7, -6, -5, -4, -3.5, -3, -2.9, -2.8});
  CHECK(iterations_to_threshold(curve, -3.0) == 7);
  CHECK(iterations_to_threshold(curve, -100.0) == 0);
  CHECK_FALSE(iterations_to_threshold(curve, 0.0).has_value());
  CHECK_THROWS_AS(iterations_to_threshold(LearningCurve{}, 0.0), std::invalid_argument);
}

TEST_CASE("run_baseline_pg: zero iterations means the initial point only") {
  const TrainConfig cfg = tiny_cfg();
  Rng tr = make_rng(101, 0);
  const Task task = generate_task(cfg.ranges, tr);
  Rng rng = make_rng(102, 0);
  const LearningCurve curve = run_baseline_pg(task, 0, cfg, rng);
  CHECK(curve.points.size() == 1);
  CHECK(curve.algo == "pg");
}

TEST_CASE("run_baseline_pg: deterministic for a fixed engine seed") {
  const TrainConfig cfg = tiny_cfg();
  Rng tr = make_rng(103, 0);
  const Task task = generate_task(cfg.ranges, tr);
  Rng r1 = make_rng(104, 0), r2 = make_rng(104, 0);
  const LearningCurve a = run_baseline_pg(task, 4, cfg, r1);
  const LearningCurve b = run_baseline_pg(task, 4, cfg, r2);
  REQUIRE(a.points.size() == b.points.size());
  for (std::size_t i = 0; i < a.points.size(); ++i) {
    CHECK(a.points[i].mean_return == b.points[i].mean_return);
    CHECK(a.points[i].mean_aoi == b.points[i].mean_aoi);
    CHECK(a.points[i].mean_energy == b.points[i].mean_energy);
  }
}

TEST_CASE("run_baseline_pg: learns to process on a saturated feasible task") {
  TrainConfig cfg = tiny_cfg();
  cfg.n_traj_per_visit = 40;
  cfg.T = 40;
  Task task;
  task.lambda = 1.0;
  task.abar = 2e6;  // one packet fits well inside a slot at full speed
  task.avar = 0.0;
  task.alpha = 1e-21;
  task.eps_max = 8e6;

  int improved = 0;
  const int n_seeds = 20;
  for (int s = 0; s < n_seeds; ++s) {
    Rng rng = make_rng(static_cast<std::uint64_t>(s), 105);
    const LearningCurve curve = run_baseline_pg(task, 30, cfg, rng);
    if (curve.points.back().mean_aoi < curve.points.front().mean_aoi) ++improved;
  }
  CHECK(improved >= 16);  // >= 80% of seeds
}

TEST_CASE("run_llrl_on_new_task: protocol symmetry and isolation") {
  const TrainConfig cfg = tiny_cfg();
  const TrainResult trained = train(cfg);
  REQUIRE(trained.kb.M >= 1);

  Rng tr = make_rng(106, 0);
  const Task task = generate_task(cfg.ranges, tr);

  const Eigen::MatrixXd a_before = trained.kb.A;
  const Eigen::MatrixXd l_before = trained.kb.L;
  const std::size_t reg_before = trained.kb.registry.size();

  Rng r_pg = make_rng(107, 0), r_ll = make_rng(108, 0);
  const LearningCurve pg = run_baseline_pg(task, 5, cfg, r_pg);
  const LearningCurve ll = run_llrl_on_new_task(trained.kb, task, 5, cfg, r_ll);
  CHECK(pg.points.size() == ll.points.size());
  CHECK(ll.algo == "llrl");

  // Deep copy: the caller's knowledge base is untouched.
  CHECK(trained.kb.A == a_before);
  CHECK(trained.kb.L == l_before);
  CHECK(trained.kb.registry.size() == reg_before);

  const KnowledgeBase empty = KnowledgeBase::init(kFeatureDim, 4, 0.1, 0.1);
  Rng r = make_rng(109, 0);
  CHECK_THROWS_AS(run_llrl_on_new_task(empty, task, 3, cfg, r), std::invalid_argument);
}

TEST_CASE("snapshot: lossless roundtrip and integrity checks") {
  const TrainConfig cfg = tiny_cfg();
  const TrainResult trained = train(cfg);
  const fs::path dir = fresh_dir("snapshot");
  const fs::path file = dir / "kb.json";

  save_snapshot(trained.kb, file);
  const KnowledgeBase loaded = load_snapshot(file);

  CHECK(loaded.M == trained.kb.M);
  CHECK(loaded.h == trained.kb.h);
  CHECK(loaded.eta1 == trained.kb.eta1);
  CHECK(loaded.eta2 == trained.kb.eta2);
  CHECK((loaded.L - trained.kb.L).lpNorm<Eigen::Infinity>() <= 1e-15);
  CHECK((loaded.A - trained.kb.A).lpNorm<Eigen::Infinity>() <= 1e-15);
  CHECK((loaded.b - trained.kb.b).lpNorm<Eigen::Infinity>() <= 1e-15);
  REQUIRE(loaded.registry.size() == trained.kb.registry.size());
  for (const auto& [id, rec] : trained.kb.registry) {
    const TaskRecord& lrec = loaded.registry.at(id);
    CHECK(lrec.task.lambda == rec.task.lambda);
    CHECK(lrec.task.abar == rec.task.abar);
    CHECK(lrec.task.eps_max == rec.task.eps_max);
    CHECK((lrec.s - rec.s).lpNorm<Eigen::Infinity>() <= 1e-15);
    CHECK((lrec.alpha_vec - rec.alpha_vec).lpNorm<Eigen::Infinity>() <= 1e-15);
    CHECK((lrec.gamma_mat - rec.gamma_mat).lpNorm<Eigen::Infinity>() <= 1e-15);
    CHECK(lrec.visits == rec.visits);
  }

  // Truncated file: an error, never a partial knowledge base.
  const std::string text = slurp(file);
  const fs::path broken = dir / "broken.json";
  std::ofstream out(broken, std::ios::binary);
  out << text.substr(0, text.size() / 2);
  out.close();
  CHECK_THROWS_AS(load_snapshot(broken), std::runtime_error);

  // Version check names the field.
  const fs::path wrong = dir / "wrong_version.json";
  std::ofstream wv(wrong);
  wv << R"({"version": 99})";
  wv.close();
  CHECK_THROWS_WITH_AS(load_snapshot(wrong), doctest::Contains("version"),
                       std::runtime_error);
}

TEST_CASE("snapshot: reloaded knowledge base reproduces LLRL curves bit-for-bit") {
  const TrainConfig cfg = tiny_cfg();
  const TrainResult trained = train(cfg);
  const fs::path dir = fresh_dir("snapshot_equiv");
  save_snapshot(trained.kb, dir / "kb.json");
  const KnowledgeBase loaded = load_snapshot(dir / "kb.json");

  Rng tr = make_rng(110, 0);
  const Task task = generate_task(cfg.ranges, tr);
  Rng r1 = make_rng(111, 0), r2 = make_rng(111, 0);
  const LearningCurve a = run_llrl_on_new_task(trained.kb, task, 4, cfg, r1);
  const LearningCurve b = run_llrl_on_new_task(loaded, task, 4, cfg, r2);
  REQUIRE(a.points.size() == b.points.size());
  for (std::size_t i = 0; i < a.points.size(); ++i)
    CHECK(a.points[i].mean_return == b.points[i].mean_return);
}

TEST_CASE("config: parsing, comments, unknown keys") {
  const fs::path dir = fresh_dir("config");
  const fs::path file = dir / "run.cfg";
  {
    std::ofstream out(file);
    out << "# comment line\n"
        << "n_devices = 2\n"
        << "n_tasks = 4   # trailing comment\n"
        << "beta = 0.25\n"
        << "seeds = 3, 5, 8\n"
        << "lambda_max = 4.5\n"
        << "\n";
  }
  const ExperimentConfig cfg = parse_config_file(file);
  CHECK(cfg.train.n_devices == 2);
  CHECK(cfg.train.n_tasks == 4);
  CHECK(cfg.train.beta == 0.25);
  CHECK(cfg.train.ranges.lambda_max == 4.5);
  CHECK(cfg.seeds == std::vector<std::uint64_t>{3, 5, 8});
  CHECK(cfg.n_test_tasks == 20);  // untouched default

  const fs::path bad = dir / "bad.cfg";
  {
    std::ofstream out(bad);
    out << "not_a_key = 1\n";
  }
  CHECK_THROWS_WITH_AS(parse_config_file(bad), doctest::Contains("not_a_key"),
                       std::runtime_error);

  const fs::path invalid = dir / "invalid.cfg";
  {
    std::ofstream out(invalid);
    out << "beta = 2.0\n";
  }
  CHECK_THROWS_AS(parse_config_file(invalid), std::invalid_argument);
}

TEST_CASE("run_comparison: bookkeeping, schema, reproducibility") {
  ExperimentConfig cfg;
  cfg.train = tiny_cfg();
  cfg.n_test_tasks = 2;
  cfg.n_eval_iterations = 4;
  cfg.n_sequential_tasks = 2;
  cfg.seeds = {1, 2};

  const fs::path dir1 = fresh_dir("cmp1");
  const ComparisonReport report = run_comparison(cfg, dir1);
  CHECK(report.n_curve_pairs == cfg.n_test_tasks * static_cast<int>(cfg.seeds.size()));
  CHECK(static_cast<int>(report.tasks.size()) == cfg.n_test_tasks);
  CHECK(report.sequential_gaps.size() == cfg.seeds.size());
  for (const auto& task : report.tasks)
    for (const auto& o : task.per_seed)
      if (o.speedup) CHECK(*o.speedup > 0.0);

  // Schema: header plus gapless per-curve iteration indices from 0.
  std::ifstream curves(dir1 / "curves.csv");
  REQUIRE(curves);
  std::string line;
  std::getline(curves, line);
  CHECK(line == "algo,task_id,seed,iteration,mean_return,mean_aoi,mean_energy");
  std::map<std::string, int> next_iter;
  int rows = 0;
  while (std::getline(curves, line)) {
    ++rows;
    std::stringstream ss(line);
    std::string algo, task_id, seed, iter, ret, aoi, energy, extra;
    REQUIRE(std::getline(ss, algo, ','));
    REQUIRE(std::getline(ss, task_id, ','));
    REQUIRE(std::getline(ss, seed, ','));
    REQUIRE(std::getline(ss, iter, ','));
    REQUIRE(std::getline(ss, ret, ','));
    REQUIRE(std::getline(ss, aoi, ','));
    REQUIRE(std::getline(ss, energy));
    CHECK_FALSE(std::getline(ss, extra, ','));
    const std::string key = algo + "/" + task_id + "/" + seed;
    CHECK(std::stoi(iter) == next_iter[key]);
    next_iter[key] += 1;
    CHECK(std::isfinite(std::stod(ret)));
    CHECK(std::isfinite(std::stod(aoi)));
    CHECK(std::isfinite(std::stod(energy)));
  }
  CHECK(rows > 0);
  // Evaluation pairs contribute identical budgets: equal-length pg and llrl
  // series for every (task, seed).
  for (int t = 0; t < cfg.n_test_tasks; ++t)
    for (const auto seed : cfg.seeds) {
      const std::string suffix = "/" + std::to_string(t) + "/" + std::to_string(seed);
      CHECK(next_iter["pg" + suffix] == cfg.n_eval_iterations + 1);
      CHECK(next_iter["llrl" + suffix] == cfg.n_eval_iterations + 1);
    }

  const fs::path dir2 = fresh_dir("cmp2");
  run_comparison(cfg, dir2);
  CHECK(slurp(dir1 / "curves.csv") == slurp(dir2 / "curves.csv"));
  CHECK(slurp(dir1 / "report.json") == slurp(dir2 / "report.json"));
}

TEST_CASE("write_training_log: schema") {
  const TrainConfig cfg = tiny_cfg();
  const TrainResult trained = train(cfg);
  const fs::path dir = fresh_dir("trainlog");
  write_training_log(trained.log, dir / "training_log.csv");
  std::ifstream in(dir / "training_log.csv");
  REQUIRE(in);
  std::string line;
  std::getline(in, line);
  CHECK(line ==
        "visit,device_id,task_id,is_new_task,mean_return_before,mean_return_after");
  int visit = 0;
  while (std::getline(in, line)) {
    std::stringstream ss(line);
    std::string field;
    REQUIRE(std::getline(ss, field, ','));
    CHECK(std::stoi(field) == visit);
    ++visit;
  }
  CHECK(visit == static_cast<int>(trained.log.size()));
}
