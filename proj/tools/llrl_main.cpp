#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "llrl/config.hpp"
#include "llrl/harness.hpp"
#include "llrl/snapshot.hpp"

namespace fs = std::filesystem;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

llrl::ExperimentConfig load_config(const std::string& path) {
  if (path.empty()) return llrl::ExperimentConfig{};
  return llrl::parse_config_file(path);
}

// "lambda=<f>,abar=<f>,alpha=<f>,emax=<f>[,avar=<f>]"
llrl::Task parse_task_spec(const std::string& spec) {
  llrl::Task task;
  task.avar = 5e6;
  bool have_lambda = false, have_abar = false, have_alpha = false, have_emax = false;
  std::size_t start = 0;
  while (start < spec.size()) {
    auto comma = spec.find(',', start);
    if (comma == std::string::npos) comma = spec.size();
    const std::string item = spec.substr(start, comma - start);
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw UsageError("--task: expected key=value, got '" + item + "'");
    const std::string key = item.substr(0, eq);
    double value = 0.0;
    try {
      std::size_t pos = 0;
      value = std::stod(item.substr(eq + 1), &pos);
      if (pos != item.size() - eq - 1) throw std::invalid_argument("");
    } catch (const std::exception&) {
      throw UsageError("--task: bad number for '" + key + "'");
    }
    if (key == "lambda") { task.lambda = value; have_lambda = true; }
    else if (key == "abar") { task.abar = value; have_abar = true; }
    else if (key == "alpha") { task.alpha = value; have_alpha = true; }
    else if (key == "emax") { task.eps_max = value; have_emax = true; }
    else if (key == "avar") task.avar = value;
    else throw UsageError("--task: unknown key '" + key + "'");
    start = comma + 1;
  }
  if (!have_lambda || !have_abar || !have_alpha || !have_emax)
    throw UsageError("--task needs lambda=, abar=, alpha=, emax=");
  task.validate();
  return task;
}

llrl::GaussianPolicy load_policy(const std::string& path, double default_sigma) {
  llrl::GaussianPolicy policy;
  policy.sigma = default_sigma;
  if (path.empty()) return policy;
  std::ifstream in(path);
  if (!in) throw std::runtime_error("policy: cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(std::string("policy: malformed JSON: ") + e.what());
  }
  const auto theta = j.find("theta");
  if (theta == j.end() || !theta->is_array() ||
      theta->size() != static_cast<std::size_t>(llrl::kFeatureDim))
    throw std::runtime_error("policy: 'theta' must be an array of " +
                             std::to_string(llrl::kFeatureDim) + " numbers");
  for (int i = 0; i < llrl::kFeatureDim; ++i)
    policy.theta(i) = (*theta)[static_cast<std::size_t>(i)].get<double>();
  if (j.contains("sigma")) policy.sigma = j["sigma"].get<double>();
  if (!(policy.sigma > 0.0)) throw std::runtime_error("policy: sigma must be > 0");
  return policy;
}

int cmd_train(const std::string& config_path, const std::string& out_dir,
              std::optional<std::uint64_t> seed) {
  llrl::ExperimentConfig cfg = load_config(config_path);
  if (seed) cfg.train.seed = *seed;
  const llrl::TrainResult result = llrl::train(cfg.train);
  fs::create_directories(out_dir);
  llrl::write_training_log(result.log, fs::path(out_dir) / "training_log.csv");
  llrl::save_snapshot(result.kb, fs::path(out_dir) / "snapshot.json");
  std::cout << "trained " << result.kb.M << " tasks in " << result.log.size()
            << " visits; wrote " << out_dir << "/snapshot.json and "
            << out_dir << "/training_log.csv\n";
  return 0;
}

int cmd_eval(const std::string& snapshot_path, const std::string& config_path,
             const std::string& out_dir) {
  const llrl::KnowledgeBase kb = llrl::load_snapshot(snapshot_path);
  const llrl::ExperimentConfig cfg = load_config(config_path);
  const llrl::ComparisonReport report = llrl::evaluate_comparison(kb, cfg, out_dir);
  std::cout << "evaluated " << report.n_curve_pairs << " curve pairs; mean jumpstart "
            << fmt_double(report.mean_jumpstart) << "; median speedup "
            << (report.median_speedup ? fmt_double(*report.median_speedup) : "n/a")
            << "; sequential mean gap " << fmt_double(report.sequential_mean_gap)
            << "; wrote " << out_dir << "/curves.csv and " << out_dir
            << "/report.json\n";
  return 0;
}

int cmd_simulate(const std::string& task_spec, int slots, const std::string& policy_path,
                 std::uint64_t seed, double beta) {
  if (slots < 1) throw UsageError("--slots must be >= 1");
  const llrl::Task task = parse_task_spec(task_spec);
  const llrl::GaussianPolicy policy = load_policy(policy_path, 0.1);
  llrl::Rng rng = llrl::make_rng(seed, 0);
  const llrl::Trajectory traj = llrl::rollout(policy, task, slots, rng, beta);
  std::cout << "t,aoi,backlog,eps,reward\n";
  for (std::size_t t = 0; t < traj.steps.size(); ++t) {
    const llrl::StepRecord& rec = traj.steps[t];
    std::cout << t << ',' << rec.obs_aoi << ',' << fmt_double(rec.obs_backlog) << ','
              << fmt_double(rec.action_eps) << ',' << fmt_double(rec.reward) << '\n';
  }
  return 0;
}

int cmd_inspect(const std::string& snapshot_path) {
  const llrl::KnowledgeBase kb = llrl::load_snapshot(snapshot_path);
  std::cout << "M: " << kb.M << "\n"
            << "h: " << kb.h << "\n"
            << "L: " << kb.L.rows() << "x" << kb.L.cols() << "\n"
            << "eta1: " << fmt_double(kb.eta1) << "\n"
            << "eta2: " << fmt_double(kb.eta2) << "\n";
  for (const auto& [id, rec] : kb.registry) {
    int nnz = 0;
    for (Eigen::Index i = 0; i < rec.s.size(); ++i)
      if (rec.s(i) != 0.0) ++nnz;
    std::cout << "task " << id << ": lambda=" << fmt_double(rec.task.lambda)
              << " abar=" << fmt_double(rec.task.abar)
              << " alpha=" << fmt_double(rec.task.alpha)
              << " eps_max=" << fmt_double(rec.task.eps_max)
              << " device=" << rec.device_id << " visits=" << rec.visits
              << " s_nnz=" << nnz << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"UAV-assisted lifelong reinforcement learning for the AoI/energy tradeoff"};
  app.require_subcommand(1);

  std::string config_path, out_dir, snapshot_path, task_spec, policy_path;
  std::uint64_t seed = 0;
  bool seed_given = false;
  int slots = 50;
  double beta = 0.5;

  CLI::App* train = app.add_subcommand("train", "train the knowledge base");
  train->add_option("--config", config_path, "config file (key = value)");
  train->add_option("--out", out_dir, "output directory")->required();
  train->add_option("--seed", seed, "master seed override")->each([&](const std::string&) {
    seed_given = true;
  });

  CLI::App* eval = app.add_subcommand("eval", "compare against the plain PG baseline");
  eval->add_option("--snapshot", snapshot_path, "knowledge-base snapshot")->required();
  eval->add_option("--config", config_path, "config file (key = value)");
  eval->add_option("--out", out_dir, "output directory")->required();

  CLI::App* simulate = app.add_subcommand("simulate", "print per-slot device dynamics");
  simulate->add_option("--task", task_spec, "lambda=<f>,abar=<f>,alpha=<f>,emax=<f>[,avar=<f>]")
      ->required();
  simulate->add_option("--slots", slots, "number of slots");
  simulate->add_option("--policy", policy_path, "policy JSON ({\"theta\": [...], \"sigma\": s})");
  simulate->add_option("--seed", seed, "random seed");
  simulate->add_option("--beta", beta, "AoI/energy weight");

  CLI::App* inspect = app.add_subcommand("inspect", "summarize a snapshot");
  inspect->add_option("--snapshot", snapshot_path, "knowledge-base snapshot")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (train->parsed())
      return cmd_train(config_path, out_dir,
                       seed_given ? std::optional<std::uint64_t>(seed) : std::nullopt);
    if (eval->parsed()) return cmd_eval(snapshot_path, config_path, out_dir);
    if (simulate->parsed()) return cmd_simulate(task_spec, slots, policy_path, seed, beta);
    if (inspect->parsed()) return cmd_inspect(snapshot_path);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
