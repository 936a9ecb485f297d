#include "llrl/uav.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace llrl {

void TrainConfig::validate() const {
  if (n_devices < 1) throw std::invalid_argument("TrainConfig: n_devices must be >= 1");
  if (n_tasks < 1) throw std::invalid_argument("TrainConfig: n_tasks must be >= 1");
  if (n_traj_per_visit < 1)
    throw std::invalid_argument("TrainConfig: n_traj_per_visit must be >= 1");
  if (T < 1) throw std::invalid_argument("TrainConfig: T must be >= 1");
  if (!(beta >= 0.0 && beta <= 1.0))
    throw std::invalid_argument("TrainConfig: beta must lie in [0,1]");
  if (!(gamma > 0.0 && gamma <= 1.0))
    throw std::invalid_argument("TrainConfig: gamma must lie in (0,1]");
  if (!(lr > 0.0)) throw std::invalid_argument("TrainConfig: lr must be > 0");
  if (!(sigma > 0.0)) throw std::invalid_argument("TrainConfig: sigma must be > 0");
  if (!(clip_norm > 0.0)) throw std::invalid_argument("TrainConfig: clip_norm must be > 0");
  if (!(eta1 > 0.0) || !(eta2 > 0.0))
    throw std::invalid_argument("TrainConfig: eta1, eta2 must be > 0");
  if (h < 1) throw std::invalid_argument("TrainConfig: h must be >= 1");
  if (!(rel_tol > 0.0)) throw std::invalid_argument("TrainConfig: rel_tol must be > 0");
  if (conv_window < 2) throw std::invalid_argument("TrainConfig: conv_window must be >= 2");
  if (!(conv_threshold > 0.0))
    throw std::invalid_argument("TrainConfig: conv_threshold must be > 0");
  if (max_visits_per_task < 1)
    throw std::invalid_argument("TrainConfig: max_visits_per_task must be >= 1");
  ranges.validate();
}

GaussianPolicy random_policy(double sigma, Rng& rng) {
  std::normal_distribution<double> entry(0.0, 0.01);
  GaussianPolicy policy;
  policy.sigma = sigma;
  for (int i = 0; i < kFeatureDim; ++i) policy.theta(i) = entry(rng);
  return policy;
}

bool converged(std::span<const double> history, int window, double rel_threshold) {
  if (window < 2) throw std::invalid_argument("converged: window must be >= 2");
  if (history.size() < static_cast<std::size_t>(window)) return false;
  const auto tail = history.last(static_cast<std::size_t>(window));
  double lo = tail[0], hi = tail[0], sum = 0.0;
  for (double v : tail) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
    sum += v;
  }
  const double mean = sum / static_cast<double>(window);
  return (hi - lo) <= rel_threshold * std::max(1.0, std::abs(mean));
}

VisitUpdate visit_update(const KnowledgeBase& kb0, const Device& device,
                         const TrainConfig& cfg, std::span<const Trajectory> batch,
                         Rng& rng) {
  VisitUpdate out{kb0, device};

  const auto est = discover_task(batch, device.alpha, device.eps_max);
  if (!est) {
    out.aborted = true;
    return out;
  }

  KnowledgeBase& kb = out.kb;
  std::vector<std::pair<int, Task>> known;
  known.reserve(kb.registry.size());
  for (const auto& [id, rec] : kb.registry) known.emplace_back(id, rec.task);
  const auto match = match_task(*est, known, cfg.rel_tol);

  out.is_new_task = !match.has_value();
  int task_id;
  if (match) {
    task_id = *match;
    const TaskRecord& old = kb.registry.at(task_id);
    remove_task_contribution(kb, old.s, old.gamma_mat, old.alpha_vec);
  } else {
    task_id = kb.M;
    kb.M += 1;
  }
  out.task_id = task_id;

  const GradientEstimate grad =
      reinforce_gradient(device.policy, batch, cfg.gamma, device.eps_max, true);
  const GaussianPolicy updated = pg_step(device.policy, grad, cfg.lr, cfg.clip_norm);
  const Eigen::VectorXd alpha_vec = updated.theta;
  const Eigen::MatrixXd gamma_mat = hessian(batch, cfg.sigma, device.eps_max);

  kb.L = reinit_zero_columns(kb.L, rng);
  const Eigen::VectorXd s = lasso_solve(kb.L, alpha_vec, gamma_mat, kb.eta1);
  add_task_contribution(kb, s, gamma_mat, alpha_vec);
  kb.L = update_L(kb);
  out.device.policy = compose_policy(kb.L, s, cfg.sigma);

  TaskRecord rec;
  rec.task = Task{est->lambda_hat, est->abar_hat, 0.0, est->alpha, est->eps_max};
  rec.s = s;
  rec.alpha_vec = alpha_vec;
  rec.gamma_mat = gamma_mat;
  rec.device_id = device.id;
  rec.visits = (match ? kb.registry.at(task_id).visits : 0) + 1;
  kb.registry[task_id] = std::move(rec);
  return out;
}

VisitResult visit(const KnowledgeBase& kb, const Device& device, const TrainConfig& cfg,
                  Rng& rng) {
  Device collecting = device;
  collecting.pending.clear();
  collecting.pending.reserve(static_cast<std::size_t>(cfg.n_traj_per_visit));
  double before = 0.0;
  for (int i = 0; i < cfg.n_traj_per_visit; ++i) {
    collecting.pending.push_back(
        rollout(collecting.policy, collecting.current_task, cfg.T, rng, cfg.beta));
    before += trajectory_return(collecting.pending.back(), cfg.gamma);
  }
  before /= static_cast<double>(cfg.n_traj_per_visit);

  VisitUpdate up = visit_update(kb, collecting, cfg, collecting.pending, rng);
  up.device.pending.clear();

  VisitReport report;
  report.device_id = device.id;
  report.task_id = up.task_id;
  report.is_new_task = up.is_new_task;
  report.aborted = up.aborted;
  report.mean_return_before = before;
  report.mean_return_after =
      up.aborted ? before
                 : estimate_J(up.device.policy, up.device.current_task,
                              cfg.n_traj_per_visit, cfg.T, cfg.gamma, cfg.beta, rng);
  return {std::move(up.kb), std::move(up.device), report};
}

TrainResult train(const TrainConfig& cfg) {
  cfg.validate();

  Rng task_rng = make_rng(cfg.seed, 1);
  std::vector<Task> tasks;
  tasks.reserve(static_cast<std::size_t>(cfg.n_tasks));
  for (int i = 0; i < cfg.n_tasks; ++i) tasks.push_back(generate_task(cfg.ranges, task_rng));

  // Round-robin assignment; a device's next task activates only once the
  // previous one converged.
  std::vector<std::vector<int>> assigned(static_cast<std::size_t>(cfg.n_devices));
  for (int i = 0; i < cfg.n_tasks; ++i)
    assigned[static_cast<std::size_t>(i % cfg.n_devices)].push_back(i);

  Rng init_rng = make_rng(cfg.seed, 2);
  std::vector<Device> devices;
  std::vector<std::size_t> active(static_cast<std::size_t>(cfg.n_devices), 0);
  std::vector<std::vector<double>> history(static_cast<std::size_t>(cfg.n_devices));
  std::vector<int> visits(static_cast<std::size_t>(cfg.n_devices), 0);
  for (int d = 0; d < cfg.n_devices; ++d) {
    Device dev;
    dev.id = d;
    dev.policy = random_policy(cfg.sigma, init_rng);
    const auto& list = assigned[static_cast<std::size_t>(d)];
    dev.current_task = list.empty() ? Task{} : tasks[static_cast<std::size_t>(list[0])];
    dev.alpha = dev.current_task.alpha;
    dev.eps_max = dev.current_task.eps_max;
    devices.push_back(std::move(dev));
  }

  KnowledgeBase kb = KnowledgeBase::init(kFeatureDim, cfg.h, cfg.eta1, cfg.eta2);
  Rng loop_rng = make_rng(cfg.seed, 3);
  std::vector<VisitReport> log;

  for (;;) {
    std::vector<int> eligible;
    for (int d = 0; d < cfg.n_devices; ++d)
      if (active[static_cast<std::size_t>(d)] <
          assigned[static_cast<std::size_t>(d)].size())
        eligible.push_back(d);
    if (eligible.empty()) break;

    std::uniform_int_distribution<std::size_t> pick(0, eligible.size() - 1);
    const auto d = static_cast<std::size_t>(eligible[pick(loop_rng)]);

    VisitResult res = visit(kb, devices[d], cfg, loop_rng);
    kb = std::move(res.kb);
    devices[d] = std::move(res.device);
    res.report.visit_index = static_cast<int>(log.size());
    log.push_back(res.report);

    visits[d] += 1;
    if (!res.report.aborted) history[d].push_back(res.report.mean_return_after);

    if (visits[d] >= cfg.max_visits_per_task ||
        converged(history[d], cfg.conv_window, cfg.conv_threshold)) {
      active[d] += 1;
      history[d].clear();
      visits[d] = 0;
      const auto& list = assigned[d];
      if (active[d] < list.size()) {
        const Task& next = tasks[static_cast<std::size_t>(list[active[d]])];
        devices[d].current_task = next;
        devices[d].alpha = next.alpha;
        devices[d].eps_max = next.eps_max;
        // The device keeps acting with its last pushed policy until the UAV
        // identifies the change.
      }
    }
  }
  return {std::move(kb), std::move(log)};
}

}  // namespace llrl
