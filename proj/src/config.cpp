#include "llrl/config.hpp"

#include <fstream>
#include <stdexcept>
#include <string>

namespace llrl {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

double to_double(const std::string& key, const std::string& value) {
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(value, &pos);
  } catch (const std::exception&) {
    throw std::runtime_error("config: bad number for key '" + key + "'");
  }
  if (pos != value.size()) throw std::runtime_error("config: bad number for key '" + key + "'");
  return v;
}

int to_int(const std::string& key, const std::string& value) {
  const double v = to_double(key, value);
  const int i = static_cast<int>(v);
  if (static_cast<double>(i) != v)
    throw std::runtime_error("config: key '" + key + "' must be an integer");
  return i;
}

std::uint64_t to_u64(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const unsigned long long v = std::stoull(value, &pos);
    if (pos != value.size()) throw std::invalid_argument("");
    return static_cast<std::uint64_t>(v);
  } catch (const std::exception&) {
    throw std::runtime_error("config: bad unsigned integer for key '" + key + "'");
  }
}

std::vector<std::uint64_t> to_u64_list(const std::string& key, const std::string& value) {
  std::vector<std::uint64_t> out;
  std::size_t start = 0;
  while (start <= value.size()) {
    const auto comma = value.find(',', start);
    const std::string item =
        trim(value.substr(start, comma == std::string::npos ? comma : comma - start));
    if (!item.empty()) out.push_back(to_u64(key, item));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  if (out.empty()) throw std::runtime_error("config: empty list for key '" + key + "'");
  return out;
}

}  // namespace

ExperimentConfig parse_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open " + path.string());

  ExperimentConfig cfg;
  TrainConfig& t = cfg.train;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string stripped = trim(line);
    if (stripped.empty()) continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("config: line " + std::to_string(lineno) +
                               " is not 'key = value'");
    const std::string key = trim(stripped.substr(0, eq));
    const std::string value = trim(stripped.substr(eq + 1));
    if (key.empty() || value.empty())
      throw std::runtime_error("config: line " + std::to_string(lineno) +
                               " is not 'key = value'");

    if (key == "n_devices") t.n_devices = to_int(key, value);
    else if (key == "n_tasks") t.n_tasks = to_int(key, value);
    else if (key == "n_traj_per_visit") t.n_traj_per_visit = to_int(key, value);
    else if (key == "traj_len") t.T = to_int(key, value);
    else if (key == "beta") t.beta = to_double(key, value);
    else if (key == "gamma") t.gamma = to_double(key, value);
    else if (key == "lr") t.lr = to_double(key, value);
    else if (key == "sigma") t.sigma = to_double(key, value);
    else if (key == "clip_norm") t.clip_norm = to_double(key, value);
    else if (key == "eta1") t.eta1 = to_double(key, value);
    else if (key == "eta2") t.eta2 = to_double(key, value);
    else if (key == "h") t.h = to_int(key, value);
    else if (key == "rel_tol") t.rel_tol = to_double(key, value);
    else if (key == "conv_window") t.conv_window = to_int(key, value);
    else if (key == "conv_threshold") t.conv_threshold = to_double(key, value);
    else if (key == "max_visits_per_task") t.max_visits_per_task = to_int(key, value);
    else if (key == "seed") t.seed = to_u64(key, value);
    else if (key == "lambda_min") t.ranges.lambda_min = to_double(key, value);
    else if (key == "lambda_max") t.ranges.lambda_max = to_double(key, value);
    else if (key == "abar_min") t.ranges.abar_min = to_double(key, value);
    else if (key == "abar_max") t.ranges.abar_max = to_double(key, value);
    else if (key == "avar") t.ranges.avar = to_double(key, value);
    else if (key == "alpha") t.ranges.alpha = to_double(key, value);
    else if (key == "eps_max_min") t.ranges.eps_max_min = to_double(key, value);
    else if (key == "eps_max_max") t.ranges.eps_max_max = to_double(key, value);
    else if (key == "n_test_tasks") cfg.n_test_tasks = to_int(key, value);
    else if (key == "n_eval_iterations") cfg.n_eval_iterations = to_int(key, value);
    else if (key == "n_sequential_tasks") cfg.n_sequential_tasks = to_int(key, value);
    else if (key == "seeds") cfg.seeds = to_u64_list(key, value);
    else throw std::runtime_error("config: unknown key '" + key + "'");
  }
  cfg.validate();
  return cfg;
}

}  // namespace llrl
