#include "llrl/snapshot.hpp"

#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace llrl {

namespace {

using ordered_json = nlohmann::ordered_json;

ordered_json matrix_to_json(const Eigen::MatrixXd& m) {
  ordered_json j;
  j["rows"] = m.rows();
  j["cols"] = m.cols();
  auto& data = j["data"] = ordered_json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
  return j;
}

[[noreturn]] void bad_field(const std::string& field) {
  throw std::runtime_error("snapshot: bad or missing field '" + field + "'");
}

const ordered_json& get_field(const ordered_json& j, const std::string& field) {
  const auto it = j.find(field);
  if (it == j.end()) bad_field(field);
  return *it;
}

double get_number(const ordered_json& j, const std::string& field) {
  const auto& v = get_field(j, field);
  if (!v.is_number()) bad_field(field);
  return v.get<double>();
}

int get_int(const ordered_json& j, const std::string& field) {
  const auto& v = get_field(j, field);
  if (!v.is_number_integer()) bad_field(field);
  return v.get<int>();
}

int get_int_named(const ordered_json& j, const std::string& key, const std::string& name) {
  const auto it = j.find(key);
  if (it == j.end() || !it->is_number_integer()) bad_field(name);
  return it->get<int>();
}

Eigen::MatrixXd matrix_from_json(const ordered_json& j, const std::string& field) {
  const auto& mj = get_field(j, field);
  if (!mj.is_object()) bad_field(field);
  const int rows = get_int_named(mj, "rows", field + ".rows");
  const int cols = get_int_named(mj, "cols", field + ".cols");
  const auto it = mj.find("data");
  if (it == mj.end() || !it->is_array() ||
      it->size() != static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols))
    bad_field(field + ".data");
  Eigen::MatrixXd m(rows, cols);
  std::size_t k = 0;
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      const auto& v = (*it)[k++];
      if (!v.is_number()) bad_field(field + ".data");
      m(r, c) = v.get<double>();
    }
  return m;
}

Eigen::VectorXd vector_from_json(const ordered_json& j, const std::string& field,
                                 Eigen::Index expect) {
  const auto& vj = get_field(j, field);
  if (!vj.is_array() || vj.size() != static_cast<std::size_t>(expect)) bad_field(field);
  Eigen::VectorXd v(expect);
  for (Eigen::Index i = 0; i < expect; ++i) {
    const auto& e = vj[static_cast<std::size_t>(i)];
    if (!e.is_number()) bad_field(field);
    v(i) = e.get<double>();
  }
  return v;
}

}  // namespace

void save_snapshot(const KnowledgeBase& kb, const std::filesystem::path& path) {
  ordered_json j;
  j["version"] = kSnapshotVersion;
  j["d"] = kb.d;
  j["h"] = kb.h;
  j["M"] = kb.M;
  j["eta1"] = kb.eta1;
  j["eta2"] = kb.eta2;
  j["L"] = matrix_to_json(kb.L);
  j["A"] = matrix_to_json(kb.A);
  auto& bj = j["b"] = ordered_json::array();
  for (Eigen::Index i = 0; i < kb.b.size(); ++i) bj.push_back(kb.b(i));
  auto& reg = j["registry"] = ordered_json::array();
  for (const auto& [id, rec] : kb.registry) {
    ordered_json rj;
    rj["task_id"] = id;
    rj["task"] = {{"lambda", rec.task.lambda},
                  {"abar", rec.task.abar},
                  {"avar", rec.task.avar},
                  {"alpha", rec.task.alpha},
                  {"eps_max", rec.task.eps_max}};
    auto& sj = rj["s"] = ordered_json::array();
    for (Eigen::Index i = 0; i < rec.s.size(); ++i) sj.push_back(rec.s(i));
    auto& aj = rj["alpha_vec"] = ordered_json::array();
    for (Eigen::Index i = 0; i < rec.alpha_vec.size(); ++i) aj.push_back(rec.alpha_vec(i));
    rj["gamma_mat"] = matrix_to_json(rec.gamma_mat);
    rj["device_id"] = rec.device_id;
    rj["visits"] = rec.visits;
    reg.push_back(std::move(rj));
  }

  std::ofstream out(path);
  if (!out) throw std::runtime_error("snapshot: cannot open " + path.string());
  out << j.dump(2) << '\n';
}

KnowledgeBase load_snapshot(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("snapshot: cannot open " + path.string());
  ordered_json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(std::string("snapshot: malformed JSON: ") + e.what());
  }

  if (get_int(j, "version") != kSnapshotVersion)
    throw std::runtime_error("snapshot: unsupported field 'version'");

  const int d = get_int(j, "d");
  const int h = get_int(j, "h");
  if (d < 1 || h < 1) bad_field("d");

  KnowledgeBase kb = KnowledgeBase::init(d, h, get_number(j, "eta1"), get_number(j, "eta2"));
  kb.M = get_int(j, "M");
  if (kb.M < 0) bad_field("M");
  kb.L = matrix_from_json(j, "L");
  if (kb.L.rows() != d || kb.L.cols() != h) bad_field("L");
  kb.A = matrix_from_json(j, "A");
  if (kb.A.rows() != d * h || kb.A.cols() != d * h) bad_field("A");
  kb.b = vector_from_json(j, "b", static_cast<Eigen::Index>(d) * h);

  const auto& reg = get_field(j, "registry");
  if (!reg.is_array()) bad_field("registry");
  for (const auto& rj : reg) {
    const int id = get_int(rj, "task_id");
    TaskRecord rec;
    const auto& tj = get_field(rj, "task");
    rec.task.lambda = get_number(tj, "lambda");
    rec.task.abar = get_number(tj, "abar");
    rec.task.avar = get_number(tj, "avar");
    rec.task.alpha = get_number(tj, "alpha");
    rec.task.eps_max = get_number(tj, "eps_max");
    rec.s = vector_from_json(rj, "s", h);
    rec.alpha_vec = vector_from_json(rj, "alpha_vec", d);
    rec.gamma_mat = matrix_from_json(rj, "gamma_mat");
    if (rec.gamma_mat.rows() != d || rec.gamma_mat.cols() != d) bad_field("gamma_mat");
    rec.device_id = get_int(rj, "device_id");
    rec.visits = get_int(rj, "visits");
    if (!kb.registry.emplace(id, std::move(rec)).second) bad_field("task_id");
  }
  return kb;
}

}  // namespace llrl
