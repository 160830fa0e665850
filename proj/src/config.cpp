#include "apla/config.hpp"

#include <fstream>

#include "apla/errors.hpp"

namespace apla {

ExperimentConfig ExperimentConfig::load(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("config", "cannot open config file '" + path + "'");
  Json j;
  try {
    f >> j;
  } catch (const std::exception& e) {
    throw ConfigError("config", "invalid JSON in '" + path + "': " + e.what());
  }
  return from_json(std::move(j));
}

ExperimentConfig ExperimentConfig::from_json(Json j) {
  ExperimentConfig c;
  c.root_ = std::move(j);
  if (!c.root_.contains("schema_version"))
    throw ConfigError("config", "schema_version: missing");
  if (c.root_["schema_version"] != 1)
    throw ConfigError("config", "schema_version: unsupported value");
  return c;
}

uint64_t ExperimentConfig::seed() const {
  if (!root_.contains("seed")) return 0;
  return root_["seed"].get<uint64_t>();
}

const Json& ExperimentConfig::at(const std::string& dotted) const {
  const Json* cur = &root_;
  size_t start = 0;
  while (start <= dotted.size()) {
    const size_t dot = dotted.find('.', start);
    const std::string key = dotted.substr(start, dot == std::string::npos ? dot : dot - start);
    if (!cur->is_object() || !cur->contains(key))
      throw ConfigError("config", dotted + ": missing field '" + key + "'");
    cur = &(*cur)[key];
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  return *cur;
}

bool ExperimentConfig::has(const std::string& dotted) const {
  const Json* cur = &root_;
  size_t start = 0;
  while (start <= dotted.size()) {
    const size_t dot = dotted.find('.', start);
    const std::string key = dotted.substr(start, dot == std::string::npos ? dot : dot - start);
    if (!cur->is_object() || !cur->contains(key)) return false;
    cur = &(*cur)[key];
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  return true;
}

double ExperimentConfig::number(const std::string& path) const {
  const Json& j = at(path);
  if (!j.is_number()) throw ConfigError("config", path + ": expected a number");
  return j.get<double>();
}

double ExperimentConfig::number_or(const std::string& path, double fallback) const {
  return has(path) ? number(path) : fallback;
}

int ExperimentConfig::integer(const std::string& path) const {
  const Json& j = at(path);
  if (!j.is_number_integer()) throw ConfigError("config", path + ": expected an integer");
  return j.get<int>();
}

int ExperimentConfig::integer_or(const std::string& path, int fallback) const {
  return has(path) ? integer(path) : fallback;
}

std::string ExperimentConfig::text(const std::string& path) const {
  const Json& j = at(path);
  if (!j.is_string()) throw ConfigError("config", path + ": expected a string");
  return j.get<std::string>();
}

std::string ExperimentConfig::text_or(const std::string& path,
                                      const std::string& fallback) const {
  return has(path) ? text(path) : fallback;
}

NormPtr ExperimentConfig::make_norm(const std::string& path) const {
  const std::string family = text(path + ".family");
  const int n = integer(path + ".n");
  if (n < 2 || n > kMaxDim)
    throw ConfigError("config", path + ".n: dimension must lie in {2,...,5}");
  if (family == "euclidean")
    return std::make_shared<AnisotropicNorm>(AnisotropicNorm::euclidean(n));
  if (family == "quadratic") {
    Mat M(n);
    if (has(path + ".params.diag")) {
      const Json& d = at(path + ".params.diag");
      if (!d.is_array() || static_cast<int>(d.size()) != n)
        throw ConfigError("config", path + ".params.diag: expected an array of length n");
      for (int i = 0; i < n; ++i) M(i, i) = d[static_cast<size_t>(i)].get<double>();
    } else {
      for (int i = 0; i < n; ++i) M(i, i) = (i == 0) ? 4.0 : 1.0;
    }
    return std::make_shared<AnisotropicNorm>(AnisotropicNorm::quadratic(M));
  }
  if (family == "quartic_blend") {
    const double eps = number_or(path + ".params.eps", 0.1);
    return std::make_shared<AnisotropicNorm>(AnisotropicNorm::quartic_blend(n, eps));
  }
  throw ConfigError("config", path + ".family: unknown family '" + family + "'");
}

RulePtr ExperimentConfig::make_rule(const std::string& path, int n, uint64_t seed) const {
  const std::string kind = text_or(path + ".kind", n <= 3 ? "tensor_mapped" : "low_discrepancy");
  RuleParams params;
  params.order = integer_or(path + ".order", 48);
  params.scale = number_or(path + ".scale", n <= 3 ? 4.0 : 1.0);
  params.count = static_cast<size_t>(integer_or(path + ".count", 200000));
  params.tail_exponent = number_or(path + ".tail_exponent", 2.0);
  if (kind == "tensor_mapped") return build_rule(n, RuleKind::TensorMapped, params, seed);
  if (kind == "low_discrepancy")
    return build_rule(n, RuleKind::LowDiscrepancyImportance, params, seed);
  throw ConfigError("config", path + ".kind: unknown rule kind '" + kind + "'");
}

std::vector<ExperimentConfig::MatrixCell> ExperimentConfig::matrix(
    const std::string& path) const {
  const Json& j = at(path);
  std::vector<MatrixCell> cells;
  for (const auto& nj : j.value("n", Json::array({3, 4})))
    for (const auto& pj : j.value("p", Json::array({1.5, 2.0, 2.5})))
      for (const auto& fj :
           j.value("families", Json::array({"euclidean", "quadratic", "quartic_blend"}))) {
        MatrixCell c{nj.get<int>(), pj.get<double>(), fj.get<std::string>()};
        if (c.p >= c.n) continue;
        cells.push_back(std::move(c));
      }
  return cells;
}

SweepConfig ExperimentConfig::sweep(const std::string& path) const {
  SweepConfig cfg;
  cfg.seed = seed();
  const Json& j = at(path);
  cfg.fit_nodes = static_cast<size_t>(j.value("fit_nodes", 20000));
  if (!j.contains("cells") || !j["cells"].is_array())
    throw ConfigError("config", path + ".cells: expected an array");
  for (const auto& cj : j["cells"]) {
    SweepCell cell;
    cell.family = cj.value("family", std::string("euclidean"));
    cell.quartic_eps = cj.value("quartic_eps", 0.1);
    cell.n = cj.value("n", 3);
    cell.p = cj.value("p", 2.0);
    cell.perturbation = cj.value("perturbation", std::string("bump"));
    if (cj.contains("eps_ladder")) {
      cell.eps_ladder.clear();
      for (const auto& e : cj["eps_ladder"]) cell.eps_ladder.push_back(e.get<double>());
    }
    cell.bump_distance = cj.value("bump_distance", 1.0);
    cell.bump_radius = cj.value("bump_radius", 0.8);
    cell.kappa_width = cj.value("kappa_width", 1.0);
    cell.t_ball = cj.value("t_ball", 0.25);
    if (cell.p <= 1.0 || cell.p >= cell.n)
      throw ConfigError("config", path + ".cells: p must lie in (1, n)");
    cfg.cells.push_back(std::move(cell));
  }
  return cfg;
}

}  // namespace apla
