#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "apla/norms.hpp"
#include "apla/quadrature.hpp"
#include "apla/stability.hpp"

// Experiment configuration: a versioned JSON document validated up front;
// every lookup error names the offending path.

namespace apla {

using Json = nlohmann::ordered_json;

class ExperimentConfig {
 public:
  static ExperimentConfig load(const std::string& path);
  static ExperimentConfig from_json(Json j);

  const Json& root() const { return root_; }
  uint64_t seed() const;

  // typed lookups with dotted paths ("norm.family"); throw ConfigError
  const Json& at(const std::string& dotted_path) const;
  bool has(const std::string& dotted_path) const;
  double number(const std::string& path) const;
  double number_or(const std::string& path, double fallback) const;
  int integer(const std::string& path) const;
  int integer_or(const std::string& path, int fallback) const;
  std::string text(const std::string& path) const;
  std::string text_or(const std::string& path, const std::string& fallback) const;

  /// norm described by the object at `path` ({"family", "n", "params"})
  NormPtr make_norm(const std::string& path) const;

  /// quadrature rule parameters at `path` for dimension n
  RulePtr make_rule(const std::string& path, int n, uint64_t seed) const;

  /// the (n, p, family) test matrix at `path`
  struct MatrixCell {
    int n;
    double p;
    std::string family;
  };
  std::vector<MatrixCell> matrix(const std::string& path) const;

  SweepConfig sweep(const std::string& path) const;

 private:
  Json root_;
};

}  // namespace apla
