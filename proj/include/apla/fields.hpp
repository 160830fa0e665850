#pragma once

#include <memory>
#include <string>
#include <vector>

#include "apla/quadrature.hpp"
#include "apla/smallvec.hpp"

// Sampled fields and the analytic closures behind them. A Field carries its
// provenance: fields built from an AnalyticFn can refresh derivatives on
// demand, Data fields cannot.

namespace apla {

class AnalyticFn {
 public:
  virtual ~AnalyticFn() = default;
  virtual int dim() const = 0;
  virtual double value(const Vec& x) const = 0;
  virtual Vec gradient(const Vec& x) const = 0;
  virtual Mat hessian(const Vec& x) const;
  virtual bool has_hessian() const { return false; }
  virtual std::string id() const = 0;
};

using FnPtr = std::shared_ptr<const AnalyticFn>;

struct Field {
  RulePtr rule;
  std::vector<double> values;
  std::vector<Vec> gradients;  // empty when not sampled
  FnPtr source;                // null => Data

  bool analytic() const { return source != nullptr; }
  bool has_gradients() const { return !gradients.empty(); }
};

Field sample_field(const RulePtr& rule, const FnPtr& f, bool want_gradients);
void ensure_gradients(Field& field);

// ---- closures ----------------------------------------------------------------

FnPtr constant_fn(int n, double c);

/// smooth compactly supported bump: amp * exp(1 - 1/(1 - |x-c|^2/r^2)) inside
/// the Euclidean ball |x-c| < r, identically zero outside
FnPtr bump_fn(const Vec& center, double radius, double amplitude);

struct BumpSupport {
  Vec center;
  double radius = 0;
};
/// support box of a bump closure (throws if the id is not a bump)
BumpSupport bump_support(const AnalyticFn& f);

/// c0 + sum_k coeff_k * f_k
FnPtr linear_combination(std::vector<std::pair<double, FnPtr>> terms, double constant = 0.0);

/// radial closure g(|x - z|) with supplied derivatives g, g', g''
FnPtr radial_fn(int n, const Vec& z, std::function<double(double)> g,
                std::function<double(double)> dg, std::function<double(double)> d2g,
                std::string id);

/// u^e by the chain rule (u must stay positive); used for the v-transform
FnPtr power_fn(FnPtr u, double exponent);

}  // namespace apla
