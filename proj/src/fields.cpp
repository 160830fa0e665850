#include "apla/fields.hpp"

#include <cmath>

#include "apla/errors.hpp"

namespace apla {

Mat AnalyticFn::hessian(const Vec&) const {
  throw Error("no-hessian", "closure '" + id() + "' does not provide a Hessian");
}

Field sample_field(const RulePtr& rule, const FnPtr& f, bool want_gradients) {
  Field field;
  field.rule = rule;
  field.source = f;
  const size_t N = rule->size();
  field.values.resize(N);
  if (want_gradients) field.gradients.resize(N);
  parallel_for(N, [&](size_t b, size_t e) {
    for (size_t i = b; i < e; ++i) {
      const Vec x = rule->node(i);
      field.values[i] = f->value(x);
      if (want_gradients) field.gradients[i] = f->gradient(x);
    }
  });
  return field;
}

void ensure_gradients(Field& field) {
  if (field.has_gradients()) return;
  if (!field.analytic())
    throw Error("data-field-derivatives", "cannot refresh gradients of a data field");
  const size_t N = field.rule->size();
  field.gradients.resize(N);
  parallel_for(N, [&](size_t b, size_t e) {
    for (size_t i = b; i < e; ++i) field.gradients[i] = field.source->gradient(field.rule->node(i));
  });
}

// ---- constant -----------------------------------------------------------------

namespace {

class ConstantFn final : public AnalyticFn {
 public:
  ConstantFn(int n, double c) : n_(n), c_(c) {}
  int dim() const override { return n_; }
  double value(const Vec&) const override { return c_; }
  Vec gradient(const Vec&) const override { return Vec(n_); }
  Mat hessian(const Vec&) const override { return Mat(n_); }
  bool has_hessian() const override { return true; }
  std::string id() const override { return "const(" + std::to_string(c_) + ")"; }

 private:
  int n_;
  double c_;
};

class BumpFn final : public AnalyticFn {
 public:
  BumpFn(const Vec& center, double radius, double amplitude)
      : c_(center), r_(radius), amp_(amplitude) {}

  int dim() const override { return c_.n; }

  double value(const Vec& x) const override {
    const double s = norm2sq(x - c_) / (r_ * r_);
    if (s >= 1.0 - 1e-8) return 0.0;
    return amp_ * std::exp(1.0 - 1.0 / (1.0 - s));
  }

  Vec gradient(const Vec& x) const override {
    const Vec d = x - c_;
    const double s = norm2sq(d) / (r_ * r_);
    if (s >= 1.0 - 1e-8) return Vec(c_.n);
    const double phi = amp_ * std::exp(1.0 - 1.0 / (1.0 - s));
    const double tp = -1.0 / ((1.0 - s) * (1.0 - s));  // d theta / d s
    return d * (phi * tp * 2.0 / (r_ * r_));
  }

  Mat hessian(const Vec& x) const override {
    const Vec d = x - c_;
    const double s = norm2sq(d) / (r_ * r_);
    if (s >= 1.0 - 1e-8) return Mat(c_.n);
    const double phi = amp_ * std::exp(1.0 - 1.0 / (1.0 - s));
    const double u = 1.0 - s;
    const double tp = -1.0 / (u * u);
    const double tpp = -2.0 / (u * u * u);
    const Vec gs = d * (2.0 / (r_ * r_));
    // D2 phi = phi [ (tp*gs)(tp*gs)^T + tpp gs gs^T + tp D2 s ]
    Mat h = outer(gs, gs) * (phi * (tp * tp + tpp));
    h += identity(c_.n, phi * tp * 2.0 / (r_ * r_));
    return h;
  }

  bool has_hessian() const override { return true; }
  std::string id() const override { return "bump"; }

  Vec center() const { return c_; }
  double radius() const { return r_; }

 private:
  Vec c_;
  double r_, amp_;
};

class LinearComboFn final : public AnalyticFn {
 public:
  LinearComboFn(std::vector<std::pair<double, FnPtr>> terms, double constant)
      : terms_(std::move(terms)), c0_(constant) {}

  int dim() const override { return terms_.front().second->dim(); }

  double value(const Vec& x) const override {
    double v = c0_;
    for (const auto& [a, f] : terms_) v += a * f->value(x);
    return v;
  }

  Vec gradient(const Vec& x) const override {
    Vec g(dim());
    for (const auto& [a, f] : terms_) g += f->gradient(x) * a;
    return g;
  }

  Mat hessian(const Vec& x) const override {
    Mat h(dim());
    for (const auto& [a, f] : terms_) h += f->hessian(x) * a;
    return h;
  }

  bool has_hessian() const override {
    for (const auto& [a, f] : terms_)
      if (!f->has_hessian()) return false;
    return true;
  }

  std::string id() const override {
    std::string s = "combo(";
    for (const auto& [a, f] : terms_) s += f->id() + ",";
    return s + ")";
  }

 private:
  std::vector<std::pair<double, FnPtr>> terms_;
  double c0_;
};

class PowerFn final : public AnalyticFn {
 public:
  PowerFn(FnPtr u, double e) : u_(std::move(u)), e_(e) {}
  int dim() const override { return u_->dim(); }
  double value(const Vec& x) const override { return std::pow(u_->value(x), e_); }
  Vec gradient(const Vec& x) const override {
    return u_->gradient(x) * (e_ * std::pow(u_->value(x), e_ - 1.0));
  }
  Mat hessian(const Vec& x) const override {
    const double uv = u_->value(x);
    const Vec g = u_->gradient(x);
    Mat h = outer(g, g) * (e_ * (e_ - 1.0) * std::pow(uv, e_ - 2.0));
    h += u_->hessian(x) * (e_ * std::pow(uv, e_ - 1.0));
    return h;
  }
  bool has_hessian() const override { return u_->has_hessian(); }
  std::string id() const override {
    return "pow(" + u_->id() + "," + std::to_string(e_) + ")";
  }

 private:
  FnPtr u_;
  double e_;
};

class RadialFn final : public AnalyticFn {
 public:
  RadialFn(int n, const Vec& z, std::function<double(double)> g, std::function<double(double)> dg,
           std::function<double(double)> d2g, std::string id)
      : n_(n), z_(z), g_(std::move(g)), dg_(std::move(dg)), d2g_(std::move(d2g)),
        id_(std::move(id)) {}

  int dim() const override { return n_; }
  double value(const Vec& x) const override { return g_(norm2(x - z_)); }

  Vec gradient(const Vec& x) const override {
    const Vec d = x - z_;
    const double r = norm2(d);
    if (r < 1e-14) return Vec(n_);
    return d * (dg_(r) / r);
  }

  Mat hessian(const Vec& x) const override {
    const Vec d = x - z_;
    const double r = norm2(d);
    if (r < 1e-14) return identity(n_, d2g_(0.0));
    const Vec u = d * (1.0 / r);
    Mat h = outer(u, u) * (d2g_(r) - dg_(r) / r);
    h += identity(n_, dg_(r) / r);
    return h;
  }

  bool has_hessian() const override { return true; }
  std::string id() const override { return id_; }

 private:
  int n_;
  Vec z_;
  std::function<double(double)> g_, dg_, d2g_;
  std::string id_;
};

}  // namespace

FnPtr constant_fn(int n, double c) { return std::make_shared<ConstantFn>(n, c); }

FnPtr bump_fn(const Vec& center, double radius, double amplitude) {
  return std::make_shared<BumpFn>(center, radius, amplitude);
}

BumpSupport bump_support(const AnalyticFn& f) {
  const auto* b = dynamic_cast<const BumpFn*>(&f);
  if (!b) throw Error("not-a-bump", "support query on closure '" + f.id() + "'");
  return BumpSupport{b->center(), b->radius()};
}

FnPtr linear_combination(std::vector<std::pair<double, FnPtr>> terms, double constant) {
  return std::make_shared<LinearComboFn>(std::move(terms), constant);
}

FnPtr radial_fn(int n, const Vec& z, std::function<double(double)> g,
                std::function<double(double)> dg, std::function<double(double)> d2g,
                std::string id) {
  return std::make_shared<RadialFn>(n, z, std::move(g), std::move(dg), std::move(d2g),
                                    std::move(id));
}

FnPtr power_fn(FnPtr u, double exponent) {
  return std::make_shared<PowerFn>(std::move(u), exponent);
}

}  // namespace apla
