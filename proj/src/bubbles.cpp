#include "apla/bubbles.hpp"

#include <cmath>

#include "apla/errors.hpp"

namespace apla {

double bubble_constant_block(int n, double p) {
  return std::pow(static_cast<double>(n), 1.0 / p) *
         std::pow((n - p) / (p - 1.0), (p - 1.0) / p);
}

double bubble_profile(const Bubble& b, double rho) {
  const double alpha = b.p / (b.p - 1.0);
  const double beta = (b.n - b.p) / b.p;
  const double K = bubble_constant_block(b.n, b.p);
  const double D = std::pow(b.lambda, alpha) + std::pow(rho, alpha);
  return std::pow(std::pow(b.lambda, 1.0 / (b.p - 1.0)) * K / D, beta);
}

double bubble_profile_deriv(const Bubble& b, double rho) {
  const double alpha = b.p / (b.p - 1.0);
  const double beta = (b.n - b.p) / b.p;
  if (rho == 0.0) return 0.0;  // alpha > 1
  const double D = std::pow(b.lambda, alpha) + std::pow(rho, alpha);
  return bubble_profile(b, rho) * (-beta * alpha * std::pow(rho, alpha - 1.0) / D);
}

BubbleEval bubble_eval(const Bubble& b, const Vec& x) {
  BubbleEval out;
  const Vec d = x - b.z;
  if (norm2(d) == 0.0) {
    out.value = bubble_profile(b, 0.0);
    out.gradient = Vec(b.n);
    out.gradient_defined = false;
    return out;
  }
  const DualSolve s = b.norm->dual_solve_fast(d);
  out.value = bubble_profile(b, s.h0);
  out.gradient = s.xi * bubble_profile_deriv(b, s.h0);
  out.gradient_defined = true;
  return out;
}

namespace {

class BubbleClosureFn final : public AnalyticFn {
 public:
  explicit BubbleClosureFn(Bubble b) : b_(std::move(b)) {}

  int dim() const override { return b_.n; }

  double value(const Vec& x) const override {
    const Vec d = x - b_.z;
    if (norm2(d) == 0.0) return bubble_profile(b_, 0.0);
    return bubble_profile(b_, b_.norm->dual_solve_fast(d).h0);
  }

  Vec gradient(const Vec& x) const override {
    const Vec d = x - b_.z;
    if (norm2(d) == 0.0) return Vec(b_.n);
    const DualSolve sol = b_.norm->dual_solve_fast(d);
    return sol.xi * bubble_profile_deriv(b_, sol.h0);
  }

  Mat hessian(const Vec& x) const override {
    const Vec d = x - b_.z;
    if (norm2(d) == 0.0)
      throw Error("derivative-at-origin", "bubble Hessian requested at the center");
    const DualSolve sol = b_.norm->dual_solve_fast(d);
    const double rho = sol.h0;
    const double alpha = b_.p / (b_.p - 1.0);
    const double beta = (b_.n - b_.p) / b_.p;
    const double D = std::pow(b_.lambda, alpha) + std::pow(rho, alpha);
    const double U = bubble_profile(b_, rho);
    // grad U = U s(rho) grad rho,  s = -alpha beta rho^{alpha-1}/D
    const double s = -alpha * beta * std::pow(rho, alpha - 1.0) / D;
    const double sp = -alpha * beta * std::pow(rho, alpha - 2.0) *
                      ((alpha - 1.0) * D - alpha * std::pow(rho, alpha)) / (D * D);
    const Vec gr = sol.xi;
    const Mat hr = b_.norm->dual_hess_from_solve(sol);
    Mat h = outer(gr, gr) * (U * (s * s + sp));
    h += hr * (U * s);
    return h;
  }

  bool has_hessian() const override { return true; }
  std::string id() const override { return "bubble"; }

  const Bubble& bubble() const { return b_; }

 private:
  Bubble b_;
};

class TransformedFn final : public AnalyticFn {
 public:
  TransformedFn(TransformParams t, FnPtr inner, int n, double p)
      : t_(std::move(t)), inner_(std::move(inner)), n_(n), p_(p),
        scale_(std::pow(t_.lambda, (n - p) / p)) {}

  int dim() const override { return n_; }

  double value(const Vec& x) const override { return scale_ * inner_->value(map(x)); }

  Vec gradient(const Vec& x) const override {
    return inner_->gradient(map(x)) * (scale_ * t_.lambda);
  }

  Mat hessian(const Vec& x) const override {
    return inner_->hessian(map(x)) * (scale_ * t_.lambda * t_.lambda);
  }

  bool has_hessian() const override { return inner_->has_hessian(); }
  std::string id() const override { return "T[" + inner_->id() + "]"; }

 private:
  Vec map(const Vec& x) const { return (x - t_.z) * t_.lambda; }

  TransformParams t_;
  FnPtr inner_;
  int n_;
  double p_;
  double scale_;
};

class KappaTransformedFn final : public AnalyticFn {
 public:
  KappaTransformedFn(TransformParams t, FnPtr inner) : t_(std::move(t)), inner_(std::move(inner)) {}
  int dim() const override { return inner_->dim(); }
  double value(const Vec& x) const override { return inner_->value((x - t_.z) * t_.lambda); }
  Vec gradient(const Vec& x) const override {
    return inner_->gradient((x - t_.z) * t_.lambda) * t_.lambda;
  }
  Mat hessian(const Vec& x) const override {
    return inner_->hessian((x - t_.z) * t_.lambda) * (t_.lambda * t_.lambda);
  }
  bool has_hessian() const override { return inner_->has_hessian(); }
  std::string id() const override { return "Tk[" + inner_->id() + "]"; }

 private:
  TransformParams t_;
  FnPtr inner_;
};

}  // namespace

FnPtr bubble_fn(const Bubble& b) { return std::make_shared<BubbleClosureFn>(b); }

Bubble apply_transform(const TransformParams& t, const Bubble& b) {
  // T_{z,l}(U[z0,l0]) = U[z + z0/l, l0/l]
  Bubble out = b;
  out.z = t.z + b.z * (1.0 / t.lambda);
  out.lambda = b.lambda / t.lambda;
  return out;
}

FnPtr apply_transform(const TransformParams& t, const FnPtr& f, int n, double p) {
  if (const auto* bf = dynamic_cast<const BubbleClosureFn*>(f.get()))
    return bubble_fn(apply_transform(t, bf->bubble()));
  return std::make_shared<TransformedFn>(t, f, n, p);
}

Field apply_transform(const TransformParams& t, const Field& f, double p) {
  if (!f.analytic())
    throw Error("data-field-transform", "cannot transform a data field off its nodes");
  const FnPtr moved = apply_transform(t, f.source, f.rule->n, p);
  return sample_field(f.rule, moved, f.has_gradients());
}

FnPtr apply_transform_kappa(const TransformParams& t, const FnPtr& kappa) {
  return std::make_shared<KappaTransformedFn>(t, kappa);
}

BubbleEnergies bubble_energies(const Bubble& b, const QuadratureRule* rule) {
  BubbleEnergies out;
  const double pstar = b.pstar();
  const double ball = unit_dual_ball_volume(*b.norm);
  const double grad_1d = radial_profile_integral(
      [&](double rho) { return std::pow(std::fabs(bubble_profile_deriv(b, rho)), b.p); }, b.n);
  const double mass_1d = radial_profile_integral(
      [&](double rho) { return std::pow(bubble_profile(b, rho), pstar); }, b.n);
  out.grad_energy = b.n * ball * grad_1d;
  out.mass = b.n * ball * mass_1d;
  out.err = 1e-10 * (std::fabs(out.grad_energy) + std::fabs(out.mass));
  if (rule) {
    const FnPtr fn = bubble_fn(b);
    const auto mass_r = integrate(*rule, [&](const Vec& x) {
      return std::pow(fn->value(x), pstar);
    });
    const auto grad_r = integrate(*rule, [&](const Vec& x) {
      const Vec g = fn->gradient(x);
      return std::pow(b.norm->value(g), b.p);
    });
    out.rule_grad_energy = grad_r.value;
    out.rule_mass = mass_r.value;
    out.rule_err = grad_r.err_estimate + mass_r.err_estimate;
    out.rule_checked = true;
  }
  return out;
}

SobolevEstimate sobolev_constant(const AnisotropicNorm& norm, double p, int n) {
  Bubble b;
  b.n = n;
  b.p = p;
  b.z = Vec(n);
  b.lambda = 1.0;
  b.norm = std::make_shared<AnisotropicNorm>(norm);
  const BubbleEnergies e = bubble_energies(b);
  SobolevEstimate s;
  s.sp = std::pow(e.grad_energy, 1.0 / n);
  s.sp_quotient = std::pow(e.grad_energy, 1.0 / p) / std::pow(e.mass, 1.0 / b.pstar());
  s.rel_gap = std::fabs(s.sp - s.sp_quotient) / s.sp;
  return s;
}

double bubble_euclidean_grad_energy(const Bubble& b) {
  const auto& h = *b.norm;
  return radial_reduce_weighted(
      h,
      [&](double rho) { return std::pow(std::fabs(bubble_profile_deriv(b, rho)), b.p); },
      [&](const Vec& w) { return std::pow(norm2(h.dual_grad(w)), b.p); }, b.n);
}

namespace {

int default_box_order(int n) { return n <= 2 ? 32 : (n == 3 ? 20 : 12); }

}  // namespace

double weak_residual(const AnalyticFn& u, const AnalyticFn& kappa, const AnalyticFn& phi, double p,
                     const AnisotropicNorm& norm, int box_order) {
  const BumpSupport sup = bump_support(phi);
  const int n = u.dim();
  if (box_order == 0) box_order = default_box_order(n);
  const double pstar = static_cast<double>(n) * p / (n - p);
  Vec half(n);
  for (int a = 0; a < n; ++a) half[a] = sup.radius;
  const BoxRule rule = box_rule(sup.center, half, box_order);
  return box_integrate(rule, [&](const Vec& x) {
    const double phiv = phi.value(x);
    const Vec phig = phi.gradient(x);
    const Vec a = stress(norm, p, u.gradient(x));
    return dot(a, phig) - kappa.value(x) * std::pow(u.value(x), pstar - 1.0) * phiv;
  });
}

double dirichlet_norm_bump(const AnalyticFn& phi, double p, int box_order) {
  const BumpSupport sup = bump_support(phi);
  const int n = phi.dim();
  if (box_order == 0) box_order = default_box_order(n);
  Vec half(n);
  for (int a = 0; a < n; ++a) half[a] = sup.radius;
  const BoxRule rule = box_rule(sup.center, half, box_order);
  const double val = box_integrate(rule, [&](const Vec& x) {
    return std::pow(norm2(phi.gradient(x)), p);
  });
  return std::pow(val, 1.0 / p);
}

}  // namespace apla
