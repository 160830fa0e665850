#include "apla/functionals.hpp"

#include <algorithm>
#include <cmath>

#include "apla/errors.hpp"

namespace apla {

double energy_J(const Field& u, double p, const AnisotropicNorm& norm) {
  const int n = u.rule->n;
  const double pstar = static_cast<double>(n) * p / (n - p);
  Field& mu = const_cast<Field&>(u);
  ensure_gradients(mu);
  const size_t N = u.rule->size();
  std::vector<double> vals(N);
  parallel_for(N, [&](size_t b, size_t e) {
    for (size_t i = b; i < e; ++i)
      vals[i] = std::pow(norm.value(u.gradients[i]), p) / p -
                std::pow(std::fabs(u.values[i]), pstar) / pstar;
  });
  return integrate_values(*u.rule, vals).value;
}

Kappa0Result kappa0(const Field& u, const Field& kappa, double p, const AnisotropicNorm& norm) {
  const int n = u.rule->n;
  const double pstar = static_cast<double>(n) * p / (n - p);
  Field& mu = const_cast<Field&>(u);
  ensure_gradients(mu);
  const size_t N = u.rule->size();
  std::vector<double> mass(N), kmass(N), grad(N);
  parallel_for(N, [&](size_t b, size_t e) {
    for (size_t i = b; i < e; ++i) {
      const double up = std::pow(std::fabs(u.values[i]), pstar);
      mass[i] = up;
      kmass[i] = kappa.values[i] * up;
      grad[i] = std::pow(norm.value(u.gradients[i]), p);
    }
  });
  Kappa0Result r;
  r.mass = integrate_values(*u.rule, mass).value;
  if (r.mass <= 0) throw NumericError("zero-mass", "kappa0 undefined for zero-mass field");
  r.primary = integrate_values(*u.rule, kmass).value / r.mass;
  r.secondary = integrate_values(*u.rule, grad).value / r.mass;
  return r;
}

DeficitReport deficit(const Field& u, const Field& kappa, double p, const AnisotropicNorm& norm) {
  const int n = u.rule->n;
  const double pstar = static_cast<double>(n) * p / (n - p);
  const double conj = pstar / (pstar - 1.0);  // (p*)'
  const Kappa0Result k0 = kappa0(u, kappa, p, norm);

  const size_t N = u.rule->size();
  std::vector<double> integrand(N), grad(N);
  parallel_for(N, [&](size_t b, size_t e) {
    for (size_t i = b; i < e; ++i) {
      const double up = std::pow(std::fabs(u.values[i]), pstar);
      integrand[i] = std::pow(std::fabs(kappa.values[i] - k0.primary), conj) * up;
      grad[i] = std::pow(norm.value(u.gradients[i]), p);
    }
  });

  DeficitReport rep;
  rep.kappa0 = k0.primary;
  rep.kappa0_secondary = k0.secondary;
  rep.mass = k0.mass;
  rep.deficit = std::pow(integrate_values(*u.rule, integrand).value, 1.0 / conj);
  rep.grad_energy = integrate_values(*u.rule, grad).value;
  rep.sp_n = std::pow(sobolev_constant(norm, p, n).sp, static_cast<double>(n));
  rep.energy_window_ok =
      rep.grad_energy >= 0.5 * rep.sp_n && rep.grad_energy <= 1.5 * rep.sp_n;
  return rep;
}

namespace {

class InferredKappaFn final : public AnalyticFn {
 public:
  InferredKappaFn(FnPtr u, double p, NormPtr norm, double tau)
      : u_(std::move(u)), p_(p), norm_(std::move(norm)), tau_(tau) {
    const int n = u_->dim();
    pstar_ = static_cast<double>(n) * p_ / (n - p_);
  }

  int dim() const override { return u_->dim(); }

  double value(const Vec& x) const override {
    const Vec g = u_->gradient(x);
    if (norm2(g) < tau_) return 1.0;  // critical-set proxy; zero weight downstream
    const Mat d2 = u_->hessian(x);
    const Mat A = stress_jacobian(*norm_, p_, g);
    double lap = 0;
    for (int i = 0; i < x.n; ++i)
      for (int j = 0; j < x.n; ++j) lap += A(i, j) * d2(i, j);
    return -lap / std::pow(u_->value(x), pstar_ - 1.0);
  }

  Vec gradient(const Vec& x) const override {
    // central difference; third derivatives of u are not exposed
    const double h = 1e-5 * (1.0 + norm2(x));
    Vec g(x.n);
    for (int k = 0; k < x.n; ++k) {
      const Vec e = unit_axis(x.n, k, h);
      g[k] = (value(x + e) - value(x - e)) / (2.0 * h);
    }
    return g;
  }

  std::string id() const override { return "inferred-kappa[" + u_->id() + "]"; }

 private:
  FnPtr u_;
  double p_;
  NormPtr norm_;
  double tau_;
  double pstar_;
};

}  // namespace

FnPtr infer_kappa_fn(const FnPtr& u, double p, const NormPtr& norm, double tau) {
  return std::make_shared<InferredKappaFn>(u, p, norm, tau);
}

InferredKappa infer_kappa(const FnPtr& u, double p, const NormPtr& norm, const RulePtr& rule) {
  InferredKappa out;
  const size_t N = rule->size();

  // critical-set proxy threshold from the sampled gradient magnitudes
  std::vector<double> gmag(N);
  parallel_for(N, [&](size_t b, size_t e) {
    for (size_t i = b; i < e; ++i) gmag[i] = norm2(u->gradient(rule->node(i)));
  });
  std::vector<double> sorted = gmag;
  std::nth_element(sorted.begin(), sorted.begin() + sorted.size() / 2, sorted.end());
  const double tau = 1e-8 * (1.0 + sorted[sorted.size() / 2]);

  out.closure = infer_kappa_fn(u, p, norm, tau);
  out.field.rule = rule;
  out.field.source = out.closure;
  out.field.values.resize(N);
  parallel_for(N, [&](size_t b, size_t e) {
    for (size_t i = b; i < e; ++i) out.field.values[i] = out.closure->value(rule->node(i));
  });
  for (size_t i = 0; i < N; ++i)
    if (gmag[i] < tau) out.excluded_nodes.push_back(i);
  if (out.excluded_nodes.size() * 100 > N)
    throw NumericError("critical-set-too-large",
                       "more than 1% of nodes lie in the critical-set proxy");
  return out;
}

}  // namespace apla
