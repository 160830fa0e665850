#pragma once

#include <cstdint>
#include <optional>

#include "apla/fields.hpp"
#include "apla/functionals.hpp"
#include "apla/norms.hpp"
#include "apla/quadrature.hpp"

// The v-transform v = u^{-p/(n-p)}, the P-function
//
//   P = n (p-1)/p v^{-1} H^p(grad v) + (p/(n-p))^{p-1} v^{-1},
//
// the remainder R = (p/(n-p))^{p-1} (kappa - 1)/v, the stress Jacobian field
// W = A(grad v) D2v with traceless part, and numerical checks of the
// differential identity, the integral identity and the integral inequality
// built on them.

namespace apla {

struct FramePoint {
  bool valid = false;  // false inside the critical-set proxy
  double v = 0;
  Vec grad_v;
  Mat hess_v;
  Mat A;      // stress jacobian at grad v
  Mat W;      // A * D2v
  Mat Wring;  // traceless part
  double trW = 0;
  double P = 0;
  Vec grad_P;
  double R = 0;
  Vec grad_R;
  Vec stress_v;  // a(grad v)
};

class PFrame {
 public:
  PFrame(FnPtr u, FnPtr kappa, double p, NormPtr norm, RulePtr rule);

  /// pointwise evaluation of every frame quantity
  FramePoint at(const Vec& x) const;

  double P_value(const Vec& x) const;

  const RulePtr& rule() const { return rule_; }
  const NormPtr& norm() const { return norm_; }
  const FnPtr& source_u() const { return u_; }
  const FnPtr& source_kappa() const { return kappa_; }
  double p() const { return p_; }
  int dim() const { return n_; }
  double tau_crit() const { return tau_; }
  size_t excluded_count() const { return excluded_count_; }
  const std::vector<uint8_t>& excluded() const { return excluded_; }

  // per-node samples on the rule
  const std::vector<double>& P_samples() const { return P_; }
  const std::vector<double>& R_samples() const { return R_; }
  const std::vector<double>& trW_samples() const { return trW_; }
  const std::vector<double>& wring_norm_samples() const { return wring_norm_; }

 private:
  FnPtr u_, kappa_;
  double p_;
  int n_;
  NormPtr norm_;
  RulePtr rule_;
  double tau_ = 0;
  size_t excluded_count_ = 0;
  std::vector<uint8_t> excluded_;
  std::vector<double> P_, R_, trW_, wring_norm_;
};

PFrame build_pframe(const FnPtr& u, const FnPtr& kappa, double p, const NormPtr& norm,
                    const RulePtr& rule);

struct GradPCheck {
  double max_rel_fd = 0;     // FD grad P vs (n/v)(Wring^T + R/n Id) grad v
  double max_rel_forms = 0;  // first identity form vs second form
  int points = 0;
};

GradPCheck check_gradP(const PFrame& frame, int max_points = 200);

struct DiffIdentityCheck {
  double max_defect = 0;    // max |lhs-rhs| / (|lhs|+|rhs|+floor)
  double noise_floor = 0;   // FD noise estimate at the worst point
  bool conclusive = true;   // false when the defect is FD-noise dominated
  int points = 0;
};

/// Prop.-style differential identity for a positive C^3 function w and the
/// potential V = H^p/p: div(w^{2-n} A grad P_w) against the expanded bracket
/// with the third-derivative contraction evaluated by finite differences of
/// the stress Jacobian.
DiffIdentityCheck check_diff_identity(const AnalyticFn& w, double p, const AnisotropicNorm& norm,
                                      const std::vector<Vec>& points);

struct IntegralIdentityResult {
  double lhs = 0;   // -int v^{2-n} <A grad P, grad(P^t phi)>
  double mid = 0;   // int div(v^{2-n} A grad P) P^t phi   (FD divergence)
  double rhs = 0;   // expanded bracket
  double gap = 0;   // |lhs - rhs|
  double scale = 0;
};

IntegralIdentityResult check_integral_identity(const PFrame& frame, const AnalyticFn& phi,
                                               double t, int box_order = 0);

struct IntegralInequalityResult {
  double lhs = 0;
  double rhs = 0;
  double margin = 0;  // lhs - rhs, must be >= -tol
  double scale = 0;
  double cph = 0;
  double wring_term = 0;  // n(p-1)(1-c_{p,H}) int v^{1-n}|Wring|^2 P^t phi
};

IntegralInequalityResult check_integral_inequality(const PFrame& frame, const AnalyticFn& phi,
                                                   double t, int box_order = 0);

struct ClassificationStats {
  double sup_wring = 0;  // sup Frobenius norm of Wring over non-excluded nodes
  double rel_sd_P = 0;   // weighted sd(P)/mean(P)
  double max_trW_defect = 0;  // max rel |trW - (P+R)|
};

ClassificationStats classification_stats(const PFrame& frame);

/// ellipticity constants used for c_{p,H}: exact for euclidean/quadratic,
/// densely sampled with a 1% widening for the quartic blend
EllipticityEstimate reference_ellipticity(const AnisotropicNorm& norm);

}  // namespace apla
