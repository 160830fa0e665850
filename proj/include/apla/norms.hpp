#pragma once

#include <cstdint>
#include <vector>

#include "apla/smallvec.hpp"

// Anisotropic norm families: the Euclidean norm, quadratic norms
// sqrt(xi^T M xi), and the quartic blend (|xi|^4 + eps*sum xi_i^4)^{1/4}.
// Each family exposes H, grad H and hess H analytically, the dual norm
// H0(x) = sup <x,xi>/H(xi) (closed form where available, constrained
// maximization otherwise), and the stress field a(xi) = H^{p-1} grad H
// together with its Jacobian D^2(H^p/p).

namespace apla {

struct EllipticityEstimate {
  double lambda_H = 0;  // sampled min of (1/2)<D^2(H^2) eta, eta>
  double Lambda_H = 0;  // sampled max
  int sample_count = 0;
};

struct DualSolve {
  double h0 = 0;
  Vec xi;  // maximizer on the unit H-sphere (= grad H0)
  Vec x;   // query point
  int iterations = 0;
  bool converged = false;
};

class AnisotropicNorm {
 public:
  enum class Family { Euclidean, Quadratic, QuarticBlend };

  static AnisotropicNorm euclidean(int n);
  static AnisotropicNorm quadratic(const Mat& M);
  /// eps in [0,1]; admissibility is validated by sampling the ellipticity
  /// bound at construction.
  static AnisotropicNorm quartic_blend(int n, double eps);

  Family family() const { return family_; }
  int dim() const { return n_; }
  double quartic_eps() const { return eps_; }
  const Mat& quadratic_matrix() const { return M_; }
  const Mat& quadratic_inverse() const { return Minv_; }

  double value(const Vec& xi) const;
  Vec grad(const Vec& xi) const;   // 0-homogeneous
  Mat hess(const Vec& xi) const;   // (-1)-homogeneous

  bool has_analytic_dual() const;
  double dual_value(const Vec& x) const;
  Vec dual_grad(const Vec& x) const;
  Mat dual_hess(const Vec& x) const;

  DualSolve dual_solve(const Vec& x) const;  // multistart maximization
  DualSolve dual_solve_from(const Vec& x, const Vec& start, int iter_cap) const;

  /// one solve giving H0 and its gradient together (closed form when available)
  DualSolve dual_solve_fast(const Vec& x) const;
  /// dual Hessian reusing an existing solve
  Mat dual_hess_from_solve(const DualSolve& s) const;

 private:
  Family family_ = Family::Euclidean;
  int n_ = 2;
  Mat M_, Minv_;     // Quadratic
  double eps_ = 0;   // QuarticBlend
};

struct NormEval {
  double H = 0;
  Vec grad;
  Mat hess;
  bool derivatives_defined = false;
};

struct DualEval {
  double H0 = 0;
  Vec grad;
  bool grad_defined = false;
};

NormEval eval_norm_with_derivatives(const AnisotropicNorm& h, const Vec& xi);
DualEval dual_norm(const AnisotropicNorm& h, const Vec& x);

/// a(xi) = H^{p-1}(xi) grad H(xi), a(0) = 0; (p-1)-homogeneous
Vec stress(const AnisotropicNorm& h, double p, const Vec& xi);

/// D^2 V(xi) with V = H^p/p; symmetric, requires xi != 0
Mat stress_jacobian(const AnisotropicNorm& h, double p, const Vec& xi);

EllipticityEstimate ellipticity_constants(const AnisotropicNorm& h, int samples, uint64_t seed);

/// c_{p,H} = (1-rho)^2/(1+rho^2), rho = (lambda/Lambda)(p-1)^{sgn(2-p)}
double cph_constant(double p, const EllipticityEstimate& est);

}  // namespace apla
