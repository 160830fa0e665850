#pragma once

#include <memory>

#include "apla/fields.hpp"
#include "apla/norms.hpp"
#include "apla/quadrature.hpp"

// The (p,H)-bubble family
//
//   U[z,l](x) = ( l^{1/(p-1)} K / ( l^{p/(p-1)} + H0^{p/(p-1)}(x-z) ) )^{(n-p)/p},
//   K = n^{1/p} ((n-p)/(p-1))^{(p-1)/p},
//
// its scaling/translation group T_{z,l}, and the energy identities
// int H^p(grad U) = int U^{p*} = S_p^n.

namespace apla {

using NormPtr = std::shared_ptr<const AnisotropicNorm>;

struct Bubble {
  int n = 3;
  double p = 2.0;
  Vec z;
  double lambda = 1.0;
  NormPtr norm;

  double pstar() const { return static_cast<double>(n) * p / (n - p); }
};

/// the constant block n^{1/p} ((n-p)/(p-1))^{(p-1)/p}
double bubble_constant_block(int n, double p);

struct BubbleEval {
  double value = 0;
  Vec gradient;
  bool gradient_defined = false;  // false exactly at the center
};

BubbleEval bubble_eval(const Bubble& b, const Vec& x);

/// radial profile and derivative in rho = H0(x - z)
double bubble_profile(const Bubble& b, double rho);
double bubble_profile_deriv(const Bubble& b, double rho);

/// analytic closure with gradient and Hessian (Hessian singular at the
/// center when p > 2; callers exclude the critical set)
FnPtr bubble_fn(const Bubble& b);

struct TransformParams {
  Vec z;
  double lambda = 1.0;
};

/// (T_{z,l} f)(x) = l^{(n-p)/p} f(l (x - z))
Bubble apply_transform(const TransformParams& t, const Bubble& b);
FnPtr apply_transform(const TransformParams& t, const FnPtr& f, int n, double p);
Field apply_transform(const TransformParams& t, const Field& f, double p);

/// kappa transforms with zero weight: k^(x) = k(l (x - z))
FnPtr apply_transform_kappa(const TransformParams& t, const FnPtr& kappa);

struct BubbleEnergies {
  double grad_energy = 0;  // int H^p(grad U)
  double mass = 0;         // int U^{p*}
  double err = 0;          // combined 1-D quadrature error estimate
  // cross-check on the full-dimensional rule, when one is supplied
  double rule_grad_energy = 0;
  double rule_mass = 0;
  double rule_err = 0;
  bool rule_checked = false;
};

/// Energies via the H0-radial reduction (the bubble integrands are exactly
/// H0-radial); optionally cross-checked against the full-dimensional rule.
BubbleEnergies bubble_energies(const Bubble& b, const QuadratureRule* rule = nullptr);

struct SobolevEstimate {
  double sp = 0;           // (grad energy)^{1/n}
  double sp_quotient = 0;  // grad^{1/p} / mass^{1/p*}
  double rel_gap = 0;
};

SobolevEstimate sobolev_constant(const AnisotropicNorm& norm, double p, int n);

/// Euclidean D^{1,p} energy int |grad U|^p dx of a bubble (angular factor by
/// sphere quadrature; independent of z and lambda)
double bubble_euclidean_grad_energy(const Bubble& b);

/// weak form pairing <J'(u), phi> = int <a(grad u), grad phi> - k u^{p*-1} phi.
/// phi must be a bump closure; the integral runs over its support box.
double weak_residual(const AnalyticFn& u, const AnalyticFn& kappa, const AnalyticFn& phi, double p,
                     const AnisotropicNorm& norm, int box_order = 0);

/// || grad phi ||_{L^p} over the bump support (Euclidean norm of the gradient)
double dirichlet_norm_bump(const AnalyticFn& phi, double p, int box_order = 0);

}  // namespace apla
