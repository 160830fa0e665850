#pragma once

#include "apla/bubbles.hpp"
#include "apla/fields.hpp"
#include "apla/norms.hpp"
#include "apla/quadrature.hpp"

// Energy functional J(u) = int H^p(grad u)/p - |u|^{p*}/p*, the reference
// constant kappa0, the Sobolev deficit, and the pointwise inverse
// construction kappa(x) = -Lap_p^H u / u^{p*-1}.

namespace apla {

struct DeficitReport {
  double kappa0 = 0;            // int k u^{p*} / int u^{p*}
  double kappa0_secondary = 0;  // int H^p(grad u) / int u^{p*}
  double deficit = 0;           // L^{(p*)'} norm of (k - k0) u^{p*-1}
  double grad_energy = 0;
  double mass = 0;
  double sp_n = 0;  // S_p^n for the energy window
  bool energy_window_ok = false;
};

double energy_J(const Field& u, double p, const AnisotropicNorm& norm);

struct Kappa0Result {
  double primary = 0;    // int k u^{p*} / int u^{p*}
  double secondary = 0;  // int H^p(grad u) / int u^{p*}
  double mass = 0;
};

Kappa0Result kappa0(const Field& u, const Field& kappa, double p, const AnisotropicNorm& norm);

DeficitReport deficit(const Field& u, const Field& kappa, double p, const AnisotropicNorm& norm);

/// Pointwise closure for kappa(x) = -tr(A(grad u) D2u) / u^{p*-1}; points
/// with |grad u| below tau evaluate to 1 (they carry no weight downstream).
/// The closure's gradient is a central difference of the value.
FnPtr infer_kappa_fn(const FnPtr& u, double p, const NormPtr& norm, double tau = 1e-10);

struct InferredKappa {
  Field field;
  std::vector<size_t> excluded_nodes;
  FnPtr closure;
};

/// Sampled inverse construction; throws "critical-set-too-large" when more
/// than 1% of nodes fall in the critical-set proxy.
InferredKappa infer_kappa(const FnPtr& u, double p, const NormPtr& norm, const RulePtr& rule);

}  // namespace apla
