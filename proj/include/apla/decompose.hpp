#pragma once

#include <vector>

#include "apla/bubbles.hpp"
#include "apla/fields.hpp"

// Struwe-style greedy decomposition of a non-negative field into bubbles,
// interaction diagnostics, and the algebraic |sum|^p inequality with the
// recursion-built constant.

namespace apla {

struct FitResult {
  Bubble bubble;
  double residual_grad_energy = 0;  // int H^p(grad(u - U)) at the optimum
  bool converged = true;
  bool degenerate = false;  // no positive mass to fit
  int objective_evals = 0;
};

/// Least gradient-energy fit of a single bubble over (z, log lambda) by
/// coordinate golden-section with deterministic multistarts. The objective
/// is evaluated on the field's own nodes, so the field needs gradients.
FitResult fit_single_bubble(const Field& u, double p, const NormPtr& norm,
                            const Bubble* init = nullptr);

struct DecompositionResult {
  std::vector<Bubble> bubbles;  // extraction order
  std::vector<double> bubble_energies;
  double remainder_grad_energy = 0;
  double input_grad_energy = 0;
  double energy_additivity_gap = 0;
  std::vector<std::vector<double>> interaction_matrix;
  double clipped_negative_mass = 0;
  bool overlap_flag = false;  // negative part of a remainder exceeded 1%
  int detected_k = 0;         // from the energy window
};

DecompositionResult greedy_decompose(const Field& u, int k_max, double p, const NormPtr& norm);

/// max{l1/l2, l2/l1, |z1 - z2|^2/(l1 l2)}
double interaction_quantity(const Bubble& b1, const Bubble& b2);

struct CrossEnergy {
  double value = 0;        // int |grad U1|^{p-1} |grad U2|
  double err = 0;
  double signed_p2 = 0;    // int <grad U1, grad U2>  (p = 2 only)
  double closed_form = 0;  // c_n min{...}^{(n-2)/2} shape (p=2 euclidean)
  bool p2_checked = false;
};

CrossEnergy cross_energy(const Bubble& b1, const Bubble& b2, const QuadratureRule& rule);

struct XiPGap {
  double lhs = 0;
  double rhs_bound = 0;
  double cpk = 0;
};

/// | |sum x_i|^p - sum |x_i|^p | against C_{p,k} sum_{i != j} |x_i|^{p-1}|x_j|
XiPGap xi_p_gap(const std::vector<Vec>& xs, double p);

/// recursion constant: C_{p,2} = max(1 - p(1 - 2^{max(1,p-1)}), 2p+1),
/// C_{p,k+1} = C_{p,k} + (k^{(p-2)+} + 1) C_{p,2}
double xi_p_constant(double p, int k);

/// per-ladder-step int | |g_m + f|^q - |g_m|^q - |f|^q | dx
std::vector<double> brezis_lieb_gap(const FnPtr& f, const std::vector<FnPtr>& g_ladder, double q,
                                    const QuadratureRule& rule);

}  // namespace apla
