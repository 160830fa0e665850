#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "apla/norms.hpp"
#include "apla/smallvec.hpp"

// Deterministic integration over R^n adapted to bubble decay.
//
// Two rule kinds: per-axis Gauss-Legendre composed with x = L*tan(pi t/2)
// (n <= 3), and a randomized-Halton importance rule whose product density has
// heavy tails matched to the integrand decay (n <= 5). Node generation and
// summation order are fixed, so results are bit-reproducible for a given
// (kind, params, seed) on one platform.

namespace apla {

// PolarMapped is internal machinery (radius x sphere product), not part of
// the config surface: per-axis maps resolve either a unit-scale core or a
// slowly decaying radial tail, never both, while the polar split handles the
// bubble geometry (compact features plus algebraic tails) to near machine
// precision.
enum class RuleKind { TensorMapped, LowDiscrepancyImportance, PolarMapped };

struct RuleParams {
  // TensorMapped
  int order = 48;       // Gauss-Legendre points per axis
  double scale = 4.0;   // L in x = L tan(pi t / 2)
  // LowDiscrepancyImportance
  size_t count = 200000;
  double tail_exponent = 2.0;    // per-axis decay exponent of the density
  std::vector<Vec> centers;      // mixture centers; default {origin}
  // PolarMapped
  int radial_order = 64;
  int angular_order = 48;        // sphere product order
  Vec center;                    // polar origin (defaults to 0)
};

struct QuadratureRule {
  int n = 0;
  RuleKind kind = RuleKind::TensorMapped;
  RuleParams params;
  uint64_t seed = 0;

  std::array<std::vector<double>, kMaxDim> axes;  // SoA node coordinates
  std::vector<double> weights;
  double truncation_radius = 0;
  double witness_rel_error = 0;  // a-posteriori error on the witness integral

  // embedded half-order companion for rule-halving error estimates
  std::shared_ptr<const QuadratureRule> half;

  size_t size() const { return weights.size(); }
  Vec node(size_t i) const {
    Vec x(n);
    for (int a = 0; a < n; ++a) x[a] = axes[static_cast<size_t>(a)][i];
    return x;
  }
};

using RulePtr = std::shared_ptr<const QuadratureRule>;

RulePtr build_rule(int n, RuleKind kind, RuleParams params, uint64_t seed);

struct IntegralResult {
  double value = 0;
  double err_estimate = 0;
};

using ScalarFn = std::function<double(const Vec&)>;

/// Integrate a closure; the error estimate comes from rule-halving
/// (TensorMapped) or split-half variance (LowDiscrepancyImportance).
IntegralResult integrate(const QuadratureRule& rule, const ScalarFn& f);

/// Integrate stored per-node samples; error estimated from the rule's
/// witness accuracy.
IntegralResult integrate_values(const QuadratureRule& rule, const std::vector<double>& values);

// ---- radial machinery ------------------------------------------------------

/// adaptive 1-D integral of g(rho) rho^{n-1} over (0, inf); throws
/// "tail-divergence" when doubling segments stop decreasing
double radial_profile_integral(const std::function<double(double)>& g, int n);

/// volume of the unit ball of the dual norm {H0 <= 1}
double unit_dual_ball_volume(const AnisotropicNorm& h);

/// integral over S^{n-1} of f(omega) d sigma
double sphere_integral(int n, const std::function<double(const Vec&)>& f, int order = 48);

struct SphereNode {
  Vec omega;
  double weight;
};

/// product-rule nodes/weights on S^{n-1} (trapezoid in the torus angle,
/// Gauss-Legendre elsewhere)
std::vector<SphereNode> sphere_quadrature(int n, int order);

/// oracle for H0-radial integrands: n |B1^{H0}| * int g(rho) rho^{n-1} drho
double radial_reduce(const AnisotropicNorm& h, const std::function<double(double)>& g, int n);

/// same with a 0-homogeneous angular weight q:
/// int g(H0(x)) q(x/|x|) dx = [int_{S^{n-1}} q(w) H0(w)^{-n} dsigma] *
///                            [int g rho^{n-1} drho]
double radial_reduce_weighted(const AnisotropicNorm& h, const std::function<double(double)>& g,
                              const std::function<double(const Vec&)>& q, int n);

// ---- compact-support tensor rule -------------------------------------------

// Plain tensor Gauss-Legendre on a box, used for integrands supported in a
// known bump. Not exposed through the config surface.
struct BoxRule {
  int n = 0;
  std::array<std::vector<double>, kMaxDim> axes;
  std::vector<double> weights;
  size_t size() const { return weights.size(); }
  Vec node(size_t i) const {
    Vec x(n);
    for (int a = 0; a < n; ++a) x[a] = axes[static_cast<size_t>(a)][i];
    return x;
  }
};

BoxRule box_rule(const Vec& center, const Vec& halfwidth, int order_per_axis);
double box_integrate(const BoxRule& rule, const ScalarFn& f);

// ---- 1-D helpers -----------------------------------------------------------

void gauss_legendre(int m, std::vector<double>& nodes, std::vector<double>& weights);

/// adaptive Gauss-Kronrod 7-15 on [a, b] with a bounded evaluation budget
double integrate_1d(const std::function<double(double)>& f, double a, double b,
                    double rel_tol = 1e-12, double abs_tol = 0.0);

// ---- execution -------------------------------------------------------------

void set_max_threads(int t);
int max_threads();

/// blocks of fixed size dispatched to workers; callers index into
/// preallocated output, so the result does not depend on scheduling
void parallel_for(size_t count, const std::function<void(size_t, size_t)>& body);

}  // namespace apla
