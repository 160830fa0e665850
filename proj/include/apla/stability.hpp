#pragma once

#include <functional>
#include <string>
#include <vector>

#include "apla/bubbles.hpp"
#include "apla/decompose.hpp"
#include "apla/fields.hpp"
#include "apla/functionals.hpp"

// Constructive stability pipeline: decay envelopes, the proof-driven
// approximating bubble (maximum point + averaged P-function), a radial
// shooting solver producing genuine perturbed solutions, and
// deficit-versus-distance sweeps.

namespace apla {

struct DecayCheckResult {
  double c0 = 0;  // tightest lower envelope constant (0 = non-conforming)
  double C0 = 0;
  double C1 = 0;  // gradient envelope
  bool conforming = false;
  size_t worst_node = 0;
};

DecayCheckResult decay_check(const Field& u, double p, const AnisotropicNorm& norm);

/// lambda from the averaged P-function:
/// (1/Pbar) (p/(p-1))^{p-1} n^{1/p} ((n-p)/(p-1))^{-(p-1)^2/p}
double proof_lambda_from_pbar(double pbar, int n, double p);

struct ProofBubbleResult {
  Bubble bubble;
  Vec x0;
  double pbar = 0;
  bool ascent_converged = true;
};

/// maximum point by node argmax + Newton ascent, Pbar averaged over the
/// euclidean ball B_{t_ball}(x0)
ProofBubbleResult proof_driven_bubble(const FnPtr& u, double p, const NormPtr& norm,
                                      double t_ball, const RulePtr& rule);

/// average of a pointwise function over the euclidean ball B_t(c)
double ball_average(int n, const Vec& center, double radius,
                    const std::function<double(const Vec&)>& f);

// ---- radial solver -----------------------------------------------------------

struct RadialProfile {
  int n = 3;
  double p = 2.0;
  std::vector<double> r, u, du;  // accepted solver steps
  double r_max = 0;
  double tail_coeff = 0;  // u ~ tail_coeff r^{-(n-p)/(p-1)} beyond r_max
  bool sign_change = false;
  bool blow_up = false;
  std::string kappa_id;
};

/// shoot (r^{n-1}|u'|^{p-2}u')' = -kappa(r) r^{n-1} u^{p*-1} from u(0) = u0,
/// u'(0) = 0 with the series seed at r = 1e-6 (euclidean norm only)
RadialProfile radial_shoot(double p, int n, const std::function<double(double)>& kappa_radial,
                           double u0, double r_max, int grid_points = 0);

double profile_value(const RadialProfile& prof, double r);
double profile_deriv(const RadialProfile& prof, double r);

/// closure over R^n built from the radial profile (value + gradient; Hessian
/// by differentiating the Hermite interpolant)
FnPtr radial_profile_fn(const RadialProfile& prof);

// ---- sweep -------------------------------------------------------------------

struct StabilityRecord {
  int n = 3;
  double p = 2;
  std::string family;
  std::string perturbation;
  double eps = 0;
  double deficit = 0;
  double dist = 0;        // D^{1,p} distance to the best-fit bubble
  double proof_dist = 0;  // distance to the proof-driven bubble
  double kappa0 = 0;      // before normalization
  double energy = 0;      // int H^p(grad u) after normalization
  bool window_ok = false;
  bool skipped = false;
  std::string skip_reason;
  double lambda_fit = 0;
  double lambda_proof = 0;
};

struct SweepCell {
  std::string family = "euclidean";  // euclidean | quadratic | quartic_blend
  double quartic_eps = 0.1;
  int n = 3;
  double p = 2.0;
  std::string perturbation = "bump";  // bump | radial-kappa
  std::vector<double> eps_ladder{1e-3, 3e-3, 1e-2, 3e-2};
  double bump_distance = 1.0;
  double bump_radius = 0.8;
  double kappa_width = 1.0;
  double t_ball = 0.25;
};

struct SweepConfig {
  std::vector<SweepCell> cells;
  uint64_t seed = 0;
  size_t fit_nodes = 20000;
};

struct LadderStats {
  double spearman_deficit = 0;  // vs ladder index
  double spearman_dist = 0;
  double theta_hat = 0;  // log dist vs log deficit slope
  double ratio_bound = 0;  // dist_k/dist_1 / (def_k/def_1); pass when <= 10
  bool ratio_ok = false;
};

struct SweepResult {
  std::vector<StabilityRecord> records;
  std::vector<LadderStats> ladders;  // one per cell
};

SweepResult stability_sweep(const SweepConfig& config);

double spearman(const std::vector<double>& a, const std::vector<double>& b);

NormPtr make_family(const std::string& family, int n, double quartic_eps = 0.1);

}  // namespace apla
