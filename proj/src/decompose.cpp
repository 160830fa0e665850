#include "apla/decompose.hpp"

#include <algorithm>
#include <cmath>

#include "apla/errors.hpp"

namespace apla {

namespace {

// golden-section minimization on [lo, hi]
template <typename F>
double golden_min(F&& f, double lo, double hi, int iters) {
  const double gr = 0.6180339887498949;
  double a = lo, b = hi;
  double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
  double f1 = f(x1), f2 = f(x2);
  for (int i = 0; i < iters; ++i) {
    if (f1 < f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - gr * (b - a);
      f1 = f(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + gr * (b - a);
      f2 = f(x2);
    }
  }
  return f1 < f2 ? x1 : x2;
}

struct Objective {
  const Field* u;
  double p;
  const NormPtr* norm;
  int n;
  mutable int evals = 0;

  double operator()(const Vec& z, double log_lambda) const {
    ++evals;
    Bubble b;
    b.n = n;
    b.p = p;
    b.z = z;
    b.lambda = std::exp(log_lambda);
    b.norm = *norm;
    const auto& rule = *u->rule;
    const size_t N = rule.size();
    std::vector<double> vals(N);
    parallel_for(N, [&](size_t s, size_t e) {
      for (size_t i = s; i < e; ++i) {
        const Vec x = rule.node(i);
        const Vec d = x - b.z;
        Vec gb(n);
        const double r2 = norm2(d);
        if (r2 > 0) {
          const DualSolve sol = b.norm->dual_solve_fast(d);
          gb = sol.xi * bubble_profile_deriv(b, sol.h0);
        }
        vals[i] = std::pow((*norm)->value(u->gradients[i] - gb), p);
      }
    });
    return integrate_values(rule, vals).value;
  }
};

}  // namespace

FitResult fit_single_bubble(const Field& u, double p, const NormPtr& norm, const Bubble* init) {
  FitResult out;
  const int n = u.rule->n;
  Field& mu = const_cast<Field&>(u);
  ensure_gradients(mu);

  // init from the argmax of u and the peak-height lambda law
  size_t imax = 0;
  double vmax = -1e300;
  for (size_t i = 0; i < u.values.size(); ++i)
    if (u.values[i] > vmax) {
      vmax = u.values[i];
      imax = i;
    }
  if (vmax <= 0) {
    out.degenerate = true;
    out.bubble.n = n;
    out.bubble.p = p;
    out.bubble.z = Vec(n);
    out.bubble.norm = norm;
    return out;
  }
  Vec z0 = u.rule->node(imax);
  // U(z) = (K/lambda)^{(n-p)/p}
  const double K = bubble_constant_block(n, p);
  double loglam0 = std::log(K) - std::log(vmax) * (p / (n - p));
  if (init) {
    z0 = init->z;
    loglam0 = std::log(init->lambda);
  }

  Objective obj{&u, p, &norm, n, 0};

  struct Start {
    Vec z;
    double ll;
  };
  std::vector<Start> starts;
  starts.push_back({z0, loglam0});
  starts.push_back({z0, loglam0 + 0.3});
  starts.push_back({z0, loglam0 - 0.3});
  Vec zp = z0;
  for (int a = 0; a < n; ++a) zp[a] += 0.15;
  starts.push_back({zp, loglam0});
  Vec zm = z0;
  for (int a = 0; a < n; ++a) zm[a] -= 0.15;
  starts.push_back({zm, loglam0});

  Vec best_z = z0;
  double best_ll = loglam0;
  double best_f = 1e300;
  int best_start = -1;

  int start_idx = 0;
  for (const Start& s : starts) {
    Vec z = s.z;
    double ll = s.ll;
    double trust_z = 0.5, trust_l = 0.6;
    double fcur = obj(z, ll);
    for (int pass = 0; pass < 6; ++pass) {
      for (int a = 0; a < n; ++a) {
        const double center = z[a];
        const double got = golden_min(
            [&](double t) {
              Vec zz = z;
              zz[a] = t;
              return obj(zz, ll);
            },
            center - trust_z, center + trust_z, 28);
        z[a] = got;
      }
      ll = golden_min([&](double t) { return obj(z, t); }, ll - trust_l, ll + trust_l, 28);
      trust_z *= 0.35;
      trust_l *= 0.35;
      fcur = obj(z, ll);
    }
    if (fcur < best_f) {  // ties resolve to the earlier start
      best_f = fcur;
      best_z = z;
      best_ll = ll;
      best_start = start_idx;
    }
    ++start_idx;
  }
  (void)best_start;

  out.bubble.n = n;
  out.bubble.p = p;
  out.bubble.z = best_z;
  out.bubble.lambda = std::exp(best_ll);
  out.bubble.norm = norm;
  out.residual_grad_energy = best_f;
  out.objective_evals = obj.evals;
  return out;
}

DecompositionResult greedy_decompose(const Field& u, int k_max, double p, const NormPtr& norm) {
  DecompositionResult out;
  const int n = u.rule->n;
  Field work = u;
  ensure_gradients(work);
  const double pstar = static_cast<double>(n) * p / (n - p);
  const double sp_n = std::pow(sobolev_constant(*norm, p, n).sp, static_cast<double>(n));
  const size_t N = u.rule->size();

  auto grad_energy = [&](const Field& f) {
    std::vector<double> vals(N);
    for (size_t i = 0; i < N; ++i) vals[i] = std::pow(norm->value(f.gradients[i]), p);
    return integrate_values(*f.rule, vals).value;
  };

  out.input_grad_energy = grad_energy(work);
  out.detected_k =
      std::max(1, static_cast<int>(std::floor(out.input_grad_energy / sp_n + 0.5)));

  double remainder = out.input_grad_energy;
  for (int k = 0; k < k_max && remainder >= 0.5 * sp_n; ++k) {
    const FitResult fit = fit_single_bubble(work, p, norm);
    if (fit.degenerate) break;
    out.bubbles.push_back(fit.bubble);
    out.bubble_energies.push_back(sp_n);

    // subtract the fitted bubble from values and gradients
    const FnPtr bf = bubble_fn(fit.bubble);
    double neg_mass = 0, abs_mass = 0;
    for (size_t i = 0; i < N; ++i) {
      const Vec x = u.rule->node(i);
      work.values[i] -= bf->value(x);
      work.gradients[i] -= bf->gradient(x);
      const double m = std::pow(std::fabs(work.values[i]), pstar) * u.rule->weights[i];
      abs_mass += m;
      if (work.values[i] < 0) neg_mass += m;
    }
    work.source = nullptr;  // subtraction makes it a data field
    if (abs_mass > 0 && neg_mass > 0.01 * abs_mass) out.overlap_flag = true;
    // clip the negative part for subsequent positivity-requiring steps
    for (size_t i = 0; i < N; ++i)
      if (work.values[i] < 0) {
        out.clipped_negative_mass +=
            std::pow(-work.values[i], pstar) * u.rule->weights[i];
        work.values[i] = 0;
      }
    remainder = grad_energy(work);
  }
  out.remainder_grad_energy = remainder;
  out.energy_additivity_gap = std::fabs(
      out.input_grad_energy - static_cast<double>(out.bubbles.size()) * sp_n - remainder);

  out.interaction_matrix.assign(out.bubbles.size(),
                                std::vector<double>(out.bubbles.size(), 0.0));
  for (size_t i = 0; i < out.bubbles.size(); ++i)
    for (size_t j = 0; j < out.bubbles.size(); ++j)
      if (i != j)
        out.interaction_matrix[i][j] = interaction_quantity(out.bubbles[i], out.bubbles[j]);
  return out;
}

double interaction_quantity(const Bubble& b1, const Bubble& b2) {
  const double r1 = b1.lambda / b2.lambda;
  const double r2 = b2.lambda / b1.lambda;
  const double d2 = norm2sq(b1.z - b2.z) / (b1.lambda * b2.lambda);
  return std::max({r1, r2, d2});
}

CrossEnergy cross_energy(const Bubble& b1, const Bubble& b2, const QuadratureRule& rule) {
  CrossEnergy out;
  const FnPtr f1 = bubble_fn(b1);
  const FnPtr f2 = bubble_fn(b2);
  const double p = b1.p;
  const auto main = integrate(rule, [&](const Vec& x) {
    return std::pow(norm2(f1->gradient(x)), p - 1.0) * norm2(f2->gradient(x));
  });
  out.value = main.value;
  out.err = main.err_estimate;
  if (std::fabs(p - 2.0) < 1e-12 &&
      b1.norm->family() == AnisotropicNorm::Family::Euclidean) {
    out.p2_checked = true;
    out.signed_p2 =
        integrate(rule, [&](const Vec& x) { return dot(f1->gradient(x), f2->gradient(x)); })
            .value;
    const double shape = std::min(
        {b1.lambda / b2.lambda, b2.lambda / b1.lambda,
         b1.lambda * b2.lambda / std::max(norm2sq(b1.z - b2.z), 1e-300)});
    out.closed_form = std::pow(shape, 0.5 * (b1.n - 2.0));
  }
  return out;
}

double xi_p_constant(double p, int k) {
  const double c2 = std::max(1.0 - p * (1.0 - std::pow(2.0, std::max(1.0, p - 1.0))), 2.0 * p + 1.0);
  double c = c2;
  for (int kk = 2; kk < k; ++kk)
    c += (std::pow(static_cast<double>(kk), std::max(p - 2.0, 0.0)) + 1.0) * c2;
  return c;
}

XiPGap xi_p_gap(const std::vector<Vec>& xs, double p) {
  XiPGap out;
  const int k = static_cast<int>(xs.size());
  if (k == 0) return out;
  out.cpk = xi_p_constant(p, std::max(k, 2));
  Vec sum = xs[0];
  for (int i = 1; i < k; ++i) sum += xs[static_cast<size_t>(i)];
  double sum_norms = 0;
  for (const Vec& x : xs) sum_norms += std::pow(norm2(x), p);
  out.lhs = std::fabs(std::pow(norm2(sum), p) - sum_norms);
  double cross = 0;
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j)
      if (i != j)
        cross += std::pow(norm2(xs[static_cast<size_t>(i)]), p - 1.0) *
                 norm2(xs[static_cast<size_t>(j)]);
  out.rhs_bound = (k >= 2) ? out.cpk * cross : 0.0;
  return out;
}

std::vector<double> brezis_lieb_gap(const FnPtr& f, const std::vector<FnPtr>& g_ladder, double q,
                                    const QuadratureRule& rule) {
  std::vector<double> gaps;
  gaps.reserve(g_ladder.size());
  for (const FnPtr& g : g_ladder) {
    const auto r = integrate(rule, [&](const Vec& x) {
      const double fv = f->value(x);
      const double gv = g->value(x);
      return std::fabs(std::pow(std::fabs(gv + fv), q) - std::pow(std::fabs(gv), q) -
                       std::pow(std::fabs(fv), q));
    });
    gaps.push_back(r.value);
  }
  return gaps;
}

}  // namespace apla
