#include "apla/stability.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "apla/errors.hpp"
#include "apla/pfunction.hpp"

namespace apla {

DecayCheckResult decay_check(const Field& u, double p, const AnisotropicNorm& norm) {
  (void)norm;
  DecayCheckResult out;
  const int n = u.rule->n;
  const double decay_u = (n - p) / (p - 1.0);
  const double decay_g = (n - 1.0) / (p - 1.0);
  Field& mu = const_cast<Field&>(u);
  ensure_gradients(mu);
  out.c0 = 1e300;
  for (size_t i = 0; i < u.values.size(); ++i) {
    const double r = norm2(u.rule->node(i));
    const double env = u.values[i] * (1.0 + std::pow(r, decay_u));
    if (env < out.c0) {
      out.c0 = env;
      out.worst_node = i;
    }
    out.C0 = std::max(out.C0, env);
    out.C1 = std::max(out.C1, norm2(u.gradients[i]) * (1.0 + std::pow(r, decay_g)));
  }
  out.conforming = out.c0 > 0;
  return out;
}

double proof_lambda_from_pbar(double pbar, int n, double p) {
  return (1.0 / pbar) * std::pow(p / (p - 1.0), p - 1.0) *
         std::pow(static_cast<double>(n), 1.0 / p) *
         std::pow((n - p) / (p - 1.0), -(p - 1.0) * (p - 1.0) / p);
}

double ball_average(int n, const Vec& center, double radius,
                    const std::function<double(const Vec&)>& f) {
  std::vector<double> gx, gw;
  gauss_legendre(16, gx, gw);
  double acc = 0;
  for (int i = 0; i < 16; ++i) {
    const double r = 0.5 * radius * (gx[static_cast<size_t>(i)] + 1.0);
    const double wr = gw[static_cast<size_t>(i)] * 0.5 * radius;
    const double shell =
        sphere_integral(n, [&](const Vec& w) { return f(center + w * r); }, 16);
    acc += wr * std::pow(r, n - 1) * shell;
  }
  const double omega_n = std::pow(M_PI, 0.5 * n) / std::tgamma(0.5 * n + 1.0);
  return acc / (omega_n * std::pow(radius, n));
}

namespace {

// P-function of u at a point (kappa-free part only)
double pointwise_P(const AnalyticFn& u, double p, const AnisotropicNorm& norm, const Vec& x) {
  const int n = u.dim();
  const double gamma = p / (n - p);
  const double uv = u.value(x);
  const Vec gu = u.gradient(x);
  const double v = std::pow(uv, -gamma);
  const Vec gv = gu * (-gamma * std::pow(uv, -gamma - 1.0));
  return n * (p - 1.0) / p * std::pow(norm.value(gv), p) / v +
         std::pow(p / (n - p), p - 1.0) / v;
}

}  // namespace

ProofBubbleResult proof_driven_bubble(const FnPtr& u, double p, const NormPtr& norm,
                                      double t_ball, const RulePtr& rule) {
  if (!(t_ball > 0 && t_ball < 1))
    throw ConfigError("t-ball-range", "t_ball must lie in (0,1)");
  ProofBubbleResult out;
  const int n = rule->n;

  // argmax over nodes
  size_t imax = 0;
  double vmax = -1e300;
  const size_t N = rule->size();
  for (size_t i = 0; i < N; ++i) {
    const double v = u->value(rule->node(i));
    if (v > vmax) {
      vmax = v;
      imax = i;
    }
  }
  Vec x0 = rule->node(imax);

  // Newton ascent on grad u = 0
  out.ascent_converged = false;
  Vec x = x0;
  for (int it = 0; it < 60; ++it) {
    const Vec g = u->gradient(x);
    const Mat h = u->hessian(x);
    double A[kMaxDim * kMaxDim];
    double b[kMaxDim];
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) A[i * n + j] = h(i, j);
      b[i] = -g[i];
    }
    if (!solve_dense(n, A, b)) break;
    Vec step(n);
    for (int i = 0; i < n; ++i) step[i] = b[i];
    if (norm2(step) > 1.0) step *= 1.0 / norm2(step);  // trust clamp
    x += step;
    if (u->value(x) < vmax * 0.5) {
      x = x0;  // diverged; keep the node
      break;
    }
    if (norm2(step) < 1e-12 * (1.0 + norm2(x))) {
      out.ascent_converged = true;
      break;
    }
  }
  out.x0 = x;
  out.pbar = ball_average(
      n, x, t_ball, [&](const Vec& y) { return pointwise_P(*u, p, *norm, y); });
  out.bubble.n = n;
  out.bubble.p = p;
  out.bubble.z = x;
  out.bubble.lambda = proof_lambda_from_pbar(out.pbar, n, p);
  out.bubble.norm = norm;
  return out;
}

// ---- radial solver -------------------------------------------------------

namespace {

struct State {
  double u, s;
};

// Cash-Karp embedded RK45
template <typename F>
bool rk45_step(F&& f, double r, const State& y, double h, State& out, double& err_u) {
  static const double b21 = 1.0 / 5;
  static const double b31 = 3.0 / 40, b32 = 9.0 / 40;
  static const double b41 = 3.0 / 10, b42 = -9.0 / 10, b43 = 6.0 / 5;
  static const double b51 = -11.0 / 54, b52 = 5.0 / 2, b53 = -70.0 / 27, b54 = 35.0 / 27;
  static const double b61 = 1631.0 / 55296, b62 = 175.0 / 512, b63 = 575.0 / 13824,
                      b64 = 44275.0 / 110592, b65 = 253.0 / 4096;
  static const double c1 = 37.0 / 378, c3 = 250.0 / 621, c4 = 125.0 / 594, c6 = 512.0 / 1771;
  static const double d1 = 2825.0 / 27648, d3 = 18575.0 / 48384, d4 = 13525.0 / 55296,
                      d5 = 277.0 / 14336, d6 = 1.0 / 4;

  const State k1 = f(r, y);
  const State k2 = f(r + h * b21, {y.u + h * b21 * k1.u, y.s + h * b21 * k1.s});
  const State k3 = f(r + h * (b31 + b32),
                     {y.u + h * (b31 * k1.u + b32 * k2.u), y.s + h * (b31 * k1.s + b32 * k2.s)});
  const State k4 =
      f(r + h * (b41 + b42 + b43), {y.u + h * (b41 * k1.u + b42 * k2.u + b43 * k3.u),
                                    y.s + h * (b41 * k1.s + b42 * k2.s + b43 * k3.s)});
  const State k5 = f(r + h * (b51 + b52 + b53 + b54),
                     {y.u + h * (b51 * k1.u + b52 * k2.u + b53 * k3.u + b54 * k4.u),
                      y.s + h * (b51 * k1.s + b52 * k2.s + b53 * k3.s + b54 * k4.s)});
  const State k6 =
      f(r + h * (b61 + b62 + b63 + b64 + b65),
        {y.u + h * (b61 * k1.u + b62 * k2.u + b63 * k3.u + b64 * k4.u + b65 * k5.u),
         y.s + h * (b61 * k1.s + b62 * k2.s + b63 * k3.s + b64 * k4.s + b65 * k5.s)});

  out.u = y.u + h * (c1 * k1.u + c3 * k3.u + c4 * k4.u + c6 * k6.u);
  out.s = y.s + h * (c1 * k1.s + c3 * k3.s + c4 * k4.s + c6 * k6.s);
  const double u4 = y.u + h * (d1 * k1.u + d3 * k3.u + d4 * k4.u + d5 * k5.u + d6 * k6.u);
  const double s4 = y.s + h * (d1 * k1.s + d3 * k3.s + d4 * k4.s + d5 * k5.s + d6 * k6.s);
  err_u = std::fabs(out.u - u4) + 1e-3 * std::fabs(out.s - s4);
  return std::isfinite(out.u) && std::isfinite(out.s);
}

double hermite(double r, double r0, double r1, double u0, double u1, double d0, double d1) {
  const double h = r1 - r0;
  const double t = (r - r0) / h;
  const double t2 = t * t, t3 = t2 * t;
  return (2 * t3 - 3 * t2 + 1) * u0 + (t3 - 2 * t2 + t) * h * d0 + (-2 * t3 + 3 * t2) * u1 +
         (t3 - t2) * h * d1;
}

double hermite_deriv(double r, double r0, double r1, double u0, double u1, double d0, double d1) {
  const double h = r1 - r0;
  const double t = (r - r0) / h;
  const double t2 = t * t;
  return ((6 * t2 - 6 * t) * u0 + (3 * t2 - 4 * t + 1) * h * d0 + (-6 * t2 + 6 * t) * u1 +
          (3 * t2 - 2 * t) * h * d1) /
         h;
}

}  // namespace

RadialProfile radial_shoot(double p, int n, const std::function<double(double)>& kappa_radial,
                           double u0, double r_max, int grid_points) {
  (void)grid_points;
  RadialProfile prof;
  prof.n = n;
  prof.p = p;
  prof.r_max = r_max;
  const double pstar = static_cast<double>(n) * p / (n - p);
  const double inv_pm1 = 1.0 / (p - 1.0);

  auto rhs = [&](double r, const State& y) -> State {
    State d;
    const double m = y.s / std::pow(r, n - 1);
    d.u = (m >= 0 ? 1.0 : -1.0) * std::pow(std::fabs(m), inv_pm1);
    d.s = -kappa_radial(r) * std::pow(r, n - 1) * std::pow(std::max(y.u, 0.0), pstar - 1.0);
    return d;
  };

  // series seed: u(r) = u0 - c r^{p/(p-1)}(1 + o(1)), s(r) = -k(0)u0^{p*-1} r^n/n
  const double r0 = 1e-6;
  const double cs = (p - 1.0) / p * std::pow(kappa_radial(0.0) * std::pow(u0, pstar - 1.0) / n,
                                             inv_pm1);
  State y{u0 - cs * std::pow(r0, p * inv_pm1),
          -kappa_radial(0.0) * std::pow(u0, pstar - 1.0) * std::pow(r0, n) / n};

  prof.r.push_back(0.0);
  prof.u.push_back(u0);
  prof.du.push_back(0.0);
  prof.r.push_back(r0);
  prof.u.push_back(y.u);
  prof.du.push_back(rhs(r0, y).u);

  double r = r0, h = 1e-6;
  const double rtol = 3e-12, atol = 1e-14 * u0;
  int steps = 0;
  while (r < r_max && steps < 2000000) {
    ++steps;
    if (r + h > r_max) h = r_max - r;
    State ynew;
    double err;
    if (!rk45_step(rhs, r, y, h, ynew, err)) {
      prof.blow_up = true;
      break;
    }
    const double tol = rtol * std::fabs(y.u) + atol;
    if (err <= tol) {
      r += h;
      y = ynew;
      prof.r.push_back(r);
      prof.u.push_back(y.u);
      prof.du.push_back(rhs(r, y).u);
      if (y.u <= 0) {
        prof.sign_change = true;
        break;
      }
      if (y.u > 10.0 * u0) {
        prof.blow_up = true;
        break;
      }
    }
    const double scale = err > 0 ? 0.9 * std::pow(tol / err, 0.2) : 2.0;
    h *= std::clamp(scale, 0.2, 2.5);
    h = std::min(h, 0.25 * (r + 1e-3));
  }
  prof.r_max = prof.r.back();
  // power-law tail matched at r_max
  prof.tail_coeff = prof.u.back() * std::pow(prof.r_max, (n - p) * inv_pm1);
  return prof;
}

double profile_value(const RadialProfile& prof, double r) {
  if (r >= prof.r_max)
    return prof.tail_coeff * std::pow(r, -(prof.n - prof.p) / (prof.p - 1.0));
  const auto it = std::upper_bound(prof.r.begin(), prof.r.end(), r);
  const size_t i = std::max<size_t>(1, static_cast<size_t>(it - prof.r.begin()));
  const size_t j = std::min(i, prof.r.size() - 1);
  return hermite(r, prof.r[j - 1], prof.r[j], prof.u[j - 1], prof.u[j], prof.du[j - 1],
                 prof.du[j]);
}

double profile_deriv(const RadialProfile& prof, double r) {
  if (r >= prof.r_max) {
    const double d = (prof.n - prof.p) / (prof.p - 1.0);
    return -d * prof.tail_coeff * std::pow(r, -d - 1.0);
  }
  const auto it = std::upper_bound(prof.r.begin(), prof.r.end(), r);
  const size_t i = std::max<size_t>(1, static_cast<size_t>(it - prof.r.begin()));
  const size_t j = std::min(i, prof.r.size() - 1);
  return hermite_deriv(r, prof.r[j - 1], prof.r[j], prof.u[j - 1], prof.u[j], prof.du[j - 1],
                       prof.du[j]);
}

FnPtr radial_profile_fn(const RadialProfile& prof) {
  auto g = [prof](double r) { return profile_value(prof, r); };
  auto dg = [prof](double r) { return profile_deriv(prof, r); };
  auto d2g = [prof](double r) {
    const double h = 1e-6 * (1.0 + r);
    return (profile_deriv(prof, r + h) - profile_deriv(prof, std::max(0.0, r - h))) /
           (r - h >= 0 ? 2.0 * h : h);
  };
  return radial_fn(prof.n, Vec(prof.n), g, dg, d2g, "radial-profile[" + prof.kappa_id + "]");
}

// ---- sweep ----------------------------------------------------------------

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  const size_t n = a.size();
  auto ranks = [](const std::vector<double>& v) {
    std::vector<size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), size_t(0));
    std::sort(idx.begin(), idx.end(), [&](size_t i, size_t j) { return v[i] < v[j]; });
    std::vector<double> r(v.size());
    for (size_t k = 0; k < idx.size(); ++k) r[idx[k]] = static_cast<double>(k);
    return r;
  };
  const auto ra = ranks(a), rb = ranks(b);
  double d2 = 0;
  for (size_t i = 0; i < n; ++i) d2 += (ra[i] - rb[i]) * (ra[i] - rb[i]);
  return 1.0 - 6.0 * d2 / (static_cast<double>(n) * (n * n - 1.0));
}

NormPtr make_family(const std::string& family, int n, double quartic_eps) {
  if (family == "euclidean")
    return std::make_shared<AnisotropicNorm>(AnisotropicNorm::euclidean(n));
  if (family == "quadratic") {
    Mat M(n);
    for (int i = 0; i < n; ++i) M(i, i) = (i == 0) ? 4.0 : 1.0;
    return std::make_shared<AnisotropicNorm>(AnisotropicNorm::quadratic(M));
  }
  if (family == "quartic_blend")
    return std::make_shared<AnisotropicNorm>(AnisotropicNorm::quartic_blend(n, quartic_eps));
  throw ConfigError("norm.family", "unknown family '" + family + "'");
}

namespace {

double sphere_area(int n) { return 2.0 * std::pow(M_PI, 0.5 * n) / std::tgamma(0.5 * n); }

StabilityRecord bump_record(const SweepCell& cell, double eps, const NormPtr& norm,
                            uint64_t seed, size_t fit_nodes) {
  StabilityRecord rec;
  rec.n = cell.n;
  rec.p = cell.p;
  rec.family = cell.family;
  rec.perturbation = "bump";
  rec.eps = eps;

  const int n = cell.n;
  const double p = cell.p;
  const double pstar = static_cast<double>(n) * p / (n - p);

  Bubble base;
  base.n = n;
  base.p = p;
  base.z = Vec(n);
  base.lambda = 1.0;
  base.norm = norm;
  const FnPtr ub = bubble_fn(base);
  Vec bc(n);
  bc[0] = cell.bump_distance;
  const FnPtr bump = bump_fn(bc, cell.bump_radius, 1.0);
  const FnPtr u_raw = linear_combination({{1.0, ub}, {eps, bump}});
  const FnPtr kappa_raw = infer_kappa_fn(u_raw, p, norm);

  // polar rules resolve both the bubble core and the algebraic tails; a
  // coarse companion keeps the fit objective cheap
  RuleParams params;
  params.radial_order = 48;
  params.angular_order = n <= 3 ? 24 : 12;
  params.scale = 1.0;
  const RulePtr rule = build_rule(n, RuleKind::PolarMapped, params, seed);
  RuleParams coarse = params;
  coarse.radial_order = 20;
  coarse.angular_order = n <= 3 ? 10 : 6;
  const RulePtr rule_fit = build_rule(n, RuleKind::PolarMapped, coarse, seed);
  (void)fit_nodes;

  Field uf = sample_field(rule, u_raw, true);
  Field kf = sample_field(rule, kappa_raw, false);

  const DeficitReport raw = deficit(uf, kf, p, *norm);
  rec.kappa0 = raw.kappa0;

  // normalize kappa0 to 1: u -> c u with c = kappa0^{1/(p*-p)}, kappa -> kappa/kappa0
  const double c = std::pow(raw.kappa0, 1.0 / (pstar - p));
  const FnPtr u_n = linear_combination({{c, u_raw}});
  const FnPtr kappa_n = linear_combination({{1.0 / raw.kappa0, kappa_raw}});
  Field unf = sample_field(rule, u_n, true);
  Field knf = sample_field(rule, kappa_n, false);
  const DeficitReport rep = deficit(unf, knf, p, *norm);
  rec.deficit = rep.deficit;
  rec.energy = rep.grad_energy;
  rec.window_ok = rep.energy_window_ok;
  if (!rec.window_ok) {
    rec.skipped = true;
    rec.skip_reason = "energy-window";
    return rec;
  }

  // best-fit bubble (coarse rule) and the euclidean D^{1,p} distance (fine)
  Field uf_fit = sample_field(rule_fit, u_n, true);
  const FitResult fit = fit_single_bubble(uf_fit, p, norm);
  rec.lambda_fit = fit.bubble.lambda;
  const FnPtr fitted = bubble_fn(fit.bubble);
  const size_t N = rule->size();
  std::vector<double> dv(N);
  for (size_t i = 0; i < N; ++i)
    dv[i] = std::pow(norm2(unf.gradients[i] - fitted->gradient(rule->node(i))), p);
  rec.dist = std::pow(integrate_values(*rule, dv).value, 1.0 / p);

  const ProofBubbleResult proof = proof_driven_bubble(u_n, p, norm, cell.t_ball, rule);
  rec.lambda_proof = proof.bubble.lambda;
  const FnPtr proof_fn = bubble_fn(proof.bubble);
  for (size_t i = 0; i < N; ++i)
    dv[i] = std::pow(norm2(unf.gradients[i] - proof_fn->gradient(rule->node(i))), p);
  rec.proof_dist = std::pow(integrate_values(*rule, dv).value, 1.0 / p);
  return rec;
}

StabilityRecord radial_record(const SweepCell& cell, double eps) {
  StabilityRecord rec;
  rec.n = cell.n;
  rec.p = cell.p;
  rec.family = "euclidean";
  rec.perturbation = "radial-kappa";
  rec.eps = eps;

  const int n = cell.n;
  const double p = cell.p;
  const double pstar = static_cast<double>(n) * p / (n - p);
  const double conj = pstar / (pstar - 1.0);
  const double surf = sphere_area(n);
  const double w = cell.kappa_width;

  auto kappa = [eps, w](double r) { return 1.0 + eps * std::exp(-r * r / (w * w)); };
  Bubble ref;
  ref.n = n;
  ref.p = p;
  ref.z = Vec(n);
  ref.lambda = 1.0;
  ref.norm = make_family("euclidean", n);
  const double u0 = bubble_profile(ref, 0.0);

  RadialProfile prof = radial_shoot(p, n, kappa, u0, 60.0);
  if (prof.sign_change || prof.blow_up) {
    rec.skipped = true;
    rec.skip_reason = prof.sign_change ? "sign-change" : "blow-up";
    return rec;
  }

  auto uval = [&](double r) { return profile_value(prof, r); };
  auto uder = [&](double r) { return profile_deriv(prof, r); };

  const double mass = surf * radial_profile_integral(
                                 [&](double r) { return std::pow(uval(r), pstar); }, n);
  const double kmass = surf * radial_profile_integral(
                                  [&](double r) { return kappa(r) * std::pow(uval(r), pstar); },
                                  n);
  const double kappa0_raw = kmass / mass;
  rec.kappa0 = kappa0_raw;

  // normalize: u -> c u, kappa -> kappa/kappa0
  const double c = std::pow(kappa0_raw, 1.0 / (pstar - p));
  auto un = [&](double r) { return c * uval(r); };
  auto dun = [&](double r) { return c * uder(r); };
  auto kn = [&](double r) { return kappa(r) / kappa0_raw; };

  const double mass_n = surf * radial_profile_integral(
                                   [&](double r) { return std::pow(un(r), pstar); }, n);
  const double kmass_n = surf * radial_profile_integral(
                                    [&](double r) { return kn(r) * std::pow(un(r), pstar); }, n);
  const double k0n = kmass_n / mass_n;
  rec.energy = surf * radial_profile_integral(
                          [&](double r) { return std::pow(std::fabs(dun(r)), p); }, n);
  rec.deficit =
      std::pow(surf * radial_profile_integral(
                          [&](double r) {
                            return std::pow(std::fabs(kn(r) - k0n), conj) *
                                   std::pow(un(r), pstar);
                          },
                          n),
               1.0 / conj);

  const double sp_n =
      std::pow(sobolev_constant(*ref.norm, p, n).sp, static_cast<double>(n));
  rec.window_ok = rec.energy >= 0.5 * sp_n && rec.energy <= 1.5 * sp_n;
  if (!rec.window_ok) {
    rec.skipped = true;
    rec.skip_reason = "energy-window";
    return rec;
  }

  // distance to the best bubble over lambda (z = 0 by radial symmetry)
  auto dist_at = [&](double loglam) {
    Bubble b = ref;
    b.lambda = std::exp(loglam);
    const double val = surf * radial_profile_integral(
                                  [&](double r) {
                                    return std::pow(
                                        std::fabs(dun(r) - bubble_profile_deriv(b, r)), p);
                                  },
                                  n);
    return val;
  };
  const double gr = 0.6180339887498949;
  double a = -1.5, b2 = 1.5;
  double x1 = b2 - gr * (b2 - a), x2 = a + gr * (b2 - a);
  double f1 = dist_at(x1), f2 = dist_at(x2);
  for (int i = 0; i < 48; ++i) {
    if (f1 < f2) {
      b2 = x2;
      x2 = x1;
      f2 = f1;
      x1 = b2 - gr * (b2 - a);
      f1 = dist_at(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + gr * (b2 - a);
      f2 = dist_at(x2);
    }
  }
  const double loglam_best = f1 < f2 ? x1 : x2;
  rec.lambda_fit = std::exp(loglam_best);
  rec.dist = std::pow(dist_at(loglam_best), 1.0 / p);

  // proof bubble: x0 = 0, Pbar averaged over B_t(0)
  const double gamma = p / (n - p);
  auto Pfun = [&](double r) {
    const double uu = un(r);
    const double v = std::pow(uu, -gamma);
    const double dv = -gamma * std::pow(uu, -gamma - 1.0) * dun(r);
    return n * (p - 1.0) / p * std::pow(std::fabs(dv), p) / v +
           std::pow(p / (n - p), p - 1.0) / v;
  };
  const double t = cell.t_ball;
  const double pbar =
      n / std::pow(t, n) *
      integrate_1d([&](double r) { return Pfun(r) * std::pow(r, n - 1); }, 0.0, t, 1e-11);
  rec.lambda_proof = proof_lambda_from_pbar(pbar, n, p);
  rec.proof_dist = std::pow(dist_at(std::log(rec.lambda_proof)), 1.0 / p);
  return rec;
}

}  // namespace

SweepResult stability_sweep(const SweepConfig& config) {
  SweepResult out;
  for (const SweepCell& cell : config.cells) {
    std::vector<double> defs, dists;
    for (double eps : cell.eps_ladder) {
      StabilityRecord rec;
      if (cell.perturbation == "radial-kappa") {
        rec = radial_record(cell, eps);
      } else if (cell.perturbation == "bump") {
        const NormPtr norm = make_family(cell.family, cell.n, cell.quartic_eps);
        rec = bump_record(cell, eps, norm, config.seed, config.fit_nodes);
      } else {
        throw ConfigError("perturbation", "unknown perturbation '" + cell.perturbation + "'");
      }
      if (!rec.skipped) {
        defs.push_back(rec.deficit);
        dists.push_back(rec.dist);
      }
      out.records.push_back(std::move(rec));
    }
    LadderStats st;
    if (defs.size() >= 3) {
      std::vector<double> idx(defs.size());
      std::iota(idx.begin(), idx.end(), 0.0);
      st.spearman_deficit = spearman(idx, defs);
      st.spearman_dist = spearman(idx, dists);
      // log-log regression slope
      double sx = 0, sy = 0, sxx = 0, sxy = 0;
      const double m = static_cast<double>(defs.size());
      for (size_t i = 0; i < defs.size(); ++i) {
        const double lx = std::log(defs[i]), ly = std::log(dists[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
      }
      st.theta_hat = (m * sxy - sx * sy) / (m * sxx - sx * sx);
      const double def_ratio = defs.back() / defs.front();
      const double dist_ratio = dists.back() / dists.front();
      st.ratio_bound = dist_ratio / def_ratio;
      st.ratio_ok = dist_ratio <= 10.0 * def_ratio;
    }
    out.ladders.push_back(st);
  }
  return out;
}

}  // namespace apla
