#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>

#include "apla/config.hpp"
#include "apla/decompose.hpp"
#include "apla/errors.hpp"
#include "apla/functionals.hpp"
#include "apla/kernels.hpp"
#include "apla/pfunction.hpp"
#include "apla/report.hpp"
#include "apla/rng.hpp"
#include "apla/stability.hpp"

using namespace apla;

namespace {

struct CheckSink {
  Json checks = Json::array();
  bool all_pass = true;

  void add(const std::string& name, double lhs, double rhs, double gap, double tolerance,
           bool pass, const Json& params = Json::object()) {
    Json c;
    c["check"] = name;
    c["params"] = params;
    c["lhs"] = lhs;
    c["rhs"] = rhs;
    c["gap"] = gap;
    c["tolerance"] = tolerance;
    c["pass"] = pass;
    checks.push_back(c);
    all_pass = all_pass && pass;
    std::printf("[%s] %s (gap=%.3g tol=%.3g)\n", pass ? "PASS" : "FAIL", name.c_str(), gap,
                tolerance);
  }

  void assert_leq(const std::string& name, double value, double tolerance,
                  const Json& params = Json::object()) {
    add(name, value, tolerance, value, tolerance, value <= tolerance, params);
  }
};

struct Ctx {
  ExperimentConfig cfg = ExperimentConfig::from_json(Json{{"schema_version", 1}});
  std::string out_dir = "out";
  double tol_scale = 1.0;
  uint64_t seed = 0;
};

Json cell_params(int n, double p, const std::string& family) {
  Json j;
  j["n"] = n;
  j["p"] = p;
  j["family"] = family;
  return j;
}

void write_report(const Ctx& ctx, const std::string& name, const CheckSink& sink,
                  const Json& extra = Json::object()) {
  std::filesystem::create_directories(ctx.out_dir);
  Json report;
  report["subcommand"] = name;
  report["seed"] = ctx.seed;
  report["tol_scale"] = ctx.tol_scale;
  report["checks"] = sink.checks;
  report["extra"] = extra;
  report["pass"] = sink.all_pass;
  atomic_write(ctx.out_dir + "/" + name + "_report.json", report.dump(2) + "\n");
}

void write_csv(const Ctx& ctx, const std::string& name, const CsvWriter& csv) {
  std::filesystem::create_directories(ctx.out_dir);
  atomic_write(ctx.out_dir + "/" + name + ".csv", csv.str());
}

Bubble make_bubble(int n, double p, const NormPtr& norm, Vec z, double lambda) {
  Bubble b;
  b.n = n;
  b.p = p;
  b.z = std::move(z);
  b.lambda = lambda;
  b.norm = norm;
  return b;
}

// ---- subcommands -----------------------------------------------------------

int run_verify_norm(const Ctx& ctx) {
  CheckSink sink;
  CsvWriter csv({"family", "n", "max_dual_gap", "max_homogeneity_gap", "max_euler_gap"});
  for (const auto& cell : ctx.cfg.matrix("matrix")) {
    if (cell.p != 2.0) continue;  // dedup over p; the checks are p-independent
    const NormPtr h = make_family(cell.family, cell.n);
    Rng rng(ctx.seed + 17);
    double dual_gap = 0, hom_gap = 0, euler_gap = 0;
    for (int i = 0; i < 1000; ++i) {
      const Vec xi = rng.unit_vec(cell.n) * rng.uniform(0.1, 4.0);
      dual_gap = std::max(dual_gap, std::fabs(h->dual_value(h->grad(xi)) - 1.0));
      const double t = rng.uniform(-2.5, 2.5);
      if (std::fabs(t) > 1e-8)
        hom_gap = std::max(hom_gap, std::fabs(h->value(xi * t) - std::fabs(t) * h->value(xi)) /
                                        (std::fabs(t) * h->value(xi)));
      euler_gap = std::max(euler_gap,
                           std::fabs(dot(h->grad(xi), xi) - h->value(xi)) / h->value(xi));
    }
    sink.assert_leq("dual-identity " + cell.family + " n=" + std::to_string(cell.n), dual_gap,
                    1e-8 * ctx.tol_scale, cell_params(cell.n, cell.p, cell.family));
    sink.assert_leq("homogeneity " + cell.family + " n=" + std::to_string(cell.n), hom_gap,
                    1e-12 * ctx.tol_scale);
    sink.assert_leq("euler " + cell.family + " n=" + std::to_string(cell.n), euler_gap,
                    1e-10 * ctx.tol_scale);
    csv.add_row({cell.family, std::to_string(cell.n), format_double(dual_gap),
                 format_double(hom_gap), format_double(euler_gap)});
  }
  write_csv(ctx, "verify_norm", csv);
  write_report(ctx, "verify_norm", sink);
  return sink.all_pass ? 0 : 1;
}

int run_bubble_energy(const Ctx& ctx) {
  CheckSink sink;
  CsvWriter csv({"n", "p", "family", "grad_energy", "mass", "rel_gap", "transform_rel", "sp"});
  Rng rng(ctx.seed + 23);
  for (const auto& cell : ctx.cfg.matrix("matrix")) {
    const NormPtr h = make_family(cell.family, cell.n);
    const Bubble b = make_bubble(cell.n, cell.p, h, Vec(cell.n), 1.0);
    const BubbleEnergies e = bubble_energies(b);
    const double rel_gap = std::fabs(e.grad_energy - e.mass) / e.mass;

    const TransformParams t{rng.normal_vec(cell.n), std::exp(rng.uniform(-0.7, 0.7))};
    const BubbleEnergies em = bubble_energies(apply_transform(t, b));
    const double trel = std::max(std::fabs(em.grad_energy - e.grad_energy) / e.grad_energy,
                                 std::fabs(em.mass - e.mass) / e.mass);

    const Json params = cell_params(cell.n, cell.p, cell.family);
    sink.assert_leq("energy-identity " + cell.family + " n=" + std::to_string(cell.n) +
                        " p=" + format_double(cell.p),
                    rel_gap, 1e-5 * ctx.tol_scale, params);
    sink.assert_leq("transform-invariance " + cell.family + " n=" + std::to_string(cell.n) +
                        " p=" + format_double(cell.p),
                    trel, 1e-6 * ctx.tol_scale, params);
    csv.add_row({std::to_string(cell.n), format_double(cell.p), cell.family,
                 format_double(e.grad_energy), format_double(e.mass), format_double(rel_gap),
                 format_double(trel), format_double(std::pow(e.grad_energy, 1.0 / cell.n))});
  }
  write_csv(ctx, "bubble_energy", csv);
  write_report(ctx, "bubble_energy", sink);
  return sink.all_pass ? 0 : 1;
}

int run_residual(const Ctx& ctx) {
  CheckSink sink;
  CsvWriter csv({"n", "p", "family", "max_residual_ratio"});
  const int bumps = ctx.cfg.integer_or("residual.bumps", 20);
  for (const auto& cell : ctx.cfg.matrix("matrix")) {
    const NormPtr h = make_family(cell.family, cell.n);
    const Bubble b = make_bubble(cell.n, cell.p, h, Vec(cell.n), 1.0);
    const FnPtr u = bubble_fn(b);
    const FnPtr kappa = constant_fn(cell.n, 1.0);
    Rng rng(ctx.seed + 31);
    double worst = 0;
    for (int i = 0; i < bumps; ++i) {
      const Vec c = rng.unit_vec(cell.n) * rng.uniform(0.8, 2.0);
      const double r = rng.uniform(0.35, 0.6);
      const auto phi = bump_fn(c, r, rng.uniform(0.5, 2.0));
      const double res = weak_residual(*u, *kappa, *phi, cell.p, *h);
      const double scale = dirichlet_norm_bump(*phi, cell.p);
      worst = std::max(worst, std::fabs(res) / scale);
    }
    sink.assert_leq("weak-residual " + cell.family + " n=" + std::to_string(cell.n) +
                        " p=" + format_double(cell.p),
                    worst, 1e-5 * ctx.tol_scale, cell_params(cell.n, cell.p, cell.family));
    csv.add_row({std::to_string(cell.n), format_double(cell.p), cell.family,
                 format_double(worst)});
  }
  write_csv(ctx, "residual", csv);
  write_report(ctx, "residual", sink);
  return sink.all_pass ? 0 : 1;
}

RulePtr frame_rule(const Ctx& ctx, int n) {
  RuleParams params;
  if (n <= 3) {
    params.order = ctx.cfg.integer_or("pfunction.order", 28);
    params.scale = 3.0;
    return build_rule(n, RuleKind::TensorMapped, params, ctx.seed);
  }
  params.count = static_cast<size_t>(ctx.cfg.integer_or("pfunction.count", 30000));
  return build_rule(n, RuleKind::LowDiscrepancyImportance, params, ctx.seed);
}

int run_pfunction(const Ctx& ctx, const std::string& which) {
  CheckSink sink;
  const int n = ctx.cfg.integer_or("pfunction.n", 3);
  const double p = ctx.cfg.number_or("pfunction.p", 2.0);
  const std::string family = ctx.cfg.text_or("pfunction.family", "quadratic");
  const NormPtr h = make_family(family, n);
  const RulePtr rule = frame_rule(ctx, n);
  const Bubble b = make_bubble(n, p, h, Vec(n), 1.0);
  const FnPtr u = bubble_fn(b);
  const FnPtr one = constant_fn(n, 1.0);
  Vec bc(n);
  bc[0] = 1.0;
  const double eps = ctx.cfg.number_or("pfunction.eps", 1e-2);
  const FnPtr pert = linear_combination({{1.0, u}, {eps, bump_fn(bc, 0.8, 1.0)}});

  if (which == "gradp") {
    const PFrame clean = build_pframe(u, one, p, h, rule);
    const GradPCheck g1 = check_gradP(clean);
    sink.assert_leq("gradP bubble", g1.max_rel_fd, 1e-6 * ctx.tol_scale);
    sink.assert_leq("gradP forms agree", g1.max_rel_forms, 1e-10 * ctx.tol_scale);
    const PFrame perturbed = build_pframe(pert, infer_kappa_fn(pert, p, h), p, h, rule);
    const GradPCheck g2 = check_gradP(perturbed);
    sink.assert_leq("gradP perturbed", g2.max_rel_fd, 1e-4 * ctx.tol_scale);
  } else if (which == "diff-identity") {
    Rng rng(ctx.seed + 41);
    std::vector<Vec> pts;
    for (int i = 0; i < 50; ++i) pts.push_back(rng.unit_vec(n) * rng.uniform(0.4, 2.5));
    const FnPtr w = power_fn(u, -p / (n - p));
    const DiffIdentityCheck d = check_diff_identity(*w, p, *h, pts);
    sink.assert_leq("diff-identity " + family, d.max_defect, 1e-3 * ctx.tol_scale);
    const NormPtr e = make_family("euclidean", n);
    const FnPtr we = power_fn(bubble_fn(make_bubble(n, 2.0, e, Vec(n), 1.0)), -2.0 / (n - 2));
    const DiffIdentityCheck de = check_diff_identity(*we, 2.0, *e, pts);
    sink.assert_leq("diff-identity euclidean p=2", de.max_defect, 1e-4 * ctx.tol_scale);
  } else if (which == "integral-identity") {
    const FnPtr phi = bump_fn(bc, 0.8, 1.0);
    const PFrame clean = build_pframe(u, one, p, h, rule);
    const auto r1 = check_integral_identity(clean, *phi, 1.0);
    sink.assert_leq("integral-identity bubble lhs", std::fabs(r1.lhs), 1e-6 * ctx.tol_scale);
    sink.assert_leq("integral-identity bubble rhs", std::fabs(r1.rhs), 1e-6 * ctx.tol_scale);
    const PFrame pf = build_pframe(pert, infer_kappa_fn(pert, p, h), p, h, rule);
    const auto r2 = check_integral_identity(pf, *phi, 1.0);
    sink.assert_leq("integral-identity perturbed", r2.gap, 1e-3 * r2.scale * ctx.tol_scale);
    const auto r0 = check_integral_identity(pf, *phi, 0.0);
    const bool consistent = r0.gap <= 10.0 * std::max(r2.gap, 1e-12 * r2.scale) &&
                            r2.gap <= 10.0 * std::max(r0.gap, 1e-12 * r0.scale);
    sink.add("integral-identity t-consistency", r0.gap, r2.gap, std::fabs(r0.gap - r2.gap),
             0.0, consistent);
  } else if (which == "integral-inequality") {
    const FnPtr phi = bump_fn(bc, 0.8, 1.0);
    const PFrame clean = build_pframe(u, one, p, h, rule);
    const auto r1 = check_integral_inequality(clean, *phi, 1.0);
    sink.add("integral-inequality bubble", r1.lhs, r1.rhs, r1.margin, 1e-8 * ctx.tol_scale,
             r1.margin >= -1e-8 * ctx.tol_scale);
    const PFrame pf = build_pframe(pert, infer_kappa_fn(pert, p, h), p, h, rule);
    for (double t : {1.0, 2.0}) {
      const auto r = check_integral_inequality(pf, *phi, t);
      sink.add("integral-inequality perturbed t=" + format_double(t), r.lhs, r.rhs, r.margin,
               1e-4 * r.scale * ctx.tol_scale, r.margin >= -1e-4 * r.scale * ctx.tol_scale);
    }
  } else {
    throw ConfigError("pfunction-check", "unknown check '" + which + "'");
  }
  write_report(ctx, "pfunction_" + which, sink);
  return sink.all_pass ? 0 : 1;
}

int run_decompose(const Ctx& ctx) {
  CheckSink sink;
  CsvWriter csv({"case", "k", "z_err", "loglam_err", "additivity_gap_rel", "remainder_rel"});
  const int n = ctx.cfg.integer_or("decompose.n", 3);
  const double p = ctx.cfg.number_or("decompose.p", 2.0);
  const NormPtr h = make_family(ctx.cfg.text_or("decompose.family", "euclidean"), n);
  const double sp_n = std::pow(sobolev_constant(*h, p, n).sp, n);

  RuleParams params;
  params.count = static_cast<size_t>(ctx.cfg.integer_or("decompose.nodes", 20000));
  params.tail_exponent = p / (p - 1.0);

  // single bubble: k = 1 and tiny remainder
  {
    const Bubble b = make_bubble(n, p, h, Vec(n), 1.0);
    params.centers = {b.z};
    const RulePtr rule = build_rule(n, RuleKind::LowDiscrepancyImportance, params, ctx.seed);
    Field f = sample_field(rule, bubble_fn(b), true);
    const DecompositionResult d = greedy_decompose(f, 4, p, h);
    sink.add("single-bubble k", 1, d.bubbles.size(), std::fabs(1.0 - d.bubbles.size()), 0.5,
             d.bubbles.size() == 1);
    sink.assert_leq("single-bubble remainder", d.remainder_grad_energy / sp_n,
                    1e-8 * ctx.tol_scale);
    csv.add_row({"single", std::to_string(d.bubbles.size()), "0", "0",
                 format_double(d.energy_additivity_gap / sp_n),
                 format_double(d.remainder_grad_energy / sp_n)});
  }

  // two weakly interacting bubbles with known ground truth
  {
    Vec z2(n);
    z2[0] = ctx.cfg.number_or("decompose.separation", 120.0);
    const Bubble b1 = make_bubble(n, p, h, Vec(n), 1.0);
    const Bubble b2 = make_bubble(n, p, h, z2, 1.0);
    sink.add("interaction-quantity", interaction_quantity(b1, b2), 1e4,
             interaction_quantity(b1, b2), 1e4, interaction_quantity(b1, b2) >= 1e4);
    params.centers = {b1.z, b2.z};
    const RulePtr rule =
        build_rule(n, RuleKind::LowDiscrepancyImportance, params, ctx.seed + 1);
    const FnPtr sum = linear_combination({{1.0, bubble_fn(b1)}, {1.0, bubble_fn(b2)}});
    Field f = sample_field(rule, sum, true);
    const DecompositionResult d = greedy_decompose(f, 4, p, h);
    bool ok_k = d.bubbles.size() == 2;
    double zerr = 1e300, lerr = 1e300;
    if (ok_k) {
      // match fitted bubbles to ground truth by nearest center
      for (const Bubble& truth : {b1, b2}) {
        double best_z = 1e300, best_l = 1e300;
        for (const Bubble& got : d.bubbles) {
          const double dz = norm2(got.z - truth.z);
          if (dz < best_z) {
            best_z = dz;
            best_l = std::fabs(std::log(got.lambda / truth.lambda));
          }
        }
        zerr = std::min(zerr, best_z);
        lerr = std::min(lerr, best_l);
        sink.assert_leq("two-bubble |dz|", best_z, 1e-2 * ctx.tol_scale);
        sink.assert_leq("two-bubble |dlog lambda|", best_l, 1e-2 * ctx.tol_scale);
      }
    } else {
      sink.add("two-bubble k", 2, d.bubbles.size(), 1, 0, false);
    }
    sink.assert_leq("two-bubble additivity gap", d.energy_additivity_gap / sp_n,
                    1e-2 * ctx.tol_scale);
    csv.add_row({"pair", std::to_string(d.bubbles.size()), format_double(zerr),
                 format_double(lerr), format_double(d.energy_additivity_gap / sp_n),
                 format_double(d.remainder_grad_energy / sp_n)});
  }

  // energy-window k detection on synthetic sums
  for (int k = 1; k <= 3; ++k) {
    std::vector<std::pair<double, FnPtr>> terms;
    std::vector<Vec> centers;
    for (int i = 0; i < k; ++i) {
      Vec z(n);
      z[0] = 150.0 * i;
      centers.push_back(z);
      terms.push_back({1.0, bubble_fn(make_bubble(n, p, h, z, 1.0))});
    }
    params.centers = centers;
    const RulePtr rule =
        build_rule(n, RuleKind::LowDiscrepancyImportance, params, ctx.seed + 2);
    Field f = sample_field(rule, linear_combination(terms), true);
    const DecompositionResult d = greedy_decompose(f, 5, p, h);
    sink.add("window-detection k=" + std::to_string(k), k, d.detected_k,
             std::fabs(k - d.detected_k), 0.5, d.detected_k == k);
  }

  write_csv(ctx, "decompose", csv);
  write_report(ctx, "decompose", sink);
  return sink.all_pass ? 0 : 1;
}

int run_interaction(const Ctx& ctx) {
  CheckSink sink;
  CsvWriter csv({"d", "cross_signed", "cross_abs", "ratio_vs_power"});
  const int n = ctx.cfg.integer_or("interaction.n", 4);
  const double p = 2.0;
  const NormPtr h = make_family("euclidean", n);
  RuleParams params;
  params.count = static_cast<size_t>(ctx.cfg.integer_or("interaction.nodes", 200000));
  params.tail_exponent = 2.0;

  std::vector<double> seps{5.0, 10.0, 20.0};
  std::vector<double> values;
  for (double d : seps) {
    Vec z2(n);
    z2[0] = d;
    const Bubble b1 = make_bubble(n, p, h, Vec(n), 1.0);
    const Bubble b2 = make_bubble(n, p, h, z2, 1.0);
    params.centers = {b1.z, b2.z};
    const RulePtr rule = build_rule(n, RuleKind::LowDiscrepancyImportance, params, ctx.seed);
    const CrossEnergy ce = cross_energy(b1, b2, *rule);
    values.push_back(ce.signed_p2);
    csv.add_row({format_double(d), format_double(ce.signed_p2), format_double(ce.value),
                 format_double(ce.signed_p2 / ce.closed_form)});
  }
  for (size_t i = 0; i + 1 < seps.size(); ++i) {
    const double expect = std::pow(seps[i] / seps[i + 1], static_cast<double>(n - 2));
    const double got = values[i + 1] / values[i];
    sink.assert_leq("interaction-scaling d=" + format_double(seps[i]) + "->" +
                        format_double(seps[i + 1]),
                    std::fabs(got / expect - 1.0), 0.10 * ctx.tol_scale);
  }

  // cross energy vanishes along the lambda ladder
  double prev = 1e300;
  for (double lam : {10.0, 100.0, 1000.0}) {
    const Bubble b1 = make_bubble(n, p, h, Vec(n), 1.0);
    const Bubble b2 = make_bubble(n, p, h, Vec(n), lam);
    params.centers = {Vec(n)};
    const RulePtr rule = build_rule(n, RuleKind::LowDiscrepancyImportance, params, ctx.seed);
    const CrossEnergy ce = cross_energy(b1, b2, *rule);
    sink.add("cross-energy ladder lambda=" + format_double(lam), ce.value, prev, ce.value,
             prev, ce.value < prev);
    prev = ce.value;
  }
  write_csv(ctx, "interaction", csv);
  write_report(ctx, "interaction", sink);
  return sink.all_pass ? 0 : 1;
}

int run_xi_p(const Ctx& ctx, int draws_override) {
  CheckSink sink;
  const int draws = draws_override > 0 ? draws_override
                                       : ctx.cfg.integer_or("xi_p.draws", 100000);
  Rng rng(ctx.seed + 53);
  int violations = 0;
  double max_ratio = 0;
  for (int i = 0; i < draws; ++i) {
    const double p = std::vector<double>{1.3, 2.0, 3.7}[rng.uniform_int(0, 2)];
    const int k = rng.uniform_int(1, 5);
    const int dim = rng.uniform_int(1, 4);
    std::vector<Vec> xs;
    for (int j = 0; j < k; ++j) {
      Vec x(dim);
      const double scale = std::pow(10.0, rng.uniform(-3, 3));
      for (int a = 0; a < dim; ++a) x[a] = rng.normal() * scale;
      xs.push_back(x);
    }
    const XiPGap g = xi_p_gap(xs, p);
    if (g.lhs > g.rhs_bound * (1.0 + 1e-12) + 1e-300) ++violations;
    if (g.rhs_bound > 0) max_ratio = std::max(max_ratio, g.lhs / g.rhs_bound);
  }
  sink.add("xi-p violations", violations, 0, violations, 0, violations == 0);
  sink.add("xi-p max slack ratio", max_ratio, 1.0, max_ratio, 1.0, max_ratio < 1.0);
  Json extra;
  extra["draws"] = draws;
  extra["max_ratio"] = max_ratio;
  write_report(ctx, "xi_p", sink, extra);
  return sink.all_pass ? 0 : 1;
}

int run_brezis_lieb(const Ctx& ctx) {
  CheckSink sink;
  const int n = ctx.cfg.integer_or("brezis_lieb.n", 3);
  const double p = ctx.cfg.number_or("brezis_lieb.p", 2.0);
  const NormPtr h = make_family("euclidean", n);
  const double q = static_cast<double>(n) * p / (n - p);
  RuleParams params;
  params.order = 48;
  params.scale = 4.0;
  const RulePtr rule = build_rule(n, RuleKind::TensorMapped, params, ctx.seed);

  const FnPtr f = bump_fn(Vec(n), 1.5, 1.0);
  std::vector<FnPtr> ladder;
  for (double m : {5.0, 10.0, 20.0}) {
    Vec z(n);
    z[0] = m;
    ladder.push_back(bubble_fn(make_bubble(n, p, h, z, 1.0)));
  }
  const auto gaps = brezis_lieb_gap(f, ladder, q, *rule);
  const double fmass =
      integrate(*rule, [&](const Vec& x) { return std::pow(std::fabs(f->value(x)), q); }).value;
  for (size_t i = 0; i + 1 < gaps.size(); ++i)
    sink.add("brezis-lieb decreasing step " + std::to_string(i), gaps[i + 1], gaps[i],
             gaps[i + 1], gaps[i], gaps[i + 1] < gaps[i]);
  sink.assert_leq("brezis-lieb final gap", gaps.back(), 1e-3 * fmass * ctx.tol_scale);

  const auto zero_f = brezis_lieb_gap(constant_fn(n, 0.0), ladder, q, *rule);
  sink.assert_leq("brezis-lieb f=0", zero_f.back(), 1e-14);
  const auto zero_g =
      brezis_lieb_gap(f, {constant_fn(n, 0.0)}, q, *rule);
  sink.assert_leq("brezis-lieb g=0", zero_g.back(), 1e-14);
  write_report(ctx, "brezis_lieb", sink);
  return sink.all_pass ? 0 : 1;
}

int run_proof_bubble(const Ctx& ctx) {
  CheckSink sink;
  CsvWriter csv({"n", "p", "family", "dlog_lambda", "dz"});
  for (const auto& cell : ctx.cfg.matrix("matrix")) {
    if (cell.n > 3) continue;  // frame rules for the identity check are n<=3
    const NormPtr h = make_family(cell.family, cell.n);
    const RulePtr rule = frame_rule(ctx, cell.n);
    Vec z(cell.n);
    z[0] = 0.3;
    const double lam = 1.2;
    const Bubble b = make_bubble(cell.n, cell.p, h, z, lam);
    const ProofBubbleResult r = proof_driven_bubble(bubble_fn(b), cell.p, h, 0.25, rule);
    const double dlog = std::fabs(std::log(r.bubble.lambda / lam));
    const double dz = norm2(r.bubble.z - z);
    sink.assert_leq("proof-bubble identity log-lambda " + cell.family + " n=" +
                        std::to_string(cell.n) + " p=" + format_double(cell.p),
                    dlog, 1e-6 * ctx.tol_scale, cell_params(cell.n, cell.p, cell.family));
    sink.assert_leq("proof-bubble identity center", dz, 1e-6 * ctx.tol_scale);
    csv.add_row({std::to_string(cell.n), format_double(cell.p), cell.family,
                 format_double(dlog), format_double(dz)});
  }

  // lambda shift trend under t_ball halving for a perturbed input
  {
    const int n = 3;
    const double p = 2.0;
    const NormPtr h = make_family("euclidean", n);
    const RulePtr rule = frame_rule(ctx, n);
    const Bubble b = make_bubble(n, p, h, Vec(n), 1.0);
    Vec bc(n);
    bc[0] = 1.0;
    const FnPtr pert =
        linear_combination({{1.0, bubble_fn(b)}, {1e-2, bump_fn(bc, 0.8, 1.0)}});
    double prev = 1e300;
    bool decreasing = true;
    for (double t : {0.4, 0.2, 0.1}) {
      const ProofBubbleResult r = proof_driven_bubble(pert, p, h, t, rule);
      const double shift = std::fabs(std::log(r.bubble.lambda));
      if (shift > prev) decreasing = false;
      prev = shift;
    }
    sink.add("proof-bubble t-ball trend", prev, 0, prev, 0, decreasing);
  }
  write_csv(ctx, "proof_bubble", csv);
  write_report(ctx, "proof_bubble", sink);
  return sink.all_pass ? 0 : 1;
}

int run_shoot_radial(const Ctx& ctx) {
  CheckSink sink;
  CsvWriter csv({"n", "p", "sup_err"});
  struct CellNP {
    int n;
    double p;
  };
  for (const CellNP c : {CellNP{3, 2.0}, CellNP{4, 2.0}, CellNP{4, 1.5}}) {
    const NormPtr h = make_family("euclidean", c.n);
    const Bubble b = make_bubble(c.n, c.p, h, Vec(c.n), 1.0);
    const double u0 = bubble_profile(b, 0.0);
    const RadialProfile prof =
        radial_shoot(c.p, c.n, [](double) { return 1.0; }, u0, 25.0);
    double sup = 0;
    for (double r = 0.0; r <= 20.0; r += 0.05)
      sup = std::max(sup, std::fabs(profile_value(prof, r) - bubble_profile(b, r)));
    sink.assert_leq("radial-shoot bubble n=" + std::to_string(c.n) + " p=" + format_double(c.p),
                    sup, 1e-4 * ctx.tol_scale);
    csv.add_row({std::to_string(c.n), format_double(c.p), format_double(sup)});
  }

  // scaling law: u0 of a rescaled bubble shoots to the rescaled bubble
  {
    const int n = 3;
    const double p = 2.0;
    const NormPtr h = make_family("euclidean", n);
    const Bubble b = make_bubble(n, p, h, Vec(n), 1.7);
    const double u0 = bubble_profile(b, 0.0);
    const RadialProfile prof = radial_shoot(p, n, [](double) { return 1.0; }, u0, 25.0);
    double sup = 0;
    for (double r = 0.0; r <= 20.0; r += 0.05)
      sup = std::max(sup, std::fabs(profile_value(prof, r) - bubble_profile(b, r)));
    sink.assert_leq("radial-shoot scaling law", sup, 1e-4 * ctx.tol_scale);
  }

  // perturbed kappa: positive decaying profile, distinct from every bubble
  {
    const int n = 3;
    const double p = 2.0;
    const NormPtr h = make_family("euclidean", n);
    const Bubble b = make_bubble(n, p, h, Vec(n), 1.0);
    const double u0 = bubble_profile(b, 0.0);
    const RadialProfile prof = radial_shoot(
        p, n, [](double r) { return 1.0 + 0.05 * std::exp(-r * r); }, u0, 60.0);
    const bool clean = !prof.sign_change && !prof.blow_up;
    sink.add("radial-shoot perturbed positivity", clean ? 1 : 0, 1, clean ? 0 : 1, 0, clean);
    double best = 1e300;
    for (double lg = -1.0; lg <= 1.0; lg += 0.02) {
      Bubble vb = b;
      vb.lambda = std::exp(lg);
      double sup = 0;
      for (double r = 0.0; r <= 20.0; r += 0.1)
        sup = std::max(sup, std::fabs(profile_value(prof, r) - bubble_profile(vb, r)));
      best = std::min(best, sup);
    }
    sink.add("radial-shoot perturbed min-distance", best, 1e-4, best, 1e-4, best > 1e-4);
  }
  write_csv(ctx, "shoot_radial", csv);
  write_report(ctx, "shoot_radial", sink);
  return sink.all_pass ? 0 : 1;
}

int run_stability_sweep(const Ctx& ctx) {
  CheckSink sink;
  SweepConfig cfg;
  if (ctx.cfg.has("sweep")) {
    cfg = ctx.cfg.sweep("sweep");
  } else {
    SweepCell bump;
    bump.family = "euclidean";
    bump.n = 3;
    bump.p = 2.0;
    cfg.cells.push_back(bump);
    SweepCell rad;
    rad.perturbation = "radial-kappa";
    rad.n = 3;
    rad.p = 2.0;
    cfg.cells.push_back(rad);
  }
  cfg.seed = ctx.seed;
  const SweepResult res = stability_sweep(cfg);

  CsvWriter csv(stability_csv_header());
  Json records = Json::array();
  for (const auto& rec : res.records) {
    csv.add_row(csv_row(rec));
    records.push_back(to_json(rec));
  }
  for (size_t i = 0; i < res.ladders.size(); ++i) {
    const LadderStats& st = res.ladders[i];
    const std::string tag = " cell " + std::to_string(i);
    sink.add("sweep spearman(deficit)" + tag, st.spearman_deficit, 0.9,
             st.spearman_deficit, 0.9, st.spearman_deficit >= 0.9);
    sink.add("sweep spearman(dist)" + tag, st.spearman_dist, 0.9, st.spearman_dist, 0.9,
             st.spearman_dist >= 0.9);
    sink.add("sweep dist/deficit ratio bound" + tag, st.ratio_bound, 10.0, st.ratio_bound,
             10.0, st.ratio_ok);
    std::printf("[INFO] theta_hat%s = %.4f\n", tag.c_str(), st.theta_hat);
  }
  Json extra;
  extra["records"] = records;
  Json ladders = Json::array();
  for (const auto& st : res.ladders) {
    Json l;
    l["spearman_deficit"] = st.spearman_deficit;
    l["spearman_dist"] = st.spearman_dist;
    l["theta_hat"] = st.theta_hat;
    l["ratio_bound"] = st.ratio_bound;
    ladders.push_back(l);
  }
  extra["ladders"] = ladders;
  write_csv(ctx, "stability_sweep", csv);
  write_report(ctx, "stability_sweep", sink, extra);
  return sink.all_pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"anisotropic p-Laplace bubble toolkit"};
  app.require_subcommand(1);

  std::string config_path;
  Ctx ctx;
  int threads = 1;
  bool seed_set = false;
  uint64_t seed_flag = 0;

  app.add_option("--config", config_path, "experiment config (JSON)");
  app.add_option("--out-dir", ctx.out_dir, "artifact directory")->capture_default_str();
  app.add_option("--seed", seed_flag, "override the config seed")->each([&](const std::string&) {
    seed_set = true;
  });
  app.add_option("--threads", threads, "worker cap")->capture_default_str();
  app.add_option("--tol-scale", ctx.tol_scale, "global tolerance multiplier")
      ->capture_default_str();

  auto* sub_verify = app.add_subcommand("verify-norm", "norm family identities");
  auto* sub_energy = app.add_subcommand("bubble-energy", "bubble energy identity matrix");
  auto* sub_residual = app.add_subcommand("residual", "weak residual of bubbles");
  auto* sub_pf = app.add_subcommand("pfunction-check", "P-function checks");
  std::string pf_which = "gradp";
  sub_pf->add_option("which", pf_which, "gradp|diff-identity|integral-identity|integral-inequality")
      ->required();
  auto* sub_dec = app.add_subcommand("decompose", "greedy bubble decomposition");
  auto* sub_inter = app.add_subcommand("interaction", "cross-energy separation scaling");
  auto* sub_xip = app.add_subcommand("xi-p", "algebraic |sum|^p inequality sweep");
  int draws = 0;
  sub_xip->add_option("--draws", draws, "number of random draws");
  auto* sub_bl = app.add_subcommand("brezis-lieb", "Brezis-Lieb splitting limit");
  auto* sub_proof = app.add_subcommand("proof-bubble", "proof-driven approximating bubble");
  auto* sub_shoot = app.add_subcommand("shoot-radial", "radial shooting solver");
  auto* sub_sweep = app.add_subcommand("stability-sweep", "deficit vs distance sweeps");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (!config_path.empty()) ctx.cfg = ExperimentConfig::load(config_path);
    ctx.seed = seed_set ? seed_flag : ctx.cfg.seed();
    set_max_threads(threads);

    if (sub_verify->parsed()) return run_verify_norm(ctx);
    if (sub_energy->parsed()) return run_bubble_energy(ctx);
    if (sub_residual->parsed()) return run_residual(ctx);
    if (sub_pf->parsed()) return run_pfunction(ctx, pf_which);
    if (sub_dec->parsed()) return run_decompose(ctx);
    if (sub_inter->parsed()) return run_interaction(ctx);
    if (sub_xip->parsed()) return run_xi_p(ctx, draws);
    if (sub_bl->parsed()) return run_brezis_lieb(ctx);
    if (sub_proof->parsed()) return run_proof_bubble(ctx);
    if (sub_shoot->parsed()) return run_shoot_radial(ctx);
    if (sub_sweep->parsed()) return run_stability_sweep(ctx);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const NumericError& e) {
    std::fprintf(stderr, "numerical error: %s\n", e.what());
    return 3;
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 2;
}
