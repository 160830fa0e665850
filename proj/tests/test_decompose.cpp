#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "apla/decompose.hpp"
#include "apla/rng.hpp"

using namespace apla;

namespace {

NormPtr euclid(int n) { return std::make_shared<AnisotropicNorm>(AnisotropicNorm::euclidean(n)); }

NormPtr quad41(int n) {
  Mat M(n);
  for (int i = 0; i < n; ++i) M(i, i) = (i == 0) ? 4.0 : 1.0;
  return std::make_shared<AnisotropicNorm>(AnisotropicNorm::quadratic(M));
}

Bubble make_bubble(int n, double p, NormPtr h, Vec z, double lambda) {
  Bubble b;
  b.n = n;
  b.p = p;
  b.z = std::move(z);
  b.lambda = lambda;
  b.norm = std::move(h);
  return b;
}

RulePtr fit_rule(int n, std::vector<Vec> centers, double p, uint64_t seed, size_t count = 20000) {
  RuleParams params;
  params.count = count;
  params.tail_exponent = p / (p - 1.0);
  params.centers = std::move(centers);
  return build_rule(n, RuleKind::LowDiscrepancyImportance, params, seed);
}

}  // namespace

TEST_CASE("interaction quantity: hand values") {
  const auto h = euclid(3);
  const Bubble a = make_bubble(3, 2.0, h, Vec(3), 1.0);
  CHECK(interaction_quantity(a, a) == doctest::Approx(1.0));
  const Bubble b = make_bubble(3, 2.0, h, Vec(3), 100.0);
  CHECK(interaction_quantity(a, b) == doctest::Approx(100.0));
  Vec z(3);
  z[0] = 10.0;
  const Bubble c = make_bubble(3, 2.0, h, z, 1.0);
  CHECK(interaction_quantity(a, c) == doctest::Approx(100.0));
}

TEST_CASE("xi_p constant recursion and edge cases") {
  // C_{p,2} = max(1 - p(1 - 2^{max(1,p-1)}), 2p+1)
  CHECK(xi_p_constant(1.3, 2) == doctest::Approx(3.6));
  CHECK(xi_p_constant(2.0, 2) == doctest::Approx(5.0));
  CHECK(xi_p_constant(3.7, 2) ==
        doctest::Approx(1.0 + 3.7 * (std::pow(2.0, 2.7) - 1.0)).epsilon(1e-13));
  // recursion: C_{p,3} = C_{p,2} + (2^{(p-2)+}+1) C_{p,2}
  CHECK(xi_p_constant(2.0, 3) == doctest::Approx(5.0 + 2.0 * 5.0));
  CHECK(xi_p_constant(3.7, 3) ==
        doctest::Approx(xi_p_constant(3.7, 2) * (1.0 + std::pow(2.0, 1.7) + 1.0)).epsilon(1e-13));

  // k = 1: both sides vanish
  const XiPGap one = xi_p_gap({Vec{1.0, 2.0}}, 2.5);
  CHECK(one.lhs == 0.0);
  CHECK(one.rhs_bound == 0.0);

  // k = 2 with a zero term
  const XiPGap z = xi_p_gap({Vec{1.0, 2.0}, Vec{0.0, 0.0}}, 2.5);
  CHECK(z.lhs == doctest::Approx(0.0).epsilon(1e-14));
}

TEST_CASE("xi_p inequality holds over 100000 random draws") {
  Rng rng(2027);
  int violations = 0;
  for (int trial = 0; trial < 100000; ++trial) {
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
  }
  CHECK(violations == 0);
}

TEST_CASE("fit recovers an exact family member") {
  for (auto& h : {euclid(3), quad41(3)}) {
    for (double p : {1.5, 2.0}) {
      Vec z{0.4, -0.3, 0.2};
      const Bubble truth = make_bubble(3, p, h, z, 1.4);
      const auto rule = fit_rule(3, {z}, p, 0);
      Field f = sample_field(rule, bubble_fn(truth), true);
      const FitResult fit = fit_single_bubble(f, p, h);
      CHECK(norm2(fit.bubble.z - truth.z) <= 1e-4);
      CHECK(std::fabs(std::log(fit.bubble.lambda / truth.lambda)) <= 1e-4);
      const double sp_n = std::pow(sobolev_constant(*h, p, 3).sp, 3.0);
      CHECK(fit.residual_grad_energy <= 1e-8 * sp_n);
    }
  }
}

TEST_CASE("fit flags a zero field as degenerate") {
  const auto h = euclid(3);
  const auto rule = fit_rule(3, {Vec(3)}, 2.0, 0, 4000);
  Field f = sample_field(rule, constant_fn(3, 0.0), true);
  const FitResult fit = fit_single_bubble(f, 2.0, h);
  CHECK(fit.degenerate);
}

TEST_CASE("first fit of a two-bubble field locks onto the dominant bubble") {
  const auto h = euclid(3);
  const double p = 2.0;
  Vec z2(3);
  z2[0] = 120.0;
  const Bubble b1 = make_bubble(3, p, h, Vec(3), 1.0);
  const Bubble b2 = make_bubble(3, p, h, z2, 3.0);  // wider peak, lower amplitude
  CHECK(interaction_quantity(b1, b2) >= 1e4);
  const auto rule = fit_rule(3, {b1.z, b2.z}, p, 1);
  Field f = sample_field(
      rule, linear_combination({{1.0, bubble_fn(b1)}, {1.0, bubble_fn(b2)}}), true);
  const FitResult fit = fit_single_bubble(f, p, h);
  CHECK(norm2(fit.bubble.z - b1.z) <= 1e-2);
  CHECK(std::fabs(std::log(fit.bubble.lambda / b1.lambda)) <= 1e-2);
}

TEST_CASE("greedy decomposition: single bubble and a weakly interacting pair") {
  const auto h = euclid(3);
  const double p = 2.0;
  const double sp_n = std::pow(sobolev_constant(*h, p, 3).sp, 3.0);

  {
    const Bubble b = make_bubble(3, p, h, Vec(3), 1.0);
    const auto rule = fit_rule(3, {b.z}, p, 0);
    Field f = sample_field(rule, bubble_fn(b), true);
    const DecompositionResult d = greedy_decompose(f, 4, p, h);
    REQUIRE(d.bubbles.size() == 1);
    CHECK(d.remainder_grad_energy <= 1e-8 * sp_n);
    CHECK(d.detected_k == 1);
  }

  {
    Vec z2(3);
    z2[0] = 120.0;
    const Bubble b1 = make_bubble(3, p, h, Vec(3), 1.0);
    const Bubble b2 = make_bubble(3, p, h, z2, 1.0);
    const auto rule = fit_rule(3, {b1.z, b2.z}, p, 1, 30000);
    Field f = sample_field(
        rule, linear_combination({{1.0, bubble_fn(b1)}, {1.0, bubble_fn(b2)}}), true);
    const DecompositionResult d = greedy_decompose(f, 4, p, h);
    REQUIRE(d.bubbles.size() == 2);
    CHECK(d.detected_k == 2);
    for (const Bubble& truth : {b1, b2}) {
      double best_z = 1e300, best_l = 1e300;
      for (const Bubble& got : d.bubbles) {
        if (norm2(got.z - truth.z) < best_z) {
          best_z = norm2(got.z - truth.z);
          best_l = std::fabs(std::log(got.lambda / truth.lambda));
        }
      }
      CHECK(best_z <= 1e-2);
      CHECK(best_l <= 1e-2);
    }
    CHECK(d.energy_additivity_gap <= 1e-2 * sp_n);
    CHECK(d.interaction_matrix[0][1] >= 1e4);
    CHECK(d.interaction_matrix[0][1] == d.interaction_matrix[1][0]);
  }
}

TEST_CASE("greedy decomposition is equivariant under the transform group") {
  const auto h = euclid(3);
  const double p = 2.0;
  const Bubble b = make_bubble(3, p, h, Vec{0.2, 0.1, -0.3}, 1.0);
  const TransformParams t{Vec{0.5, 0.0, 0.0}, 2.0};
  const Bubble moved = apply_transform(t, b);

  const auto rule1 = fit_rule(3, {b.z}, p, 0);
  Field f1 = sample_field(rule1, bubble_fn(b), true);
  const FitResult fit1 = fit_single_bubble(f1, p, h);

  const auto rule2 = fit_rule(3, {moved.z}, p, 0);
  Field f2 = sample_field(rule2, bubble_fn(moved), true);
  const FitResult fit2 = fit_single_bubble(f2, p, h);

  // the fitted parameters transform like the inputs
  const Bubble expect = apply_transform(t, fit1.bubble);
  CHECK(norm2(fit2.bubble.z - expect.z) <= 1e-3);
  CHECK(std::fabs(std::log(fit2.bubble.lambda / expect.lambda)) <= 1e-3);
}

TEST_CASE("cross energy: self energy, separation decay, lambda ladder") {
  const auto h = euclid(3);
  const double p = 2.0;
  const Bubble b = make_bubble(3, p, h, Vec(3), 1.0);
  RuleParams params;
  params.count = 60000;
  params.tail_exponent = 2.0;
  const auto rule = build_rule(3, RuleKind::LowDiscrepancyImportance, params, 0);

  // b1 = b2 reduces to the euclidean self-energy
  const CrossEnergy self = cross_energy(b, b, *rule);
  const double sigma = bubble_euclidean_grad_energy(b);
  CHECK(self.value == doctest::Approx(sigma).epsilon(5e-3));

  double prev = 1e300;
  for (double lam : {10.0, 100.0, 1000.0}) {
    const Bubble b2 = make_bubble(3, p, h, Vec(3), lam);
    const CrossEnergy ce = cross_energy(b, b2, *rule);
    CHECK(ce.value < prev);
    prev = ce.value;
  }
}

TEST_CASE("Lemma-style energy count for sums of exact bubbles") {
  const auto h = euclid(3);
  const double p = 2.0;
  Vec z2(3);
  z2[0] = 40.0;
  const Bubble b1 = make_bubble(3, p, h, Vec(3), 1.0);
  const Bubble b2 = make_bubble(3, p, h, z2, 1.0);
  RuleParams params;
  params.count = 120000;
  params.tail_exponent = 2.0;
  params.centers = {b1.z, b2.z};
  const auto rule = build_rule(3, RuleKind::LowDiscrepancyImportance, params, 3);

  const FnPtr f1 = bubble_fn(b1);
  const FnPtr f2 = bubble_fn(b2);
  const double e_sum =
      integrate(*rule, [&](const Vec& x) {
        return std::pow(norm2(f1->gradient(x) + f2->gradient(x)), p);
      }).value;
  const double sigma = bubble_euclidean_grad_energy(b1);

  // euclidean gradient energy of a single bubble is the same constant for
  // all (z, lambda)
  const double sigma2 = bubble_euclidean_grad_energy(b2);
  CHECK(sigma2 == doctest::Approx(sigma).epsilon(1e-8));

  // energy of the sum does not exceed the sum of energies (strictly, for
  // non-trivial overlap), and the xi_p bound controls the gap
  const CrossEnergy ce = cross_energy(b1, b2, *rule);
  CHECK(e_sum <= 2.0 * sigma + 1e-6 * sigma);
  const double gap = std::fabs(e_sum - 2.0 * sigma);
  CHECK(gap <= xi_p_constant(p, 2) * 2.0 * ce.value * 1.05 + 5e-4 * sigma);
}

TEST_CASE("Brezis-Lieb gap vanishes along a translation ladder") {
  const auto h = euclid(3);
  const double p = 2.0;
  const double q = 6.0;  // p* for n=3, p=2
  RuleParams params;
  params.order = 48;
  params.scale = 4.0;
  const auto rule = build_rule(3, RuleKind::TensorMapped, params, 0);

  const FnPtr f = bump_fn(Vec(3), 1.5, 1.0);
  std::vector<FnPtr> ladder;
  for (double m : {5.0, 10.0, 20.0}) {
    Vec z(3);
    z[0] = m;
    ladder.push_back(bubble_fn(make_bubble(3, p, h, z, 1.0)));
  }
  const auto gaps = brezis_lieb_gap(f, ladder, q, *rule);
  REQUIRE(gaps.size() == 3);
  CHECK(gaps[1] < gaps[0]);
  CHECK(gaps[2] < gaps[1]);
  const double fmass =
      integrate(*rule, [&](const Vec& x) { return std::pow(std::fabs(f->value(x)), q); }).value;
  CHECK(gaps[2] <= 1e-3 * fmass);

  const auto fzero = brezis_lieb_gap(constant_fn(3, 0.0), ladder, q, *rule);
  CHECK(fzero[0] == 0.0);
  const auto gzero = brezis_lieb_gap(f, {constant_fn(3, 0.0)}, q, *rule);
  CHECK(gzero[0] <= 1e-14);
}
