#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "apla/errors.hpp"
#include "apla/quadrature.hpp"
#include "apla/rng.hpp"

using namespace apla;

namespace {

double witness_ref(int n) {
  // pi^{n/2} Gamma(n/2) / Gamma(n), cross-checked below against the radial oracle
  return std::pow(M_PI, 0.5 * n) * std::tgamma(0.5 * n) / std::tgamma(static_cast<double>(n));
}

}  // namespace

TEST_CASE("gauss-legendre integrates polynomials exactly") {
  std::vector<double> x, w;
  gauss_legendre(8, x, w);
  double s = 0, s6 = 0;
  for (int i = 0; i < 8; ++i) {
    s += w[i];
    s6 += w[i] * std::pow(x[i], 6);
  }
  CHECK(s == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(s6 == doctest::Approx(2.0 / 7.0).epsilon(1e-13));
}

TEST_CASE("adaptive 1-D quadrature") {
  const double v = integrate_1d([](double t) { return std::exp(-t); }, 0.0, 40.0);
  CHECK(v == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("radial profile integral and divergence detection") {
  // int_0^inf r^{2} (1+r^2)^{-3} dr = B(1.5, 1.5)/2
  const double got = radial_profile_integral([](double r) { return std::pow(1 + r * r, -3.0); }, 3);
  const double ref = 0.5 * std::tgamma(1.5) * std::tgamma(1.5) / std::tgamma(3.0);
  CHECK(got == doctest::Approx(ref).epsilon(1e-11));

  CHECK_THROWS_AS(radial_profile_integral([](double r) { return 1.0 / (1.0 + r); }, 3),
                  NumericError);
}

TEST_CASE("tensor-mapped witness accuracy (n=2, m=96, L=4)") {
  RuleParams params;
  params.order = 96;
  params.scale = 4.0;
  const auto rule = build_rule(2, RuleKind::TensorMapped, params, 0);
  CHECK(rule->witness_rel_error <= 1e-8);
  // closed form pi for n=2
  const auto w = integrate(*rule, [](const Vec& x) { return std::pow(1.0 + norm2sq(x), -2.0); });
  CHECK(w.value == doctest::Approx(M_PI).epsilon(1e-8));
  CHECK(witness_ref(2) == doctest::Approx(M_PI).epsilon(1e-13));
}

TEST_CASE("low-discrepancy witness accuracy (n=4, N=2e5)") {
  RuleParams params;
  params.count = 200000;
  params.scale = 1.0;
  params.tail_exponent = 2.0;
  const auto rule = build_rule(4, RuleKind::LowDiscrepancyImportance, params, 0);
  CHECK(rule->witness_rel_error <= 5e-3);
}

TEST_CASE("tensor rule: L=1 and L=8 agree on the witness within error bars") {
  for (double L : {1.0, 8.0}) {
    RuleParams params;
    params.order = 64;
    params.scale = L;
    const auto rule = build_rule(3, RuleKind::TensorMapped, params, 0);
    const auto w = integrate(*rule, [](const Vec& x) { return std::pow(1.0 + norm2sq(x), -3.0); });
    CHECK(std::fabs(w.value - witness_ref(3)) <=
          std::max(3.0 * w.err_estimate, 1e-6 * witness_ref(3)));
  }
}

TEST_CASE("witness error decreases along a doubling ladder") {
  double prev = 1e300;
  for (int m : {12, 24, 48}) {
    RuleParams params;
    params.order = m;
    params.scale = 4.0;
    const auto rule = build_rule(2, RuleKind::TensorMapped, params, 0);
    CHECK(rule->witness_rel_error < prev);
    prev = rule->witness_rel_error;
  }
  double prev_n = 1e300;
  for (size_t N : {size_t(8000), size_t(32000), size_t(128000)}) {
    RuleParams params;
    params.count = N;
    const auto rule = build_rule(4, RuleKind::LowDiscrepancyImportance, params, 0);
    // QMC is not monotone pointwise; allow a factor but require overall decrease
    CHECK(rule->witness_rel_error < 4.0 * prev_n);
    prev_n = std::min(prev_n, rule->witness_rel_error);
  }
  CHECK(prev_n <= 5e-3);
}

TEST_CASE("integrate: zero, linearity, non-finite detection") {
  RuleParams params;
  params.order = 24;
  const auto rule = build_rule(2, RuleKind::TensorMapped, params, 0);

  const auto z = integrate(*rule, [](const Vec&) { return 0.0; });
  CHECK(z.value == 0.0);

  auto f = [](const Vec& x) { return std::exp(-norm2sq(x)); };
  auto g = [](const Vec& x) { return std::pow(1.0 + norm2sq(x), -3.0); };
  const double alpha = 2.5, beta = -0.75;
  const auto fi = integrate(*rule, f);
  const auto gi = integrate(*rule, g);
  const auto combo = integrate(*rule, [&](const Vec& x) { return alpha * f(x) + beta * g(x); });
  CHECK(combo.value ==
        doctest::Approx(alpha * fi.value + beta * gi.value).epsilon(1e-12));

  CHECK_THROWS_WITH_AS(
      integrate(*rule, [](const Vec& x) { return 1.0 / (norm2sq(x) - norm2sq(x)); }),
      doctest::Contains("non-finite-integrand"), NumericError);
}

TEST_CASE("node/weight generation is deterministic given (kind, params, seed)") {
  RuleParams params;
  params.count = 5000;
  const auto a = build_rule(3, RuleKind::LowDiscrepancyImportance, params, 42);
  const auto b = build_rule(3, RuleKind::LowDiscrepancyImportance, params, 42);
  REQUIRE(a->size() == b->size());
  for (size_t i = 0; i < a->size(); ++i) {
    CHECK(a->weights[i] == b->weights[i]);
    for (int ax = 0; ax < 3; ++ax) CHECK(a->axes[ax][i] == b->axes[ax][i]);
  }
  const auto c = build_rule(3, RuleKind::LowDiscrepancyImportance, params, 43);
  CHECK(c->axes[0][10] != a->axes[0][10]);
}

TEST_CASE("weights are positive") {
  RuleParams tp;
  tp.order = 16;
  const auto t = build_rule(3, RuleKind::TensorMapped, tp, 0);
  for (double w : t->weights) CHECK(w > 0);
  RuleParams ip;
  ip.count = 2000;
  const auto imp = build_rule(4, RuleKind::LowDiscrepancyImportance, ip, 1);
  for (double w : imp->weights) CHECK(w > 0);
}

TEST_CASE("unsupported rule combinations are rejected") {
  RuleParams params;
  CHECK_THROWS_AS(build_rule(4, RuleKind::TensorMapped, params, 0), ConfigError);
  CHECK_THROWS_AS(build_rule(1, RuleKind::TensorMapped, params, 0), ConfigError);
  CHECK_THROWS_AS(build_rule(6, RuleKind::LowDiscrepancyImportance, params, 0), ConfigError);
}

TEST_CASE("radial_reduce: ball volumes") {
  const auto e3 = AnisotropicNorm::euclidean(3);
  auto indicator = [](double r) { return r <= 1.0 ? 1.0 : 0.0; };
  CHECK(radial_reduce(e3, indicator, 3) == doctest::Approx(4.0 * M_PI / 3.0).epsilon(1e-6));

  Mat M(2);
  M(0, 0) = 4;
  M(1, 1) = 1;
  const auto q = AnisotropicNorm::quadratic(M);
  CHECK(radial_reduce(q, indicator, 2) == doctest::Approx(2.0 * M_PI).epsilon(1e-6));
}

TEST_CASE("radial_reduce cross-checks the full-dimensional rule") {
  const auto e = AnisotropicNorm::euclidean(3);
  auto g = [](double r) { return std::pow(1.0 + r * r, -3.0); };
  const double oracle = radial_reduce(e, g, 3);
  RuleParams params;
  params.order = 48;
  const auto rule = build_rule(3, RuleKind::TensorMapped, params, 0);
  const auto full = integrate(*rule, [&](const Vec& x) { return g(norm2(x)); });
  CHECK(std::fabs(full.value - oracle) <= std::max(3.0 * full.err_estimate, 1e-8 * oracle));
}

TEST_CASE("quartic dual ball volume brackets the euclidean one") {
  // H >= |.| pointwise, so H0 <= |.| and the dual unit ball grows
  const auto qb = AnisotropicNorm::quartic_blend(3, 0.1);
  const double vol = unit_dual_ball_volume(qb);
  const double ball = 4.0 * M_PI / 3.0;
  CHECK(vol > ball);
  CHECK(vol < std::pow(1.1, 3.0 / 4.0) * ball);  // H <= (1+eps)^{1/4} |.|
}

TEST_CASE("box rule integrates a gaussian on a box") {
  Vec c{0.3, -0.2};
  Vec h{1.5, 1.5};
  const BoxRule rule = box_rule(c, h, 24);
  const double got = box_integrate(rule, [&](const Vec& x) {
    return std::exp(-2.0 * norm2sq(x - c));
  });
  // product of 1-D integrals over [-1.5, 1.5]
  const double one_d = integrate_1d([](double t) { return std::exp(-2 * t * t); }, -1.5, 1.5);
  CHECK(got == doctest::Approx(one_d * one_d).epsilon(1e-12));
}

TEST_CASE("sphere integral: areas") {
  CHECK(sphere_integral(2, [](const Vec&) { return 1.0; }) ==
        doctest::Approx(2 * M_PI).epsilon(1e-12));
  CHECK(sphere_integral(3, [](const Vec&) { return 1.0; }) ==
        doctest::Approx(4 * M_PI).epsilon(1e-10));
  CHECK(sphere_integral(4, [](const Vec&) { return 1.0; }) ==
        doctest::Approx(2 * M_PI * M_PI).epsilon(1e-10));
  CHECK(sphere_integral(5, [](const Vec&) { return 1.0; }, 24) ==
        doctest::Approx(8.0 * M_PI * M_PI / 3.0).epsilon(1e-9));
}
