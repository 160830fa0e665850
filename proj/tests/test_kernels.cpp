#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "apla/kernels.hpp"
#include "apla/rng.hpp"

using namespace apla;

TEST_CASE("weighted_sum scalar matches a long-double reference") {
  Rng rng(7);
  std::vector<double> v(10007), w(10007);
  for (size_t i = 0; i < v.size(); ++i) {
    v[i] = rng.uniform(-1, 1) * std::pow(10.0, rng.uniform(-6, 6));
    w[i] = rng.uniform(0, 1);
  }
  long double ref = 0;
  for (size_t i = 0; i < v.size(); ++i) ref += static_cast<long double>(v[i]) * w[i];
  const double got = kernels::weighted_sum_scalar(v.data(), w.data(), v.size());
  CHECK(std::fabs(got - static_cast<double>(ref)) <=
        1e-12 * std::fabs(static_cast<double>(ref)) + 1e-300);
}

TEST_CASE("scalar and AVX2 backends agree") {
  if (!kernels::avx2_available()) {
    MESSAGE("avx2 not available on this host; dispatch test skipped");
    return;
  }
  Rng rng(11);
  for (size_t count : {size_t(1), size_t(5), size_t(4095), size_t(4096), size_t(4097),
                       size_t(50001)}) {
    std::vector<double> v(count), w(count);
    double abs_mass = 0;
    for (size_t i = 0; i < count; ++i) {
      v[i] = rng.normal() * std::pow(10.0, rng.uniform(-3, 3));
      w[i] = rng.uniform(0, 2);
      abs_mass += std::fabs(v[i] * w[i]);
    }
    const double a = kernels::weighted_sum_scalar(v.data(), w.data(), count);
    const double b = kernels::weighted_sum_with(kernels::Backend::Avx2, v.data(), w.data(), count);
    CHECK(std::fabs(a - b) <= 1e-13 * abs_mass + 1e-300);

    const double pa = kernels::plain_sum_scalar(v.data(), count);
    const double pb = kernels::plain_sum_with(kernels::Backend::Avx2, v.data(), count);
    double pm = 0;
    for (size_t i = 0; i < count; ++i) pm += std::fabs(v[i]);
    CHECK(std::fabs(pa - pb) <= 1e-13 * pm + 1e-300);
  }
}

TEST_CASE("squared_distance variants agree and are exact on a hand case") {
  const size_t count = 1025;
  const int dim = 4;
  std::vector<std::vector<double>> axes(dim, std::vector<double>(count));
  Rng rng(3);
  for (auto& ax : axes)
    for (auto& x : ax) x = rng.uniform(-5, 5);
  const double center[4] = {0.5, -1.0, 2.0, 0.0};
  const double* ptrs[4] = {axes[0].data(), axes[1].data(), axes[2].data(), axes[3].data()};

  std::vector<double> a(count), b(count);
  kernels::squared_distance_scalar(dim, ptrs, center, a.data(), count);
  for (size_t i = 0; i < count; ++i) {
    double s = 0;
    for (int d = 0; d < dim; ++d) s += (axes[d][i] - center[d]) * (axes[d][i] - center[d]);
    CHECK(a[i] == doctest::Approx(s).epsilon(1e-14));
  }
  if (kernels::avx2_available()) {
    kernels::squared_distance_with(kernels::Backend::Avx2, dim, ptrs, center, b.data(), count);
    for (size_t i = 0; i < count; ++i) CHECK(std::fabs(a[i] - b[i]) <= 1e-13 * (1.0 + a[i]));
  }
}

TEST_CASE("axpy variants agree") {
  const size_t count = 8191;
  Rng rng(5);
  std::vector<double> x(count), y0(count);
  for (size_t i = 0; i < count; ++i) {
    x[i] = rng.normal();
    y0[i] = rng.normal();
  }
  std::vector<double> ys = y0;
  kernels::axpy_scalar(0.37, x.data(), ys.data(), count);
  for (size_t i = 0; i < count; ++i)
    CHECK(ys[i] == doctest::Approx(y0[i] + 0.37 * x[i]).epsilon(1e-14));
  if (kernels::avx2_available()) {
    std::vector<double> yv = y0;
    kernels::axpy_with(kernels::Backend::Avx2, 0.37, x.data(), yv.data(), count);
    for (size_t i = 0; i < count; ++i)
      CHECK(std::fabs(ys[i] - yv[i]) <= 1e-14 * (1 + std::fabs(ys[i])));
  }
}

TEST_CASE("reduction is identical across repeated runs (fixed backend)") {
  Rng rng(13);
  std::vector<double> v(20000), w(20000);
  for (size_t i = 0; i < v.size(); ++i) {
    v[i] = rng.normal();
    w[i] = rng.uniform(0, 1);
  }
  const double a = kernels::weighted_sum(v.data(), w.data(), v.size());
  const double b = kernels::weighted_sum(v.data(), w.data(), v.size());
  CHECK(a == b);
}
