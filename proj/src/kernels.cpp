#include "apla/kernels.hpp"

#include <cmath>
#include <cstdlib>
#include <cstring>

namespace apla::kernels {

namespace {

Backend detect() {
#if defined(APLA_BUILD_AVX2)
  if (const char* env = std::getenv("APLA_KERNEL")) {
    if (std::strcmp(env, "scalar") == 0) return Backend::Scalar;
    if (std::strcmp(env, "avx2") == 0) return Backend::Avx2;
  }
#if defined(__x86_64__) || defined(_M_X64)
  if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma")) return Backend::Avx2;
#endif
#endif
  return Backend::Scalar;
}

Backend g_backend = detect();

}  // namespace

Backend active_backend() { return g_backend; }
void set_backend(Backend b) { g_backend = b; }

bool avx2_available() {
#if defined(APLA_BUILD_AVX2) && (defined(__x86_64__) || defined(_M_X64))
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

std::string backend_name() { return g_backend == Backend::Avx2 ? "avx2" : "scalar"; }

// ---- scalar reference kernels ------------------------------------------

namespace {

// Neumaier-compensated accumulation of one block
inline void accumulate_neumaier(double x, double& sum, double& comp) {
  const double t = sum + x;
  if (std::fabs(sum) >= std::fabs(x))
    comp += (sum - t) + x;
  else
    comp += (x - t) + sum;
  sum = t;
}

}  // namespace

double weighted_sum_scalar(const double* v, const double* w, size_t count) {
  double total = 0.0, total_c = 0.0;
  for (size_t b = 0; b < count; b += kBlock) {
    const size_t e = b + kBlock < count ? b + kBlock : count;
    double s = 0.0, c = 0.0;
    for (size_t i = b; i < e; ++i) accumulate_neumaier(v[i] * w[i], s, c);
    accumulate_neumaier(s + c, total, total_c);
  }
  return total + total_c;
}

double plain_sum_scalar(const double* v, size_t count) {
  double total = 0.0, total_c = 0.0;
  for (size_t b = 0; b < count; b += kBlock) {
    const size_t e = b + kBlock < count ? b + kBlock : count;
    double s = 0.0, c = 0.0;
    for (size_t i = b; i < e; ++i) accumulate_neumaier(v[i], s, c);
    accumulate_neumaier(s + c, total, total_c);
  }
  return total + total_c;
}

void squared_distance_scalar(int dim, const double* const* axes, const double* center,
                             double* out, size_t count) {
  for (size_t i = 0; i < count; ++i) {
    double s = 0.0;
    for (int a = 0; a < dim; ++a) {
      const double d = axes[a][i] - center[a];
      s += d * d;
    }
    out[i] = s;
  }
}

void axpy_scalar(double a, const double* x, double* y, size_t count) {
  for (size_t i = 0; i < count; ++i) y[i] += a * x[i];
}

// ---- dispatch ------------------------------------------------------------

#if defined(APLA_BUILD_AVX2)
double weighted_sum_avx2(const double* v, const double* w, size_t count);
double plain_sum_avx2(const double* v, size_t count);
void squared_distance_avx2(int dim, const double* const* axes, const double* center,
                           double* out, size_t count);
void axpy_avx2(double a, const double* x, double* y, size_t count);
#endif

double weighted_sum_with(Backend b, const double* v, const double* w, size_t count) {
#if defined(APLA_BUILD_AVX2)
  if (b == Backend::Avx2) return weighted_sum_avx2(v, w, count);
#endif
  (void)b;
  return weighted_sum_scalar(v, w, count);
}

double plain_sum_with(Backend b, const double* v, size_t count) {
#if defined(APLA_BUILD_AVX2)
  if (b == Backend::Avx2) return plain_sum_avx2(v, count);
#endif
  (void)b;
  return plain_sum_scalar(v, count);
}

void squared_distance_with(Backend b, int dim, const double* const* axes, const double* center,
                           double* out, size_t count) {
#if defined(APLA_BUILD_AVX2)
  if (b == Backend::Avx2) {
    squared_distance_avx2(dim, axes, center, out, count);
    return;
  }
#endif
  (void)b;
  squared_distance_scalar(dim, axes, center, out, count);
}

void axpy_with(Backend b, double a, const double* x, double* y, size_t count) {
#if defined(APLA_BUILD_AVX2)
  if (b == Backend::Avx2) {
    axpy_avx2(a, x, y, count);
    return;
  }
#endif
  (void)b;
  axpy_scalar(a, x, y, count);
}

double weighted_sum(const double* v, const double* w, size_t count) {
  return weighted_sum_with(g_backend, v, w, count);
}

double plain_sum(const double* v, size_t count) { return plain_sum_with(g_backend, v, count); }

void squared_distance(int dim, const double* const* axes, const double* center,
                      double* out, size_t count) {
  squared_distance_with(g_backend, dim, axes, center, out, count);
}

void axpy(double a, const double* x, double* y, size_t count) {
  axpy_with(g_backend, a, x, y, count);
}

}  // namespace apla::kernels
