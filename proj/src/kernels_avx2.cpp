#include <immintrin.h>

#include <cmath>

#include "apla/kernels.hpp"

// AVX2/FMA variants. The reduction kernels keep the same kBlock structure as
// the scalar reference: four interleaved lanes per block, each Neumaier
// compensated, lane results merged left-to-right at the block boundary.

namespace apla::kernels {

namespace {

inline void accumulate_neumaier(double x, double& sum, double& comp) {
  const double t = sum + x;
  if (std::fabs(sum) >= std::fabs(x))
    comp += (sum - t) + x;
  else
    comp += (x - t) + sum;
  sum = t;
}

// TwoSum on 4 lanes: s += x with compensation c (Neumaier branchless form)
inline void lane_accumulate(__m256d x, __m256d& s, __m256d& c) {
  const __m256d t = _mm256_add_pd(s, x);
  const __m256d abs_mask = _mm256_castsi256_pd(_mm256_set1_epi64x(0x7fffffffffffffffLL));
  const __m256d as = _mm256_and_pd(s, abs_mask);
  const __m256d ax = _mm256_and_pd(x, abs_mask);
  const __m256d big_s = _mm256_cmp_pd(as, ax, _CMP_GE_OQ);
  // if |s|>=|x|: (s - t) + x else (x - t) + s
  const __m256d e1 = _mm256_add_pd(_mm256_sub_pd(s, t), x);
  const __m256d e2 = _mm256_add_pd(_mm256_sub_pd(x, t), s);
  c = _mm256_add_pd(c, _mm256_blendv_pd(e2, e1, big_s));
  s = t;
}

}  // namespace

double weighted_sum_avx2(const double* v, const double* w, size_t count) {
  // tail elements handled scalar to avoid reading past the arrays
  double total = 0.0, total_c = 0.0;
  for (size_t b = 0; b < count; b += kBlock) {
    const size_t e = b + kBlock < count ? b + kBlock : count;
    __m256d s = _mm256_setzero_pd();
    __m256d c = _mm256_setzero_pd();
    size_t i = b;
    for (; i + 4 <= e; i += 4)
      lane_accumulate(_mm256_mul_pd(_mm256_loadu_pd(v + i), _mm256_loadu_pd(w + i)), s, c);
    alignas(32) double sl[4], cl[4];
    _mm256_store_pd(sl, s);
    _mm256_store_pd(cl, c);
    double bs = 0.0, bc = 0.0;
    for (int k = 0; k < 4; ++k) accumulate_neumaier(sl[k] + cl[k], bs, bc);
    for (; i < e; ++i) accumulate_neumaier(v[i] * w[i], bs, bc);
    accumulate_neumaier(bs + bc, total, total_c);
  }
  return total + total_c;
}

double plain_sum_avx2(const double* v, size_t count) {
  double total = 0.0, total_c = 0.0;
  for (size_t b = 0; b < count; b += kBlock) {
    const size_t e = b + kBlock < count ? b + kBlock : count;
    __m256d s = _mm256_setzero_pd();
    __m256d c = _mm256_setzero_pd();
    size_t i = b;
    for (; i + 4 <= e; i += 4) lane_accumulate(_mm256_loadu_pd(v + i), s, c);
    alignas(32) double sl[4], cl[4];
    _mm256_store_pd(sl, s);
    _mm256_store_pd(cl, c);
    double bs = 0.0, bc = 0.0;
    for (int k = 0; k < 4; ++k) accumulate_neumaier(sl[k] + cl[k], bs, bc);
    for (; i < e; ++i) accumulate_neumaier(v[i], bs, bc);
    accumulate_neumaier(bs + bc, total, total_c);
  }
  return total + total_c;
}

void squared_distance_avx2(int dim, const double* const* axes, const double* center,
                           double* out, size_t count) {
  size_t i = 0;
  for (; i + 4 <= count; i += 4) {
    __m256d acc = _mm256_setzero_pd();
    for (int a = 0; a < dim; ++a) {
      const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(axes[a] + i), _mm256_set1_pd(center[a]));
      acc = _mm256_fmadd_pd(d, d, acc);
    }
    _mm256_storeu_pd(out + i, acc);
  }
  for (; i < count; ++i) {
    double s = 0.0;
    for (int a = 0; a < dim; ++a) {
      const double d = axes[a][i] - center[a];
      s += d * d;
    }
    out[i] = s;
  }
}

void axpy_avx2(double a, const double* x, double* y, size_t count) {
  const __m256d av = _mm256_set1_pd(a);
  size_t i = 0;
  for (; i + 4 <= count; i += 4)
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(av, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  for (; i < count; ++i) y[i] += a * x[i];
}

}  // namespace apla::kernels
