#pragma once

#include <cstddef>
#include <string>

// Data-parallel inner loops used by the quadrature and field layers.
// Each kernel has a scalar reference implementation and an AVX2 variant;
// the active backend is chosen once at startup from CPUID (override with
// the APLA_KERNEL environment variable: "scalar" or "avx2"). Both variants
// share the same fixed block structure, so reductions are deterministic for
// a given backend, and the two backends agree to a few ulps (see
// tests/test_kernels.cpp).

namespace apla::kernels {

enum class Backend { Scalar, Avx2 };

Backend active_backend();
void set_backend(Backend b);
bool avx2_available();
std::string backend_name();

inline constexpr size_t kBlock = 4096;  // reduction block length

// sum_i v[i]*w[i], blockwise Neumaier-compensated, blocks combined in order
double weighted_sum(const double* v, const double* w, size_t count);

// sum_i v[i], same structure
double plain_sum(const double* v, size_t count);

// out[i] = sum_axis (axes[axis][i] - center[axis])^2
void squared_distance(int dim, const double* const* axes, const double* center,
                      double* out, size_t count);

// y[i] += a * x[i]
void axpy(double a, const double* x, double* y, size_t count);

// ---- per-backend entry points (exposed for equivalence tests) ----------
// Requesting Avx2 on a build/host without it falls back to scalar.
double weighted_sum_with(Backend b, const double* v, const double* w, size_t count);
double plain_sum_with(Backend b, const double* v, size_t count);
void squared_distance_with(Backend b, int dim, const double* const* axes, const double* center,
                           double* out, size_t count);
void axpy_with(Backend b, double a, const double* x, double* y, size_t count);

double weighted_sum_scalar(const double* v, const double* w, size_t count);
double plain_sum_scalar(const double* v, size_t count);
void squared_distance_scalar(int dim, const double* const* axes, const double* center,
                             double* out, size_t count);
void axpy_scalar(double a, const double* x, double* y, size_t count);

}  // namespace apla::kernels
