#pragma once

#include <array>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <vector>

// Fixed-capacity dense vectors/matrices for ambient dimensions 2..5.
// Everything is by value; no heap traffic in the inner loops.

namespace apla {

inline constexpr int kMaxDim = 5;

struct Vec {
  int n = 0;
  std::array<double, kMaxDim> a{};

  Vec() = default;
  explicit Vec(int dim) : n(dim) { assert(dim >= 1 && dim <= kMaxDim); }
  Vec(std::initializer_list<double> xs) : n(static_cast<int>(xs.size())) {
    assert(n >= 1 && n <= kMaxDim);
    int i = 0;
    for (double x : xs) a[static_cast<size_t>(i++)] = x;
  }

  double& operator[](int i) { return a[static_cast<size_t>(i)]; }
  double operator[](int i) const { return a[static_cast<size_t>(i)]; }

  Vec& operator+=(const Vec& o) {
    for (int i = 0; i < n; ++i) a[i] += o.a[i];
    return *this;
  }
  Vec& operator-=(const Vec& o) {
    for (int i = 0; i < n; ++i) a[i] -= o.a[i];
    return *this;
  }
  Vec& operator*=(double s) {
    for (int i = 0; i < n; ++i) a[i] *= s;
    return *this;
  }

  friend Vec operator+(Vec x, const Vec& y) { return x += y; }
  friend Vec operator-(Vec x, const Vec& y) { return x -= y; }
  friend Vec operator*(double s, Vec x) { return x *= s; }
  friend Vec operator*(Vec x, double s) { return x *= s; }
  friend Vec operator-(Vec x) {
    for (int i = 0; i < x.n; ++i) x.a[i] = -x.a[i];
    return x;
  }
};

inline double dot(const Vec& x, const Vec& y) {
  double s = 0;
  for (int i = 0; i < x.n; ++i) s += x[i] * y[i];
  return s;
}

inline double norm2sq(const Vec& x) { return dot(x, x); }
inline double norm2(const Vec& x) { return std::sqrt(norm2sq(x)); }

inline Vec zero_vec(int n) { return Vec(n); }

inline Vec unit_axis(int n, int axis, double sign = 1.0) {
  Vec e(n);
  e[axis] = sign;
  return e;
}

struct Mat {
  int n = 0;
  std::array<double, kMaxDim * kMaxDim> a{};

  Mat() = default;
  explicit Mat(int dim) : n(dim) { assert(dim >= 1 && dim <= kMaxDim); }

  double& operator()(int i, int j) { return a[static_cast<size_t>(i * n + j)]; }
  double operator()(int i, int j) const { return a[static_cast<size_t>(i * n + j)]; }

  Mat& operator+=(const Mat& o) {
    for (int i = 0; i < n * n; ++i) a[i] += o.a[i];
    return *this;
  }
  Mat& operator-=(const Mat& o) {
    for (int i = 0; i < n * n; ++i) a[i] -= o.a[i];
    return *this;
  }
  Mat& operator*=(double s) {
    for (int i = 0; i < n * n; ++i) a[i] *= s;
    return *this;
  }
  friend Mat operator+(Mat x, const Mat& y) { return x += y; }
  friend Mat operator-(Mat x, const Mat& y) { return x -= y; }
  friend Mat operator*(double s, Mat x) { return x *= s; }
  friend Mat operator*(Mat x, double s) { return x *= s; }
};

inline Mat identity(int n, double scale = 1.0) {
  Mat m(n);
  for (int i = 0; i < n; ++i) m(i, i) = scale;
  return m;
}

inline Mat outer(const Vec& x, const Vec& y) {
  Mat m(x.n);
  for (int i = 0; i < x.n; ++i)
    for (int j = 0; j < x.n; ++j) m(i, j) = x[i] * y[j];
  return m;
}

inline Vec matvec(const Mat& m, const Vec& x) {
  Vec y(x.n);
  for (int i = 0; i < x.n; ++i) {
    double s = 0;
    for (int j = 0; j < x.n; ++j) s += m(i, j) * x[j];
    y[i] = s;
  }
  return y;
}

inline Mat matmul(const Mat& a, const Mat& b) {
  Mat c(a.n);
  for (int i = 0; i < a.n; ++i)
    for (int j = 0; j < a.n; ++j) {
      double s = 0;
      for (int k = 0; k < a.n; ++k) s += a(i, k) * b(k, j);
      c(i, j) = s;
    }
  return c;
}

inline Mat transpose(const Mat& m) {
  Mat t(m.n);
  for (int i = 0; i < m.n; ++i)
    for (int j = 0; j < m.n; ++j) t(i, j) = m(j, i);
  return t;
}

inline double trace(const Mat& m) {
  double s = 0;
  for (int i = 0; i < m.n; ++i) s += m(i, i);
  return s;
}

inline double frobenius(const Mat& m) {
  double s = 0;
  for (int i = 0; i < m.n * m.n; ++i) s += m.a[i] * m.a[i];
  return std::sqrt(s);
}

// Gaussian elimination with partial pivoting on a k x k system stored row-major.
// Handles the bordered (n+1) systems from implicit differentiation, so k may
// exceed kMaxDim. Returns false on (numerically) singular input.
bool solve_dense(int k, double* A, double* b);

// LU inverse of a small matrix. Asserts non-singularity.
Mat inverse(const Mat& m);

double determinant(const Mat& m);

// Eigenvalues of a symmetric matrix by cyclic Jacobi, ascending order.
std::vector<double> sym_eigenvalues(Mat m);

}  // namespace apla
