#include "apla/norms.hpp"

#include <algorithm>
#include <cmath>

#include "apla/errors.hpp"
#include "apla/rng.hpp"

namespace apla {

// ---- small dense linear algebra ------------------------------------------

bool solve_dense(int k, double* A, double* b) {
  for (int col = 0; col < k; ++col) {
    int piv = col;
    double best = std::fabs(A[col * k + col]);
    for (int r = col + 1; r < k; ++r) {
      const double v = std::fabs(A[r * k + col]);
      if (v > best) {
        best = v;
        piv = r;
      }
    }
    if (best < 1e-300) return false;
    if (piv != col) {
      for (int c = 0; c < k; ++c) std::swap(A[piv * k + c], A[col * k + c]);
      std::swap(b[piv], b[col]);
    }
    const double inv = 1.0 / A[col * k + col];
    for (int r = col + 1; r < k; ++r) {
      const double f = A[r * k + col] * inv;
      if (f == 0.0) continue;
      for (int c = col; c < k; ++c) A[r * k + c] -= f * A[col * k + c];
      b[r] -= f * b[col];
    }
  }
  for (int r = k - 1; r >= 0; --r) {
    double s = b[r];
    for (int c = r + 1; c < k; ++c) s -= A[r * k + c] * b[c];
    b[r] = s / A[r * k + r];
  }
  return true;
}

Mat inverse(const Mat& m) {
  const int n = m.n;
  Mat inv(n);
  for (int col = 0; col < n; ++col) {
    double A[kMaxDim * kMaxDim];
    double b[kMaxDim];
    for (int i = 0; i < n * n; ++i) A[i] = m.a[static_cast<size_t>(i)];
    for (int i = 0; i < n; ++i) b[i] = (i == col) ? 1.0 : 0.0;
    const bool ok = solve_dense(n, A, b);
    if (!ok) throw NumericError("singular-matrix", "inverse of singular matrix");
    for (int i = 0; i < n; ++i) inv(i, col) = b[i];
  }
  return inv;
}

double determinant(const Mat& m) {
  const int n = m.n;
  double A[kMaxDim * kMaxDim];
  for (int i = 0; i < n * n; ++i) A[i] = m.a[static_cast<size_t>(i)];
  double det = 1.0;
  for (int col = 0; col < n; ++col) {
    int piv = col;
    double best = std::fabs(A[col * n + col]);
    for (int r = col + 1; r < n; ++r)
      if (std::fabs(A[r * n + col]) > best) {
        best = std::fabs(A[r * n + col]);
        piv = r;
      }
    if (best == 0.0) return 0.0;
    if (piv != col) {
      for (int c = 0; c < n; ++c) std::swap(A[piv * n + c], A[col * n + c]);
      det = -det;
    }
    det *= A[col * n + col];
    const double inv = 1.0 / A[col * n + col];
    for (int r = col + 1; r < n; ++r) {
      const double f = A[r * n + col] * inv;
      for (int c = col; c < n; ++c) A[r * n + c] -= f * A[col * n + c];
    }
  }
  return det;
}

std::vector<double> sym_eigenvalues(Mat m) {
  const int n = m.n;
  for (int sweep = 0; sweep < 64; ++sweep) {
    double off = 0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) off += m(i, j) * m(i, j);
    if (off < 1e-28) break;
    for (int p = 0; p < n - 1; ++p)
      for (int q = p + 1; q < n; ++q) {
        if (std::fabs(m(p, q)) < 1e-30) continue;
        const double theta = (m(q, q) - m(p, p)) / (2 * m(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::fabs(theta) + std::sqrt(theta * theta + 1));
        const double c = 1.0 / std::sqrt(t * t + 1), s = t * c;
        for (int k = 0; k < n; ++k) {
          const double mkp = m(k, p), mkq = m(k, q);
          m(k, p) = c * mkp - s * mkq;
          m(k, q) = s * mkp + c * mkq;
        }
        for (int k = 0; k < n; ++k) {
          const double mpk = m(p, k), mqk = m(q, k);
          m(p, k) = c * mpk - s * mqk;
          m(q, k) = s * mpk + c * mqk;
        }
      }
  }
  std::vector<double> ev(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) ev[static_cast<size_t>(i)] = m(i, i);
  std::sort(ev.begin(), ev.end());
  return ev;
}

// ---- norm families ---------------------------------------------------------

AnisotropicNorm AnisotropicNorm::euclidean(int n) {
  AnisotropicNorm h;
  h.family_ = Family::Euclidean;
  h.n_ = n;
  return h;
}

AnisotropicNorm AnisotropicNorm::quadratic(const Mat& M) {
  AnisotropicNorm h;
  h.family_ = Family::Quadratic;
  h.n_ = M.n;
  h.M_ = M;
  h.Minv_ = inverse(M);
  const auto ev = sym_eigenvalues(M);
  if (ev.front() <= 0)
    throw Error("not-uniformly-convex", "quadratic norm requires a positive-definite matrix");
  return h;
}

AnisotropicNorm AnisotropicNorm::quartic_blend(int n, double eps) {
  if (eps < 0 || eps > 1.0)
    throw Error("not-uniformly-convex",
                "quartic blend parameter must lie in [0, 1], got " + std::to_string(eps));
  AnisotropicNorm h;
  h.family_ = Family::QuarticBlend;
  h.n_ = n;
  h.eps_ = eps;
  // admissibility: sampled ellipticity constants must be positive
  const auto est = ellipticity_constants(h, 256, 12345);
  (void)est;
  return h;
}

double AnisotropicNorm::value(const Vec& xi) const {
  switch (family_) {
    case Family::Euclidean:
      return norm2(xi);
    case Family::Quadratic:
      return std::sqrt(std::max(0.0, dot(xi, matvec(M_, xi))));
    case Family::QuarticBlend: {
      double s2 = 0, s4 = 0;
      for (int i = 0; i < n_; ++i) {
        const double q = xi[i] * xi[i];
        s2 += q;
        s4 += q * q;
      }
      return std::pow(s2 * s2 + eps_ * s4, 0.25);
    }
  }
  return 0;
}

Vec AnisotropicNorm::grad(const Vec& xi) const {
  const double r = norm2(xi);
  if (r == 0.0) throw Error("derivative-at-origin", "norm gradient requested at the origin");
  switch (family_) {
    case Family::Euclidean:
      return xi * (1.0 / r);
    case Family::Quadratic: {
      const Vec mx = matvec(M_, xi);
      return mx * (1.0 / std::sqrt(dot(xi, mx)));
    }
    case Family::QuarticBlend: {
      // H = Q^{1/4}, Q = |xi|^4 + eps*sum xi_i^4
      double s2 = 0, s4 = 0;
      for (int i = 0; i < n_; ++i) {
        const double q = xi[i] * xi[i];
        s2 += q;
        s4 += q * q;
      }
      const double Q = s2 * s2 + eps_ * s4;
      Vec g(n_);
      const double f = 0.25 * std::pow(Q, -0.75);
      for (int i = 0; i < n_; ++i)
        g[i] = f * (4.0 * s2 * xi[i] + 4.0 * eps_ * xi[i] * xi[i] * xi[i]);
      return g;
    }
  }
  return Vec(n_);
}

Mat AnisotropicNorm::hess(const Vec& xi) const {
  const double r = norm2(xi);
  if (r == 0.0) throw Error("derivative-at-origin", "norm Hessian requested at the origin");
  switch (family_) {
    case Family::Euclidean: {
      Mat h = identity(n_, 1.0 / r);
      const Vec u = xi * (1.0 / r);
      h -= outer(u, u) * (1.0 / r);
      return h;
    }
    case Family::Quadratic: {
      const Vec mx = matvec(M_, xi);
      const double H = std::sqrt(dot(xi, mx));
      Mat h = M_ * (1.0 / H);
      h -= outer(mx, mx) * (1.0 / (H * H * H));
      return h;
    }
    case Family::QuarticBlend: {
      double s2 = 0, s4 = 0;
      for (int i = 0; i < n_; ++i) {
        const double q = xi[i] * xi[i];
        s2 += q;
        s4 += q * q;
      }
      const double Q = s2 * s2 + eps_ * s4;
      Vec gQ(n_);
      for (int i = 0; i < n_; ++i) gQ[i] = 4.0 * s2 * xi[i] + 4.0 * eps_ * xi[i] * xi[i] * xi[i];
      Mat hQ = identity(n_, 4.0 * s2);
      hQ += outer(xi, xi) * 8.0;
      for (int i = 0; i < n_; ++i) hQ(i, i) += 12.0 * eps_ * xi[i] * xi[i];
      Mat h = hQ * (0.25 * std::pow(Q, -0.75));
      h -= outer(gQ, gQ) * (0.1875 * std::pow(Q, -1.75));  // 3/16
      return h;
    }
  }
  return Mat(n_);
}

bool AnisotropicNorm::has_analytic_dual() const { return family_ != Family::QuarticBlend; }

namespace {

// one Newton step on F(xi, mu) = [x - mu*gradH(xi); 1 - H(xi)]
bool newton_polish(const AnisotropicNorm& h, const Vec& x, Vec& xi, double& mu, int max_iter,
                   int& used) {
  const int n = x.n;
  for (int k = 0; k < max_iter; ++k) {
    ++used;
    const Vec g = h.grad(xi);
    const Mat hh = h.hess(xi);
    double A[(kMaxDim + 1) * (kMaxDim + 1)];
    double b[kMaxDim + 1];
    const int m = n + 1;
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) A[i * m + j] = mu * hh(i, j);
      A[i * m + n] = g[i];
      b[i] = x[i] - mu * g[i];
    }
    for (int j = 0; j < n; ++j) A[n * m + j] = g[j];
    A[n * m + n] = 0.0;
    b[n] = 1.0 - h.value(xi);
    if (!solve_dense(m, A, b)) return false;
    Vec dxi(n);
    for (int i = 0; i < n; ++i) dxi[i] = b[i];
    xi += dxi;
    mu += b[n];
    if (!(std::isfinite(mu) && std::isfinite(norm2(xi)))) return false;
    if (norm2(dxi) < 1e-13 * (1.0 + norm2(xi))) return true;
  }
  return false;
}

}  // namespace

// Maximize <x, xi> over {H(xi) = 1}: Newton on the KKT system from the given
// start, with a projected-ascent fallback when Newton strays (convergence
// tol 1e-12 scale, iteration cap per call).
DualSolve AnisotropicNorm::dual_solve_from(const Vec& x, const Vec& start, int iter_cap) const {
  DualSolve out;
  // (diagnostic context retained in DualSolve)
  int used = 0;

  Vec xi = start * (1.0 / value(start));
  double mu = dot(x, xi);
  if (newton_polish(*this, x, xi, mu, std::min(30, iter_cap), used)) {
    xi *= 1.0 / value(xi);
    out.xi = xi;
    out.h0 = dot(x, xi);
    out.iterations = used;
    out.converged = out.h0 > 0;
    if (out.converged) return out;
  }

  // fallback: projected ascent with adaptive step, then Newton again
  xi = start * (1.0 / value(start));
  double step = 0.5;
  double fprev = dot(x, xi);
  for (; used < iter_cap; ++used) {
    const Vec g = grad(xi);
    const Vec t = x - g * (dot(x, g) / dot(g, g));
    Vec cand = xi + t * (step / (norm2(x) + 1e-300));
    cand *= 1.0 / value(cand);
    const double f = dot(x, cand);
    if (f >= fprev) {
      const double rel_step = norm2(cand - xi);
      xi = cand;
      fprev = f;
      step *= 1.3;
      if (rel_step < 1e-9) break;
    } else {
      step *= 0.5;
      if (step < 1e-14) break;
    }
  }
  mu = dot(x, xi);
  out.converged = newton_polish(*this, x, xi, mu, iter_cap - used, used);
  xi *= 1.0 / value(xi);
  out.xi = xi;
  out.h0 = dot(x, xi);
  out.iterations = used;
  if (!out.converged) {
    const Vec g = grad(xi);
    const Vec res = x - g * out.h0;
    out.converged = norm2(res) <= 1e-10 * (1.0 + norm2(x));
  }
  return out;
}

DualSolve AnisotropicNorm::dual_solve(const Vec& x) const {
  DualSolve best;
  best.h0 = -1;
  for (int axis = 0; axis < n_; ++axis)
    for (double sgn : {1.0, -1.0}) {
      DualSolve s = dual_solve_from(x, unit_axis(n_, axis, sgn), 200);
      s.x = x;
      if (s.h0 > best.h0) best = s;
    }
  if (!best.converged)
    throw NumericError("dual-convergence", "dual norm maximizer failed to converge");
  return best;
}

DualSolve AnisotropicNorm::dual_solve_fast(const Vec& x) const {
  DualSolve s;
  s.x = x;
  switch (family_) {
    case Family::Euclidean: {
      s.h0 = norm2(x);
      s.xi = x * (1.0 / s.h0);
      s.converged = true;
      return s;
    }
    case Family::Quadratic: {
      const Vec mx = matvec(Minv_, x);
      s.h0 = std::sqrt(dot(x, mx));
      s.xi = mx * (1.0 / s.h0);
      s.converged = true;
      return s;
    }
    case Family::QuarticBlend: {
      DualSolve r = dual_solve_from(x, x, 260);
      if (!r.converged) r = dual_solve(x);
      r.x = x;
      return r;
    }
  }
  return s;
}

Mat AnisotropicNorm::dual_hess_from_solve(const DualSolve& s) const {
  if (family_ != Family::QuarticBlend) return dual_hess(s.x);
  const Vec g = grad(s.xi);
  const Mat hh = hess(s.xi);
  const int n = n_;
  const int m = n + 1;
  Mat out(n);
  for (int col = 0; col < n; ++col) {
    double A[(kMaxDim + 1) * (kMaxDim + 1)];
    double b[kMaxDim + 1];
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) A[i * m + j] = s.h0 * hh(i, j);
      A[i * m + n] = g[i];
      b[i] = (i == col ? 1.0 : 0.0) - g[i] * s.xi[col];
    }
    for (int j = 0; j < n; ++j) A[n * m + j] = g[j];
    A[n * m + n] = 0.0;
    b[n] = 0.0;
    if (!solve_dense(m, A, b))
      throw NumericError("dual-convergence", "singular bordered system in dual Hessian");
    for (int i = 0; i < n; ++i) out(i, col) = b[i];
  }
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const double v = 0.5 * (out(i, j) + out(j, i));
      out(i, j) = out(j, i) = v;
    }
  return out;
}

double AnisotropicNorm::dual_value(const Vec& x) const {
  if (norm2(x) == 0.0) return 0.0;
  switch (family_) {
    case Family::Euclidean:
      return norm2(x);
    case Family::Quadratic:
      return std::sqrt(std::max(0.0, dot(x, matvec(Minv_, x))));
    case Family::QuarticBlend:
      return dual_solve_fast(x).h0;
  }
  return 0;
}

Vec AnisotropicNorm::dual_grad(const Vec& x) const {
  if (norm2(x) == 0.0) throw Error("derivative-at-origin", "dual gradient requested at the origin");
  switch (family_) {
    case Family::Euclidean:
      return x * (1.0 / norm2(x));
    case Family::Quadratic: {
      const Vec mx = matvec(Minv_, x);
      return mx * (1.0 / std::sqrt(dot(x, mx)));
    }
    case Family::QuarticBlend:
      // envelope rule: the maximizer has H(xi*) = 1 and equals grad H0
      return dual_solve_fast(x).xi;
  }
  return Vec(n_);
}

Mat AnisotropicNorm::dual_hess(const Vec& x) const {
  if (norm2(x) == 0.0) throw Error("derivative-at-origin", "dual Hessian requested at the origin");
  switch (family_) {
    case Family::Euclidean: {
      const double r = norm2(x);
      Mat h = identity(n_, 1.0 / r);
      const Vec u = x * (1.0 / r);
      h -= outer(u, u) * (1.0 / r);
      return h;
    }
    case Family::Quadratic: {
      const Vec mx = matvec(Minv_, x);
      const double H0 = std::sqrt(dot(x, mx));
      Mat h = Minv_ * (1.0 / H0);
      h -= outer(mx, mx) * (1.0 / (H0 * H0 * H0));
      return h;
    }
    case Family::QuarticBlend:
      // implicit differentiation of the maximizer: x = H0 * gradH(xi*), H(xi*) = 1
      return dual_hess_from_solve(dual_solve_fast(x));
  }
  return Mat(n_);
}

// ---- module operations -----------------------------------------------------

NormEval eval_norm_with_derivatives(const AnisotropicNorm& h, const Vec& xi) {
  NormEval e;
  e.H = h.value(xi);
  if (norm2(xi) == 0.0) {
    e.derivatives_defined = false;
    e.grad = Vec(h.dim());
    e.hess = Mat(h.dim());
    return e;
  }
  e.derivatives_defined = true;
  e.grad = h.grad(xi);
  e.hess = h.hess(xi);
  return e;
}

DualEval dual_norm(const AnisotropicNorm& h, const Vec& x) {
  DualEval d;
  if (norm2(x) == 0.0) {
    d.H0 = 0.0;
    d.grad_defined = false;
    d.grad = Vec(h.dim());
    return d;
  }
  d.H0 = h.dual_value(x);
  d.grad = h.dual_grad(x);
  d.grad_defined = true;
  return d;
}

Vec stress(const AnisotropicNorm& h, double p, const Vec& xi) {
  if (norm2(xi) == 0.0) return Vec(h.dim());
  const double H = h.value(xi);
  return h.grad(xi) * std::pow(H, p - 1.0);
}

Mat stress_jacobian(const AnisotropicNorm& h, double p, const Vec& xi) {
  if (norm2(xi) == 0.0)
    throw Error("jacobian-at-origin", "stress jacobian requested at the origin");
  const double H = h.value(xi);
  const Vec g = h.grad(xi);
  const Mat hh = h.hess(xi);
  Mat A = outer(g, g) * ((p - 1.0) * std::pow(H, p - 2.0));
  A += hh * std::pow(H, p - 1.0);
  return A;
}

EllipticityEstimate ellipticity_constants(const AnisotropicNorm& h, int samples, uint64_t seed) {
  Rng rng(seed);
  const int n = h.dim();
  double lo = 1e300, hi = -1e300;
  for (int s = 0; s < samples; ++s) {
    const Vec xi = rng.unit_vec(n);
    const Vec eta = rng.unit_vec(n);
    // 1/2 <D^2(H^2)(xi) eta, eta> with D^2(H^2) = 2(grad grad^T + H hess)
    const Vec g = h.grad(xi);
    const Mat hh = h.hess(xi);
    const double H = h.value(xi);
    const double q = dot(g, eta) * dot(g, eta) + H * dot(eta, matvec(hh, eta));
    lo = std::min(lo, q);
    hi = std::max(hi, q);
  }
  if (lo <= 0)
    throw Error("not-uniformly-convex", "sampled ellipticity lower bound is not positive");
  return EllipticityEstimate{lo, hi, samples};
}

double cph_constant(double p, const EllipticityEstimate& est) {
  const double sg = (2.0 - p) > 0 ? 1.0 : ((2.0 - p) < 0 ? -1.0 : 0.0);
  const double rho = (est.lambda_H / est.Lambda_H) * std::pow(p - 1.0, sg);
  return (1.0 - rho) * (1.0 - rho) / (1.0 + rho * rho);
}

}  // namespace apla
