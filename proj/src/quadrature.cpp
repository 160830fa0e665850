#include "apla/quadrature.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <map>
#include <mutex>
#include <string>
#include <thread>

#include "apla/errors.hpp"
#include "apla/kernels.hpp"
#include "apla/rng.hpp"

namespace apla {

// ---- execution -------------------------------------------------------------

namespace {
std::atomic<int> g_max_threads{1};
}

void set_max_threads(int t) { g_max_threads = std::max(1, t); }
int max_threads() { return g_max_threads; }

void parallel_for(size_t count, const std::function<void(size_t, size_t)>& body) {
  const int workers = std::min<int>(g_max_threads, static_cast<int>((count + 8191) / 8192));
  if (workers <= 1) {
    body(0, count);
    return;
  }
  constexpr size_t block = 8192;
  std::atomic<size_t> next{0};
  auto run = [&]() {
    for (;;) {
      const size_t b = next.fetch_add(block);
      if (b >= count) return;
      body(b, std::min(count, b + block));
    }
  };
  std::vector<std::thread> pool;
  for (int t = 1; t < workers; ++t) pool.emplace_back(run);
  run();
  for (auto& th : pool) th.join();
}

// ---- Gauss-Legendre --------------------------------------------------------

void gauss_legendre(int m, std::vector<double>& nodes, std::vector<double>& weights) {
  nodes.assign(static_cast<size_t>(m), 0.0);
  weights.assign(static_cast<size_t>(m), 0.0);
  for (int i = 0; i < (m + 1) / 2; ++i) {
    // Newton from the Chebyshev estimate
    double x = std::cos(M_PI * (i + 0.75) / (m + 0.5));
    double pp = 0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 0; j < m; ++j) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j + 1.0) * x * p1 - j * p2) / (j + 1.0);
      }
      pp = m * (x * p0 - p1) / (x * x - 1.0);
      const double dx = p0 / pp;
      x -= dx;
      if (std::fabs(dx) < 1e-15) break;
    }
    nodes[static_cast<size_t>(i)] = -x;
    nodes[static_cast<size_t>(m - 1 - i)] = x;
    const double w = 2.0 / ((1.0 - x * x) * pp * pp);
    weights[static_cast<size_t>(i)] = w;
    weights[static_cast<size_t>(m - 1 - i)] = w;
  }
}

// ---- adaptive Gauss-Kronrod 7-15 -------------------------------------------

namespace {

// nodes/weights on [-1, 1]
constexpr double kKronrodX[15] = {
    -0.991455371120813, -0.949107912342759, -0.864864423359769, -0.741531185599394,
    -0.586087235467691, -0.405845151377397, -0.207784955007898, 0.0,
    0.207784955007898,  0.405845151377397,  0.586087235467691,  0.741531185599394,
    0.864864423359769,  0.949107912342759,  0.991455371120813};
constexpr double kKronrodW[15] = {
    0.022935322010529, 0.063092092629979, 0.104790010322250, 0.140653259715525,
    0.169004726639267, 0.190350578064785, 0.204432940075298, 0.209482141084728,
    0.204432940075298, 0.190350578064785, 0.169004726639267, 0.140653259715525,
    0.104790010322250, 0.063092092629979, 0.022935322010529};
constexpr double kGaussW[7] = {0.129484966168870, 0.279705391489277, 0.381830050505119,
                               0.417959183673469, 0.381830050505119, 0.279705391489277,
                               0.129484966168870};

struct Gk {
  double value;
  double err;
};

Gk gk15(const std::function<double(double)>& f, double a, double b) {
  const double c = 0.5 * (a + b), h = 0.5 * (b - a);
  double k = 0, g = 0;
  for (int i = 0; i < 15; ++i) {
    const double v = f(c + h * kKronrodX[i]);
    k += kKronrodW[i] * v;
    if (i % 2 == 1) g += kGaussW[i / 2] * v;
  }
  return {k * h, std::fabs((k - g) * h)};
}

}  // namespace

double integrate_1d(const std::function<double(double)>& f, double a, double b, double rel_tol,
                    double abs_tol) {
  struct Seg {
    double a, b;
    Gk g;
  };
  const Gk first = gk15(f, a, b);
  const double floor_tol = std::max(abs_tol, 1e-300);
  if (first.err <= std::max(std::fabs(first.value) * rel_tol, floor_tol)) return first.value;
  std::vector<Seg> stack{{a, b, first}};
  double total = 0;
  int budget = 4000;  // gk15 evaluations; graceful degradation on pathological tails
  while (!stack.empty()) {
    const Seg s = stack.back();
    stack.pop_back();
    const double tol = std::max(std::fabs(s.g.value) * rel_tol, floor_tol);
    const double width = s.b - s.a;
    if (s.g.err <= tol || budget <= 0 || width <= 1e-14 * (std::fabs(s.a) + std::fabs(s.b))) {
      total += s.g.value;
      continue;
    }
    const double c = 0.5 * (s.a + s.b);
    budget -= 2;
    stack.push_back({s.a, c, gk15(f, s.a, c)});
    stack.push_back({c, s.b, gk15(f, c, s.b)});
  }
  return total;
}

// tanh-sinh on (0,1): spectrally accurate even with algebraic endpoint
// singularities (bubble profiles carry fractional powers of rho at 0)
static double tanh_sinh_01(const std::function<double(double)>& f) {
  const double pi2 = 0.5 * M_PI;
  double h = 0.5;
  double prev = 0.0, result = 0.0;
  for (int level = 0; level < 9; ++level, h *= 0.5) {
    const int K = static_cast<int>(std::ceil(6.8 / h));
    double s = 0;
    for (int k = -K; k <= K; ++k) {
      const double t = k * h;
      const double u = pi2 * std::sinh(t);
      const double e = std::exp(-2.0 * std::fabs(u));
      const double xm = e / (1.0 + e);  // distance to the nearer endpoint
      const double x = (t < 0) ? xm : 1.0 - xm;
      const double dxdt = pi2 * std::cosh(t) * 2.0 * e / ((1.0 + e) * (1.0 + e));
      if (x > 0.0 && x < 1.0 && dxdt > 1e-320) s += f(x) * dxdt;
    }
    result = s * h;
    if (level >= 2 && std::fabs(result - prev) <= 1e-13 * std::fabs(result) + 1e-300) break;
    prev = result;
  }
  return result;
}

double radial_profile_integral(const std::function<double(double)>& g, int n) {
  auto integrand = [&](double r) { return g(r) * std::pow(r, n - 1); };
  double total = tanh_sinh_01(integrand);
  double lo = 1.0;
  double prev_seg = std::fabs(total);
  int non_decreasing = 0;
  for (int k = 0; k < 80; ++k) {
    const double hi = lo * 2.0;
    const double seg =
        integrate_1d(integrand, lo, hi, 1e-12, 1e-16 * (std::fabs(total) + 1e-30));
    total += seg;
    const double mag = std::fabs(seg);
    if (mag >= prev_seg && mag > 1e-14 * std::fabs(total)) {
      if (++non_decreasing >= 5)
        throw NumericError("tail-divergence", "radial tail fails the doubling comparison");
    } else {
      non_decreasing = 0;
    }
    // slowly decaying power-law tails: geometric completion once the
    // per-doubling ratio has stabilised below 1
    const double q = mag / prev_seg;
    if (k > 4 && seg > 0 && q < 0.97) {
      const double remainder = seg * q / (1.0 - q);
      if (remainder < 1e-13 * std::fabs(total)) {
        total += remainder;
        return total;
      }
      if (k == 79) total += remainder;
    }
    prev_seg = std::max(mag, 1e-300);
    lo = hi;
    if (mag < 1e-15 * std::max(1e-300, std::fabs(total)) && k > 6) break;
  }
  return total;
}

// ---- spheres and dual balls -------------------------------------------------

std::vector<SphereNode> sphere_quadrature(int n, int order) {
  const int K = order;
  std::vector<SphereNode> nodes;
  if (n == 2) {
    const int m = 2 * K;
    for (int i = 0; i < m; ++i) {
      const double phi = 2.0 * M_PI * i / m;
      nodes.push_back({Vec{std::cos(phi), std::sin(phi)}, 2.0 * M_PI / m});
    }
    return nodes;
  }
  std::vector<double> gx, gw;
  gauss_legendre(K, gx, gw);
  if (n == 3) {
    // GL in cos(theta), trapezoid in phi
    const int m = 2 * K;
    for (int i = 0; i < K; ++i) {
      const double ct = gx[static_cast<size_t>(i)];
      const double st = std::sqrt(std::max(0.0, 1.0 - ct * ct));
      for (int j = 0; j < m; ++j) {
        const double phi = 2.0 * M_PI * j / m;
        nodes.push_back({Vec{st * std::cos(phi), st * std::sin(phi), ct},
                         gw[static_cast<size_t>(i)] * (2.0 * M_PI / m)});
      }
    }
    return nodes;
  }
  if (n == 4) {
    // theta1 in (0,pi) with weight sin^2, GL in cos(theta2), trapezoid in phi
    const int m = 2 * K;
    for (int i = 0; i < K; ++i) {
      const double t1 = 0.5 * M_PI * (gx[static_cast<size_t>(i)] + 1.0);
      const double w1 = gw[static_cast<size_t>(i)] * 0.5 * M_PI;
      const double c1 = std::cos(t1), s1 = std::sin(t1);
      for (int j = 0; j < K; ++j) {
        const double c2 = gx[static_cast<size_t>(j)];
        const double s2 = std::sqrt(std::max(0.0, 1.0 - c2 * c2));
        for (int l = 0; l < m; ++l) {
          const double phi = 2.0 * M_PI * l / m;
          nodes.push_back(
              {Vec{c1, s1 * c2, s1 * s2 * std::cos(phi), s1 * s2 * std::sin(phi)},
               w1 * s1 * s1 * gw[static_cast<size_t>(j)] * (2.0 * M_PI / m)});
        }
      }
    }
    return nodes;
  }
  if (n == 5) {
    const int m = 2 * K;
    for (int i = 0; i < K; ++i) {
      const double t1 = 0.5 * M_PI * (gx[static_cast<size_t>(i)] + 1.0);
      const double w1 = gw[static_cast<size_t>(i)] * 0.5 * M_PI;
      const double c1 = std::cos(t1), s1 = std::sin(t1);
      for (int j = 0; j < K; ++j) {
        const double t2 = 0.5 * M_PI * (gx[static_cast<size_t>(j)] + 1.0);
        const double w2 = gw[static_cast<size_t>(j)] * 0.5 * M_PI;
        const double c2 = std::cos(t2), s2 = std::sin(t2);
        for (int l = 0; l < K; ++l) {
          const double c3 = gx[static_cast<size_t>(l)];
          const double s3 = std::sqrt(std::max(0.0, 1.0 - c3 * c3));
          for (int q = 0; q < m; ++q) {
            const double phi = 2.0 * M_PI * q / m;
            nodes.push_back({Vec{c1, s1 * c2, s1 * s2 * c3, s1 * s2 * s3 * std::cos(phi),
                                 s1 * s2 * s3 * std::sin(phi)},
                             w1 * s1 * s1 * s1 * w2 * s2 * s2 * gw[static_cast<size_t>(l)] *
                                 (2.0 * M_PI / m)});
          }
        }
      }
    }
    return nodes;
  }
  throw ConfigError("unsupported-dimension", "sphere quadrature supports n in {2,...,5}");
}

double sphere_integral(int n, const std::function<double(const Vec&)>& f, int order) {
  double s = 0;
  for (const SphereNode& node : sphere_quadrature(n, order)) s += node.weight * f(node.omega);
  return s;
}

namespace {

std::mutex g_ball_mutex;
std::map<std::string, double> g_ball_cache;

std::string norm_cache_key(const AnisotropicNorm& h) {
  char buf[256];
  switch (h.family()) {
    case AnisotropicNorm::Family::Euclidean:
      std::snprintf(buf, sizeof buf, "e:%d", h.dim());
      break;
    case AnisotropicNorm::Family::Quadratic: {
      std::string k = "q:" + std::to_string(h.dim());
      const Mat& M = h.quadratic_matrix();
      for (int i = 0; i < M.n; ++i)
        for (int j = 0; j < M.n; ++j) {
          std::snprintf(buf, sizeof buf, ":%.17g", M(i, j));
          k += buf;
        }
      return k;
    }
    case AnisotropicNorm::Family::QuarticBlend:
      std::snprintf(buf, sizeof buf, "b:%d:%.17g", h.dim(), h.quartic_eps());
      break;
  }
  return buf;
}

}  // namespace

double unit_dual_ball_volume(const AnisotropicNorm& h) {
  const int n = h.dim();
  const double omega_n = std::pow(M_PI, 0.5 * n) / std::tgamma(0.5 * n + 1.0);
  switch (h.family()) {
    case AnisotropicNorm::Family::Euclidean:
      return omega_n;
    case AnisotropicNorm::Family::Quadratic:
      // {x : x^T M^{-1} x <= 1} has volume omega_n sqrt(det M)
      return omega_n * std::sqrt(determinant(h.quadratic_matrix()));
    case AnisotropicNorm::Family::QuarticBlend: {
      const std::string key = norm_cache_key(h);
      {
        std::lock_guard<std::mutex> lock(g_ball_mutex);
        const auto it = g_ball_cache.find(key);
        if (it != g_ball_cache.end()) return it->second;
      }
      const double s =
          sphere_integral(n, [&](const Vec& w) { return std::pow(h.dual_value(w), -n); });
      const double vol = s / n;
      std::lock_guard<std::mutex> lock(g_ball_mutex);
      g_ball_cache[key] = vol;
      return vol;
    }
  }
  return omega_n;
}

double radial_reduce(const AnisotropicNorm& h, const std::function<double(double)>& g, int n) {
  return n * unit_dual_ball_volume(h) * radial_profile_integral(g, n);
}

double radial_reduce_weighted(const AnisotropicNorm& h, const std::function<double(double)>& g,
                              const std::function<double(const Vec&)>& q, int n) {
  const double ang =
      sphere_integral(n, [&](const Vec& w) { return q(w) * std::pow(h.dual_value(w), -n); });
  return ang * radial_profile_integral(g, n);
}

// ---- rule construction ------------------------------------------------------

namespace {

constexpr int kHaltonBases[kMaxDim] = {2, 3, 5, 7, 11};

double radical_inverse(uint64_t index, int base) {
  double inv = 1.0 / base, f = inv, r = 0.0;
  while (index > 0) {
    r += f * static_cast<double>(index % static_cast<uint64_t>(base));
    index /= static_cast<uint64_t>(base);
    f *= inv;
  }
  return r;
}

// quantile of the symmetric density  g(t) = ((alpha-1)/2) (1+|t|)^{-alpha}
double heavy_tail_quantile(double u, double alpha) {
  const double w = 2.0 * std::fabs(u - 0.5);
  const double t = std::pow(std::max(1e-17, 1.0 - w), -1.0 / (alpha - 1.0)) - 1.0;
  return u >= 0.5 ? t : -t;
}

double heavy_tail_density(double t, double alpha) {
  return 0.5 * (alpha - 1.0) * std::pow(1.0 + std::fabs(t), -alpha);
}

double witness_closed_form(int n) {
  // int (1+|x|^2)^{-n} dx via the 1-D radial oracle
  const double omega_n = std::pow(M_PI, 0.5 * n) / std::tgamma(0.5 * n + 1.0);
  const double one_d =
      radial_profile_integral([n](double r) { return std::pow(1.0 + r * r, -n); }, n);
  return n * omega_n * one_d;
}

std::shared_ptr<QuadratureRule> build_tensor(int n, const RuleParams& params, uint64_t seed) {
  auto rule = std::make_shared<QuadratureRule>();
  rule->n = n;
  rule->kind = RuleKind::TensorMapped;
  rule->params = params;
  rule->seed = seed;
  const int m = params.order;
  const double L = params.scale;
  std::vector<double> gx, gw;
  gauss_legendre(m, gx, gw);
  std::vector<double> x1(static_cast<size_t>(m)), w1(static_cast<size_t>(m));
  for (int i = 0; i < m; ++i) {
    const double t = gx[static_cast<size_t>(i)];
    const double half_pi_t = 0.5 * M_PI * t;
    x1[static_cast<size_t>(i)] = L * std::tan(half_pi_t);
    const double c = std::cos(half_pi_t);
    w1[static_cast<size_t>(i)] = gw[static_cast<size_t>(i)] * L * 0.5 * M_PI / (c * c);
  }
  size_t total = 1;
  for (int a = 0; a < n; ++a) total *= static_cast<size_t>(m);
  for (int a = 0; a < n; ++a) rule->axes[static_cast<size_t>(a)].resize(total);
  rule->weights.resize(total);
  for (size_t i = 0; i < total; ++i) {
    size_t rest = i;
    double w = 1.0;
    for (int a = 0; a < n; ++a) {
      const size_t idx = rest % static_cast<size_t>(m);
      rest /= static_cast<size_t>(m);
      rule->axes[static_cast<size_t>(a)][i] = x1[idx];
      w *= w1[idx];
    }
    rule->weights[i] = w;
  }
  rule->truncation_radius = std::sqrt(static_cast<double>(n)) * x1.back();
  return rule;
}

std::shared_ptr<QuadratureRule> build_polar(int n, const RuleParams& params, uint64_t seed) {
  auto rule = std::make_shared<QuadratureRule>();
  rule->n = n;
  rule->kind = RuleKind::PolarMapped;
  rule->params = params;
  rule->seed = seed;
  const int mr = params.radial_order;
  const double L = params.scale;
  Vec center = params.center;
  if (center.n == 0) center = Vec(n);

  std::vector<double> gx, gw;
  gauss_legendre(mr, gx, gw);
  const auto sphere = sphere_quadrature(n, params.angular_order);

  const size_t total = static_cast<size_t>(mr) * sphere.size();
  for (int a = 0; a < n; ++a) rule->axes[static_cast<size_t>(a)].resize(total);
  rule->weights.resize(total);
  size_t idx = 0;
  for (int i = 0; i < mr; ++i) {
    const double t = gx[static_cast<size_t>(i)];
    const double angle = 0.25 * M_PI * (t + 1.0);
    const double rho = L * std::tan(angle);
    const double c = std::cos(angle);
    const double drho = L * 0.25 * M_PI / (c * c);
    const double wr = gw[static_cast<size_t>(i)] * drho * std::pow(rho, n - 1);
    for (const SphereNode& sn : sphere) {
      for (int a = 0; a < n; ++a)
        rule->axes[static_cast<size_t>(a)][idx] = center[a] + rho * sn.omega[a];
      rule->weights[idx] = wr * sn.weight;
      ++idx;
    }
  }
  rule->truncation_radius = L * std::tan(0.25 * M_PI * (gx.back() + 1.0));
  return rule;
}

std::shared_ptr<QuadratureRule> build_importance(int n, const RuleParams& params, uint64_t seed) {
  auto rule = std::make_shared<QuadratureRule>();
  rule->n = n;
  rule->kind = RuleKind::LowDiscrepancyImportance;
  rule->params = params;
  rule->seed = seed;
  const size_t N = params.count;
  const double alpha = params.tail_exponent;
  const double L = params.scale;
  std::vector<Vec> centers = params.centers;
  if (centers.empty()) centers.push_back(Vec(n));
  const size_t K = centers.size();

  Rng rng(seed ^ 0x9e3779b97f4a7c15ULL);
  double shift[kMaxDim];
  for (int a = 0; a < n; ++a) shift[a] = rng.uniform();

  for (int a = 0; a < n; ++a) rule->axes[static_cast<size_t>(a)].resize(N);
  rule->weights.resize(N);

  const double inv_N = 1.0 / static_cast<double>(N);
  for (size_t i = 0; i < N; ++i) {
    const Vec& c = centers[i % K];
    Vec x(n);
    for (int a = 0; a < n; ++a) {
      double u = radical_inverse(i + 1, kHaltonBases[a]) + shift[a];
      u -= std::floor(u);
      x[a] = c[a] + L * heavy_tail_quantile(u, alpha);
    }
    // mixture density over all centers
    double q = 0;
    for (size_t k = 0; k < K; ++k) {
      double qk = 1.0;
      for (int a = 0; a < n; ++a)
        qk *= heavy_tail_density((x[a] - centers[k][a]) / L, alpha) / L;
      q += qk;
    }
    q /= static_cast<double>(K);
    for (int a = 0; a < n; ++a) rule->axes[static_cast<size_t>(a)][i] = x[a];
    rule->weights[i] = inv_N / q;
  }
  // 0.9999 per-axis quantile as the nominal coverage radius
  rule->truncation_radius =
      L * (std::pow(1e-4, -1.0 / (alpha - 1.0)) - 1.0) * std::sqrt(static_cast<double>(n));
  return rule;
}

}  // namespace

RulePtr build_rule(int n, RuleKind kind, RuleParams params, uint64_t seed) {
  if (n < 2 || n > kMaxDim)
    throw ConfigError("unsupported-dimension", "rules support n in {2,...,5}");
  if (kind == RuleKind::TensorMapped && n > 3)
    throw ConfigError("unsupported-rule", "TensorMapped rules support n <= 3 only");
  std::shared_ptr<QuadratureRule> rule;
  if (kind == RuleKind::TensorMapped) {
    rule = build_tensor(n, params, seed);
    if (params.order >= 8) {
      RuleParams hp = params;
      hp.order = params.order / 2;
      rule->half = build_tensor(n, hp, seed);
    }
  } else if (kind == RuleKind::PolarMapped) {
    rule = build_polar(n, params, seed);
    if (params.radial_order >= 8 && params.angular_order >= 8) {
      RuleParams hp = params;
      hp.radial_order = params.radial_order / 2;
      hp.angular_order = params.angular_order / 2;
      rule->half = build_polar(n, hp, seed);
    }
  } else {
    rule = build_importance(n, params, seed);
  }
  const double ref = witness_closed_form(n);
  const IntegralResult w = integrate(
      *rule, [](const Vec& x) { return std::pow(1.0 + norm2sq(x), -x.n); });
  rule->witness_rel_error = std::fabs(w.value - ref) / std::fabs(ref);
  return rule;
}

// ---- integration ------------------------------------------------------------

namespace {

void evaluate_nodes(const QuadratureRule& rule, const ScalarFn& f, std::vector<double>& out) {
  const size_t N = rule.size();
  out.resize(N);
  parallel_for(N, [&](size_t b, size_t e) {
    for (size_t i = b; i < e; ++i) out[i] = f(rule.node(i));
  });
}

void check_finite(const std::vector<double>& vals) {
  for (size_t i = 0; i < vals.size(); ++i)
    if (!std::isfinite(vals[i]))
      throw NumericError("non-finite-integrand",
                         "integrand not finite at node " + std::to_string(i));
}

double weighted(const std::vector<double>& v, const std::vector<double>& w) {
  return kernels::weighted_sum(v.data(), w.data(), v.size());
}

}  // namespace

IntegralResult integrate(const QuadratureRule& rule, const ScalarFn& f) {
  std::vector<double> vals;
  evaluate_nodes(rule, f, vals);
  check_finite(vals);
  IntegralResult res;
  res.value = weighted(vals, rule.weights);
  if (rule.kind != RuleKind::LowDiscrepancyImportance && rule.half) {
    std::vector<double> hv;
    evaluate_nodes(*rule.half, f, hv);
    check_finite(hv);
    res.err_estimate = std::fabs(res.value - weighted(hv, rule.half->weights));
  } else if (rule.kind == RuleKind::LowDiscrepancyImportance) {
    // split-half variance over node parity
    double se = 0, so = 0;
    for (size_t i = 0; i < vals.size(); ++i) {
      const double c = vals[i] * rule.weights[i];
      if (i % 2 == 0)
        se += c;
      else
        so += c;
    }
    res.err_estimate = std::fabs(se - so);
  } else {
    res.err_estimate = std::fabs(res.value) * rule.witness_rel_error;
  }
  return res;
}

IntegralResult integrate_values(const QuadratureRule& rule, const std::vector<double>& values) {
  if (values.size() != rule.size())
    throw ConfigError("field-rule-mismatch", "value count does not match rule node count");
  check_finite(values);
  IntegralResult res;
  res.value = weighted(values, rule.weights);
  double abs_mass = 0;
  for (size_t i = 0; i < values.size(); ++i) abs_mass += std::fabs(values[i] * rule.weights[i]);
  res.err_estimate = abs_mass * std::max(rule.witness_rel_error, 1e-14);
  return res;
}

// ---- box rule ----------------------------------------------------------------

BoxRule box_rule(const Vec& center, const Vec& halfwidth, int order_per_axis) {
  BoxRule rule;
  const int n = center.n;
  rule.n = n;
  std::vector<double> gx, gw;
  gauss_legendre(order_per_axis, gx, gw);
  size_t total = 1;
  for (int a = 0; a < n; ++a) total *= static_cast<size_t>(order_per_axis);
  for (int a = 0; a < n; ++a) rule.axes[static_cast<size_t>(a)].resize(total);
  rule.weights.resize(total);
  for (size_t i = 0; i < total; ++i) {
    size_t rest = i;
    double w = 1.0;
    for (int a = 0; a < n; ++a) {
      const size_t idx = rest % static_cast<size_t>(order_per_axis);
      rest /= static_cast<size_t>(order_per_axis);
      rule.axes[static_cast<size_t>(a)][i] = center[a] + halfwidth[a] * gx[idx];
      w *= gw[idx] * halfwidth[a];
    }
    rule.weights[i] = w;
  }
  return rule;
}

double box_integrate(const BoxRule& rule, const ScalarFn& f) {
  const size_t N = rule.size();
  std::vector<double> vals(N);
  parallel_for(N, [&](size_t b, size_t e) {
    for (size_t i = b; i < e; ++i) vals[i] = f(rule.node(i));
  });
  check_finite(vals);
  return kernels::weighted_sum(vals.data(), rule.weights.data(), N);
}

}  // namespace apla
