#pragma once

// Foundation types: small vector algebra, the C0-infinity bump template with
// analytic derivatives, and the quadrature rules every other module sums over.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numbers>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

namespace wavescatter {

using Vec3 = std::array<double, 3>;
using Mat3 = std::array<std::array<double, 3>, 3>;

inline constexpr double pi = std::numbers::pi;
inline constexpr double four_pi = 4.0 * std::numbers::pi;

/// Default absolute tolerance for every quadrature in the library.
inline constexpr double default_tolerance = 1e-8;

// ---------------------------------------------------------------------------
// Vector helpers
// ---------------------------------------------------------------------------

inline double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
inline double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }
inline Vec3 operator+(const Vec3& a, const Vec3& b) { return {a[0] + b[0], a[1] + b[1], a[2] + b[2]}; }
inline Vec3 operator-(const Vec3& a, const Vec3& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
inline Vec3 operator-(const Vec3& a) { return {-a[0], -a[1], -a[2]}; }
inline Vec3 operator*(double s, const Vec3& a) { return {s * a[0], s * a[1], s * a[2]}; }
inline Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}
inline Vec3 mat_vec(const Mat3& m, const Vec3& v) {
  return {dot(m[0], v), dot(m[1], v), dot(m[2], v)};
}
inline double quadratic_form(const Mat3& m, const Vec3& v) { return dot(v, mat_vec(m, v)); }

/// Japanese bracket <z> = sqrt(1 + z^2).
inline double japanese(double z) { return std::sqrt(1.0 + z * z); }

// ---------------------------------------------------------------------------
// Bump template beta(s) = exp(-1/(1-s^2)) on |s| < 1
// ---------------------------------------------------------------------------

namespace detail {

/// exp(-1/q) with q = 1 - S, S = s^2; returns 0 outside the open unit ball.
inline double bump_of_square(double S) {
  const double q = 1.0 - S;
  if (q <= 0.0) return 0.0;
  return std::exp(-1.0 / q);
}

}  // namespace detail

/// beta(s), beta'(s), beta''(s) of the standard bump.
struct BumpJet1D {
  double value = 0.0;
  double d1 = 0.0;
  double d2 = 0.0;
};

inline BumpJet1D bump_jet(double s) {
  const double q = 1.0 - s * s;
  if (q <= 0.0) return {};
  const double b = std::exp(-1.0 / q);
  const double g1 = -2.0 * s / (q * q);
  const double g2 = -2.0 / (q * q) - 8.0 * s * s / (q * q * q);
  return {b, b * g1, b * (g1 * g1 + g2)};
}

// ---------------------------------------------------------------------------
// Polynomial modulation
// ---------------------------------------------------------------------------

struct Monomial {
  std::array<int, 3> powers{0, 0, 0};
  double coeff = 1.0;
};

/// Low-order polynomial P(y) = sum c_k y^alpha_k with analytic derivatives.
class Polynomial3 {
 public:
  Polynomial3() : terms_{Monomial{}} {}
  explicit Polynomial3(std::vector<Monomial> terms) : terms_(std::move(terms)) {
    for (const auto& m : terms_)
      for (int p : m.powers)
        if (p < 0) throw std::invalid_argument("Polynomial3: negative power");
  }

  static Polynomial3 constant(double c) { return Polynomial3({Monomial{{0, 0, 0}, c}}); }

  const std::vector<Monomial>& terms() const { return terms_; }

  int degree() const {
    int d = 0;
    for (const auto& m : terms_) d = std::max(d, m.powers[0] + m.powers[1] + m.powers[2]);
    return d;
  }

  double value(const Vec3& y) const {
    double s = 0.0;
    for (const auto& m : terms_) s += m.coeff * ipow(y[0], m.powers[0]) * ipow(y[1], m.powers[1]) * ipow(y[2], m.powers[2]);
    return s;
  }

  Vec3 gradient(const Vec3& y) const {
    Vec3 g{0, 0, 0};
    for (const auto& m : terms_)
      for (int k = 0; k < 3; ++k) {
        if (m.powers[k] == 0) continue;
        double t = m.coeff * m.powers[k];
        for (int i = 0; i < 3; ++i) t *= ipow(y[i], m.powers[i] - (i == k ? 1 : 0));
        g[k] += t;
      }
    return g;
  }

  Mat3 hessian(const Vec3& y) const {
    Mat3 h{};
    for (const auto& m : terms_)
      for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) {
          std::array<int, 3> p = m.powers;
          double t = m.coeff;
          t *= p[a];
          --p[a];
          if (p[a] < 0) continue;
          t *= p[b];
          --p[b];
          if (p[b] < 0 || t == 0.0) continue;
          h[a][b] += t * ipow(y[0], p[0]) * ipow(y[1], p[1]) * ipow(y[2], p[2]);
        }
    return h;
  }

 private:
  static double ipow(double x, int p) {
    double r = 1.0;
    for (int i = 0; i < p; ++i) r *= x;
    return r;
  }

  std::vector<Monomial> terms_;
};

// ---------------------------------------------------------------------------
// BumpFunction
// ---------------------------------------------------------------------------

/// One modulated radial bump: scale * P(x - center) * beta(|x - center| / radius).
struct BumpTerm {
  Vec3 center{0, 0, 0};
  double radius = 1.0;
  double scale = 1.0;
  Polynomial3 modulation{};
};

struct Ball {
  Vec3 center{0, 0, 0};
  double radius = 0.0;
};

/// A finite sum of modulated radial bumps on R^3. Value, gradient and Hessian
/// are exact; everything vanishes identically outside the union of the term
/// balls. An empty sum is the zero function.
class BumpFunction {
 public:
  BumpFunction() = default;
  explicit BumpFunction(std::vector<BumpTerm> terms) : terms_(std::move(terms)) {
    for (const auto& t : terms_)
      if (!(t.radius > 0.0)) throw std::invalid_argument("BumpFunction: support radius must be positive");
  }

  const std::vector<BumpTerm>& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }

  /// Smallest radius M with supp f inside {|x| <= M}.
  double support_radius() const {
    double m = 0.0;
    for (const auto& t : terms_) m = std::max(m, norm(t.center) + t.radius);
    return m;
  }

  double value(const Vec3& x) const {
    double s = 0.0;
    for (const auto& t : terms_) s += term_value(t, x);
    return s;
  }

  Vec3 gradient(const Vec3& x) const {
    Vec3 g{0, 0, 0};
    for (const auto& t : terms_) g = g + term_gradient(t, x);
    return g;
  }

  Mat3 hessian(const Vec3& x) const {
    Mat3 h{};
    for (const auto& t : terms_) {
      const Mat3 ht = term_hessian(t, x);
      for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) h[a][b] += ht[a][b];
    }
    return h;
  }

  static double term_value(const BumpTerm& t, const Vec3& x) {
    const Vec3 y = x - t.center;
    const double b = detail::bump_of_square(dot(y, y) / (t.radius * t.radius));
    if (b == 0.0) return 0.0;
    return t.scale * t.modulation.value(y) * b;
  }

  static Vec3 term_gradient(const BumpTerm& t, const Vec3& x) {
    const Vec3 y = x - t.center;
    const RadialParts r = radial_parts(t, y);
    if (r.b == 0.0) return {0, 0, 0};
    const double p = t.modulation.value(y);
    const Vec3 gp = t.modulation.gradient(y);
    // grad beta(|y|/M) = B1 * y
    return t.scale * (r.b * gp + (p * r.B1) * y);
  }

  static Mat3 term_hessian(const BumpTerm& t, const Vec3& x) {
    const Vec3 y = x - t.center;
    const RadialParts r = radial_parts(t, y);
    Mat3 h{};
    if (r.b == 0.0) return h;
    const double p = t.modulation.value(y);
    const Vec3 gp = t.modulation.gradient(y);
    const Mat3 hp = t.modulation.hessian(y);
    const Vec3 gb = r.B1 * y;
    for (int a = 0; a < 3; ++a)
      for (int c = 0; c < 3; ++c) {
        const double hb = (a == c ? r.B1 : 0.0) + r.B2 * y[a] * y[c];
        h[a][c] = t.scale * (hp[a][c] * r.b + gp[a] * gb[c] + gb[a] * gp[c] + p * hb);
      }
    return h;
  }

 private:
  struct RadialParts {
    double b = 0.0;   // beta
    double B1 = 0.0;  // grad beta = B1 * y
    double B2 = 0.0;  // hess beta = B1 I + B2 y y^T
  };

  static RadialParts radial_parts(const BumpTerm& t, const Vec3& y) {
    const double m2 = t.radius * t.radius;
    const double S = dot(y, y) / m2;
    const double q = 1.0 - S;
    if (q <= 0.0) return {};
    const double b = std::exp(-1.0 / q);
    const double q2 = q * q;
    const double B1 = -2.0 * b / (m2 * q2);
    // dB1/dS = -(2/M^2) b (2/q^3 - 1/q^4), and grad S = 2y/M^2
    const double dB1 = -(2.0 / m2) * b * (2.0 / (q2 * q) - 1.0 / (q2 * q2));
    return {b, B1, dB1 * 2.0 / m2};
  }

  std::vector<BumpTerm> terms_;
};

inline BumpFunction operator+(const BumpFunction& a, const BumpFunction& b) {
  std::vector<BumpTerm> t = a.terms();
  t.insert(t.end(), b.terms().begin(), b.terms().end());
  return BumpFunction(std::move(t));
}

inline BumpFunction operator*(double s, const BumpFunction& f) {
  if (s == 0.0) return {};
  std::vector<BumpTerm> t = f.terms();
  for (auto& term : t) term.scale *= s;
  return BumpFunction(std::move(t));
}

/// scale * exp(-1/(1-(|x-center|/M)^2)) inside the ball, 0 outside.
inline BumpFunction make_radial_bump(double M, double scale, const Vec3& center = {0, 0, 0}) {
  if (!(M > 0.0)) throw std::invalid_argument("make_radial_bump: support radius must be positive");
  return BumpFunction({BumpTerm{center, M, scale, Polynomial3{}}});
}

inline BumpFunction make_modulated_bump(double M, double scale, const Vec3& center, Polynomial3 modulation) {
  if (!(M > 0.0)) throw std::invalid_argument("make_modulated_bump: support radius must be positive");
  return BumpFunction({BumpTerm{center, M, scale, std::move(modulation)}});
}

// ---------------------------------------------------------------------------
// Gauss-Legendre
// ---------------------------------------------------------------------------

struct QuadratureRule1D {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// n-point Gauss-Legendre rule on [-1, 1] (Newton on the Legendre recurrence).
inline QuadratureRule1D gauss_legendre(int n) {
  if (n < 1) throw std::invalid_argument("gauss_legendre: n must be positive");
  QuadratureRule1D rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) p0 = 1.0, p1 = x;
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    // recompute derivative at the converged node
    double p0 = 1.0, p1 = x;
    for (int k = 2; k <= n; ++k) {
      const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    dp = n == 1 ? 1.0 : n * (x * p1 - p0) / (x * x - 1.0);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[i] = -x;
    rule.nodes[n - 1 - i] = x;
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
  return rule;
}

/// Gauss-Legendre rule mapped to [a, b].
inline QuadratureRule1D gauss_legendre(int n, double a, double b) {
  QuadratureRule1D r = gauss_legendre(n);
  const double h = 0.5 * (b - a), m = 0.5 * (a + b);
  for (std::size_t i = 0; i < r.nodes.size(); ++i) {
    r.nodes[i] = m + h * r.nodes[i];
    r.weights[i] *= h;
  }
  return r;
}

// ---------------------------------------------------------------------------
// Sphere and sigma grids
// ---------------------------------------------------------------------------

/// Product rule on S^2: Gauss-Legendre in cos(theta) x uniform in azimuth.
struct SphereGrid {
  std::vector<Vec3> nodes;
  std::vector<double> weights;
  int exactness_degree = 0;
  int level = 0;
  int n_polar = 0;    // Gauss-Legendre nodes in u = cos(theta)
  int n_azimuth = 0;  // uniform azimuth nodes
  std::vector<double> polar_nodes;  // u values, increasing

  std::size_t size() const { return nodes.size(); }

  /// Index of node (polar i, azimuth k).
  std::size_t index(int i, int k) const { return static_cast<std::size_t>(i) * n_azimuth + k; }

  template <class F>
  double integrate(F&& f) const {
    double s = 0.0;
    for (std::size_t q = 0; q < nodes.size(); ++q) s += weights[q] * f(nodes[q]);
    return s;
  }
};

/// level L uses 4L polar and 8L azimuthal nodes; exact through degree 8L - 1.
inline SphereGrid sphere_quadrature(int level) {
  if (level < 1) throw std::invalid_argument("sphere_quadrature: level must be >= 1");
  SphereGrid g;
  g.level = level;
  g.n_polar = 4 * level;
  g.n_azimuth = 8 * level;
  g.exactness_degree = std::min(2 * g.n_polar - 1, g.n_azimuth - 1);
  const QuadratureRule1D gl = gauss_legendre(g.n_polar);
  g.polar_nodes = gl.nodes;
  const double dphi = 2.0 * pi / g.n_azimuth;
  g.nodes.reserve(static_cast<std::size_t>(g.n_polar) * g.n_azimuth);
  for (int i = 0; i < g.n_polar; ++i) {
    const double u = gl.nodes[i];
    const double s = std::sqrt(std::max(0.0, 1.0 - u * u));
    for (int k = 0; k < g.n_azimuth; ++k) {
      const double phi = (k + 0.5) * dphi;
      g.nodes.push_back({s * std::cos(phi), s * std::sin(phi), u});
      g.weights.push_back(gl.weights[i] * dphi);
    }
  }
  return g;
}

/// Uniformly spaced samples sigma_i = sigma_min + i * spacing, i < count.
class SigmaGrid {
 public:
  SigmaGrid() = default;
  SigmaGrid(double sigma_min, double spacing, std::size_t count)
      : min_(sigma_min), spacing_(spacing), count_(count) {
    if (!(spacing > 0.0)) throw std::invalid_argument("SigmaGrid: spacing must be positive");
    if (count < 2) throw std::invalid_argument("SigmaGrid: need at least two samples");
  }

  /// Smallest grid with the given spacing whose nodes include a and cover [a, b].
  static SigmaGrid covering(double a, double b, double spacing) {
    if (!(b > a)) throw std::invalid_argument("SigmaGrid::covering: empty interval");
    const auto n = static_cast<std::size_t>(std::ceil((b - a) / spacing - 1e-9)) + 1;
    return SigmaGrid(a, spacing, std::max<std::size_t>(n, 2));
  }

  double operator[](std::size_t i) const { return min_ + static_cast<double>(i) * spacing_; }
  double min() const { return min_; }
  double max() const { return (*this)[count_ - 1]; }
  double spacing() const { return spacing_; }
  std::size_t size() const { return count_; }

 private:
  double min_ = 0.0;
  double spacing_ = 1.0;
  std::size_t count_ = 0;
};

// ---------------------------------------------------------------------------
// Adaptive Gauss-Kronrod (7, 15)
// ---------------------------------------------------------------------------

class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline constexpr std::array<double, 8> kronrod_x = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> kronrod_w = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr std::array<double, 4> gauss7_w = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

template <class F>
std::pair<double, double> gk15(F& f, double a, double b) {
  const double c = 0.5 * (a + b), h = 0.5 * (b - a);
  const double fc = f(c);
  double k = fc * kronrod_w[7];
  double g = fc * gauss7_w[3];
  for (int i = 0; i < 7; ++i) {
    const double dx = h * kronrod_x[i];
    const double s = f(c - dx) + f(c + dx);
    k += kronrod_w[i] * s;
    if (i % 2 == 1) g += gauss7_w[i / 2] * s;
  }
  return {k * h, std::abs((k - g) * h)};
}

}  // namespace detail

/// Integral of f over [a, b] to absolute tolerance tol by adaptive bisection of
/// G7-K15 panels. Throws ConvergenceError when the panel budget runs out.
template <class F>
double adaptive_line_integral(F&& f, double a, double b, double tol = default_tolerance,
                              int max_panels = 4000) {
  if (a == b) return 0.0;
  if (a > b) throw std::invalid_argument("adaptive_line_integral: a > b");
  struct Panel {
    double a, b, value, error;
  };
  std::vector<Panel> panels;
  auto [v0, e0] = detail::gk15(f, a, b);
  panels.push_back({a, b, v0, e0});
  double total = v0, err = e0;
  while (err > tol) {
    if (static_cast<int>(panels.size()) >= max_panels)
      throw ConvergenceError("adaptive_line_integral: subdivision budget exhausted (error estimate " +
                             std::to_string(err) + ")");
    auto worst = std::max_element(panels.begin(), panels.end(),
                                  [](const Panel& x, const Panel& y) { return x.error < y.error; });
    const Panel p = *worst;
    const double m = 0.5 * (p.a + p.b);
    auto [vl, el] = detail::gk15(f, p.a, m);
    auto [vr, er] = detail::gk15(f, m, p.b);
    *worst = {p.a, m, vl, el};
    panels.push_back({m, p.b, vr, er});
    total = 0.0;
    err = 0.0;
    for (const auto& q : panels) {
      total += q.value;
      err += q.error;
    }
  }
  return total;
}

// ---------------------------------------------------------------------------
// Deterministic parallel loop
// ---------------------------------------------------------------------------

/// Runs body(i) for i in [0, n) on up to `threads` threads with static
/// contiguous chunks. Each index is handled by exactly one thread, so results
/// written per index do not depend on the thread count.
template <class Body>
void parallel_for(std::size_t n, unsigned threads, Body&& body) {
  if (threads <= 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  const std::size_t t = std::min<std::size_t>(threads, n);
  std::vector<std::thread> pool;
  pool.reserve(t);
  for (std::size_t w = 0; w < t; ++w) {
    const std::size_t lo = n * w / t, hi = n * (w + 1) / t;
    pool.emplace_back([lo, hi, &body] {
      for (std::size_t i = lo; i < hi; ++i) body(i);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace wavescatter
