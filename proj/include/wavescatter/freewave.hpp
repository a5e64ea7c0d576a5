#pragma once

// Free waves box_c w = 0 on R^3 with bump Cauchy data, evaluated exactly by the
// Kirchhoff spherical-mean formula; energy, Huygens and far-field audits.

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "wavescatter/fit.hpp"
#include "wavescatter/numerics.hpp"
#include "wavescatter/radiation.hpp"

namespace wavescatter {

struct CauchyData {
  BumpFunction w0;
  BumpFunction w1;
  double c = 1.0;
  double M = 0.0;

  CauchyData() = default;
  CauchyData(BumpFunction w0_, BumpFunction w1_, double c_)
      : w0(std::move(w0_)), w1(std::move(w1_)), c(c_), M(std::max(w0.support_radius(), w1.support_radius())) {
    if (!(c > 0.0)) throw std::invalid_argument("CauchyData: speed must be positive");
  }

  bool is_zero() const { return w0.is_zero() && w1.is_zero(); }
};

/// Value and first derivatives (t, x) of a solution at one point.
struct WaveJet {
  double w = 0.0;
  double wt = 0.0;
  Vec3 grad{0, 0, 0};
};

/// Resolution of the spherical-cap rule: Gauss-Legendre in 1 - cos(angle)
/// times uniform azimuth about the axis through the term center.
struct CapRule {
  int polar_nodes = 48;
  int azimuth_nodes = 16;
};

namespace detail {

/// Calls f(omega, weight) for the nodes of the part of the unit sphere with
/// x + R omega inside the term ball; weights integrate dS_omega.
template <class F>
void for_each_cap_node(const BumpTerm& t, const Vec3& x, double R, const CapRule& rule, F&& f) {
  const Vec3 e_raw = t.center - x;
  const double d = norm(e_raw);
  const double a = t.radius;
  double smax;
  Vec3 e{0, 0, 1};
  if (d < 1e-12 * a) {
    if (R >= a) return;
    smax = 2.0;
  } else {
    e = (1.0 / d) * e_raw;
    // |x + R omega - center|^2 = (R - d)^2 + 2 R d s with s = 1 - omega.e
    smax = (a * a - (R - d) * (R - d)) / (2.0 * R * d);
    if (smax <= 0.0) return;
    smax = std::min(smax, 2.0);
  }
  const PlaneFrame fr = plane_frame(e);
  const QuadratureRule1D gl = gauss_legendre(rule.polar_nodes, 0.0, smax);
  const double dphi = 2.0 * pi / rule.azimuth_nodes;
  for (std::size_t i = 0; i < gl.nodes.size(); ++i) {
    const double s = gl.nodes[i];
    const double st = std::sqrt(std::max(0.0, s * (2.0 - s)));
    const double w = gl.weights[i] * dphi;
    for (int k = 0; k < rule.azimuth_nodes; ++k) {
      const double phi = k * dphi;
      const Vec3 omega = (1.0 - s) * e + (st * std::cos(phi)) * fr.e1 + (st * std::sin(phi)) * fr.e2;
      f(omega, w);
    }
  }
}

}  // namespace detail

/// w(t, x), d_t w, grad w by the Kirchhoff formula
///   w = M[w0] + ct M[omega.grad w0] + t M[w1],
/// M the mean over |y - x| = ct, with t-derivatives taken analytically.
inline WaveJet kirchhoff_eval(const CauchyData& data, double t, const Vec3& x, const CapRule& rule = {}) {
  if (t < 0.0) throw std::invalid_argument("kirchhoff_eval: negative time");
  WaveJet out;
  if (t == 0.0) {
    out.w = data.w0.value(x);
    out.wt = data.w1.value(x);
    out.grad = data.w0.gradient(x);
    return out;
  }
  const double c = data.c, R = c * t;
  // means of: f0, grad f0, omega.grad f0, Hess f0 omega, omega^T Hess f0 omega
  double m0 = 0, m0n = 0, m0nn = 0;
  Vec3 m0g{0, 0, 0}, m0h{0, 0, 0};
  for (const auto& term : data.w0.terms()) {
    detail::for_each_cap_node(term, x, R, rule, [&](const Vec3& om, double wq) {
      const Vec3 y = x + R * om;
      const double v = BumpFunction::term_value(term, y);
      const Vec3 g = BumpFunction::term_gradient(term, y);
      const Mat3 H = BumpFunction::term_hessian(term, y);
      const Vec3 Ho = mat_vec(H, om);
      m0 += wq * v;
      m0n += wq * dot(om, g);
      m0nn += wq * dot(om, Ho);
      m0g = m0g + wq * g;
      m0h = m0h + wq * Ho;
    });
  }
  double m1 = 0, m1n = 0;
  Vec3 m1g{0, 0, 0};
  for (const auto& term : data.w1.terms()) {
    detail::for_each_cap_node(term, x, R, rule, [&](const Vec3& om, double wq) {
      const Vec3 y = x + R * om;
      const double v = BumpFunction::term_value(term, y);
      const Vec3 g = BumpFunction::term_gradient(term, y);
      m1 += wq * v;
      m1n += wq * dot(om, g);
      m1g = m1g + wq * g;
    });
  }
  const double k = 1.0 / four_pi;
  out.w = k * (m0 + R * m0n + t * m1);
  out.wt = k * (2.0 * c * m0n + c * c * t * m0nn + m1 + R * m1n);
  out.grad = k * (m0g + R * m0h + t * m1g);
  return out;
}

/// Radially symmetric free wave from its radial profiles (Phi, Psi) = (w0, w1)(r):
///   r w(t, r) = [G(r + ct) + G(r - ct)] / 2 + (1/2c) int_{r-ct}^{r+ct} lambda Psi(|lambda|) d lambda,
/// with G(lambda) = lambda Phi(|lambda|) (odd extension).
template <class Phi, class Psi>
double radial_free_solution(Phi&& phi, Psi&& psi, double c, double t, double r, double support,
                            double tol = 1e-12) {
  if (r <= 0.0) throw std::invalid_argument("radial_free_solution: r must be positive");
  auto G = [&](double l) { return l * phi(std::abs(l)); };
  const double a = r - c * t, b = r + c * t;
  // the integrand is odd, so [a, -a] cancels when a < 0 and only [|a|, b] remains
  const double lo = std::abs(a), hi = std::min(b, support);
  const double I = hi > lo ? adaptive_line_integral([&](double l) { return l * psi(l); }, lo, hi, tol) : 0.0;
  return (0.5 * (G(b) + G(a)) + I / (2.0 * c)) / r;
}

// ---------------------------------------------------------------------------
// Energy
// ---------------------------------------------------------------------------

struct EnergyRule {
  int radial_nodes = 96;
  int sphere_level = 3;
};

/// 1/2 int (c^{-2} |w1|^2 + |grad w0|^2) dx for the data themselves.
inline double energy(const CauchyData& data, const EnergyRule& rule = {}) {
  if (data.is_zero()) return 0.0;
  const SphereGrid og = sphere_quadrature(rule.sphere_level);
  const QuadratureRule1D gl = gauss_legendre(rule.radial_nodes);
  double s = 0.0;
  // integrate each term's contribution over its own ball, where it is smooth
  auto accumulate = [&](const BumpFunction& f, double weight, bool gradient) {
    for (const auto& term : f.terms()) {
      for (std::size_t i = 0; i < gl.nodes.size(); ++i) {
        const double r = 0.5 * term.radius * (gl.nodes[i] + 1.0);
        const double wr = 0.5 * term.radius * gl.weights[i] * r * r;
        for (std::size_t q = 0; q < og.size(); ++q) {
          const Vec3 y = term.center + r * og.nodes[q];
          const double v = gradient ? dot(BumpFunction::term_gradient(term, y), f.gradient(y))
                                    : BumpFunction::term_value(term, y) * f.value(y);
          s += weight * wr * og.weights[q] * v;
        }
      }
    }
  };
  accumulate(data.w0, 0.5, true);
  accumulate(data.w1, 0.5 / (data.c * data.c), false);
  return s;
}

/// Energy of the solution at time t: radial Gauss-Legendre over the shell
/// max(0, ct - M) <= |x| <= ct + M times the sphere rule.
inline double energy_at(const CauchyData& data, double t, const EnergyRule& rule = {}, const CapRule& cap = {},
                        unsigned threads = 1) {
  if (data.is_zero()) return 0.0;
  if (t == 0.0) return energy(data, rule);
  const double c = data.c, M = data.M;
  const double a = std::max(0.0, c * t - M), b = c * t + M;
  const SphereGrid og = sphere_quadrature(rule.sphere_level);
  const QuadratureRule1D gl = gauss_legendre(rule.radial_nodes, a, b);
  const std::size_t nq = og.size();
  std::vector<double> contrib(gl.nodes.size() * nq);
  parallel_for(contrib.size(), threads, [&](std::size_t k) {
    const double r = gl.nodes[k / nq];
    const WaveJet j = kirchhoff_eval(data, t, r * og.nodes[k % nq], cap);
    contrib[k] = gl.weights[k / nq] * r * r * og.weights[k % nq] * 0.5 * (j.wt * j.wt / (c * c) + dot(j.grad, j.grad));
  });
  double s = 0.0;
  for (double v : contrib) s += v;
  return s;
}

// ---------------------------------------------------------------------------
// Huygens checks
// ---------------------------------------------------------------------------

namespace detail {

template <class Keep>
std::vector<Vec3> lattice_points(double spacing, double extent, Keep&& keep) {
  if (!(spacing > 0.0)) throw std::invalid_argument("lattice spacing must be positive");
  std::vector<Vec3> pts;
  const int n = static_cast<int>(std::floor(extent / spacing));
  for (int i = -n; i <= n; ++i)
    for (int j = -n; j <= n; ++j)
      for (int k = -n; k <= n; ++k) {
        const Vec3 x{i * spacing, j * spacing, k * spacing};
        if (keep(norm(x))) pts.push_back(x);
      }
  return pts;
}

inline double sup_abs_w(const CauchyData& data, double t, const std::vector<Vec3>& pts, const CapRule& cap,
                        unsigned threads) {
  std::vector<double> v(pts.size());
  parallel_for(pts.size(), threads, [&](std::size_t i) { v[i] = std::abs(kirchhoff_eval(data, t, pts[i], cap).w); });
  double m = 0.0;
  for (double a : v) m = std::max(m, a);
  return m;
}

}  // namespace detail

/// sup |w(t, x)| over lattice points with |x| <= ct - M - gap.
inline double huygens_residual(const CauchyData& data, double t, double spacing, double gap = 0.1,
                               const CapRule& cap = {}, unsigned threads = 1) {
  const double inner = data.c * t - data.M - gap;
  if (!(inner > 0.0)) throw std::invalid_argument("huygens_residual: interior region {|x| <= ct - M - gap} is empty");
  if (data.is_zero()) return 0.0;
  const auto pts = detail::lattice_points(spacing, inner, [&](double r) { return r <= inner; });
  return detail::sup_abs_w(data, t, pts, cap, threads);
}

/// sup |w(t, x)| over lattice points with ct + M + gap <= |x| <= ct + M + gap + width.
inline double exterior_residual(const CauchyData& data, double t, double spacing, double gap = 0.1,
                                double width = 1.0, const CapRule& cap = {}, unsigned threads = 1) {
  if (data.is_zero()) return 0.0;
  const double lo = data.c * t + data.M + gap, hi = lo + width;
  const auto pts = detail::lattice_points(spacing, hi, [&](double r) { return r >= lo && r <= hi; });
  return detail::sup_abs_w(data, t, pts, cap, threads);
}

// ---------------------------------------------------------------------------
// Far-field audit
// ---------------------------------------------------------------------------

struct FarfieldSample {
  double t = 0.0;
  double value_defect = 0.0;
  double deriv_defect = 0.0;
};

struct FarfieldReport {
  std::vector<FarfieldSample> samples;
  FitReport value_fit;
  FitReport deriv_fit;
};

struct FarfieldOptions {
  int sphere_level = 1;     // directions sampled on the shell
  int sigma_samples = 21;   // sigma values in [-M, M]
  CapRule cap{};
  unsigned threads = 1;
};

/// sup over the outgoing shell {|r - ct| <= M} of |r w - W(r - ct, omega)| and of
/// |r (d_t w, grad w) - (-c, omega) dW/dsigma| (Euclidean norm of the 4-vector),
/// with log-log fits against t. W is evaluated exactly, not interpolated.
inline FarfieldReport farfield_error(const CauchyData& data, const FriedlanderEvaluator& W,
                                     const std::vector<double>& t_list, const FarfieldOptions& opt = {}) {
  if (t_list.size() < 3) throw std::invalid_argument("farfield_error: need at least 3 times");
  FarfieldReport rep;
  const SphereGrid og = sphere_quadrature(opt.sphere_level);
  const double c = data.c, M = data.M;
  std::vector<double> sig(opt.sigma_samples);
  for (int i = 0; i < opt.sigma_samples; ++i) sig[i] = -M + 2.0 * M * i / (opt.sigma_samples - 1);
  for (double t : t_list) {
    FarfieldSample s{t, 0.0, 0.0};
    if (!data.is_zero()) {
      const std::size_t nq = og.size(), n = sig.size() * nq;
      std::vector<double> ev(n), ed(n);
      parallel_for(n, opt.threads, [&](std::size_t k) {
        const double sigma = sig[k / nq];
        const Vec3& om = og.nodes[k % nq];
        const double r = c * t + sigma;
        if (r <= 0.0) return;
        const WaveJet j = kirchhoff_eval(data, t, r * om, opt.cap);
        const double Wv = W.value(sigma, om), Wd = W.dvalue(sigma, om);
        ev[k] = std::abs(r * j.w - Wv);
        const double dt = r * j.wt + c * Wd;
        const Vec3 dx = r * j.grad - Wd * om;
        ed[k] = std::sqrt(dt * dt + dot(dx, dx));
      });
      for (std::size_t k = 0; k < n; ++k) {
        s.value_defect = std::max(s.value_defect, ev[k]);
        s.deriv_defect = std::max(s.deriv_defect, ed[k]);
      }
    }
    rep.samples.push_back(s);
  }
  std::vector<double> ts, vd, dd;
  for (const auto& s : rep.samples) {
    ts.push_back(s.t);
    vd.push_back(s.value_defect);
    dd.push_back(s.deriv_defect);
  }
  rep.value_fit = loglog_fit(ts, vd, "value defect vs t");
  rep.deriv_fit = loglog_fit(ts, dd, "derivative defect vs t");
  return rep;
}

}  // namespace wavescatter
