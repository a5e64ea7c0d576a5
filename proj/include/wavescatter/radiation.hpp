#pragma once

// The operators R_m built on the 3-D Radon transform, the Friedlander radiation
// field, sampled profiles on sigma x sphere grids, and their decay audit.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "wavescatter/fit.hpp"
#include "wavescatter/numerics.hpp"
#include "wavescatter/radon.hpp"

namespace wavescatter {

namespace detail {

inline void require_dimension(int n) {
  if (n != 2 && n != 3) throw std::invalid_argument("unsupported dimension " + std::to_string(n) + " (expected 2 or 3)");
}

/// (1/(2 sqrt(2 pi))) int chi_+^{-1/2}(s - sigma) g(s) ds with chi_+^{-1/2}(s) = 1/sqrt(pi s),
/// for g supported in [-bound, bound]. The substitution s = sigma + u^2 removes
/// the endpoint singularity: the integral becomes int 2 g(sigma + u^2) du.
template <class G>
double abel_half(G&& g, double sigma, double bound, double tol) {
  if (sigma >= bound) return 0.0;
  const double umin = std::sqrt(std::max(0.0, -bound - sigma));
  const double umax = std::sqrt(bound - sigma);
  const double I = adaptive_line_integral([&](double u) { return 2.0 * g(sigma + u * u); }, umin, umax, tol);
  return I / (2.0 * std::sqrt(2.0 * pi) * std::sqrt(pi));
}

}  // namespace detail

/// R_n[f](sigma, omega) for n in {2, 3}. For n = 3 this is R[f] / (4 pi).
inline double rn_transform(const BumpFunction& f, int n, double sigma, const Vec3& omega,
                           const RadonRule& rule = {}, double tol = default_tolerance) {
  detail::require_dimension(n);
  require_unit(omega);
  if (n == 3) return radon(f, sigma, omega, rule) / four_pi;
  const double bound = f.support_radius();
  return detail::abel_half([&](double s) { return radon(f, s, omega, rule); }, sigma, bound, tol);
}

/// Exact evaluation of F_0[phi, c^{-1} psi] and its sigma-derivative.
class FriedlanderEvaluator {
 public:
  FriedlanderEvaluator(BumpFunction phi, BumpFunction psi, double c, int dimension = 3, RadonRule rule = {},
                       double tol = default_tolerance)
      : phi_(std::move(phi)), psi_(std::move(psi)), c_(c), n_(dimension), rule_(rule), tol_(tol) {
    detail::require_dimension(n_);
    if (!(c_ > 0.0)) throw std::invalid_argument("FriedlanderEvaluator: speed must be positive");
  }

  double value(double sigma, const Vec3& omega) const {
    require_unit(omega);
    if (n_ == 3) return (radon(psi_, sigma, omega, rule_) / c_ - radon_sigma_derivative(phi_, sigma, omega, rule_)) / four_pi;
    return lift(sigma, [&](double s) {
      return radon(psi_, s, omega, rule_) / c_ - radon_sigma_derivative(phi_, s, omega, rule_);
    });
  }

  double dvalue(double sigma, const Vec3& omega) const {
    require_unit(omega);
    if (n_ == 3)
      return (radon_sigma_derivative(psi_, sigma, omega, rule_) / c_ - radon_sigma_second(phi_, sigma, omega, rule_)) /
             four_pi;
    return lift(sigma, [&](double s) {
      return radon_sigma_derivative(psi_, s, omega, rule_) / c_ - radon_sigma_second(phi_, s, omega, rule_);
    });
  }

  double support_bound() const { return std::max(phi_.support_radius(), psi_.support_radius()); }
  double speed() const { return c_; }
  int dimension() const { return n_; }

 private:
  template <class G>
  double lift(double sigma, G&& g) const {
    return detail::abel_half(g, sigma, support_bound(), tol_);
  }

  BumpFunction phi_, psi_;
  double c_;
  int n_;
  RadonRule rule_;
  double tol_;
};

/// Samples V(sigma_i, omega_q) and dV/dsigma on a sigma grid x sphere grid.
struct RadiationProfile {
  int dimension = 3;
  double c = 1.0;
  SigmaGrid sigma_grid;
  SphereGrid sphere_grid;
  std::vector<double> values;   // index i * sphere.size() + q
  std::vector<double> dvalues;  // empty when not sampled
  double support_bound = 0.0;

  std::size_t index(std::size_t i, std::size_t q) const { return i * sphere_grid.size() + q; }
  double value(std::size_t i, std::size_t q) const { return values[index(i, q)]; }
  double dvalue(std::size_t i, std::size_t q) const { return dvalues[index(i, q)]; }
  bool has_derivative() const { return !dvalues.empty(); }

  /// ||V||_{L^2(R x S^2)} by trapezoid in sigma and the sphere rule.
  double l2_norm() const {
    double s = 0.0;
    const std::size_t ns = sigma_grid.size(), nq = sphere_grid.size();
    for (std::size_t i = 0; i < ns; ++i) {
      const double wi = (i == 0 || i + 1 == ns) ? 0.5 : 1.0;
      for (std::size_t q = 0; q < nq; ++q) s += wi * sphere_grid.weights[q] * value(i, q) * value(i, q);
    }
    return std::sqrt(s * sigma_grid.spacing());
  }
};

/// Fills a profile from callables value(sigma, omega) and (optionally) dvalue.
template <class F, class DF>
RadiationProfile sample_profile(const SigmaGrid& sg, const SphereGrid& og, double c, double support_bound, int dimension,
                                F&& value, DF&& dvalue, bool with_derivative, unsigned threads = 1) {
  RadiationProfile p;
  p.dimension = dimension;
  p.c = c;
  p.sigma_grid = sg;
  p.sphere_grid = og;
  p.support_bound = support_bound;
  const std::size_t nq = og.size(), total = sg.size() * nq;
  p.values.assign(total, 0.0);
  if (with_derivative) p.dvalues.assign(total, 0.0);
  parallel_for(total, threads, [&](std::size_t k) {
    const double s = sg[k / nq];
    const Vec3& w = og.nodes[k % nq];
    p.values[k] = value(s, w);
    if (with_derivative) p.dvalues[k] = dvalue(s, w);
  });
  return p;
}

/// Samples of F_0[phi, c^{-1} psi] (and its sigma-derivative) on the grids.
inline RadiationProfile friedlander(const BumpFunction& phi, const BumpFunction& psi, double c, const SigmaGrid& sg,
                                   const SphereGrid& og, int dimension = 3, const RadonRule& rule = {},
                                   unsigned threads = 1) {
  const FriedlanderEvaluator ev(phi, psi, c, dimension, rule);
  const double M = ev.support_bound();
  if (sg.min() > -M || sg.max() < M)
    throw std::invalid_argument("friedlander: sigma grid [" + std::to_string(sg.min()) + ", " + std::to_string(sg.max()) +
                                "] does not cover the support [-" + std::to_string(M) + ", " + std::to_string(M) + "]");
  return sample_profile(
      sg, og, c, M, dimension, [&](double s, const Vec3& w) { return ev.value(s, w); },
      [&](double s, const Vec3& w) { return ev.dvalue(s, w); }, true, threads);
}

/// Sigma grid over [-(1 + margin) M, (1 + margin) M] with the given spacing.
inline SigmaGrid profile_grid(double M, double spacing, double margin = 0.5) {
  return SigmaGrid::covering(-(1.0 + margin) * M, (1.0 + margin) * M, spacing);
}

/// Log-log fit of max_omega |V(sigma, .)| against <sigma> over sigma <= -2M.
inline FitReport decay_report(const RadiationProfile& p, double expected_exponent) {
  const std::string label = "tail decay, expected exponent " + std::to_string(expected_exponent);
  const bool all_zero = std::all_of(p.values.begin(), p.values.end(), [](double v) { return v == 0.0; });
  if (all_zero) return degenerate_fit(label, 0);
  std::vector<double> x, y;
  for (std::size_t i = 0; i < p.sigma_grid.size(); ++i) {
    const double s = p.sigma_grid[i];
    if (s > -2.0 * p.support_bound) continue;
    double m = 0.0;
    for (std::size_t q = 0; q < p.sphere_grid.size(); ++q) m = std::max(m, std::abs(p.value(i, q)));
    x.push_back(japanese(s));
    y.push_back(m);
  }
  if (x.size() < 8)
    throw std::invalid_argument("decay_report: need at least 8 samples with sigma <= -2M, have " +
                                std::to_string(x.size()));
  if (std::all_of(y.begin(), y.end(), [](double v) { return v == 0.0; })) {
    FitReport r = degenerate_fit(label, x.size());
    r.compact_support = true;
    return r;
  }
  return loglog_fit(x, y, label);
}

/// V#(t, x) = |x|^{-1} V(|x| - ct, x/|x|) (n = 3), bilinear in sigma and in
/// (cos theta, azimuth) on the sphere grid. Zero outside the sigma grid.
inline double eval_sharp(const RadiationProfile& p, double t, const Vec3& x) {
  const double r = norm(x);
  if (r == 0.0) throw std::invalid_argument("eval_sharp: x = 0");
  const double sigma = r - p.c * t;
  const SigmaGrid& sg = p.sigma_grid;
  if (sigma < sg.min() || sigma > sg.max()) return 0.0;
  double fs = (sigma - sg.min()) / sg.spacing();
  const std::size_t i0 = std::min(static_cast<std::size_t>(fs), sg.size() - 2);
  fs -= static_cast<double>(i0);

  const SphereGrid& og = p.sphere_grid;
  const double u = std::clamp(x[2] / r, og.polar_nodes.front(), og.polar_nodes.back());
  const auto it = std::upper_bound(og.polar_nodes.begin(), og.polar_nodes.end(), u);
  int j0 = static_cast<int>(it - og.polar_nodes.begin()) - 1;
  j0 = std::clamp(j0, 0, og.n_polar - 2);
  const double fu = (u - og.polar_nodes[j0]) / (og.polar_nodes[j0 + 1] - og.polar_nodes[j0]);

  const double dphi = 2.0 * pi / og.n_azimuth;
  double phi = std::atan2(x[1], x[0]);
  if (phi < 0.0) phi += 2.0 * pi;
  double fa = phi / dphi - 0.5;
  if (fa < 0.0) fa += og.n_azimuth;
  int k0 = static_cast<int>(fa);
  fa -= k0;
  k0 %= og.n_azimuth;
  const int k1 = (k0 + 1) % og.n_azimuth;

  auto angular = [&](std::size_t i) {
    const double a = (1 - fa) * p.value(i, og.index(j0, k0)) + fa * p.value(i, og.index(j0, k1));
    const double b = (1 - fa) * p.value(i, og.index(j0 + 1, k0)) + fa * p.value(i, og.index(j0 + 1, k1));
    return (1 - fu) * a + fu * b;
  };
  const double v = (1 - fs) * angular(i0) + fs * angular(i0 + 1);
  return v / r;
}

// ---------------------------------------------------------------------------
// CSV output
// ---------------------------------------------------------------------------

/// Shortest round-trip-safe text at 17 significant digits, locale independent.
inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

/// Writes `sigma,omega_index,value,dvalue` rows and the sphere sidecar
/// `omega_index,wx,wy,wz,weight`.
inline void write_profile_csv(const RadiationProfile& p, std::ostream& v, std::ostream& s) {
  v << "sigma,omega_index,value,dvalue\n";
  for (std::size_t i = 0; i < p.sigma_grid.size(); ++i)
    for (std::size_t q = 0; q < p.sphere_grid.size(); ++q)
      v << format_double(p.sigma_grid[i]) << ',' << q << ',' << format_double(p.value(i, q)) << ','
        << (p.has_derivative() ? format_double(p.dvalue(i, q)) : std::string()) << '\n';
  s << "omega_index,wx,wy,wz,weight\n";
  for (std::size_t q = 0; q < p.sphere_grid.size(); ++q) {
    const Vec3& w = p.sphere_grid.nodes[q];
    s << q << ',' << format_double(w[0]) << ',' << format_double(w[1]) << ',' << format_double(w[2]) << ','
      << format_double(p.sphere_grid.weights[q]) << '\n';
  }
}

inline void write_profile_csv(const RadiationProfile& p, const std::string& values_path, const std::string& sphere_path) {
  std::ofstream v(values_path, std::ios::binary);
  if (!v) throw std::runtime_error("cannot open " + values_path);
  std::ofstream s(sphere_path, std::ios::binary);
  if (!s) throw std::runtime_error("cannot open " + sphere_path);
  write_profile_csv(p, v, s);
}

}  // namespace wavescatter
