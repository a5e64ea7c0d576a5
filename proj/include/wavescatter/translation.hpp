#pragma once

// The translation representation T(phi, psi) = d/dsigma F_0[phi, psi] on R^3,
// its isometry onto L^2(R x S^2), and the explicit inverse for radial profiles.

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "wavescatter/freewave.hpp"
#include "wavescatter/numerics.hpp"
#include "wavescatter/radiation.hpp"
#include "wavescatter/radon.hpp"

namespace wavescatter {

/// Cauchy data (phi, psi) in H_0 = H-dot^1 x L^2 given by bump functions.
class HalfWaveData {
 public:
  HalfWaveData() = default;
  HalfWaveData(BumpFunction phi, BumpFunction psi, EnergyRule rule = {})
      : phi_(std::move(phi)), psi_(std::move(psi)), rule_(rule), h0_(compute_norm()) {}

  const BumpFunction& phi() const { return phi_; }
  const BumpFunction& psi() const { return psi_; }
  double support_radius() const { return std::max(phi_.support_radius(), psi_.support_radius()); }
  bool is_zero() const { return phi_.is_zero() && psi_.is_zero(); }

  /// ||(phi, psi)||_{H_0} = sqrt((||grad phi||^2 + ||psi||^2) / 2), cached.
  double h0_norm() const { return h0_; }
  double recompute_h0_norm() const { return compute_norm(); }

  HalfWaveData scaled(double s) const { return HalfWaveData(s * phi_, s * psi_, rule_); }

 private:
  double compute_norm() const { return std::sqrt(energy(CauchyData(phi_, psi_, 1.0), rule_)); }

  BumpFunction phi_, psi_;
  EnergyRule rule_{};
  double h0_ = 0.0;
};

/// Radial function on [0, r_max] from samples of f and f' (cubic Hermite);
/// zero beyond r_max.
class RadialFunction {
 public:
  RadialFunction() = default;
  RadialFunction(double spacing, std::vector<double> f, std::vector<double> df)
      : h_(spacing), f_(std::move(f)), df_(std::move(df)) {
    if (!(h_ > 0.0) || f_.size() < 2 || f_.size() != df_.size())
      throw std::invalid_argument("RadialFunction: need >= 2 matching samples and positive spacing");
  }

  double r_max() const { return h_ * static_cast<double>(f_.size() - 1); }
  double spacing() const { return h_; }
  const std::vector<double>& values() const { return f_; }
  const std::vector<double>& derivatives() const { return df_; }
  bool empty() const { return f_.empty(); }

  double operator()(double r) const { return eval(r, false); }
  double derivative(double r) const { return eval(r, true); }

 private:
  double eval(double r, bool deriv) const {
    if (f_.empty()) return 0.0;
    r = std::abs(r);
    if (r >= r_max()) return 0.0;
    const std::size_t i = std::min(static_cast<std::size_t>(r / h_), f_.size() - 2);
    const double s = r / h_ - static_cast<double>(i);
    const double f0 = f_[i], f1 = f_[i + 1], d0 = df_[i] * h_, d1 = df_[i + 1] * h_;
    if (!deriv) {
      const double h00 = (1 + 2 * s) * (1 - s) * (1 - s), h10 = s * (1 - s) * (1 - s);
      const double h01 = s * s * (3 - 2 * s), h11 = s * s * (s - 1);
      return h00 * f0 + h10 * d0 + h01 * f1 + h11 * d1;
    }
    const double g00 = 6 * s * s - 6 * s, g10 = 3 * s * s - 4 * s + 1;
    const double g01 = -6 * s * s + 6 * s, g11 = 3 * s * s - 2 * s;
    return (g00 * f0 + g10 * d0 + g01 * f1 + g11 * d1) / h_;
  }

  double h_ = 1.0;
  std::vector<double> f_, df_;
};

/// Radial H_0 data given by sampled profiles phi(r), psi(r).
struct RadialHalfWaveData {
  RadialFunction phi;
  RadialFunction psi;

  /// sqrt(2 pi int_0^inf (phi'^2 + psi^2) r^2 dr) by Gauss-Legendre panels.
  double h0_norm(int panels = 0) const {
    const double R = std::max(phi.r_max(), psi.r_max());
    if (R == 0.0) return 0.0;
    const double h = std::min(phi.empty() ? R : phi.spacing(), psi.empty() ? R : psi.spacing());
    const int np = panels > 0 ? panels : static_cast<int>(std::ceil(R / h));
    const QuadratureRule1D gl = gauss_legendre(4);
    double s = 0.0;
    for (int p = 0; p < np; ++p) {
      const double a = R * p / np, b = R * (p + 1) / np;
      for (std::size_t i = 0; i < gl.nodes.size(); ++i) {
        const double r = 0.5 * (a + b) + 0.5 * (b - a) * gl.nodes[i];
        const double dp = phi.derivative(r), v = psi(r);
        s += 0.5 * (b - a) * gl.weights[i] * (dp * dp + v * v) * r * r;
      }
    }
    return std::sqrt(2.0 * pi * s);
  }
};

// ---------------------------------------------------------------------------
// Forward map
// ---------------------------------------------------------------------------

/// Profile of T[phi, psi](sigma, omega) = (1/4 pi)(d_sigma R[psi] - d_sigma^2 R[phi]).
inline RadiationProfile forward_T(const HalfWaveData& data, const SigmaGrid& sg, const SphereGrid& og,
                                  const RadonRule& rule = {}, unsigned threads = 1) {
  const double M = data.support_radius();
  if (!data.is_zero() && (sg.min() > -M || sg.max() < M))
    throw std::invalid_argument("forward_T: sigma grid does not cover the support [-M, M]");
  return sample_profile(
      sg, og, 1.0, M, 3,
      [&](double s, const Vec3& w) {
        return (radon_sigma_derivative(data.psi(), s, w, rule) - radon_sigma_second(data.phi(), s, w, rule)) / four_pi;
      },
      [](double, const Vec3&) { return 0.0; }, false, threads);
}

/// For radial data T(sigma) = ((r phi)'(|sigma|) - sigma psi(|sigma|)) / 2, independent of omega.
inline double radial_T(const RadialHalfWaveData& d, double sigma) {
  const double a = std::abs(sigma);
  return 0.5 * (d.phi(a) + a * d.phi.derivative(a) - sigma * d.psi(a));
}

inline RadiationProfile forward_T(const RadialHalfWaveData& data, const SigmaGrid& sg, const SphereGrid& og) {
  std::vector<double> row(sg.size());
  for (std::size_t i = 0; i < sg.size(); ++i) row[i] = radial_T(data, sg[i]);
  return sample_profile(
      sg, og, 1.0, std::max(data.phi.r_max(), data.psi.r_max()), 3,
      [&](double s, const Vec3&) { return row[static_cast<std::size_t>(std::llround((s - sg.min()) / sg.spacing()))]; },
      [](double, const Vec3&) { return 0.0; }, false);
}

// ---------------------------------------------------------------------------
// Isometry and evenness
// ---------------------------------------------------------------------------

struct IsometryResolution {
  double sigma_spacing_over_M = 1.0 / 16.0;
  int sphere_level = 2;
  RadonRule radon{32, 12};

  IsometryResolution refined() const { return {sigma_spacing_over_M / 2.0, sphere_level * 2, radon}; }
};

struct IsometryResult {
  double h0_norm = 0.0;
  double l2_norm = 0.0;
  double defect = 0.0;  // relative, or absolute when the data vanish
};

inline IsometryResult isometry_defect(const HalfWaveData& data, const IsometryResolution& res = {},
                                      unsigned threads = 1) {
  IsometryResult out;
  out.h0_norm = data.h0_norm();
  if (data.is_zero()) return out;
  const double M = data.support_radius();
  const RadiationProfile p =
      forward_T(data, profile_grid(M, res.sigma_spacing_over_M * M, 0.0), sphere_quadrature(res.sphere_level),
                res.radon, threads);
  out.l2_norm = p.l2_norm();
  out.defect = std::abs(out.l2_norm - out.h0_norm);
  if (out.h0_norm > 0.0) out.defect /= out.h0_norm;
  return out;
}

/// 1-D Fourier transform of sigma -> R[f](sigma, omega) at frequency rho.
inline std::complex<double> radon_fourier(const BumpFunction& f, double rho, const Vec3& omega, int nodes = 64,
                                          const RadonRule& rule = {}) {
  const double M = f.support_radius();
  if (M == 0.0) return 0.0;
  const QuadratureRule1D gl = gauss_legendre(nodes, -M, M);
  std::complex<double> s = 0.0;
  for (std::size_t i = 0; i < gl.nodes.size(); ++i)
    s += gl.weights[i] * radon(f, gl.nodes[i], omega, rule) * std::polar(1.0, -rho * gl.nodes[i]);
  return s / std::sqrt(2.0 * pi);
}

/// sup |R~[f](rho, omega) - R~[f](-rho, -omega)| over the given frequencies and
/// sphere nodes, for f = phi and f = psi.
inline double evenness_defect(const HalfWaveData& data, const std::vector<double>& rhos, const SphereGrid& og,
                              const RadonRule& rule = {}) {
  double d = 0.0;
  for (const BumpFunction* f : {&data.phi(), &data.psi()}) {
    if (f->is_zero()) continue;
    for (double rho : rhos)
      for (const Vec3& w : og.nodes)
        d = std::max(d, std::abs(radon_fourier(*f, rho, w, 64, rule) - radon_fourier(*f, -rho, -w, 64, rule)));
  }
  return d;
}

// ---------------------------------------------------------------------------
// Radial inverse
// ---------------------------------------------------------------------------

struct InverseOptions {
  double rho0_times_M = 0.05;    // cutoff vanishes on |rho| <= rho0
  double rho_max_times_M = 400;  // frequency truncation
  double r_max_over_M = 8;       // output profiles live on [0, r_max]
  double r_spacing_over_M = 1.0 / 128.0;
  double max_discarded_fraction = 1e-3;  // reject profiles with more low-frequency L^2 mass
  unsigned threads = 1;
};

struct InverseResult {
  RadialHalfWaveData data;
  double discarded_fraction = 0.0;  // share of ||v||^2 removed by the low-frequency cutoff
  double profile_l2 = 0.0;          // ||V||_{L^2(R x S^2)} of the input
};

class InverseRejected : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

/// Smooth step: 0 for x <= 0, 1 for x >= 1.
inline double smooth_step(double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double a = std::exp(-1.0 / x), b = std::exp(-1.0 / (1.0 - x));
  return a / (a + b);
}

inline double sinc(double x) { return std::abs(x) < 1e-4 ? 1.0 - x * x / 6.0 : std::sin(x) / x; }
inline double dsinc(double x) {
  return std::abs(x) < 1e-3 ? -x / 3.0 + x * x * x / 30.0 : (x * std::cos(x) - std::sin(x)) / (x * x);
}

}  // namespace detail

/// Inverts T on an omega-independent profile V supported in [-L, L]:
/// v~ by 1-D Fourier quadrature, low-frequency cutoff, v_0 = 4 pi v~,
/// v_1 = Re v_0 / (2 pi rho^2), v_2 = Im v_0 / (2 pi rho), and radial inverse
/// Fourier transforms phi = F^{-1}[v_1], psi = F^{-1}[v_2].
inline InverseResult inverse_T_radial(const std::function<double(double)>& V, double L, double M,
                                      const InverseOptions& opt = {}) {
  if (!(L > 0.0) || !(M > 0.0)) throw std::invalid_argument("inverse_T_radial: L and M must be positive");
  InverseResult out;
  const double rho0 = opt.rho0_times_M / M, rho_max = opt.rho_max_times_M / M;
  const double r_max = opt.r_max_over_M * M, dr = opt.r_spacing_over_M * M;

  // sigma nodes: composite Gauss-Legendre, panels short against the fastest oscillation
  const QuadratureRule1D g16 = gauss_legendre(16);
  const int sp = static_cast<int>(std::ceil(2.0 * L * rho_max / pi)) + 8;
  std::vector<double> sn, sw, sv;
  for (int p = 0; p < sp; ++p) {
    const double a = -L + 2.0 * L * p / sp, b = -L + 2.0 * L * (p + 1) / sp;
    for (std::size_t i = 0; i < g16.nodes.size(); ++i) {
      sn.push_back(0.5 * (a + b) + 0.5 * (b - a) * g16.nodes[i]);
      sw.push_back(0.5 * (b - a) * g16.weights[i]);
      sv.push_back(V(sn.back()));
    }
  }
  double v_l2 = 0.0;
  for (std::size_t i = 0; i < sn.size(); ++i) v_l2 += sw[i] * sv[i] * sv[i];
  out.profile_l2 = std::sqrt(four_pi * v_l2);
  const bool zero = std::all_of(sv.begin(), sv.end(), [](double x) { return x == 0.0; });
  const std::size_t nr = static_cast<std::size_t>(std::ceil(r_max / dr)) + 1;
  if (zero) {
    out.data.phi = RadialFunction(dr, std::vector<double>(nr, 0.0), std::vector<double>(nr, 0.0));
    out.data.psi = out.data.phi;
    return out;
  }

  // rho nodes on (0, rho_max]: panels short against sin(rho r) for r <= r_max
  const QuadratureRule1D g12 = gauss_legendre(12);
  const int rp = static_cast<int>(std::ceil(rho_max * r_max / pi)) + 8;
  std::vector<double> rn, rw;
  for (int p = 0; p < rp; ++p) {
    const double a = rho_max * p / rp, b = rho_max * (p + 1) / rp;
    for (std::size_t i = 0; i < g12.nodes.size(); ++i) {
      rn.push_back(0.5 * (a + b) + 0.5 * (b - a) * g12.nodes[i]);
      rw.push_back(0.5 * (b - a) * g12.weights[i]);
    }
  }
  std::vector<std::complex<double>> vt(rn.size());
  parallel_for(rn.size(), opt.threads, [&](std::size_t k) {
    std::complex<double> s = 0.0;
    for (std::size_t i = 0; i < sn.size(); ++i) s += sw[i] * sv[i] * std::polar(1.0, -rn[k] * sn[i]);
    vt[k] = s / std::sqrt(2.0 * pi);
  });

  // Plancherel: int |v|^2 dsigma = int |v~|^2 drho = 2 int_0^inf |v~|^2 for real v
  double kept = 0.0, total = 0.0;
  std::vector<double> chi(rn.size());
  for (std::size_t k = 0; k < rn.size(); ++k) {
    chi[k] = detail::smooth_step((rn[k] - rho0) / rho0);
    const double m = std::norm(vt[k]);
    total += rw[k] * m;
    kept += rw[k] * m * chi[k] * chi[k];
  }
  out.discarded_fraction = total > 0.0 ? 1.0 - kept / total : 0.0;
  if (out.discarded_fraction > opt.max_discarded_fraction)
    throw InverseRejected("inverse_T_radial: profile violates the low-frequency condition; cutoff would discard " +
                          std::to_string(out.discarded_fraction) + " of its L^2 mass (limit " +
                          std::to_string(opt.max_discarded_fraction) + ")");

  // phi(r) = sqrt(2/pi) int_0^inf v_1 sinc(rho r) rho^2 drho with v_1 rho^2 = Re v_0 / (2 pi) = 2 Re v~;
  // psi(r) likewise with v_2 rho^2 = Im v_0 rho / (2 pi) = 2 rho Im v~.
  const double k = std::sqrt(2.0 / pi) * 2.0;
  std::vector<double> pf(nr), pd(nr), qf(nr), qd(nr);
  parallel_for(nr, opt.threads, [&](std::size_t i) {
    const double r = dr * static_cast<double>(i);
    double a = 0, b = 0, c = 0, d = 0;
    for (std::size_t j = 0; j < rn.size(); ++j) {
      const double rho = rn[j], w = rw[j] * chi[j];
      const double re = vt[j].real(), im = vt[j].imag();
      const double s = detail::sinc(rho * r), ds = detail::dsinc(rho * r);
      a += w * re * s;
      b += w * re * rho * ds;
      c += w * im * rho * s;
      d += w * im * rho * rho * ds;
    }
    pf[i] = k * a;
    pd[i] = k * b;
    qf[i] = k * c;
    qd[i] = k * d;
  });
  out.data.phi = RadialFunction(dr, std::move(pf), std::move(pd));
  out.data.psi = RadialFunction(dr, std::move(qf), std::move(qd));
  return out;
}

/// Relative L^2(R) distance between T applied to radial data and a target profile.
inline double radial_roundtrip_error(const RadialHalfWaveData& d, const std::function<double(double)>& V, double L,
                                     double extent, int nodes_per_unit = 64) {
  const int n = static_cast<int>(std::ceil(2.0 * extent * nodes_per_unit));
  const QuadratureRule1D g = gauss_legendre(8);
  double num = 0.0, den = 0.0;
  for (int p = 0; p < n; ++p) {
    const double a = -extent + 2.0 * extent * p / n, b = -extent + 2.0 * extent * (p + 1) / n;
    for (std::size_t i = 0; i < g.nodes.size(); ++i) {
      const double s = 0.5 * (a + b) + 0.5 * (b - a) * g.nodes[i], w = 0.5 * (b - a) * g.weights[i];
      const double target = std::abs(s) < L ? V(s) : 0.0;
      const double diff = radial_T(d, s) - target;
      num += w * diff * diff;
      den += w * target * target;
    }
  }
  return den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
}

// ---------------------------------------------------------------------------
// Seeded test data
// ---------------------------------------------------------------------------

/// A reproducible random (phi, psi) pair of modulated bumps inside |x| < 1.2.
inline HalfWaveData random_bump_pair(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  auto one = [&]() {
    const Vec3 center{0.25 * U(rng), 0.25 * U(rng), 0.25 * U(rng)};
    const double radius = 0.7 + 0.2 * U(rng);
    Polynomial3 p({Monomial{{0, 0, 0}, 1.0}, Monomial{{1, 0, 0}, 0.5 * U(rng)}, Monomial{{0, 1, 0}, 0.5 * U(rng)},
                   Monomial{{0, 0, 2}, 0.5 * U(rng)}});
    return make_modulated_bump(radius, 1.0 + 0.5 * U(rng), center, p);
  };
  BumpFunction phi = one();
  BumpFunction psi = one();
  return HalfWaveData(std::move(phi), std::move(psi));
}

/// omega-independent test profile V = d^2/dsigma^2 of a shifted, scaled bump,
/// which satisfies the low-frequency condition (its transform vanishes to second order).
inline std::function<double(double)> radial_test_profile(std::uint64_t seed, double M) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  const double width = M * (0.75 + 0.15 * U(rng));
  const double shift = (M - width) * U(rng);
  const double amp = 1.0 + 0.5 * U(rng);
  return [=](double s) { return amp * bump_jet((s - shift) / width).d2 / (width * width); };
}

}  // namespace wavescatter
