#pragma once

// Radially symmetric two-speed system
//   box_{c1} u1 = A1 N(u2),  box_{c2} u2 = A2 N(u1),  u = 0, d_t u = eps g at t = 0,
// with N(w) = (d_t w)^2 (plain) or Q_0(w, w; c_w) (null form), solved for
// v_j = r u_j along characteristics. Also the second Picard iterate of v1,
// ray fits, profile extraction and energy-sense asymptotic freeness.

#include <array>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "wavescatter/fit.hpp"
#include "wavescatter/numerics.hpp"

namespace wavescatter {

enum class SourceKind { plain, null_form };

inline const char* to_string(SourceKind k) { return k == SourceKind::plain ? "PLAIN" : "NULL"; }

inline SourceKind parse_source_kind(const std::string& s) {
  if (s == "PLAIN" || s == "plain") return SourceKind::plain;
  if (s == "NULL" || s == "null") return SourceKind::null_form;
  throw std::invalid_argument("unknown source kind '" + s + "' (expected PLAIN or NULL)");
}

/// Radial datum g*(rho) = sum_k scale_k beta((rho - center_k) / width_k), and
/// the odd function h(r) = (r/2) g*(|r|).
struct RadialDatum {
  struct Shell {
    double center = 0.0;
    double width = 1.0;
    double scale = 1.0;
  };
  std::vector<Shell> shells;

  static RadialDatum ball(double M, double scale) { return RadialDatum{{Shell{0.0, M, scale}}}; }

  double g(double rho) const {
    double s = 0.0;
    for (const auto& k : shells) s += k.scale * bump_jet((rho - k.center) / k.width).value;
    return s;
  }
  double h(double r) const { return 0.5 * r * g(std::abs(r)); }
  double support() const {
    double m = 0.0;
    for (const auto& k : shells) m = std::max(m, k.center + k.width);
    return m;
  }
  bool is_zero() const {
    return std::all_of(shells.begin(), shells.end(), [](const Shell& k) { return k.scale == 0.0; });
  }
  /// int_a^b h, a <= b.
  double integral_h(double a, double b, double tol = 1e-13) const {
    const double m = support();
    a = std::max(a, -m);
    b = std::min(b, m);
    if (!(b > a)) return 0.0;
    if (a < 0.0 && b > 0.0)  // kink-free, but split at 0 for symmetric accuracy
      return adaptive_line_integral([&](double x) { return h(x); }, a, 0.0, tol) +
             adaptive_line_integral([&](double x) { return h(x); }, 0.0, b, tol);
    return adaptive_line_integral([&](double x) { return h(x); }, a, b, tol);
  }
  /// The same datum as a function on R^3 (only for shells centered at 0).
  BumpFunction as_bump() const {
    BumpFunction f;
    for (const auto& k : shells) {
      if (k.center != 0.0) throw std::invalid_argument("RadialDatum::as_bump: shell datum is not a ball bump");
      f = f + make_radial_bump(k.width, k.scale);
    }
    return f;
  }
};

struct RadialSystemSpec {
  double A1 = 1.0, A2 = 1.0;
  double c1 = 1.0, c2 = 2.0;
  double eps = 0.01;
  double M = 1.0;
  RadialDatum g1, g2;
  SourceKind source1 = SourceKind::plain, source2 = SourceKind::plain;

  double c(int j) const { return j == 0 ? c1 : c2; }
  double A(int j) const { return j == 0 ? A1 : A2; }
  const RadialDatum& g(int j) const { return j == 0 ? g1 : g2; }
  SourceKind source(int j) const { return j == 0 ? source1 : source2; }
  double data_support() const { return std::max(g1.support(), g2.support()); }
};

inline void validate(const RadialSystemSpec& s) {
  if (!(s.c1 > 0.0) || !(s.c2 > s.c1)) throw std::invalid_argument("RadialSystemSpec: need 0 < c1 < c2");
  if (!(s.eps >= 0.0)) throw std::invalid_argument("RadialSystemSpec: eps must be non-negative");
  if (!(s.M > 0.0)) throw std::invalid_argument("RadialSystemSpec: M must be positive");
}

/// Default data: g2* a nonnegative bump on [0, M] with int_0^M h2 = 1, and
/// g1* a nonnegative bump on [0, M+1] with int_M^{M+1} h1 = 1.
inline RadialSystemSpec default_two_speed_spec(double eps, SourceKind kind = SourceKind::plain, double M = 1.0) {
  RadialSystemSpec s;
  s.eps = eps;
  s.M = M;
  s.source1 = s.source2 = kind;
  const RadialDatum unit1 = RadialDatum::ball(M + 1.0, 1.0), unit2 = RadialDatum::ball(M, 1.0);
  s.g1 = RadialDatum::ball(M + 1.0, 1.0 / unit1.integral_h(M, M + 1.0));
  s.g2 = RadialDatum::ball(M, 1.0 / unit2.integral_h(0.0, M));
  return s;
}

/// Closed-form free solution (eps / c) int_{r-ct}^{r+ct} h.
inline double free_radial_v(const RadialDatum& g, double c, double eps, double t, double r) {
  return eps / c * g.integral_h(r - c * t, r + c * t);
}

// ---------------------------------------------------------------------------
// Simulation
// ---------------------------------------------------------------------------

struct SimulationOptions {
  double T = 100.0;
  double dr = 1.0 / 32;
  double dt = 0.0;      // 0: dr / c1
  double radius = 0.0;  // 0: c2 T + data support + margin
  std::vector<double> snapshots;
  unsigned threads = 1;
};

/// Fields on r_i = i dr, i = 0..size-1 (odd extension to r < 0).
struct RadialSnapshot {
  double t = 0.0;
  std::array<std::vector<double>, 2> v, vt, vr;

  std::size_t size() const { return v[0].size(); }
};

struct RadialState {
  RadialSystemSpec spec;
  double dt = 0.0, dr = 0.0;
  std::array<int, 2> shift{};  // c_j dt / dr
  std::size_t steps = 0;
  std::vector<RadialSnapshot> levels;
  std::array<double, 2> sup_vt{};  // max |d_t v_j| over every step

  const RadialSnapshot& at(double t) const {
    for (const auto& s : levels)
      if (std::abs(s.t - t) <= 1e-9 * std::max(1.0, t)) return s;
    throw std::invalid_argument("RadialState: no snapshot at t = " + std::to_string(t));
  }
  /// Grid index of r (which must be a grid point up to 1e-9 dr).
  std::size_t index(double r) const {
    const double x = r / dr;
    const double k = std::round(x);
    if (std::abs(x - k) > 1e-6 || k < 0) throw std::invalid_argument("RadialState: r is not a nonnegative grid point");
    return static_cast<std::size_t>(k);
  }
  /// v_j(t, r) at a grid point, odd in r, zero beyond the stored range.
  double v(int j, const RadialSnapshot& s, double r) const {
    const double sign = r < 0.0 ? -1.0 : 1.0;
    const std::size_t i = index(std::abs(r));
    return i < s.size() ? sign * s.v[j][i] : 0.0;
  }
};

class GridError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

namespace detail {

/// Characteristic march. Q_j = d_t v_j - c_j d_r v_j lives on the whole line
/// (Q_j(-r) = -(d_t v_j + c_j d_r v_j)(r) by oddness) and obeys
/// (d_t + c_j d_r) Q_j = S_j with S_j = r F_j. Shifts are whole cells, so the
/// linear part is transported exactly; S_j is integrated by Heun's rule.
class RadialMarcher {
 public:
  RadialMarcher(const RadialSystemSpec& spec, const SimulationOptions& opt) : spec_(spec), opt_(opt) {
    validate(spec_);
    if (!(opt.T >= 0.0)) throw GridError("simulate: horizon must be non-negative");
    if (!(opt.dr > 0.0)) throw GridError("simulate: dr must be positive");
    if (spec.M / opt.dr < 16.0 - 1e-9) throw GridError("simulate: dr must resolve M with at least 16 cells");
    dr_ = opt.dr;
    dt_ = opt.dt > 0.0 ? opt.dt : dr_ / spec.c1;
    for (int j = 0; j < 2; ++j) {
      const double s = spec.c(j) * dt_ / dr_;
      shift_[j] = static_cast<int>(std::lround(s));
      if (shift_[j] < 1 || std::abs(s - shift_[j]) > 1e-9)
        throw GridError("simulate: c_j dt / dr must be a positive integer for both speeds (got " + std::to_string(s) +
                        ")");
    }
    const double reach = spec.c2 * opt.T + spec.data_support() + 8.0 * shift_[1] * dr_;
    const double R = opt.radius > 0.0 ? opt.radius : reach;
    if (R < reach) throw GridError("simulate: radius smaller than the domain of dependence c2 T + M + margin");
    n_ = static_cast<std::size_t>(std::ceil(R / dr_)) + 4;
    steps_ = static_cast<std::size_t>(std::llround(opt.T / dt_));
    if (std::abs(steps_ * dt_ - opt.T) > 1e-9 * std::max(1.0, opt.T))
      throw GridError("simulate: T must be a whole number of time steps");
    for (double ts : opt.snapshots) {
      const double k = std::round(ts / dt_);
      if (ts < 0.0 || ts > opt.T + 1e-9 || std::abs(k * dt_ - ts) > 1e-9 * std::max(1.0, ts))
        throw GridError("simulate: snapshot time " + std::to_string(ts) + " is not a step of [0, T]");
      snap_steps_.push_back(static_cast<std::size_t>(k));
    }
    for (int j = 0; j < 2; ++j) {
      Q_[j].assign(2 * n_ + 1, 0.0);
      Qn_[j].assign(2 * n_ + 1, 0.0);
      for (auto* a : {&vt_[j], &vr_[j], &v_[j], &S_[j], &Sp_[j]}) a->assign(n_ + 3, 0.0);
      for (std::size_t m = 0; m <= 2 * n_; ++m) {
        const double r = (static_cast<double>(m) - static_cast<double>(n_)) * dr_;
        Q_[j][m] = 2.0 * spec.eps * spec.g(j).h(r);
      }
    }
  }

  RadialState run() {
    RadialState st;
    st.spec = spec_;
    st.dt = dt_;
    st.dr = dr_;
    st.shift = shift_;
    st.steps = steps_;
    std::size_t act = active(0);
    reconstruct(Q_, act, S_);
    track(st, act);
    emit(st, 0, act);
    for (std::size_t k = 0; k < steps_; ++k) {
      const std::size_t next = active(k + 1);
      // predictor
      for (int j = 0; j < 2; ++j) advance(j, next, S_[j], nullptr, Qn_[j]);
      reconstruct(Qn_, next, Sp_);
      // corrector
      for (int j = 0; j < 2; ++j) advance(j, next, S_[j], &Sp_[j], Qn_[j]);
      std::swap(Q_, Qn_);
      act = next;
      reconstruct(Q_, act, S_);
      track(st, act);
      emit(st, k + 1, act);
    }
    return st;
  }

 private:
  std::size_t active(std::size_t step) const {
    const double reach = spec_.c2 * step * dt_ + spec_.data_support();
    return std::min(n_, static_cast<std::size_t>(std::ceil(reach / dr_)) + 2 * shift_[1] + 4);
  }

  static double odd_at(const std::vector<double>& S, long i) { return i >= 0 ? S[i] : -S[-i]; }

  /// New Q_j on [-act, act]. Without `Snew` this is the Euler predictor; with it
  /// the trapezoid corrector. Reads Q_, writes out.
  void advance(int j, std::size_t act, const std::vector<double>& Sold, const std::vector<double>* Snew,
               std::vector<double>& out) const {
    const long n = static_cast<long>(n_), a = static_cast<long>(act), s = shift_[j];
    const std::vector<double>& Q = Q_[j];
    parallel_for(static_cast<std::size_t>(2 * a + 1), opt_.threads, [&](std::size_t idx) {
      const long m = static_cast<long>(idx) - a;  // r = m dr
      const long foot = m - s;
      double q = 0.0, sf = 0.0;
      if (foot >= -n) {
        q = Q[foot + n];
        if (std::abs(foot) <= a) sf = odd_at(Sold, foot);
      }
      out[m + n] = Snew ? q + 0.5 * dt_ * (sf + odd_at(*Snew, m)) : q + dt_ * sf;
    });
  }

  /// v_t, v_r, v on [0, act] from Q, then the sources into S.
  void reconstruct(const std::array<std::vector<double>, 2>& Q, std::size_t act, std::array<std::vector<double>, 2>& S) {
    for (int j = 0; j < 2; ++j) {
      const double c = spec_.c(j);
      auto& vt = vt_[j];
      auto& vr = vr_[j];
      auto& v = v_[j];
      for (std::size_t i = 0; i <= act; ++i) {
        const double qp = Q[j][n_ + i], qm = Q[j][n_ - i];
        vt[i] = 0.5 * (qp - qm);
        vr[i] = -(qm + qp) / (2.0 * c);
      }
      vt[act + 1] = vr[act + 1] = vt[act + 2] = vr[act + 2] = 0.0;
      // v = int_0^r v_r with the four-point cell rule; v_r is even
      v[0] = 0.0;
      for (std::size_t i = 0; i <= act; ++i) {
        const double left = i == 0 ? vr[1] : vr[i - 1];
        v[i + 1] = v[i] + dr_ / 24.0 * (-left + 13.0 * vr[i] + 13.0 * vr[i + 1] - vr[i + 2]);
      }
    }
    for (int j = 0; j < 2; ++j) {
      const int k = 1 - j;
      const double A = spec_.A(j), ck = spec_.c(k);
      auto& out = S[j];
      out[0] = 0.0;
      for (std::size_t i = 1; i <= act; ++i) {
        const double r = i * dr_;
        const double a = vt_[k][i];
        if (spec_.source(j) == SourceKind::plain) {
          out[i] = A * a * a / r;
        } else {
          const double b = vr_[k][i] - v_[k][i] / r;
          out[i] = A * (a * a - ck * ck * b * b) / r;
        }
      }
      out[act + 1] = out[act + 2] = 0.0;
    }
  }

  void track(RadialState& st, std::size_t act) const {
    for (int j = 0; j < 2; ++j)
      for (std::size_t i = 0; i <= act; ++i) st.sup_vt[j] = std::max(st.sup_vt[j], std::abs(vt_[j][i]));
  }

  void emit(RadialState& st, std::size_t step, std::size_t act) const {
    for (std::size_t k = 0; k < snap_steps_.size(); ++k) {
      if (snap_steps_[k] != step) continue;
      RadialSnapshot s;
      s.t = opt_.snapshots[k];
      for (int j = 0; j < 2; ++j) {
        s.v[j].assign(v_[j].begin(), v_[j].begin() + act + 1);
        s.vt[j].assign(vt_[j].begin(), vt_[j].begin() + act + 1);
        s.vr[j].assign(vr_[j].begin(), vr_[j].begin() + act + 1);
      }
      st.levels.push_back(std::move(s));
    }
  }

  RadialSystemSpec spec_;
  SimulationOptions opt_;
  double dr_ = 0.0, dt_ = 0.0;
  std::array<int, 2> shift_{};
  std::size_t n_ = 0, steps_ = 0;
  std::vector<std::size_t> snap_steps_;
  std::array<std::vector<double>, 2> Q_, Qn_, vt_, vr_, v_, S_, Sp_;
};

}  // namespace detail

inline RadialState simulate(const RadialSystemSpec& spec, const SimulationOptions& opt) {
  return detail::RadialMarcher(spec, opt).run();
}

// ---------------------------------------------------------------------------
// Second Picard iterate of v1
// ---------------------------------------------------------------------------

/// eps (free part) + (1/c1) iint_D G1 with G1 = A1 / (2 lambda) (d_t v2_free)^2
/// and d_t v2_free = eps [h2(lambda + c2 tau) + h2(lambda - c2 tau)], over the
/// backward triangle D of (t, r). Requires plain source on equation 1 and
/// (t, r) on the ray window 0 <= r - c1 t <= M past the threshold time.
inline double born_v1(const RadialSystemSpec& s, double t, double r, double tol = 1e-13) {
  validate(s);
  if (s.source1 != SourceKind::plain) throw std::invalid_argument("born_v1: needs the plain source on equation 1");
  const double sigma = r - s.c1 * t;
  if (sigma < -1e-12 || sigma > s.M + 1e-12) throw std::invalid_argument("born_v1: r - c1 t outside [0, M]");
  const double kappa = s.c2 / s.c1;
  if (2.0 * s.c1 * t < (kappa + 1.0) / (kappa - 1.0) * s.M - 1e-12)
    throw std::invalid_argument("born_v1: t below the threshold 2 c1 t >= (c+1) M / (c-1)");
  const double eps = s.eps, c1 = s.c1, c2 = s.c2, M2 = s.g2.support();
  const double free_part = free_radial_v(s.g1, c1, eps, t, r);
  if (s.A1 == 0.0 || eps == 0.0 || s.g2.is_zero()) return free_part;

  auto G = [&](double tau, double lam) {
    if (lam == 0.0) return 0.0;
    const double w = eps * (s.g2.h(lam + c2 * tau) + s.g2.h(lam - c2 * tau));
    return s.A1 / (2.0 * lam) * w * w;
  };
  // at time tau the integrand lives on the strips |lambda -+ c2 tau| <= M2
  auto inner = [&](double tau) {
    const double lo = r - c1 * (t - tau), hi = r + c1 * (t - tau);
    std::vector<std::pair<double, double>> spans = {{c2 * tau - M2, c2 * tau + M2}, {-c2 * tau - M2, -c2 * tau + M2}};
    if (spans[1].second >= spans[0].first) spans = {{spans[1].first, spans[0].second}};
    double sum = 0.0;
    for (auto [a, b] : spans) {
      a = std::max(a, lo);
      b = std::min(b, hi);
      if (b > a) sum += adaptive_line_integral([&](double lam) { return G(tau, lam); }, a, b, 0.01 * tol);
    }
    return sum;
  };
  std::vector<double> cuts = {0.0, t, M2 / c2};
  for (double sg : {-1.0, 1.0})
    for (double e : {-1.0, 1.0}) {
      // strip edge +-c2 tau + sg M2 meets triangle edge r + e c1 (t - tau)
      for (double dir : {-1.0, 1.0}) {
        const double den = dir * c2 + e * c1;
        if (den != 0.0) cuts.push_back((r + e * c1 * t - sg * M2) / den);
      }
    }
  std::sort(cuts.begin(), cuts.end());
  double born = 0.0;
  for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
    const double a = std::clamp(cuts[k], 0.0, t), b = std::clamp(cuts[k + 1], 0.0, t);
    if (b > a) born += adaptive_line_integral(inner, a, b, tol);
  }
  return free_part + born / c1;
}

// ---------------------------------------------------------------------------
// Ray diagnostics
// ---------------------------------------------------------------------------

/// Grid sigmas in [lo, hi] (rounded inward to multiples of dr).
inline std::vector<double> sigma_nodes(double dr, double lo, double hi) {
  std::vector<double> out;
  for (long k = static_cast<long>(std::ceil(lo / dr - 1e-9)); k * dr <= hi + 1e-9 * dr; ++k) out.push_back(k * dr);
  return out;
}

/// max over sigma in [lo, hi] of |v_j(t, c_j t + sigma)|.
inline double ray_max(const RadialState& st, int j, double t, double lo, double hi) {
  const RadialSnapshot& s = st.at(t);
  double m = 0.0;
  for (double sg : sigma_nodes(st.dr, lo, hi)) m = std::max(m, std::abs(st.v(j, s, st.spec.c(j) * t + sg)));
  return m;
}

/// y = a + b log(2 + t); the times must span at least 1.5 decades.
inline FitReport log_growth_fit(const std::vector<double>& t, const std::vector<double>& y) {
  if (t.size() != y.size() || t.size() < 3) throw std::invalid_argument("log_growth_fit: need >= 3 samples");
  const auto [mn, mx] = std::minmax_element(t.begin(), t.end());
  if (!(*mn > 0.0) || std::log10(*mx / *mn) < 1.5 - 1e-12)
    throw std::invalid_argument("log_growth_fit: times must span at least 1.5 decades");
  std::vector<double> x;
  for (double ti : t) x.push_back(std::log(2.0 + ti));
  return linear_fit(x, y, "a+b*log(2+t)");
}

inline FitReport log_growth_fit(const RadialState& st, const std::vector<double>& t) {
  std::vector<double> y;
  for (double ti : t) y.push_back(ray_max(st, 0, ti, 0.0, st.spec.M));
  return log_growth_fit(t, y);
}

struct ProfileConvergence {
  std::vector<double> times;   // t_k for each difference
  std::vector<double> cauchy;  // max_sigma |p^(t_{k+1}) - p^(t_k)|
  FitReport fit;               // log-log slope of cauchy against times
  bool monotone = false;
  bool converged = false;  // monotone and decaying at least like t^{-1/2}
};

/// A profile on a uniform sigma grid; zero outside it.
struct RayProfile {
  int j = 0;
  double dr = 0.0;
  std::vector<double> sigma;
  std::vector<double> values;
  ProfileConvergence report;

  double operator()(double s) const {
    if (sigma.empty()) return 0.0;
    const double x = (s - sigma.front()) / dr;
    const long k = std::lround(x);
    if (k < 0 || k >= static_cast<long>(values.size()) || std::abs(x - k) > 1e-6) return 0.0;
    return values[k];
  }
};

namespace detail {

template <class Sample>
RayProfile extract_profile(const RadialState& st, int j, double lo, double hi, const std::vector<double>& t_list,
                           Sample&& sample) {
  if (t_list.size() < 3) throw std::invalid_argument("extract profile: need at least 3 times");
  if (!std::is_sorted(t_list.begin(), t_list.end())) throw std::invalid_argument("extract profile: times must increase");
  RayProfile p;
  p.j = j;
  p.dr = st.dr;
  p.sigma = sigma_nodes(st.dr, lo, hi);
  std::vector<std::vector<double>> rows;
  for (double t : t_list) {
    const RadialSnapshot& s = st.at(t);
    std::vector<double> row;
    for (double sg : p.sigma) {
      const double r = st.spec.c(j) * t + sg;
      if (r < 0.0) throw std::invalid_argument("extract profile: sigma window reaches r < 0");
      const std::size_t i = st.index(r);
      row.push_back(i < s.size() ? sample(s, i) : 0.0);
    }
    rows.push_back(std::move(row));
  }
  p.values = rows.back();
  for (std::size_t k = 0; k + 1 < rows.size(); ++k) {
    double d = 0.0;
    for (std::size_t i = 0; i < p.sigma.size(); ++i) d = std::max(d, std::abs(rows[k + 1][i] - rows[k][i]));
    p.report.times.push_back(t_list[k]);
    p.report.cauchy.push_back(d);
  }
  p.report.monotone = true;
  for (std::size_t k = 0; k + 1 < p.report.cauchy.size(); ++k)
    if (!(p.report.cauchy[k + 1] < p.report.cauchy[k])) p.report.monotone = false;
  p.report.fit = loglog_fit(p.report.times, p.report.cauchy, "cauchy_vs_t");
  const bool zero = std::all_of(p.report.cauchy.begin(), p.report.cauchy.end(), [](double d) { return d == 0.0; });
  p.report.converged = zero || (p.report.monotone && !p.report.fit.degenerate && p.report.fit.slope() <= -0.5);
  return p;
}

}  // namespace detail

/// p_j(sigma) = D_- v_j = (d_r v_j - c_j^{-1} d_t v_j) / 2 at r = c_j t + sigma, largest t.
inline RayProfile extract_dprofile(const RadialState& st, int j, double lo, double hi,
                                   const std::vector<double>& t_list) {
  const double c = st.spec.c(j);
  return detail::extract_profile(st, j, lo, hi, t_list, [&](const RadialSnapshot& s, std::size_t i) {
    return 0.5 * (s.vr[j][i] - s.vt[j][i] / c);
  });
}

/// U_j(sigma) = v_j(t, c_j t + sigma) at the largest t.
inline RayProfile extract_uprofile(const RadialState& st, int j, double lo, double hi,
                                   const std::vector<double>& t_list) {
  return detail::extract_profile(st, j, lo, hi, t_list,
                                 [&](const RadialSnapshot& s, std::size_t i) { return s.v[j][i]; });
}

/// Widest sigma window resolved for field j over t_list: r >= 0 at the first
/// time, the stored range at the last. Energy defects need the whole profile;
/// a clipped window leaves the nonlinear radiation outside it as a floor.
inline std::pair<double, double> full_sigma_window(const RadialState& st, int j, const std::vector<double>& t_list) {
  if (t_list.empty()) throw std::invalid_argument("full_sigma_window: empty time list");
  const double c = st.spec.c(j);
  const RadialSnapshot& last = st.at(t_list.back());
  return {-c * t_list.front(), static_cast<double>(last.size() - 1) * st.dr - c * t_list.back()};
}

/// ||u_j - (outgoing pattern of p_j)||_{E,c_j} in the radial form
/// e^2 = 4 pi (1/2) int_0^inf (c^{-1} v_t + p(r - ct))^2 + (v_r - v/r - p(r - ct))^2 dr.
inline std::vector<double> scattering_energy_defect(const RadialState& st, const RayProfile& p,
                                                    const std::vector<double>& t_list) {
  const int j = p.j;
  const double c = st.spec.c(j);
  std::vector<double> out;
  for (double t : t_list) {
    const RadialSnapshot& s = st.at(t);
    double sum = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      const double r = i * st.dr;
      const double pr = p(r - c * t);
      const double vor = i == 0 ? s.vr[j][0] : s.v[j][i] / r;
      const double a = s.vt[j][i] / c + pr, b = s.vr[j][i] - vor - pr;
      sum += (i == 0 ? 0.5 : 1.0) * (a * a + b * b);
    }
    out.push_back(std::sqrt(2.0 * pi * sum * st.dr));
  }
  return out;
}

/// The defect against field j's own dprofile over full_sigma_window.
inline std::vector<double> scattering_energy_defect(const RadialState& st, int j, const std::vector<double>& t_list) {
  const auto [lo, hi] = full_sigma_window(st, j, t_list);
  return scattering_energy_defect(st, extract_dprofile(st, j, lo, hi, t_list), t_list);
}

/// Smallest K with |p_j - eps p0| <= K eps^2 <sigma>^{-1} on the profile grid.
inline double profile_agreement_constant(const RayProfile& p, const std::function<double(double)>& p0, double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("profile_agreement_constant: eps must be positive");
  double K = 0.0;
  for (std::size_t i = 0; i < p.sigma.size(); ++i)
    K = std::max(K, std::abs(p.values[i] - eps * p0(p.sigma[i])) * japanese(p.sigma[i]) / (eps * eps));
  return K;
}

struct DecayAudit {
  std::vector<double> times;
  std::array<std::vector<double>, 2> deriv;      // sup |d_t u_j| <r> <c_j t - r>
  std::array<std::vector<double>, 2> value_log;  // sup |u_j| <t + r> / log(1 + (1 + c_j t + r)/(1 + |c_j t - r|))
  std::array<std::vector<double>, 2> value;      // sup |u_j| <t + r>
  std::array<FitReport, 2> deriv_fit, value_log_fit, value_fit;  // log-log slopes against t
  std::array<bool, 2> bounded{};                                  // deriv and value_log slopes <= 0.1
};

inline DecayAudit decay_audit(const RadialState& st) {
  DecayAudit a;
  for (const auto& s : st.levels) {
    if (s.t <= 0.0) continue;
    a.times.push_back(s.t);
    for (int j = 0; j < 2; ++j) {
      const double c = st.spec.c(j);
      double d = 0.0, vl = 0.0, vv = 0.0;
      for (std::size_t i = 1; i < s.size(); ++i) {
        const double r = i * st.dr;
        const double ut = s.vt[j][i] / r, u = s.v[j][i] / r;
        d = std::max(d, std::abs(ut) * japanese(r) * japanese(c * s.t - r));
        const double w = std::abs(u) * japanese(s.t + r);
        vv = std::max(vv, w);
        vl = std::max(vl, w / std::log(1.0 + (1.0 + c * s.t + r) / (1.0 + std::abs(c * s.t - r))));
      }
      a.deriv[j].push_back(d);
      a.value_log[j].push_back(vl);
      a.value[j].push_back(vv);
    }
  }
  for (int j = 0; j < 2; ++j) {
    a.deriv_fit[j] = loglog_fit(a.times, a.deriv[j], "deriv_audit");
    a.value_log_fit[j] = loglog_fit(a.times, a.value_log[j], "value_log_audit");
    a.value_fit[j] = loglog_fit(a.times, a.value[j], "value_audit");
    auto ok = [](const FitReport& f) { return f.degenerate || f.slope() <= 0.1; };
    a.bounded[j] = ok(a.deriv_fit[j]) && ok(a.value_log_fit[j]);
  }
  return a;
}

}  // namespace wavescatter
