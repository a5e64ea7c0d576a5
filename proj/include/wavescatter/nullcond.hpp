#pragma once

// Quadratic nonlinearities sum_{k,l} p_{jkl}^{abb'} du_k ddu_l + q_{jkl}^{ab} du_k du_l:
// structural validation, the exact null-condition test on the speed-c_j cone,
// term classes, null forms on closed-form fields and their decay audit.

#include <boost/multiprecision/cpp_int.hpp>

#include <array>
#include <limits>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "wavescatter/fit.hpp"
#include "wavescatter/numerics.hpp"

namespace wavescatter {

using Rational = boost::multiprecision::cpp_rational;

inline double to_double(const Rational& q) { return q.convert_to<double>(); }

/// Parses "-12", "3.25", "1e-3", "2.5E+2" or "7/3" exactly.
inline Rational parse_rational(const std::string& text) {
  auto fail = [&] { return std::invalid_argument("parse_rational: not a rational literal: '" + text + "'"); };
  const auto slash = text.find('/');
  if (slash != std::string::npos) {
    const Rational num = parse_rational(text.substr(0, slash)), den = parse_rational(text.substr(slash + 1));
    if (den == 0) throw fail();
    return num / den;
  }
  std::size_t i = 0;
  bool negative = false;
  if (i < text.size() && (text[i] == '+' || text[i] == '-')) negative = text[i++] == '-';
  boost::multiprecision::cpp_int digits = 0;
  int scale = 0, ndigits = 0;
  bool dot = false;
  for (; i < text.size(); ++i) {
    const char ch = text[i];
    if (ch >= '0' && ch <= '9') {
      digits = digits * 10 + (ch - '0');
      ++ndigits;
      if (dot) --scale;
    } else if (ch == '.' && !dot) {
      dot = true;
    } else {
      break;
    }
  }
  if (ndigits == 0) throw fail();
  if (i < text.size()) {
    if (text[i] != 'e' && text[i] != 'E') throw fail();
    std::size_t used = 0;
    int e = 0;
    try {
      e = std::stoi(text.substr(i + 1), &used);
    } catch (const std::exception&) {
      throw fail();
    }
    if (used != text.size() - i - 1 || used == 0) throw fail();
    scale += e;
  }
  Rational value(digits);
  const boost::multiprecision::cpp_int p10 = boost::multiprecision::pow(boost::multiprecision::cpp_int(10), std::abs(scale));
  value = scale >= 0 ? value * Rational(p10) : value / Rational(p10);
  return negative ? Rational(-value) : value;
}

// ---------------------------------------------------------------------------
// System
// ---------------------------------------------------------------------------

/// p index (j,k,l,a,b,b'); j,k,l count from 1, a,b,b' range over 0..3 with 0 = t.
struct PIndex {
  int j, k, l, a, b, bp;
  auto operator<=>(const PIndex&) const = default;
};
struct QIndex {
  int j, k, l, a, b;
  auto operator<=>(const QIndex&) const = default;
};

inline std::string to_string(const PIndex& i) {
  std::ostringstream s;
  s << "p_{" << i.j << i.k << i.l << "}^{" << i.a << i.b << i.bp << "}";
  return s.str();
}
inline std::string to_string(const QIndex& i) {
  std::ostringstream s;
  s << "q_{" << i.j << i.k << i.l << "}^{" << i.a << i.b << "}";
  return s.str();
}

/// Sparse coefficient tensors; zeros are never stored.
struct QuadraticSystem {
  int N = 0;
  std::vector<Rational> speeds;
  std::map<PIndex, Rational> p;
  std::map<QIndex, Rational> q;

  QuadraticSystem() = default;
  explicit QuadraticSystem(std::vector<Rational> c) : N(static_cast<int>(c.size())), speeds(std::move(c)) {}

  Rational p_at(const PIndex& i) const {
    auto it = p.find(i);
    return it == p.end() ? Rational(0) : it->second;
  }
  Rational q_at(const QIndex& i) const {
    auto it = q.find(i);
    return it == q.end() ? Rational(0) : it->second;
  }
  void add_p(const PIndex& i, const Rational& v) {
    if ((p[i] += v) == 0) p.erase(i);
  }
  void add_q(const QIndex& i, const Rational& v) {
    if ((q[i] += v) == 0) q.erase(i);
  }
  double speed(int j) const { return to_double(speeds.at(j - 1)); }
};

/// Adds v to p_{jkl}^{abb'} together with its partners under b<->b' (split
/// evenly, the product of second derivatives is symmetric) and j<->l (copied,
/// as the hyperbolicity symmetry requires).
inline void add_p_symmetric(QuadraticSystem& s, const PIndex& i, const Rational& v) {
  const Rational w = i.b == i.bp ? v : Rational(v / 2);
  auto put = [&](int j, int l) {
    s.add_p({j, i.k, l, i.a, i.b, i.bp}, w);
    if (i.b != i.bp) s.add_p({j, i.k, l, i.a, i.bp, i.b}, w);
  };
  put(i.j, i.l);
  if (i.j != i.l) put(i.l, i.j);
}

/// coeff * Q_0(u_k, u_l; c) in equation j.
inline void add_q0(QuadraticSystem& s, int j, int k, int l, const Rational& c, const Rational& coeff) {
  s.add_q({j, k, l, 0, 0}, coeff);
  for (int m = 1; m <= 3; ++m) s.add_q({j, k, l, m, m}, -coeff * c * c);
}

/// coeff * Q_ab(u_k, u_l) in equation j.
inline void add_qab(QuadraticSystem& s, int j, int k, int l, int a, int b, const Rational& coeff) {
  s.add_q({j, k, l, a, b}, coeff);
  s.add_q({j, k, l, b, a}, -coeff);
}

/// coeff * Q_ab(u_j, d_{b'} u_j) in equation j, written through p.
inline void add_pqab(QuadraticSystem& s, int j, int a, int b, int bp, const Rational& coeff) {
  add_p_symmetric(s, {j, j, j, a, b, bp}, coeff);
  add_p_symmetric(s, {j, j, j, b, a, bp}, -coeff);
}

/// The two-speed example: box_{c1} u1 = A1 (d_t u2)^2, box_{c2} u2 = A2 (d_t u1)^2.
inline QuadraticSystem two_speed_example(const Rational& A1, const Rational& A2, const Rational& c1 = 1,
                                         const Rational& c2 = 2) {
  QuadraticSystem s({c1, c2});
  s.add_q({1, 2, 2, 0, 0}, A1);
  s.add_q({2, 1, 1, 0, 0}, A2);
  return s;
}

/// Every violated structural requirement, with indices. Empty means valid.
inline std::vector<std::string> validate(const QuadraticSystem& s) {
  std::vector<std::string> out;
  if (s.N < 1) out.push_back("N must be at least 1");
  if (static_cast<int>(s.speeds.size()) != s.N)
    out.push_back("speeds: expected " + std::to_string(s.N) + " entries, got " + std::to_string(s.speeds.size()));
  for (std::size_t j = 0; j < s.speeds.size(); ++j) {
    if (s.speeds[j] <= 0) out.push_back("speed c_" + std::to_string(j + 1) + " must be positive");
    if (j > 0 && !(s.speeds[j - 1] < s.speeds[j]))
      out.push_back("speeds must be strictly increasing: c_" + std::to_string(j) + " >= c_" + std::to_string(j + 1));
  }
  auto in_range = [&](int j, int k, int l, std::initializer_list<int> ab) {
    for (int v : {j, k, l})
      if (v < 1 || v > s.N) return false;
    for (int v : ab)
      if (v < 0 || v > 3) return false;
    return true;
  };
  for (const auto& [i, v] : s.p) {
    if (!in_range(i.j, i.k, i.l, {i.a, i.b, i.bp})) {
      out.push_back("index out of range: " + to_string(i));
      continue;
    }
    if (i.b == 0 && i.bp == 0) out.push_back("p^{a00}=0 violated: " + to_string(i));
    const PIndex swap_jl{i.l, i.k, i.j, i.a, i.b, i.bp}, swap_b{i.j, i.k, i.l, i.a, i.bp, i.b};
    if (s.p_at(swap_jl) != v && i < swap_jl)
      out.push_back("symmetry p_{jkl}=p_{lkj} violated: " + to_string(i) + " vs " + to_string(swap_jl));
    if (s.p_at(swap_b) != v && i < swap_b)
      out.push_back("symmetry p^{abb'}=p^{ab'b} violated: " + to_string(i) + " vs " + to_string(swap_b));
  }
  // a partner that is zero has no entry of its own, so report it from the nonzero side
  for (const auto& [i, v] : s.p) {
    const PIndex swap_jl{i.l, i.k, i.j, i.a, i.b, i.bp}, swap_b{i.j, i.k, i.l, i.a, i.bp, i.b};
    if (swap_jl < i && !s.p.count(swap_jl))
      out.push_back("symmetry p_{jkl}=p_{lkj} violated: " + to_string(i) + " vs " + to_string(swap_jl));
    if (swap_b < i && !s.p.count(swap_b))
      out.push_back("symmetry p^{abb'}=p^{ab'b} violated: " + to_string(i) + " vs " + to_string(swap_b));
  }
  for (const auto& [i, v] : s.q)
    if (!in_range(i.j, i.k, i.l, {i.a, i.b})) out.push_back("index out of range: " + to_string(i));
  return out;
}

class InvalidSystem : public std::invalid_argument {
 public:
  explicit InvalidSystem(const std::vector<std::string>& diagnostics)
      : std::invalid_argument("invalid quadratic system: " + (diagnostics.empty() ? std::string() : diagnostics[0])),
        diagnostics_(diagnostics) {}
  const std::vector<std::string>& diagnostics() const { return diagnostics_; }

 private:
  std::vector<std::string> diagnostics_;
};

inline void require_valid(const QuadraticSystem& s) {
  auto d = validate(s);
  if (!d.empty()) throw InvalidSystem(d);
}

// ---------------------------------------------------------------------------
// Exact symbols on the cone
// ---------------------------------------------------------------------------

/// Homogeneous polynomial in X_0..X_3 with rational coefficients.
using Exponent4 = std::array<int, 4>;
using Polynomial4 = std::map<Exponent4, Rational>;

inline void add_term(Polynomial4& P, Exponent4 e, const Rational& v) {
  if ((P[e] += v) == 0) P.erase(e);
}

/// sum p_{jjj}^{abb'} X_a X_b X_b'
inline Polynomial4 diagonal_cubic(const QuadraticSystem& s, int j) {
  Polynomial4 P;
  for (const auto& [i, v] : s.p) {
    if (i.j != j || i.k != j || i.l != j) continue;
    Exponent4 e{};
    ++e[i.a];
    ++e[i.b];
    ++e[i.bp];
    add_term(P, e, v);
  }
  return P;
}

/// sum q_{jjj}^{ab} X_a X_b
inline Polynomial4 diagonal_quadratic(const QuadraticSystem& s, int j) {
  Polynomial4 P;
  for (const auto& [i, v] : s.q) {
    if (i.j != j || i.k != j || i.l != j) continue;
    Exponent4 e{};
    ++e[i.a];
    ++e[i.b];
    add_term(P, e, v);
  }
  return P;
}

/// Normal form modulo X_0^2 - c^2 |X'|^2: every X_0^2 is replaced by
/// c^2 (X_1^2 + X_2^2 + X_3^2) until X_0 appears at most linearly. The result
/// is zero iff the polynomial vanishes on the cone.
inline Polynomial4 reduce_on_cone(Polynomial4 P, const Rational& c) {
  const Rational c2 = c * c;
  for (;;) {
    auto it = std::find_if(P.begin(), P.end(), [](const auto& t) { return t.first[0] >= 2; });
    if (it == P.end()) return P;
    const Exponent4 e = it->first;
    const Rational v = it->second;
    P.erase(it);
    for (int m = 1; m <= 3; ++m) {
      Exponent4 f = e;
      f[0] -= 2;
      f[m] += 2;
      add_term(P, f, v * c2);
    }
  }
}

inline double evaluate(const Polynomial4& P, const std::array<double, 4>& X) {
  double s = 0.0;
  for (const auto& [e, v] : P) {
    double m = to_double(v);
    for (int a = 0; a < 4; ++a) m *= std::pow(X[a], e[a]);
    s += m;
  }
  return s;
}

struct NullWitness {
  std::array<double, 4> X{};  // (c_j, omega) with |omega| = 1
  double value = 0.0;
  std::string symbol;  // "cubic" or "quadratic"
};

struct NullVerdict {
  int j = 0;
  bool satisfied = true;
  bool cubic_vanishes = true;
  bool quadratic_vanishes = true;
  std::optional<NullWitness> witness;
};

namespace detail {

/// Exact test of R(c|v|, v) != 0 for an integer direction v and a reduced R.
inline bool nonzero_at(const Polynomial4& R, const Rational& c, const std::array<int, 3>& v) {
  Rational A = 0, B = 0;
  for (const auto& [e, coef] : R) {
    Rational m = coef;
    for (int k = 0; k < 3; ++k)
      for (int p = 0; p < e[k + 1]; ++p) m *= v[k];
    (e[0] == 0 ? A : B) += m;
  }
  const int n = v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
  const int root = static_cast<int>(std::lround(std::sqrt(static_cast<double>(n))));
  if (root * root == n) return A + c * root * B != 0;
  return A != 0 || B != 0;  // sqrt(n) is irrational
}

inline std::vector<std::array<int, 3>> witness_directions() {
  std::vector<std::array<int, 3>> out = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}, {1, 1, 0}, {1, 0, 1}, {0, 1, 1}};
  // fallback lattice; a nonzero reduced form of degree <= 3 cannot vanish on all of it
  for (int a = -2; a <= 2; ++a)
    for (int b = -2; b <= 2; ++b)
      for (int d = -2; d <= 2; ++d)
        if (a || b || d) out.push_back({a, b, d});
  return out;
}

inline std::optional<NullWitness> find_witness(const Polynomial4& symbol, const Polynomial4& reduced,
                                               const Rational& c, const std::string& name) {
  for (const auto& v : witness_directions()) {
    if (!nonzero_at(reduced, c, v)) continue;
    const double len = std::sqrt(static_cast<double>(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]));
    NullWitness w;
    w.X = {to_double(c), v[0] / len, v[1] / len, v[2] / len};
    w.value = evaluate(symbol, w.X);
    w.symbol = name;
    return w;
  }
  return std::nullopt;
}

}  // namespace detail

/// Exact verdict for equation j: both diagonal symbols must reduce to zero.
inline NullVerdict null_condition_for(const QuadraticSystem& s, int j) {
  const Rational c = s.speeds.at(j - 1);
  const Polynomial4 cubic = diagonal_cubic(s, j), quad = diagonal_quadratic(s, j);
  const Polynomial4 rc = reduce_on_cone(cubic, c), rq = reduce_on_cone(quad, c);
  NullVerdict v;
  v.j = j;
  v.cubic_vanishes = rc.empty();
  v.quadratic_vanishes = rq.empty();
  v.satisfied = v.cubic_vanishes && v.quadratic_vanishes;
  if (!v.cubic_vanishes)
    v.witness = detail::find_witness(cubic, rc, c, "cubic");
  else if (!v.quadratic_vanishes)
    v.witness = detail::find_witness(quad, rq, c, "quadratic");
  return v;
}

inline std::vector<NullVerdict> check_null_condition(const QuadraticSystem& s) {
  require_valid(s);
  std::vector<NullVerdict> out;
  for (int j = 1; j <= s.N; ++j) out.push_back(null_condition_for(s, j));
  return out;
}

inline bool null_condition_holds(const std::vector<NullVerdict>& v) {
  return std::all_of(v.begin(), v.end(), [](const NullVerdict& x) { return x.satisfied; });
}

/// Floating-point cross-check: both symbols sampled at X = (+-c_j, omega)
/// for `samples` random unit omega.
inline bool sampled_null_condition(const QuadraticSystem& s, int j, int samples = 200, std::uint64_t seed = 20240601) {
  const double c = s.speed(j);
  const Polynomial4 cubic = diagonal_cubic(s, j), quad = diagonal_quadratic(s, j);
  double scale = 0.0;
  for (const auto* P : {&cubic, &quad})
    for (const auto& [e, v] : *P) scale += std::abs(to_double(v)) * std::pow(std::max(1.0, c), 3);
  const double tol = 1e-10 * std::max(scale, 1e-300);
  std::mt19937_64 rng(seed + static_cast<std::uint64_t>(j));
  std::normal_distribution<double> g;
  for (int n = 0; n < samples; ++n) {
    Vec3 w{g(rng), g(rng), g(rng)};
    w = (1.0 / norm(w)) * w;
    for (double sgn : {1.0, -1.0}) {
      const std::array<double, 4> X{sgn * c, w[0], w[1], w[2]};
      if (std::abs(evaluate(cubic, X)) > tol || std::abs(evaluate(quad, X)) > tol) return false;
    }
  }
  return true;
}

// ---------------------------------------------------------------------------
// Classification
// ---------------------------------------------------------------------------

enum class TermClass { diagonal, typeI, typeII };

inline const char* to_string(TermClass c) {
  switch (c) {
    case TermClass::diagonal:
      return "diagonal";
    case TermClass::typeI:
      return "typeI";
    case TermClass::typeII:
      return "typeII";
  }
  return "?";
}

inline TermClass classify_term(int j, int k, int l) {
  if (k != l) return TermClass::typeI;
  return k == j ? TermClass::diagonal : TermClass::typeII;
}

struct ClassifiedTerm {
  char tensor = 'q';  // 'p' or 'q'
  std::string index;
  int j = 0;
  TermClass cls = TermClass::diagonal;
};

struct Classification {
  std::vector<ClassifiedTerm> terms;
  std::map<int, std::array<int, 3>> per_j;  // counts in TermClass order
  std::array<int, 3> totals{};
};

inline Classification classify(const QuadraticSystem& s) {
  require_valid(s);
  Classification c;
  auto record = [&](char t, std::string idx, int j, TermClass cls) {
    c.terms.push_back({t, std::move(idx), j, cls});
    ++c.per_j[j][static_cast<int>(cls)];
    ++c.totals[static_cast<int>(cls)];
  };
  for (const auto& [i, v] : s.p) record('p', to_string(i), i.j, classify_term(i.j, i.k, i.l));
  for (const auto& [i, v] : s.q) record('q', to_string(i), i.j, classify_term(i.j, i.k, i.l));
  return c;
}

// ---------------------------------------------------------------------------
// Closed-form fields, vector fields Z and null forms
// ---------------------------------------------------------------------------

/// Value, first derivatives (d_t, d_1, d_2, d_3) and the 4x4 Hessian.
struct FieldJet {
  double value = 0.0;
  std::array<double, 4> d{};
  std::array<std::array<double, 4>, 4> dd{};
};

class ClosedFormField {
 public:
  using Evaluator = std::function<FieldJet(double, const Vec3&)>;

  explicit ClosedFormField(Evaluator f) : f_(std::move(f)) {}

  FieldJet jet(double t, const Vec3& x) const { return f_(t, x); }

  /// Z = (S, Omega_1, Omega_2, Omega_3, d_t, d_1, d_2, d_3) applied analytically.
  std::array<double, 8> Z(double t, const Vec3& x) const {
    const FieldJet j = jet(t, x);
    const Vec3 g{j.d[1], j.d[2], j.d[3]};
    const Vec3 om = cross(x, g);
    return {t * j.d[0] + dot(x, g), om[0], om[1], om[2], j.d[0], j.d[1], j.d[2], j.d[3]};
  }

  ClosedFormField scaled(double s) const {
    Evaluator f = f_;
    return ClosedFormField([f, s](double t, const Vec3& x) {
      FieldJet j = f(t, x);
      j.value *= s;
      for (auto& v : j.d) v *= s;
      for (auto& row : j.dd)
        for (auto& v : row) v *= s;
      return j;
    });
  }

  static ClosedFormField constant(double v) {
    return ClosedFormField([v](double, const Vec3&) {
      FieldJet j;
      j.value = v;
      return j;
    });
  }

  /// u = (F(r - ct) - F(-r - ct)) / r, the free radial wave regular at r = 0.
  /// With `outgoing_only` the second term is dropped (a free solution for r > 0).
  static ClosedFormField radial_wave(std::function<BumpJet1D(double)> F, double c, bool outgoing_only = false) {
    return ClosedFormField([F = std::move(F), c, outgoing_only](double t, const Vec3& x) {
      const double r = norm(x);
      if (!(r > 0.0)) throw std::invalid_argument("radial_wave: evaluation at the origin");
      const BumpJet1D a = F(r - c * t);
      const BumpJet1D b = outgoing_only ? BumpJet1D{} : F(-r - c * t);
      // w = r u and its (t, r) derivatives
      const double w = a.value - b.value;
      const double wr = a.d1 + b.d1, wt = -c * a.d1 + c * b.d1;
      const double wrr = a.d2 - b.d2, wtt = c * c * (a.d2 - b.d2), wtr = -c * (a.d2 + b.d2);
      const double ur = wr / r - w / (r * r);
      const double urr = wrr / r - 2.0 * wr / (r * r) + 2.0 * w / (r * r * r);
      const double utr = wtr / r - wt / (r * r);
      const Vec3 om = (1.0 / r) * x;
      FieldJet j;
      j.value = w / r;
      j.d[0] = wt / r;
      j.dd[0][0] = wtt / r;
      for (int k = 0; k < 3; ++k) {
        j.d[k + 1] = ur * om[k];
        j.dd[0][k + 1] = j.dd[k + 1][0] = utr * om[k];
        for (int l = 0; l < 3; ++l)
          j.dd[k + 1][l + 1] = urr * om[k] * om[l] + (ur / r) * ((k == l ? 1.0 : 0.0) - om[k] * om[l]);
      }
      return j;
    });
  }

 private:
  Evaluator f_;
};

/// Profile s -> scale * beta(s / width) with its derivatives, for radial_wave.
inline std::function<BumpJet1D(double)> bump_profile(double width, double scale = 1.0, double shift = 0.0) {
  return [=](double s) {
    const BumpJet1D b = bump_jet((s - shift) / width);
    return BumpJet1D{scale * b.value, scale * b.d1 / width, scale * b.d2 / (width * width)};
  };
}

/// Largest gap between the analytic Hessian and a Richardson-extrapolated
/// central difference of the analytic gradient, over all (a, b).
inline double mixed_partial_defect(const ClosedFormField& f, double t, const Vec3& x, double h = 1e-4) {
  const FieldJet j = f.jet(t, x);
  auto grad_at = [&](int a, double step) {
    double tt = t;
    Vec3 xx = x;
    if (a == 0)
      tt += step;
    else
      xx[a - 1] += step;
    return f.jet(tt, xx).d;
  };
  double worst = 0.0;
  for (int a = 0; a < 4; ++a) {
    const auto p1 = grad_at(a, h), m1 = grad_at(a, -h), p2 = grad_at(a, 2 * h), m2 = grad_at(a, -2 * h);
    for (int b = 0; b < 4; ++b) {
      const double d1 = (p1[b] - m1[b]) / (2 * h), d2 = (p2[b] - m2[b]) / (4 * h);
      const double fd = (4.0 * d1 - d2) / 3.0;
      worst = std::max({worst, std::abs(fd - j.dd[a][b]), std::abs(j.dd[a][b] - j.dd[b][a])});
    }
  }
  return worst;
}

/// Q_0(.,.;c), Q_ab, or the plain product (d_a phi)(d_b psi) used as a non-null contrast.
struct NullForm {
  enum class Kind { Q0, Qab, Product } kind = Kind::Q0;
  double c = 1.0;
  int a = 0, b = 0;

  static NullForm q0(double c) { return {Kind::Q0, c, 0, 0}; }
  static NullForm qab(int a, int b) { return {Kind::Qab, 1.0, a, b}; }
  static NullForm product(int a = 0, int b = 0) { return {Kind::Product, 1.0, a, b}; }
};

inline double eval_null_form(const NullForm& q, const FieldJet& p, const FieldJet& s) {
  switch (q.kind) {
    case NullForm::Kind::Q0:
      return p.d[0] * s.d[0] - q.c * q.c * (p.d[1] * s.d[1] + p.d[2] * s.d[2] + p.d[3] * s.d[3]);
    case NullForm::Kind::Qab:
      return p.d[q.a] * s.d[q.b] - p.d[q.b] * s.d[q.a];
    case NullForm::Kind::Product:
      return p.d[q.a] * s.d[q.b];
  }
  return 0.0;
}

inline double eval_null_form(const NullForm& q, const ClosedFormField& phi, const ClosedFormField& psi, double t,
                             const Vec3& x) {
  return eval_null_form(q, phi.jet(t, x), psi.jet(t, x));
}

// ---------------------------------------------------------------------------
// Decay audit
// ---------------------------------------------------------------------------

struct AuditRegion {
  double r_min = 10.0;
  double r_max = 100.0;
  double band = 5.0;  // |r - ct| <= band
  int radial_samples = 32;
  int band_samples = 21;
  Vec3 direction{0.0, 0.6, 0.8};
};

struct NullAuditReport {
  double max_ratio = 0.0;
  std::vector<double> radii;
  std::vector<double> ratio_by_radius;  // max over the band at each radius
  FitReport growth;                     // log-log fit of ratio_by_radius against r
  bool flagged = false;                 // ratio grows with r: no uniform constant
  std::size_t samples = 0;
};

/// |Q| divided by <r>^{-1}(|Z phi||d psi| + |d phi||Z psi|) + <r>^{-1}<ct-r>|d phi||d psi|
/// over the region. A zero numerator counts as ratio 0; a nonzero numerator
/// over a zero bound is reported as infinity.
inline NullAuditReport null_decay_audit(double c, const NullForm& form, const ClosedFormField& phi,
                                        const ClosedFormField& psi, const AuditRegion& region) {
  if (!(region.r_min > 0.0) || !(region.r_max > region.r_min) || region.radial_samples < 2 ||
      region.band_samples < 1 || !(region.band >= 0.0) || !(c > 0.0))
    throw std::invalid_argument("null_decay_audit: degenerate region");
  auto mag = [](const auto& v, std::size_t from, std::size_t to) {
    double s = 0.0;
    for (std::size_t i = from; i < to; ++i) s += v[i] * v[i];
    return std::sqrt(s);
  };
  const Vec3 om = (1.0 / norm(region.direction)) * region.direction;
  NullAuditReport rep;
  for (int i = 0; i < region.radial_samples; ++i) {
    const double r = region.r_min * std::pow(region.r_max / region.r_min, double(i) / (region.radial_samples - 1));
    const Vec3 x = r * om;
    double worst = 0.0;
    for (int k = 0; k < region.band_samples; ++k) {
      const double sigma =
          region.band_samples == 1 ? 0.0 : -region.band + 2.0 * region.band * k / (region.band_samples - 1);
      const double t = (r - sigma) / c;
      if (t <= 0.0) continue;
      const FieldJet jp = phi.jet(t, x), js = psi.jet(t, x);
      const auto zp = phi.Z(t, x), zs = psi.Z(t, x);
      const double dp = mag(jp.d, 0, 4), ds = mag(js.d, 0, 4);
      const double bound = (mag(zp, 0, 8) * ds + dp * mag(zs, 0, 8) + japanese(c * t - r) * dp * ds) / japanese(r);
      const double q = std::abs(eval_null_form(form, jp, js));
      ++rep.samples;
      double ratio = 0.0;
      if (q != 0.0) ratio = bound > 0.0 ? q / bound : std::numeric_limits<double>::infinity();
      worst = std::max(worst, ratio);
    }
    rep.radii.push_back(r);
    rep.ratio_by_radius.push_back(worst);
    rep.max_ratio = std::max(rep.max_ratio, worst);
  }
  if (rep.samples == 0) throw std::invalid_argument("null_decay_audit: region contains no t > 0 samples");
  rep.growth = loglog_fit(rep.radii, rep.ratio_by_radius, "null_audit_ratio_vs_r");
  rep.flagged = !std::isfinite(rep.max_ratio) || (!rep.growth.degenerate && rep.growth.slope() > 0.25);
  return rep;
}

}  // namespace wavescatter
