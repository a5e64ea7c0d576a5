// Acceptance run: one PASS/FAIL line per criterion, exit 0 iff all pass.
// The radial criteria share their simulations; the whole run takes ~10 min on one core.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "wavescatter/multispeed.hpp"
#include "wavescatter/nullcond.hpp"
#include "wavescatter/translation.hpp"

using namespace wavescatter;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

const unsigned threads = std::max(1u, std::thread::hardware_concurrency());
int failures = 0;

void report(int id, const char* name, bool ok, const std::string& detail, double secs) {
  std::printf("%s %2d %-22s %s (%.1f s)\n", ok ? "PASS" : "FAIL", id, name, detail.c_str(), secs);
  std::fflush(stdout);
  if (!ok) ++failures;
}

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

void isometry() {
  const auto t0 = Clock::now();
  const IsometryResolution res;
  double worst = 0.0, min_ratio = std::numeric_limits<double>::infinity();
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const HalfWaveData d = random_bump_pair(seed);
    const double a = isometry_defect(d, res, threads).defect;
    const double b = isometry_defect(d, res.refined(), threads).defect;
    worst = std::max(worst, a);
    min_ratio = std::min(min_ratio, b > 0.0 ? a / b : std::numeric_limits<double>::infinity());
  }
  const double secs = seconds_since(t0);
  report(1, "isometry", worst <= 1e-3 && min_ratio >= 4.0 && secs <= 60.0,
         fmt("max defect %.3g, min refinement ratio %.3g", worst, min_ratio), secs);
}

void farfield_and_huygens() {
  const auto t0 = Clock::now();
  const HalfWaveData hw = random_bump_pair(1);
  const CauchyData d(hw.phi(), hw.psi(), 1.0);
  const FriedlanderEvaluator W(d.w0, d.w1, 1.0);
  FarfieldOptions fo;
  fo.threads = threads;
  std::vector<double> ts;
  for (int k = 0; k <= 4; ++k) ts.push_back(10.0 * std::ldexp(1.0, k));
  const FarfieldReport rep = farfield_error(d, W, ts, fo);
  auto ok = [](const FitReport& f) { return !f.degenerate && f.slope() >= -1.15 && f.slope() <= -0.85 && f.r2 >= 0.98; };
  const double secs = seconds_since(t0);
  report(2, "farfield_rate", ok(rep.value_fit) && ok(rep.deriv_fit) && secs <= 300.0,
         fmt("slopes %.4f / %.4f, r2 %.6f / %.6f", rep.value_fit.slope(), rep.deriv_fit.slope(), rep.value_fit.r2,
             rep.deriv_fit.r2),
         secs);

  const auto t1 = Clock::now();
  double worst = 0.0;
  for (double k : {3.0, 6.0}) {
    const double t = k * d.M / d.c;
    worst = std::max(worst, huygens_residual(d, t, 0.25, 0.1, fo.cap, threads));
    worst = std::max(worst, exterior_residual(d, t, 0.25, 0.1, 1.0, fo.cap, threads));
  }
  report(3, "huygens", worst <= 1e-8, fmt("max residual %.3g", worst), seconds_since(t1));
}

void radial_oracle() {
  const auto t0 = Clock::now();
  const double c = 1.0;
  const CauchyData rd(make_radial_bump(1.0, 1.0), make_radial_bump(0.8, 0.7), c);
  auto Phi = [](double r) { return bump_jet(r).value; };
  auto Psi = [](double r) { return 0.7 * bump_jet(r / 0.8).value; };
  const int n = 50;
  std::vector<double> errs(n * n);
  parallel_for(errs.size(), threads, [&](std::size_t k) {
    const double t = 0.1 + 4.0 * static_cast<double>(k / n) / (n - 1);
    const double r = 0.05 + 7.0 * static_cast<double>(k % n) / (n - 1);
    const double w = kirchhoff_eval(rd, t, r * Vec3{0.6, 0.0, 0.8}).w;
    errs[k] = std::abs(w - radial_free_solution(Phi, Psi, c, t, r, 1.0));
  });
  const double e = *std::max_element(errs.begin(), errs.end());
  report(4, "radial_oracle", e <= 1e-6, fmt("max error %.3g over 50x50", e), seconds_since(t0));
}

QuadraticSystem random_type_one(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> num(-9, 9), den(1, 7), ab(0, 3);
  QuadraticSystem s({Rational(1), Rational(3, 2), Rational(2)});
  for (int n = 0; n < 6; ++n) {
    int b = ab(rng), bp = ab(rng);
    if (b == 0 && bp == 0) bp = 1;
    add_p_symmetric(s, {1, 2, 3, ab(rng), b, bp}, Rational(num(rng), den(rng)));
    const int j = 1 + n % 3, k = 1 + (n + 1) % 3, l = 1 + (n + 2) % 3;
    s.add_q({j, k, l, ab(rng), ab(rng)}, Rational(num(rng), den(rng)));
  }
  return s;
}

void null_checker() {
  const auto t0 = Clock::now();
  struct Case {
    std::string name;
    QuadraticSystem sys;
    bool expect;
  };
  std::vector<Case> cases;
  {
    QuadraticSystem s({Rational(1), Rational(3)});
    add_q0(s, 2, 2, 2, 3, 1);
    cases.push_back({"Q0 matched", s, true});
  }
  {
    QuadraticSystem s({Rational(1), Rational(2)});
    add_q0(s, 2, 2, 2, 1, 1);
    cases.push_back({"Q0 mismatched", s, false});
  }
  for (int a = 0; a < 4; ++a)
    for (int b = a + 1; b < 4; ++b) {
      QuadraticSystem s({Rational(2)});
      add_qab(s, 1, 1, 1, a, b, Rational(5, 3));
      cases.push_back({"Q" + std::to_string(a) + std::to_string(b), s, true});
    }
  {
    QuadraticSystem s({Rational(1), Rational(2)});
    add_pqab(s, 2, 1, 2, 0, 1);
    cases.push_back({"Q12 of a derivative", s, true});
  }
  cases.push_back({"two-speed system", two_speed_example(1, 1), true});
  cases.push_back({"random type I", random_type_one(11), true});
  {
    QuadraticSystem s({Rational(1)});
    s.add_q({1, 1, 1, 0, 0}, 1);
    cases.push_back({"(d_t u)^2", s, false});
  }
  int exact_ok = 0, oracle_ok = 0, oracle_total = 0;
  std::string bad;
  for (const auto& c : cases) {
    const auto v = check_null_condition(c.sys);
    bool ok = null_condition_holds(v) == c.expect;
    for (const auto& x : v) {
      if (!x.satisfied) ok = ok && x.witness.has_value() && x.witness->value != 0.0;
      ++oracle_total;
      if (sampled_null_condition(c.sys, x.j, 200) == x.satisfied) ++oracle_ok;
    }
    if (ok) ++exact_ok;
    else bad += " [" + c.name + "]";
  }
  const int n = static_cast<int>(cases.size());
  report(5, "null_checker", n == 12 && exact_ok == n && oracle_ok == oracle_total,
         fmt("%g/%g exact verdicts, %g/%g oracle agreement", exact_ok, n, oracle_ok, oracle_total) + bad,
         seconds_since(t0));
}

void roundtrip() {
  const auto t0 = Clock::now();
  const double L = 1.0, M = 1.0;
  InverseOptions io;
  io.threads = threads;
  double worst = 0.0, worst_norm = 0.0;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const auto V = radial_test_profile(seed, L);
    const InverseResult r = inverse_T_radial(V, L, M, io);
    worst = std::max(worst, radial_roundtrip_error(r.data, V, L, 8.0));
    worst_norm = std::max(worst_norm, std::abs(r.data.h0_norm() / r.profile_l2 - 1.0));
  }
  report(6, "roundtrip", worst <= 1e-2 && worst_norm <= 1e-2,
         fmt("max relative error %.3g, max norm defect %.3g", worst, worst_norm), seconds_since(t0));
}

std::vector<double> doubling(double t0, double T) {
  std::vector<double> ts;
  for (double t = t0; t <= T * (1 + 1e-12); t *= 2) ts.push_back(t);
  return ts;
}

FitReport growth_fit(const RadialState& st, const std::vector<double>& ts, double M) {
  std::vector<double> y;
  for (double t : ts) y.push_back(ray_max(st, 0, t, 0.0, M));
  return log_growth_fit(ts, y);
}

void radial_system() {
  const double T = 1600.0, M = 1.0, lo = -12.0, hi = M + 3.0;
  const std::vector<double> ts = doubling(25.0, T), born_times = {100.0, 400.0};
  const std::array<double, 2> eps = {0.005, 0.01};
  SimulationOptions opt;
  opt.T = T;
  opt.threads = threads;
  opt.snapshots = ts;
  for (double t : born_times) opt.snapshots.push_back(t);
  std::sort(opt.snapshots.begin(), opt.snapshots.end());
  opt.snapshots.erase(std::unique(opt.snapshots.begin(), opt.snapshots.end()), opt.snapshots.end());

  // 7: PLAIN growth, Born agreement, eps^2 scaling
  auto t0 = Clock::now();
  std::vector<RadialState> plain;
  std::array<double, 2> b{}, born_worst{};
  bool growth_ok = true;
  std::string detail;
  for (int n = 0; n < 2; ++n) {
    const RadialSystemSpec s = default_two_speed_spec(eps[n], SourceKind::plain, M);
    plain.push_back(simulate(s, opt));
    const RadialState& st = plain.back();
    const FitReport f = growth_fit(st, ts, M);
    b[n] = f.degenerate ? 0.0 : f.slope();
    growth_ok = growth_ok && !f.degenerate && b[n] > 3.0 * f.slope_stderr() && f.r2 >= 0.99;
    for (double t : born_times)
      for (double sg : sigma_nodes(st.dr, 0.0, M)) {
        const double r = s.c1 * t + sg, bv = born_v1(s, t, r);
        born_worst[n] = std::max(born_worst[n], std::abs(st.v(0, st.at(t), r) - bv) / std::abs(bv));
      }
    detail += fmt("eps %g: b %.4g (se %.2g, r2 %.5f); ", eps[n], b[n], f.degenerate ? 0.0 : f.slope_stderr(), f.r2);
  }
  const double ratio = b[1] / b[0];
  const double born = std::max(born_worst[0], born_worst[1]);
  double secs = seconds_since(t0);
  report(7, "log_growth", growth_ok && ratio >= 3.2 && ratio <= 4.8 && born <= 0.05 && secs <= 900.0,
         detail + fmt("ratio %.3f, born %.3g, dr %g", ratio, born, plain[0].dr), secs);

  // 8: NULL sources, same data
  t0 = Clock::now();
  bool null_ok = true;
  detail.clear();
  SimulationOptions nopt = opt;
  nopt.snapshots = ts;
  for (int n = 0; n < 2; ++n) {
    const RadialState st = simulate(default_two_speed_spec(eps[n], SourceKind::null_form, M), nopt);
    const FitReport f = growth_fit(st, ts, M);
    const bool flat = f.degenerate || std::abs(f.slope()) <= 3.0 * f.slope_stderr();
    const ProfileConvergence u = extract_uprofile(st, 0, 0.0, M, ts).report;
    const bool conv = u.monotone && !u.fit.degenerate && u.fit.slope() <= -0.8;
    null_ok = null_ok && flat && conv;
    detail += fmt("eps %g: |b|/se %.3g, uprofile slope %.3f; ", eps[n],
                  f.degenerate ? 0.0 : std::abs(f.slope()) / f.slope_stderr(), u.fit.degenerate ? 0.0 : u.fit.slope());
    if (!u.monotone) detail += "(not monotone) ";
  }
  report(8, "null_contrast", null_ok, detail, seconds_since(t0));

  // 9: energy-sense freeness, coupled and uncoupled
  t0 = Clock::now();
  bool energy_ok = true;
  detail.clear();
  for (int n = 0; n < 2; ++n)
    for (int j = 0; j < 2; ++j) {
      const std::vector<double> e = scattering_energy_defect(plain[n], j, ts);
      const double r = e.back() / e.front();
      energy_ok = energy_ok && r <= 0.05;
      detail += fmt("e%g(1600)/e%g(25) %.3g; ", j + 1, j + 1, r);
    }
  {
    RadialSystemSpec s = default_two_speed_spec(eps[1], SourceKind::plain, M);
    s.A1 = s.A2 = 0.0;
    SimulationOptions fopt = opt;
    fopt.snapshots = ts;
    const RadialState st = simulate(s, fopt);
    for (int j = 0; j < 2; ++j) {
      const FitReport f = loglog_fit(ts, scattering_energy_defect(st, j, ts), "free energy defect");
      energy_ok = energy_ok && !f.degenerate && std::abs(f.slope() + 1.0) <= 0.2;
      detail += fmt("A=0 slope %.3f; ", f.degenerate ? 0.0 : f.slope());
    }
  }
  report(9, "energy_scattering", energy_ok, detail, seconds_since(t0));

  // 10: profile agreement constant stable across eps
  t0 = Clock::now();
  const RadialSystemSpec base = default_two_speed_spec(0.0, SourceKind::plain, M);
  bool k_ok = true;
  detail.clear();
  for (int j = 0; j < 2; ++j) {
    const FriedlanderEvaluator F(BumpFunction{}, base.g(j).as_bump(), base.c(j));
    auto p0 = [&](double sg) { return F.dvalue(sg, {0, 0, 1}); };
    std::array<double, 2> K{};
    for (int n = 0; n < 2; ++n)
      K[n] = profile_agreement_constant(extract_dprofile(plain[n], j, lo, hi, ts), p0, eps[n]);
    const double spread = std::max(K[0], K[1]) / std::min(K[0], K[1]) - 1.0;
    k_ok = k_ok && std::min(K[0], K[1]) > 0.0 && spread <= 0.25;
    detail += fmt("K%g %.4g / %.4g (spread %.3f); ", j + 1, K[0], K[1], spread);
  }
  report(10, "profile_agreement", k_ok, detail, seconds_since(t0));
}

}  // namespace

int main() {
  isometry();
  farfield_and_huygens();
  radial_oracle();
  null_checker();
  roundtrip();
  radial_system();
  std::printf("%d of 10 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
