#pragma once

// Batch experiment driver. One experiment per invocation, strict JSON configs,
// report.json (resolved config, metrics, criteria) plus plain CSV artifacts.
//
//   wavescatter list
//   wavescatter run <config.json> [--out DIR] [--threads N] [--seed S]
//   wavescatter <experiment> [--config FILE] [--out DIR] [--threads N] [--seed S]

#include <CLI11.hpp>
#include <json.hpp>

#include <charconv>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "wavescatter/fit.hpp"
#include "wavescatter/freewave.hpp"
#include "wavescatter/multispeed.hpp"
#include "wavescatter/nullcond.hpp"
#include "wavescatter/radiation.hpp"
#include "wavescatter/radon.hpp"
#include "wavescatter/translation.hpp"

namespace wavescatter::cli {

using json = nlohmann::ordered_json;

enum ExitCode : int { exit_ok = 0, exit_criteria_failed = 1, exit_config_error = 2, exit_runtime_failure = 3 };

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Strict config sections
// ---------------------------------------------------------------------------

/// A JSON object read key by key. Every read is echoed (defaults included)
/// into resolved(); finish() rejects keys that were never read.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(where() + "expected a JSON object");
  }

  double real(const std::string& key, double def) {
    const json* v = find(key);
    if (v && !v->is_number()) throw ConfigError(where(key) + "expected a number");
    const double x = v ? v->get<double>() : def;
    if (!std::isfinite(x)) throw ConfigError(where(key) + "must be finite");
    resolved_[key] = x;
    return x;
  }

  std::int64_t integer(const std::string& key, std::int64_t def) {
    const json* v = find(key);
    if (v && !v->is_number_integer()) throw ConfigError(where(key) + "expected an integer");
    const std::int64_t x = v ? v->get<std::int64_t>() : def;
    resolved_[key] = x;
    return x;
  }

  std::uint64_t unsigned_integer(const std::string& key, std::uint64_t def) {
    const json* v = find(key);
    if (v && !v->is_number_unsigned()) throw ConfigError(where(key) + "expected a non-negative integer");
    const std::uint64_t x = v ? v->get<std::uint64_t>() : def;
    resolved_[key] = x;
    return x;
  }

  bool flag(const std::string& key, bool def) {
    const json* v = find(key);
    if (v && !v->is_boolean()) throw ConfigError(where(key) + "expected true or false");
    const bool x = v ? v->get<bool>() : def;
    resolved_[key] = x;
    return x;
  }

  std::string text(const std::string& key, const std::string& def) {
    const json* v = find(key);
    if (v && !v->is_string()) throw ConfigError(where(key) + "expected a string");
    std::string x = v ? v->get<std::string>() : def;
    resolved_[key] = x;
    return x;
  }

  /// An array of numbers; a bare number is accepted as a one-element array.
  std::vector<double> reals(const std::string& key, const std::vector<double>& def) {
    const json* v = find(key);
    std::vector<double> x = def;
    if (v) {
      x.clear();
      if (v->is_number()) {
        x.push_back(v->get<double>());
      } else if (v->is_array()) {
        for (const auto& e : *v) {
          if (!e.is_number()) throw ConfigError(where(key) + "expected an array of numbers");
          x.push_back(e.get<double>());
        }
      } else {
        throw ConfigError(where(key) + "expected a number or an array of numbers");
      }
    }
    for (double a : x)
      if (!std::isfinite(a)) throw ConfigError(where(key) + "must be finite");
    resolved_[key] = x;
    return x;
  }

  /// The raw value (or `def` when absent); echoed verbatim.
  json raw(const std::string& key, const json& def = json()) {
    const json* v = find(key);
    json x = v ? *v : def;
    resolved_[key] = x;
    return x;
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  /// Reads a nested object (empty when absent) through f.
  template <class F>
  void section(const std::string& key, F&& f) {
    static const json empty = json::object();
    const json* v = find(key);
    Section sub(v ? *v : empty, path_ + "." + key);
    f(sub);
    sub.finish();
    resolved_[key] = sub.resolved();
  }

  void require(bool ok, const std::string& key, const std::string& what) const {
    if (!ok) throw ConfigError(where(key) + what);
  }

  void finish() const {
    std::vector<std::string> unknown;
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!resolved_.contains(it.key())) unknown.push_back(it.key());
    if (!unknown.empty()) {
      std::string msg = where() + "unknown key" + (unknown.size() > 1 ? "s" : "");
      for (const auto& k : unknown) msg += " '" + k + "'";
      throw ConfigError(msg);
    }
  }

  const json& resolved() const { return resolved_; }
  const std::string& path() const { return path_; }

 private:
  const json* find(const std::string& key) const {
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }
  std::string where(const std::string& key = "") const {
    return path_ + (key.empty() ? "" : "." + key) + ": ";
  }

  const json& j_;
  std::string path_;
  json resolved_ = json::object();
};

// ---------------------------------------------------------------------------
// Results
// ---------------------------------------------------------------------------

/// CSV text with a fixed layout: ',' separator, '.' decimals, LF, 17 digits.
class Csv {
 public:
  explicit Csv(const std::vector<std::string>& header) {
    for (std::size_t i = 0; i < header.size(); ++i) s_ << (i ? "," : "") << header[i];
    s_ << '\n';
  }
  template <class... Cells>
  void row(const Cells&... cells) {
    std::size_t i = 0;
    ((s_ << (i++ ? "," : "") << cell(cells)), ...);
    s_ << '\n';
  }
  std::string str() const { return s_.str(); }

 private:
  static std::string cell(double v) { return format_double(v); }
  static std::string cell(int v) { return std::to_string(v); }
  static std::string cell(long v) { return std::to_string(v); }
  static std::string cell(unsigned long v) { return std::to_string(v); }
  static std::string cell(unsigned long long v) { return std::to_string(v); }
  static std::string cell(const std::string& v) { return v; }
  static std::string cell(const char* v) { return v; }

  std::ostringstream s_;
};

struct Outcome {
  json metrics = json::object();
  std::vector<std::pair<std::string, bool>> criteria;
  std::vector<std::pair<std::string, std::string>> files;  // name, contents

  void check(const std::string& name, bool ok) { criteria.emplace_back(name, ok); }
  void file(const std::string& name, std::string contents) { files.emplace_back(name, std::move(contents)); }
  bool passed() const {
    return std::all_of(criteria.begin(), criteria.end(), [](const auto& c) { return c.second; });
  }
};

struct RunContext {
  std::uint64_t seed = 1;
  unsigned threads = 1;
};

using Job = std::function<Outcome()>;
/// Reads the params section (throwing ConfigError) and returns the work to do.
using Planner = std::function<Job(Section&, const RunContext&)>;

struct Experiment {
  std::string name;
  std::string summary;
  Planner plan;
};

inline json fit_json(const FitReport& f) {
  json j = json::object();
  j["degenerate"] = f.degenerate;
  if (!f.degenerate) {
    j["intercept"] = f.intercept();
    j["slope"] = f.slope();
    j["slope_stderr"] = f.stderrs.size() > 1 ? f.slope_stderr() : 0.0;
    j["r2"] = f.r2;
  }
  j["n"] = f.n;
  return j;
}

// shortest round-trip form, so 0.005 stays "0.005"
inline std::string eps_tag(double eps) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, eps);
  return std::string(buf, r.ptr);
}

// ---------------------------------------------------------------------------
// radon-check
// ---------------------------------------------------------------------------

namespace detail {

inline const std::vector<Vec3>& check_directions() {
  static const std::vector<Vec3> dirs = {
      {0, 0, 1}, {0.6, 0.0, 0.8}, (1.0 / std::sqrt(3.0)) * Vec3{1, -1, 1}};
  return dirs;
}

inline Job plan_radon_check(Section& p, const RunContext& ctx) {
  const double M = p.real("M", 1.3);
  const auto samples = p.integer("sigma_samples", 25);
  RadonRule rule;
  rule.radial_nodes = static_cast<int>(p.integer("radial_nodes", rule.radial_nodes));
  rule.angular_nodes = static_cast<int>(p.integer("angular_nodes", rule.angular_nodes));
  const double tol = p.real("tolerance", 1e-9);
  p.require(M > 0.0, "M", "must be positive");
  p.require(samples >= 3, "sigma_samples", "must be at least 3");
  p.require(rule.radial_nodes >= 2 && rule.angular_nodes >= 4, "radial_nodes", "quadrature too small");
  p.require(tol > 0.0, "tolerance", "must be positive");
  return [=, seed = ctx.seed]() {
    Outcome out;
    const BumpFunction f = make_radial_bump(M, 1.0);
    auto F = [&](double r) { return bump_jet(r / M).value; };
    Csv csv({"direction", "sigma", "radon", "oracle", "dradon", "doracle"});
    double err = 0.0, derr = 0.0, outside = 0.0;
    for (std::size_t d = 0; d < check_directions().size(); ++d) {
      const Vec3& w = check_directions()[d];
      for (long i = 0; i < samples; ++i) {
        const double s = -1.2 * M + 2.4 * M * i / (samples - 1);
        const double a = std::abs(s);
        const double oracle =
            a >= M ? 0.0 : 2.0 * pi * adaptive_line_integral([&](double r) { return F(r) * r; }, a, M, 1e-13);
        const double doracle = a >= M ? 0.0 : -2.0 * pi * F(a) * s;
        const double R = radon(f, s, w, rule), dR = radon_sigma_derivative(f, s, w, rule);
        if (a >= M) outside = std::max(outside, std::max(std::abs(R), std::abs(dR)));
        err = std::max(err, std::abs(R - oracle));
        derr = std::max(derr, std::abs(dR - doracle));
        csv.row(static_cast<int>(d), s, R, oracle, dR, doracle);
      }
    }
    // evenness on seeded non-radial data
    const BumpFunction g = random_bump_pair(seed).phi();
    double even = 0.0;
    for (const Vec3& w : check_directions())
      for (double s : {-0.9, -0.3, 0.2, 0.7})
        even = std::max(even, std::abs(radon(g, -s, -w, rule) - radon(g, s, w, rule)));
    out.metrics["radial_max_error"] = err;
    out.metrics["derivative_max_error"] = derr;
    out.metrics["outside_support_max"] = outside;
    out.metrics["evenness_max_defect"] = even;
    out.check("radial_reduction", err <= tol);
    out.check("radial_derivative", derr <= tol);
    out.check("support", outside == 0.0);
    out.check("evenness", even <= tol);
    out.file("radon_check.csv", csv.str());
    return out;
  };
}

// ---------------------------------------------------------------------------
// radiation
// ---------------------------------------------------------------------------

/// max over interior nodes of |centered difference of value - stored dvalue|, and max |dvalue|.
inline std::pair<double, double> derivative_gap(const RadiationProfile& prof) {
  double fd = 0.0, dmax = 0.0;
  const std::size_t ns = prof.sigma_grid.size(), nq = prof.sphere_grid.size();
  for (std::size_t i = 0; i < ns; ++i)
    for (std::size_t q = 0; q < nq; ++q) {
      dmax = std::max(dmax, std::abs(prof.dvalue(i, q)));
      if (i == 0 || i + 1 == ns) continue;
      const double diff = (prof.value(i + 1, q) - prof.value(i - 1, q)) / (2.0 * prof.sigma_grid.spacing());
      fd = std::max(fd, std::abs(diff - prof.dvalue(i, q)));
    }
  return {fd, dmax};
}

inline Job plan_radiation(Section& p, const RunContext& ctx) {
  const double c = p.real("c", 1.0);
  const double spacing = p.real("sigma_spacing", 0.0125);
  const double margin = p.real("margin", 0.5);
  const int level = static_cast<int>(p.integer("sphere_level", 1));
  RadonRule rule;
  rule.radial_nodes = static_cast<int>(p.integer("radial_nodes", rule.radial_nodes));
  rule.angular_nodes = static_cast<int>(p.integer("angular_nodes", rule.angular_nodes));
  const double min_ratio = p.real("min_refinement_ratio", 3.0);
  p.require(c > 0.0, "c", "must be positive");
  p.require(spacing > 0.0, "sigma_spacing", "must be positive");
  p.require(margin >= 0.0, "margin", "must be non-negative");
  p.require(level >= 1, "sphere_level", "must be at least 1");
  p.require(rule.radial_nodes >= 2 && rule.angular_nodes >= 4, "radial_nodes", "quadrature too small");
  return [=, seed = ctx.seed, threads = ctx.threads]() {
    Outcome out;
    const HalfWaveData d = random_bump_pair(seed);
    const double M = d.support_radius();
    const SphereGrid og = sphere_quadrature(level);
    const RadiationProfile prof = friedlander(d.phi(), d.psi(), c, profile_grid(M, spacing, margin), og, 3, rule, threads);
    const RadiationProfile fine =
        friedlander(d.phi(), d.psi(), c, profile_grid(M, spacing / 2, margin), og, 3, rule, threads);
    double outside = 0.0, dl2 = 0.0;
    const std::size_t ns = prof.sigma_grid.size(), nq = og.size();
    for (std::size_t i = 0; i < ns; ++i)
      for (std::size_t q = 0; q < nq; ++q) {
        if (std::abs(prof.sigma_grid[i]) >= prof.support_bound)
          outside = std::max(outside, std::abs(prof.value(i, q)) + std::abs(prof.dvalue(i, q)));
        dl2 += ((i == 0 || i + 1 == ns) ? 0.5 : 1.0) * og.weights[q] * prof.dvalue(i, q) * prof.dvalue(i, q);
      }
    dl2 = std::sqrt(dl2 * prof.sigma_grid.spacing());
    const auto [gap, dmax] = derivative_gap(prof);
    const double fine_gap = derivative_gap(fine).first;
    const double ratio = fine_gap > 0.0 ? gap / fine_gap : std::numeric_limits<double>::infinity();
    out.metrics["support_bound"] = prof.support_bound;
    out.metrics["l2_norm"] = prof.l2_norm();
    out.metrics["derivative_l2_norm"] = dl2;
    out.metrics["h0_norm"] = d.h0_norm();
    out.metrics["outside_support_max"] = outside;
    out.metrics["derivative_gap"] = gap;
    out.metrics["derivative_gap_half_spacing"] = fine_gap;
    out.metrics["max_abs_derivative"] = dmax;
    out.check("compact_support", outside == 0.0);
    out.check("derivative_consistency", dmax == 0.0 || ratio >= min_ratio);
    std::ostringstream v, s;
    write_profile_csv(prof, v, s);
    out.file("profile.csv", v.str());
    out.file("sphere.csv", s.str());
    return out;
  };
}

// ---------------------------------------------------------------------------
// freewave-farfield
// ---------------------------------------------------------------------------

inline Job plan_farfield(Section& p, const RunContext& ctx) {
  const double c = p.real("c", 1.0);
  const double t0 = p.real("t0", 10.0);
  const auto count = p.integer("count", 5);
  FarfieldOptions fo;
  fo.sphere_level = static_cast<int>(p.integer("sphere_level", fo.sphere_level));
  fo.sigma_samples = static_cast<int>(p.integer("sigma_samples", fo.sigma_samples));
  fo.cap.polar_nodes = static_cast<int>(p.integer("polar_nodes", fo.cap.polar_nodes));
  fo.cap.azimuth_nodes = static_cast<int>(p.integer("azimuth_nodes", fo.cap.azimuth_nodes));
  const std::vector<double> slope_range = p.reals("slope_range", {-1.15, -0.85});
  const double min_r2 = p.real("min_r2", 0.98);
  const bool huygens = p.flag("huygens", true);
  const double spacing = p.real("huygens_spacing", 0.25);
  const double htol = p.real("huygens_tolerance", 1e-8);
  const bool oracle = p.flag("radial_oracle", true);
  const auto lattice = p.integer("oracle_lattice", 50);
  const double otol = p.real("oracle_tolerance", 1e-6);
  p.require(c > 0.0, "c", "must be positive");
  p.require(t0 > 0.0, "t0", "must be positive");
  p.require(count >= 3, "count", "must be at least 3");
  p.require(fo.sphere_level >= 1, "sphere_level", "must be at least 1");
  p.require(fo.sigma_samples >= 2, "sigma_samples", "must be at least 2");
  p.require(fo.cap.polar_nodes >= 2 && fo.cap.azimuth_nodes >= 4, "polar_nodes", "cap rule too small");
  p.require(slope_range.size() == 2 && slope_range[0] < slope_range[1], "slope_range", "expected [lo, hi]");
  p.require(spacing > 0.0, "huygens_spacing", "must be positive");
  p.require(lattice >= 2, "oracle_lattice", "must be at least 2");
  fo.threads = ctx.threads;
  return [=, seed = ctx.seed]() {
    Outcome out;
    const HalfWaveData hw = random_bump_pair(seed);
    const CauchyData d(hw.phi(), hw.psi(), c);
    const FriedlanderEvaluator W(d.w0, d.w1, c);
    std::vector<double> ts;
    for (long k = 0; k < count; ++k) ts.push_back(t0 * std::pow(2.0, static_cast<double>(k)));
    const FarfieldReport rep = farfield_error(d, W, ts, fo);
    Csv csv({"t", "sup_value_defect", "sup_deriv_defect"});
    for (const auto& s : rep.samples) csv.row(s.t, s.value_defect, s.deriv_defect);
    out.file("farfield.csv", csv.str());
    out.metrics["value_fit"] = fit_json(rep.value_fit);
    out.metrics["deriv_fit"] = fit_json(rep.deriv_fit);
    auto rate_ok = [&](const FitReport& f) {
      return !f.degenerate && f.slope() >= slope_range[0] && f.slope() <= slope_range[1] && f.r2 >= min_r2;
    };
    out.check("value_defect_rate", rate_ok(rep.value_fit));
    out.check("deriv_defect_rate", rate_ok(rep.deriv_fit));

    if (huygens) {
      json h = json::array();
      bool ok = true;
      for (double k : {3.0, 6.0}) {
        const double t = k * d.M / c;
        const double in = huygens_residual(d, t, spacing, 0.1, fo.cap, fo.threads);
        const double ex = exterior_residual(d, t, spacing, 0.1, 1.0, fo.cap, fo.threads);
        h.push_back({{"ct_over_M", k}, {"interior", in}, {"exterior", ex}});
        ok = ok && in <= htol && ex <= htol;
      }
      out.metrics["huygens"] = h;
      out.check("huygens", ok);
    }
    if (oracle) {
      // radial data against the d'Alembert closed form on a (t, r) lattice
      const CauchyData rd(make_radial_bump(1.0, 1.0), make_radial_bump(0.8, 0.7), c);
      auto Phi = [](double r) { return bump_jet(r).value; };
      auto Psi = [](double r) { return 0.7 * bump_jet(r / 0.8).value; };
      std::vector<double> errs(static_cast<std::size_t>(lattice * lattice));
      parallel_for(errs.size(), fo.threads, [&](std::size_t k) {
        const double t = 0.1 + 4.0 * static_cast<double>(k / lattice) / (lattice - 1);
        const double r = 0.05 + 7.0 * static_cast<double>(k % lattice) / (lattice - 1);
        const double w = kirchhoff_eval(rd, t, r * Vec3{0.6, 0.0, 0.8}, fo.cap).w;
        errs[k] = std::abs(w - radial_free_solution(Phi, Psi, c, t, r, 1.0));
      });
      const double e = *std::max_element(errs.begin(), errs.end());
      out.metrics["radial_oracle_max_error"] = e;
      out.check("radial_oracle", e <= otol);
    }
    return out;
  };
}

// ---------------------------------------------------------------------------
// isometry
// ---------------------------------------------------------------------------

inline Job plan_isometry(Section& p, const RunContext& ctx) {
  const auto count = p.integer("count", 5);
  IsometryResolution res;
  res.sigma_spacing_over_M = p.real("sigma_spacing_over_M", res.sigma_spacing_over_M);
  res.sphere_level = static_cast<int>(p.integer("sphere_level", res.sphere_level));
  res.radon.radial_nodes = static_cast<int>(p.integer("radial_nodes", res.radon.radial_nodes));
  res.radon.angular_nodes = static_cast<int>(p.integer("angular_nodes", res.radon.angular_nodes));
  const bool refine = p.flag("refine", true);
  const double max_defect = p.real("max_defect", 1e-3);
  const double min_ratio = p.real("min_refinement_ratio", 4.0);
  p.require(count >= 1, "count", "must be at least 1");
  p.require(res.sigma_spacing_over_M > 0.0, "sigma_spacing_over_M", "must be positive");
  p.require(res.sphere_level >= 1, "sphere_level", "must be at least 1");
  p.require(res.radon.radial_nodes >= 2 && res.radon.angular_nodes >= 4, "radial_nodes", "quadrature too small");
  return [=, seed = ctx.seed, threads = ctx.threads]() {
    Outcome out;
    Csv csv({"seed", "h0_norm", "l2_norm", "defect", "refined_defect", "ratio"});
    json rows = json::array();
    bool small = true, converging = true;
    for (long k = 0; k < count; ++k) {
      const std::uint64_t s = seed + static_cast<std::uint64_t>(k);
      const HalfWaveData d = random_bump_pair(s);
      const IsometryResult a = isometry_defect(d, res, threads);
      double b = 0.0, ratio = 0.0;
      if (refine) {
        b = isometry_defect(d, res.refined(), threads).defect;
        ratio = b > 0.0 ? a.defect / b : std::numeric_limits<double>::infinity();
        converging = converging && ratio >= min_ratio;
      }
      small = small && a.defect <= max_defect;
      csv.row(static_cast<unsigned long long>(s), a.h0_norm, a.l2_norm, a.defect, b, ratio);
      rows.push_back({{"seed", s}, {"h0_norm", a.h0_norm}, {"l2_norm", a.l2_norm}, {"defect", a.defect},
                      {"refined_defect", b}, {"ratio", ratio}});
    }
    out.metrics["pairs"] = rows;
    out.check("defect", small);
    if (refine) out.check("refinement", converging);
    out.file("isometry.csv", csv.str());
    return out;
  };
}

// ---------------------------------------------------------------------------
// inverse-roundtrip
// ---------------------------------------------------------------------------

inline Job plan_inverse(Section& p, const RunContext& ctx) {
  const auto count = p.integer("count", 3);
  const double L = p.real("L", 1.0);
  const double M = p.real("M", 1.0);
  const double extent = p.real("extent", 8.0);
  InverseOptions io;
  io.rho0_times_M = p.real("rho0_times_M", io.rho0_times_M);
  io.rho_max_times_M = p.real("rho_max_times_M", io.rho_max_times_M);
  io.r_max_over_M = p.real("r_max_over_M", io.r_max_over_M);
  io.r_spacing_over_M = p.real("r_spacing_over_M", io.r_spacing_over_M);
  io.max_discarded_fraction = p.real("max_discarded_fraction", io.max_discarded_fraction);
  const double max_error = p.real("max_error", 1e-2);
  const double norm_tol = p.real("norm_tolerance", 1e-2);
  const bool profiles = p.flag("write_profiles", true);
  p.require(count >= 1, "count", "must be at least 1");
  p.require(L > 0.0, "L", "must be positive");
  p.require(M > 0.0, "M", "must be positive");
  p.require(extent >= L, "extent", "must cover [-L, L]");
  p.require(io.rho0_times_M > 0.0 && io.rho_max_times_M > 2 * io.rho0_times_M, "rho_max_times_M",
            "need 0 < 2 rho0 < rho_max");
  p.require(io.r_max_over_M > 0.0 && io.r_spacing_over_M > 0.0, "r_spacing_over_M", "must be positive");
  io.threads = ctx.threads;
  return [=, seed = ctx.seed]() {
    Outcome out;
    Csv csv({"seed", "roundtrip_error", "h0_norm", "profile_l2", "norm_ratio", "discarded_fraction"});
    json rows = json::array();
    bool err_ok = true, norm_ok = true;
    for (long k = 0; k < count; ++k) {
      const std::uint64_t s = seed + static_cast<std::uint64_t>(k);
      const auto V = radial_test_profile(s, L);
      const InverseResult r = inverse_T_radial(V, L, M, io);
      const double e = radial_roundtrip_error(r.data, V, L, extent);
      const double h0 = r.data.h0_norm(), ratio = h0 / r.profile_l2;
      err_ok = err_ok && e <= max_error;
      norm_ok = norm_ok && std::abs(ratio - 1.0) <= norm_tol;
      csv.row(static_cast<unsigned long long>(s), e, h0, r.profile_l2, ratio, r.discarded_fraction);
      rows.push_back({{"seed", s}, {"roundtrip_error", e}, {"h0_norm", h0}, {"profile_l2", r.profile_l2},
                      {"norm_ratio", ratio}, {"discarded_fraction", r.discarded_fraction}});
      if (profiles) {
        Csv pc({"r", "phi", "psi"});
        const RadialFunction& f = r.data.phi;
        for (std::size_t i = 0; i < f.values().size(); ++i)
          pc.row(static_cast<double>(i) * f.spacing(), f.values()[i], r.data.psi.values()[i]);
        out.file("inverse_" + std::to_string(s) + ".csv", pc.str());
      }
    }
    out.metrics["profiles"] = rows;
    out.check("roundtrip_error", err_ok);
    out.check("norm_preservation", norm_ok);
    out.file("roundtrip.csv", csv.str());
    return out;
  };
}

// ---------------------------------------------------------------------------
// nullcheck
// ---------------------------------------------------------------------------

inline Rational rational_field(Section& e, const std::string& key) {
  const json v = e.raw(key);
  if (!v.is_string()) throw ConfigError(e.path() + "." + key + ": expected a decimal string");
  try {
    return parse_rational(v.get<std::string>());
  } catch (const std::exception& ex) {
    throw ConfigError(e.path() + "." + key + ": " + ex.what());
  }
}

inline int index_field(Section& e, const std::string& key) {
  const json v = e.raw(key);
  if (!v.is_number_integer()) throw ConfigError(e.path() + "." + key + ": expected an integer index");
  return v.get<int>();
}

/// {N, speeds: ["1", "2"], p: [{j,k,l,a,b,bp,value}], q: [{j,k,l,a,b,value}]}
inline QuadraticSystem parse_system(Section& s) {
  const json N = s.raw("N");
  if (!N.is_number_integer() || N.get<int>() < 1) throw ConfigError(s.path() + ".N: expected a positive integer");
  const json speeds = s.raw("speeds");
  if (!speeds.is_array()) throw ConfigError(s.path() + ".speeds: expected an array of decimal strings");
  std::vector<Rational> c;
  for (std::size_t i = 0; i < speeds.size(); ++i) {
    if (!speeds[i].is_string())
      throw ConfigError(s.path() + ".speeds[" + std::to_string(i) + "]: expected a decimal string");
    try {
      c.push_back(parse_rational(speeds[i].get<std::string>()));
    } catch (const std::exception& ex) {
      throw ConfigError(s.path() + ".speeds[" + std::to_string(i) + "]: " + ex.what());
    }
  }
  QuadraticSystem sys(std::move(c));
  sys.N = N.get<int>();
  for (const char* tensor : {"p", "q"}) {
    const json list = s.raw(tensor, json::array());
    if (!list.is_array()) throw ConfigError(s.path() + "." + tensor + ": expected an array");
    for (std::size_t i = 0; i < list.size(); ++i) {
      Section e(list[i], s.path() + "." + tensor + "[" + std::to_string(i) + "]");
      const int j = index_field(e, "j"), k = index_field(e, "k"), l = index_field(e, "l");
      const int a = index_field(e, "a"), b = index_field(e, "b");
      if (tensor[0] == 'p') {
        const int bp = index_field(e, "bp");
        sys.add_p({j, k, l, a, b, bp}, rational_field(e, "value"));
      } else {
        sys.add_q({j, k, l, a, b}, rational_field(e, "value"));
      }
      e.finish();
    }
  }
  const std::vector<std::string> problems = validate(sys);
  if (!problems.empty()) {
    std::string msg = s.path() + ": invalid system";
    for (const auto& m : problems) msg += "; " + m;
    throw ConfigError(msg);
  }
  return sys;
}

inline Job plan_nullcheck(Section& p, const RunContext& ctx) {
  if (!p.has("system")) throw ConfigError(p.path() + ".system: required");
  QuadraticSystem sys;
  p.section("system", [&](Section& s) { sys = parse_system(s); });
  const auto samples = p.integer("samples", 200);
  const json expect = p.raw("expect_null_condition");
  p.require(samples >= 1, "samples", "must be positive");
  p.require(expect.is_null() || expect.is_boolean(), "expect_null_condition", "expected true, false or null");
  return [=, seed = ctx.seed]() {
    Outcome out;
    const std::vector<NullVerdict> verdicts = check_null_condition(sys);
    const Classification cls = classify(sys);
    const bool holds = null_condition_holds(verdicts);
    out.metrics["null_condition"] = holds;
    json counts = json::object();
    for (TermClass t : {TermClass::diagonal, TermClass::typeI, TermClass::typeII})
      if (cls.totals[static_cast<int>(t)] > 0) counts[to_string(t)] = cls.totals[static_cast<int>(t)];
    out.metrics["classification"] = counts;
    json per = json::array();
    bool agree = true;
    for (const auto& v : verdicts) {
      json j = {{"j", v.j},
                {"satisfied", v.satisfied},
                {"cubic_vanishes", v.cubic_vanishes},
                {"quadratic_vanishes", v.quadratic_vanishes}};
      if (v.witness)
        j["witness"] = {{"X", v.witness->X}, {"value", v.witness->value}, {"symbol", v.witness->symbol}};
      const bool sampled = sampled_null_condition(sys, v.j, static_cast<int>(samples), seed);
      j["sampled_oracle"] = sampled;
      agree = agree && sampled == v.satisfied;
      per.push_back(j);
    }
    out.metrics["verdicts"] = per;
    out.check("oracle_agreement", agree);
    if (expect.is_boolean()) out.check("expected_verdict", holds == expect.get<bool>());
    Csv csv({"tensor", "index", "j", "class", "value"});
    for (const auto& t : cls.terms) {
      std::string value;
      if (t.tensor == 'p') {
        for (const auto& [i, v] : sys.p)
          if (to_string(i) == t.index) value = v.str();
      } else {
        for (const auto& [i, v] : sys.q)
          if (to_string(i) == t.index) value = v.str();
      }
      csv.row(std::string(1, t.tensor), t.index, t.j, std::string(to_string(t.cls)), value);
    }
    out.file("terms.csv", csv.str());
    return out;
  };
}

// ---------------------------------------------------------------------------
// Two-speed radial system: simulate, loggrowth, scatter
// ---------------------------------------------------------------------------

struct PhysicsParams {
  RadialSystemSpec base;  // eps filled per run
  std::vector<double> eps;
  SimulationOptions opt;
};

/// The physics block shared by the radial experiments; `eps` may be a list.
inline PhysicsParams read_physics(Section& p, std::vector<double> eps_default, double T_default, bool eps_list) {
  PhysicsParams out;
  const double M = p.real("M", 1.0);
  p.require(M > 0.0, "M", "must be positive");
  const std::string kind = p.text("source_kind", "PLAIN");
  SourceKind k;
  try {
    k = parse_source_kind(kind);
  } catch (const std::exception& e) {
    throw ConfigError(p.path() + ".source_kind: " + e.what());
  }
  out.base = default_two_speed_spec(0.0, k, M);
  out.base.A1 = p.real("A1", 1.0);
  out.base.A2 = p.real("A2", 1.0);
  out.base.c1 = p.real("c1", 1.0);
  out.base.c2 = p.real("c2", 2.0);
  if (eps_list) {
    out.eps = p.reals("eps", eps_default);
  } else {
    out.eps = {p.real("eps", eps_default.at(0))};
  }
  p.require(!out.eps.empty(), "eps", "needs at least one value");
  for (double e : out.eps) p.require(e >= 0.0, "eps", "must be non-negative");
  out.opt.T = p.real("T", T_default);
  out.opt.dt = p.real("dt", 0.0);
  out.opt.dr = p.real("dr", 1.0 / 32);
  p.require(out.opt.dt >= 0.0, "dt", "must be non-negative (0 picks dr / c1)");
  try {
    validate(out.base);
  } catch (const std::exception& e) {
    throw ConfigError(p.path() + ": " + e.what());
  }
  return out;
}

/// Runs the grid checks of simulate without marching.
inline void check_grid(const PhysicsParams& ph, const SimulationOptions& opt, const std::string& path) {
  try {
    RadialSystemSpec s = ph.base;
    s.eps = ph.eps.front();
    wavescatter::detail::RadialMarcher probe(s, opt);
  } catch (const GridError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

inline std::vector<double> doubling_times(double t0, double T) {
  std::vector<double> ts;
  for (double t = t0; t <= T * (1 + 1e-12); t *= 2) ts.push_back(t);
  return ts;
}

inline json convergence_json(const ProfileConvergence& r) {
  return {{"times", r.times},
          {"cauchy", r.cauchy},
          {"fit", fit_json(r.fit)},
          {"monotone", r.monotone},
          {"converged", r.converged}};
}

inline std::vector<double> merged(std::vector<double> a, const std::vector<double>& b) {
  a.insert(a.end(), b.begin(), b.end());
  std::sort(a.begin(), a.end());
  a.erase(std::unique(a.begin(), a.end()), a.end());
  return a;
}

inline void check_window(Section& p, const RadialSystemSpec& s, double t_first, double lo, double hi) {
  p.require(hi > lo, "sigma_max", "must exceed sigma_min");
  p.require(s.c1 * t_first + lo >= 0.0, "sigma_min", "window reaches r < 0 at the first profile time");
}

inline Job plan_simulate(Section& p, const RunContext& ctx) {
  PhysicsParams ph = read_physics(p, {0.01}, 100.0, false);
  std::vector<double> times;
  double lo = -12.0, hi = 0.0;
  bool fields = false;
  p.section("outputs", [&](Section& o) {
    const double T = ph.opt.T;
    times = o.reals("times", {T / 16, T / 8, T / 4, T / 2, T});
    o.require(!times.empty(), "times", "needs at least 3 times");
    lo = o.real("sigma_min", -std::min(12.0, ph.base.c1 * times.front()));
    hi = o.real("sigma_max", ph.base.M + 3.0);
    fields = o.flag("fields", false);
    o.require(times.size() >= 3, "times", "needs at least 3 times");
    o.require(std::is_sorted(times.begin(), times.end()) && times.front() > 0.0, "times",
              "must be positive and increasing");
    check_window(o, ph.base, times.front(), lo, hi);
  });
  ph.opt.snapshots = times;
  ph.opt.threads = ctx.threads;
  check_grid(ph, ph.opt, p.path());
  return [=]() {
    Outcome out;
    RadialSystemSpec s = ph.base;
    s.eps = ph.eps.front();
    const RadialState st = simulate(s, ph.opt);
    std::array<RayProfile, 2> dp, up;
    std::array<std::vector<double>, 2> e;
    for (int j = 0; j < 2; ++j) {
      dp[j] = extract_dprofile(st, j, lo, hi, times);
      up[j] = extract_uprofile(st, j, lo, hi, times);
      e[j] = scattering_energy_defect(st, j, times);
    }
    Csv ts({"t", "ray_max_v1", "ray_max_v2", "energy_defect_1", "energy_defect_2"});
    bool odd = true;
    for (std::size_t k = 0; k < times.size(); ++k) {
      const double t = times[k];
      ts.row(t, ray_max(st, 0, t, 0.0, s.M), ray_max(st, 1, t, 0.0, s.M), e[0][k], e[1][k]);
      for (int j = 0; j < 2; ++j) odd = odd && st.at(t).v[j][0] == 0.0;
    }
    out.file("timeseries.csv", ts.str());
    for (int j = 0; j < 2; ++j) {
      Csv pc({"sigma", "p", "U"});
      for (std::size_t i = 0; i < dp[j].sigma.size(); ++i) pc.row(dp[j].sigma[i], dp[j].values[i], up[j].values[i]);
      out.file("profile_" + std::to_string(j + 1) + ".csv", pc.str());
    }
    if (fields)
      for (std::size_t k = 0; k < st.levels.size(); ++k) {
        const RadialSnapshot& lv = st.levels[k];
        Csv fc({"r", "v1", "v2", "vt1", "vt2", "vr1", "vr2"});
        for (std::size_t i = 0; i < lv.size(); ++i)
          fc.row(static_cast<double>(i) * st.dr, lv.v[0][i], lv.v[1][i], lv.vt[0][i], lv.vt[1][i], lv.vr[0][i],
                 lv.vr[1][i]);
        out.file("fields_" + std::to_string(k) + ".csv", fc.str());
      }
    const DecayAudit audit = decay_audit(st);
    json per = json::array();
    for (int j = 0; j < 2; ++j) {
      double h0 = 0.0;
      for (double r = 0.0; r <= s.g(j).support(); r += st.dr) h0 = std::max(h0, 2.0 * s.eps * std::abs(s.g(j).h(r)));
      per.push_back({{"j", j + 1},
                     {"sup_vt", st.sup_vt[j]},
                     {"initial_sup_vt", h0},
                     {"dprofile", convergence_json(dp[j].report)},
                     {"uprofile", convergence_json(up[j].report)},
                     {"energy_defect", e[j]},
                     {"decay_audit",
                      {{"deriv_fit", fit_json(audit.deriv_fit[j])},
                       {"value_log_fit", fit_json(audit.value_log_fit[j])},
                       {"value_fit", fit_json(audit.value_fit[j])},
                       {"bounded", audit.bounded[j]}}}});
      out.check("bounded_derivative_" + std::to_string(j + 1), st.sup_vt[j] <= 10.0 * h0 + 1e-300);
      out.check("decay_audit_" + std::to_string(j + 1), audit.bounded[j]);
    }
    out.metrics["dt"] = st.dt;
    out.metrics["steps"] = st.steps;
    out.metrics["fields"] = per;
    out.check("odd_symmetry", odd);
    return out;
  };
}

inline Job plan_loggrowth(Section& p, const RunContext& ctx) {
  PhysicsParams ph = read_physics(p, {0.01}, 1600.0, true);
  const double t_first = p.real("t_first", 25.0);
  const std::vector<double> born_times = p.reals("born_times", {100.0, 400.0});
  const double born_tol = p.real("born_tolerance", 0.05);
  const double min_r2 = p.real("min_r2", 0.99);
  const double k_se = p.real("stderr_factor", 3.0);
  const std::vector<double> ratio_range = p.reals("ratio_range", {3.2, 4.8});
  const double u_slope = p.real("uprofile_max_slope", -0.8);
  p.require(t_first > 0.0, "t_first", "must be positive");
  p.require(ratio_range.size() == 2 && ratio_range[0] < ratio_range[1], "ratio_range", "expected [lo, hi]");
  const std::vector<double> ts = doubling_times(t_first, ph.opt.T);
  p.require(ts.size() >= 3 && std::log10(ts.back() / ts.front()) >= 1.5 - 1e-12, "T",
            "the doubling times from t_first must span at least 1.5 decades");
  const bool plain = ph.base.source1 == SourceKind::plain;
  for (double t : born_times) p.require(t > 0.0 && t <= ph.opt.T, "born_times", "must lie in (0, T]");
  ph.opt.snapshots = plain ? merged(ts, born_times) : ts;
  ph.opt.threads = ctx.threads;
  check_grid(ph, ph.opt, p.path());
  return [=]() {
    Outcome out;
    const double M = ph.base.M;
    Csv csv({"eps", "t", "ray_max_v1", "ray_max_v2"});
    Csv born({"eps", "t", "sigma", "v1", "born_v1", "relative_difference"});
    json fits = json::array();
    std::vector<double> bs;
    for (double eps : ph.eps) {
      RadialSystemSpec s = ph.base;
      s.eps = eps;
      const RadialState st = simulate(s, ph.opt);
      std::vector<double> y;
      for (double t : ts) {
        y.push_back(ray_max(st, 0, t, 0.0, M));
        csv.row(eps, t, y.back(), ray_max(st, 1, t, 0.0, M));
      }
      const FitReport f = log_growth_fit(ts, y);
      const double b = f.degenerate ? 0.0 : f.slope(), se = f.degenerate ? 0.0 : f.slope_stderr();
      bs.push_back(b);
      json fj = {{"eps", eps}, {"a", f.degenerate ? 0.0 : f.intercept()}, {"b", b}, {"b_stderr", se}, {"r2", f.r2}};
      const std::string tag = "_eps=" + eps_tag(eps);
      if (plain) {
        out.check("log_growth" + tag, !f.degenerate && b > k_se * se && f.r2 >= min_r2);
        double worst = 0.0;
        for (double t : born_times) {
          for (double sg : sigma_nodes(st.dr, 0.0, M)) {
            const double r = s.c1 * t + sg;
            const double v = st.v(0, st.at(t), r), bv = born_v1(s, t, r);
            const double rel = bv != 0.0 ? std::abs(v - bv) / std::abs(bv) : std::abs(v);
            worst = std::max(worst, rel);
            born.row(eps, t, sg, v, bv, rel);
          }
        }
        fj["born_max_relative_difference"] = worst;
        if (!born_times.empty()) out.check("born_agreement" + tag, worst <= born_tol);
      } else {
        out.check("no_growth" + tag, f.degenerate || std::abs(b) <= k_se * se);
        const RayProfile u = extract_uprofile(st, 0, 0.0, M, ts);
        fj["uprofile"] = convergence_json(u.report);
        const bool zero = std::all_of(u.report.cauchy.begin(), u.report.cauchy.end(), [](double d) { return d == 0.0; });
        out.check("uprofile_converges" + tag,
                  zero || (u.report.monotone && !u.report.fit.degenerate && u.report.fit.slope() <= u_slope));
      }
      fits.push_back(fj);
    }
    out.metrics["fits"] = fits;
    out.metrics["b"] = fits.back()["b"];
    out.metrics["b_stderr"] = fits.back()["b_stderr"];
    out.metrics["r2"] = fits.back()["r2"];
    if (plain && ph.eps.size() == 2 && ph.eps[0] > 0.0 && std::abs(ph.eps[1] / ph.eps[0] - 2.0) < 1e-12) {
      const double ratio = bs[1] / bs[0];
      out.metrics["b_ratio"] = ratio;
      out.check("eps_squared_scaling", ratio >= ratio_range[0] && ratio <= ratio_range[1]);
    }
    out.file("loggrowth.csv", csv.str());
    if (plain && !born_times.empty()) out.file("born.csv", born.str());
    return out;
  };
}

inline Job plan_scatter(Section& p, const RunContext& ctx) {
  PhysicsParams ph = read_physics(p, {0.005, 0.01}, 1600.0, true);
  const double t_first = p.real("t_first", 25.0);
  const double lo = p.real("sigma_min", -12.0);
  const double hi = p.real("sigma_max", ph.base.M + 3.0);
  const double ratio_max = p.real("energy_ratio_max", 0.05);
  const bool free_check = p.flag("free_check", true);
  const double free_T = p.real("free_T", 400.0);
  const double slope_tol = p.real("free_slope_tolerance", 0.2);
  const double K_tol = p.real("K_stability", 0.25);
  p.require(t_first > 0.0, "t_first", "must be positive");
  for (double e : ph.eps) p.require(e > 0.0, "eps", "must be positive for profile agreement");
  const std::vector<double> ts = doubling_times(t_first, ph.opt.T);
  p.require(ts.size() >= 3, "T", "need at least 3 doubling times from t_first");
  check_window(p, ph.base, t_first, lo, hi);
  const std::vector<double> fts = doubling_times(t_first, free_T);
  if (free_check) p.require(fts.size() >= 3, "free_T", "need at least 3 doubling times from t_first");
  ph.opt.snapshots = ts;
  ph.opt.threads = ctx.threads;
  check_grid(ph, ph.opt, p.path());
  SimulationOptions fopt = ph.opt;
  fopt.T = free_T;
  fopt.snapshots = fts;
  if (free_check) check_grid(ph, fopt, p.path());
  return [=]() {
    Outcome out;
    Csv energy({"case", "eps", "t", "energy_defect_1", "energy_defect_2"});
    std::array<std::unique_ptr<FriedlanderEvaluator>, 2> F;
    for (int j = 0; j < 2; ++j)
      F[j] = std::make_unique<FriedlanderEvaluator>(BumpFunction{}, ph.base.g(j).as_bump(), ph.base.c(j));
    auto p0 = [&](int j) { return [&, j](double sg) { return F[j]->dvalue(sg, {0, 0, 1}); }; };
    json runs = json::array();
    std::array<std::vector<double>, 2> K;
    for (std::size_t n = 0; n < ph.eps.size(); ++n) {
      RadialSystemSpec s = ph.base;
      s.eps = ph.eps[n];
      const RadialState st = simulate(s, ph.opt);
      std::array<std::vector<double>, 2> e;
      json rj = {{"eps", s.eps}};
      for (int j = 0; j < 2; ++j) {
        const RayProfile dp = extract_dprofile(st, j, lo, hi, ts);
        const RayProfile up = extract_uprofile(st, j, lo, hi, ts);
        e[j] = scattering_energy_defect(st, j, ts);
        K[j].push_back(profile_agreement_constant(dp, p0(j), s.eps));
        Csv pc({"sigma", "p", "U", "p_free"});
        for (std::size_t i = 0; i < dp.sigma.size(); ++i)
          pc.row(dp.sigma[i], dp.values[i], up.values[i], s.eps * p0(j)(dp.sigma[i]));
        out.file("profile_eps" + std::to_string(n) + "_" + std::to_string(j + 1) + ".csv", pc.str());
        const double ratio = e[j].front() > 0.0 ? e[j].back() / e[j].front() : 0.0;
        const std::string js = std::to_string(j + 1);
        rj["field_" + js] = {{"dprofile", convergence_json(dp.report)},
                             {"energy_defect", e[j]},
                             {"energy_ratio", ratio},
                             {"K", K[j].back()}};
        out.check("energy_decay_" + js + "_eps=" + eps_tag(s.eps), ratio <= ratio_max);
      }
      for (std::size_t k = 0; k < ts.size(); ++k) energy.row(std::string("coupled"), s.eps, ts[k], e[0][k], e[1][k]);
      runs.push_back(rj);
    }
    out.metrics["runs"] = runs;
    if (ph.eps.size() >= 2)
      for (int j = 0; j < 2; ++j) {
        const auto [mn, mx] = std::minmax_element(K[j].begin(), K[j].end());
        const double spread = *mn > 0.0 ? *mx / *mn - 1.0 : std::numeric_limits<double>::infinity();
        out.metrics["K_spread_" + std::to_string(j + 1)] = spread;
        out.check("profile_agreement_stable_" + std::to_string(j + 1), spread <= K_tol);
      }
    if (free_check) {
      RadialSystemSpec s = ph.base;
      s.eps = ph.eps.front();
      s.A1 = s.A2 = 0.0;
      const RadialState st = simulate(s, fopt);
      std::array<std::vector<double>, 2> e;
      json fj = json::object();
      for (int j = 0; j < 2; ++j) {
        e[j] = scattering_energy_defect(st, j, fts);
        const FitReport f = loglog_fit(fts, e[j], "free energy defect");
        fj["field_" + std::to_string(j + 1)] = fit_json(f);
        out.check("free_energy_rate_" + std::to_string(j + 1),
                  !f.degenerate && std::abs(f.slope() + 1.0) <= slope_tol);
      }
      for (std::size_t k = 0; k < fts.size(); ++k) energy.row(std::string("free"), s.eps, fts[k], e[0][k], e[1][k]);
      out.metrics["free"] = fj;
    }
    out.file("energy.csv", energy.str());
    return out;
  };
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Registry and driver
// ---------------------------------------------------------------------------

inline const std::vector<Experiment>& experiments() {
  static const std::vector<Experiment> list = {
      {"radon-check", "plane integrals of bump functions against the radial reduction formula",
       detail::plan_radon_check},
      {"radiation", "Friedlander radiation field profile of seeded data, with support and derivative checks",
       detail::plan_radiation},
      {"freewave-farfield", "far-field defect rates, Huygens residuals and the radial d'Alembert oracle",
       detail::plan_farfield},
      {"isometry", "norm defect of the translation representation and its decay under refinement",
       detail::plan_isometry},
      {"inverse-roundtrip", "radial inverse of the translation representation and the round trip back",
       detail::plan_inverse},
      {"nullcheck", "exact null-condition verdicts and term classification for a quadratic system",
       detail::plan_nullcheck},
      {"simulate", "radial two-speed system: ray maxima, profiles, energy defects, decay audit",
       detail::plan_simulate},
      {"loggrowth", "logarithmic growth fit of v1 on the slow ray, Born comparison, null-source contrast",
       detail::plan_loggrowth},
      {"scatter", "energy-sense asymptotic freeness and agreement with the free profile", detail::plan_scatter},
  };
  return list;
}

inline const Experiment* find_experiment(const std::string& name) {
  for (const auto& e : experiments())
    if (e.name == name) return &e;
  return nullptr;
}

struct Invocation {
  std::string experiment;   // from the subcommand; empty for `run`
  std::string config_path;  // empty: all defaults
  std::string out_dir;      // empty: config, then WAVESCATTER_OUT, then ./wavescatter-out/<experiment>
  std::optional<unsigned> threads;
  std::optional<std::uint64_t> seed;
};

struct Prepared {
  const Experiment* experiment = nullptr;
  json resolved;
  std::filesystem::path out_dir;
  Job job;
};

inline json load_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return json::parse(buf.str());
  } catch (const json::parse_error& e) {
    throw ConfigError("malformed JSON in '" + path + "': " + e.what());
  }
}

/// Resolves the full configuration and plans the job; throws ConfigError.
inline Prepared prepare(const Invocation& inv, const json& config) {
  Section top(config, "config");
  Prepared out;
  std::string name = top.text("experiment", inv.experiment);
  if (name.empty()) throw ConfigError("config.experiment: required when using `run`");
  if (!inv.experiment.empty() && name != inv.experiment)
    throw ConfigError("config.experiment: '" + name + "' does not match the subcommand '" + inv.experiment + "'");
  out.experiment = find_experiment(name);
  if (!out.experiment) throw ConfigError("config.experiment: unknown experiment '" + name + "'");
  RunContext ctx;
  ctx.seed = top.unsigned_integer("seed", 1);
  ctx.threads = static_cast<unsigned>(top.unsigned_integer("threads", 1));
  if (inv.seed) ctx.seed = *inv.seed;
  if (inv.threads) ctx.threads = *inv.threads;
  if (ctx.threads < 1) throw ConfigError("threads: must be at least 1");
  std::string dir = top.text("output_dir", "");
  if (!inv.out_dir.empty()) {
    dir = inv.out_dir;
  } else if (dir.empty()) {
    const char* env = std::getenv("WAVESCATTER_OUT");
    dir = env && *env ? std::string(env) : "wavescatter-out/" + name;
  }
  top.section("params", [&](Section& p) { out.job = out.experiment->plan(p, ctx); });
  top.finish();
  out.resolved = top.resolved();
  out.resolved["seed"] = ctx.seed;
  out.resolved["threads"] = ctx.threads;
  out.resolved["output_dir"] = dir;
  out.out_dir = dir;
  return out;
}

inline json make_report(const Prepared& p, const Outcome& o) {
  json r = json::object();
  r["experiment"] = p.experiment->name;
  r["config"] = p.resolved;
  r["metrics"] = o.metrics;
  json c = json::object();
  for (const auto& [name, ok] : o.criteria) c[name] = ok;
  r["criteria"] = c;
  r["pass"] = o.passed();
  json files = json::array();
  for (const auto& f : o.files) files.push_back(f.first);
  r["artifacts"] = files;
  return r;
}

inline void write_artifacts(const Prepared& p, const Outcome& o) {
  std::filesystem::create_directories(p.out_dir);
  auto put = [&](const std::string& name, const std::string& text) {
    std::ofstream f(p.out_dir / name, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + (p.out_dir / name).string());
    f << text;
  };
  for (const auto& [name, text] : o.files) put(name, text);
  put("report.json", make_report(p, o).dump(2) + "\n");
}

/// Runs one invocation end to end and returns the exit code.
inline int execute(const Invocation& inv, std::ostream& out, std::ostream& err) {
  Prepared prep;
  try {
    const json config = inv.config_path.empty() ? json::object() : load_json_file(inv.config_path);
    prep = prepare(inv, config);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return exit_config_error;
  }
  Outcome o;
  try {
    o = prep.job();
    write_artifacts(prep, o);
  } catch (const std::exception& e) {
    err << prep.experiment->name << " failed: " << e.what() << "\n";
    return exit_runtime_failure;
  }
  for (const auto& [name, ok] : o.criteria) out << (ok ? "PASS " : "FAIL ") << name << "\n";
  out << "report: " << (prep.out_dir / "report.json").string() << "\n";
  return o.passed() ? exit_ok : exit_criteria_failed;
}

inline void list_experiments(std::ostream& out) {
  for (const auto& e : experiments()) out << e.name << std::string(20 - e.name.size(), ' ') << e.summary << "\n";
}

inline int main(int argc, char** argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"wavescatter: radiation fields, translation representation and two-speed scattering experiments"};
  app.require_subcommand(1);
  Invocation inv;
  unsigned threads = 1;
  std::uint64_t seed = 1;
  auto common = [&](CLI::App* sub) {
    sub->add_option("--out", inv.out_dir, "output directory (default: $WAVESCATTER_OUT)");
    sub->add_option("--threads", threads, "thread cap")->check(CLI::PositiveNumber);
    sub->add_option("--seed", seed, "seed for randomized data");
  };
  CLI::App* list = app.add_subcommand("list", "list the experiments");
  CLI::App* run = app.add_subcommand("run", "run the experiment named in a config file");
  run->add_option("config,--config", inv.config_path, "config file")->check(CLI::ExistingFile);
  common(run);
  std::vector<CLI::App*> subs;
  for (const auto& e : experiments()) {
    CLI::App* s = app.add_subcommand(e.name, e.summary);
    s->add_option("--config", inv.config_path, "config file (default: built-in defaults)")->check(CLI::ExistingFile);
    common(s);
    subs.push_back(s);
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? exit_ok : exit_config_error;
  }
  if (list->parsed()) {
    list_experiments(out);
    return exit_ok;
  }
  CLI::App* active = run->parsed() ? run : nullptr;
  for (std::size_t i = 0; i < subs.size(); ++i)
    if (subs[i]->parsed()) {
      active = subs[i];
      inv.experiment = experiments()[i].name;
    }
  if (active == run && inv.config_path.empty()) {
    err << "config error: `run` needs a config file\n";
    return exit_config_error;
  }
  if (active->count("--threads")) inv.threads = threads;
  if (active->count("--seed")) inv.seed = seed;
  return execute(inv, out, err);
}

}  // namespace wavescatter::cli
