#pragma once

// Ordinary least-squares fits used by every rate and growth audit.

#include <cmath>
#include <algorithm>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace wavescatter {

/// Result of a straight-line fit y = a + b x (coefficients = {a, b}).
struct FitReport {
  std::string label;
  std::vector<double> coefficients;
  std::vector<double> stderrs;  // one per coefficient
  double r2 = 0.0;
  std::size_t n = 0;
  bool degenerate = false;       // nothing to fit (all-zero data, too few points)
  bool compact_support = false;  // data vanished identically where decay was expected

  double intercept() const { return coefficients.at(0); }
  double slope() const { return coefficients.at(1); }
  double slope_stderr() const { return stderrs.at(1); }
};

inline FitReport degenerate_fit(std::string label, std::size_t n) {
  FitReport r;
  r.label = std::move(label);
  r.n = n;
  r.degenerate = true;
  return r;
}

/// Least squares y = a + b x. R^2 and standard errors need at least 3 samples.
inline FitReport linear_fit(const std::vector<double>& x, const std::vector<double>& y, std::string label = "linear") {
  if (x.size() != y.size()) throw std::invalid_argument("linear_fit: size mismatch");
  const std::size_t n = x.size();
  if (n < 3) return degenerate_fit(std::move(label), n);
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0) return degenerate_fit(std::move(label), n);
  const double b = sxy / sxx;
  const double a = my - b * mx;
  double sse = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double e = y[i] - a - b * x[i];
    sse += e * e;
  }
  FitReport r;
  r.label = std::move(label);
  r.n = n;
  r.coefficients = {a, b};
  const double s2 = sse / static_cast<double>(n - 2);
  const double sb = std::sqrt(s2 / sxx);
  double sumx2 = 0;
  for (double xi : x) sumx2 += xi * xi;
  r.stderrs = {std::sqrt(s2 * sumx2 / (n * sxx)), sb};
  r.r2 = syy > 0.0 ? std::max(0.0, 1.0 - sse / syy) : 1.0;
  return r;
}

/// Fit log y = a + b log x over samples with y > 0. All-zero y gives a
/// degenerate report; mixed zero/non-zero samples drop the zeros.
inline FitReport loglog_fit(const std::vector<double>& x, const std::vector<double>& y, std::string label = "loglog") {
  if (x.size() != y.size()) throw std::invalid_argument("loglog_fit: size mismatch");
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0)) throw std::invalid_argument("loglog_fit: abscissae must be positive");
    if (y[i] > 0.0) {
      lx.push_back(std::log(x[i]));
      ly.push_back(std::log(y[i]));
    }
  }
  if (lx.empty()) return degenerate_fit(std::move(label), x.size());
  return linear_fit(lx, ly, std::move(label));
}

}  // namespace wavescatter
