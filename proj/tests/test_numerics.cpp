#include <gtest/gtest.h>

#include <random>

#include "wavescatter/fit.hpp"
#include "wavescatter/numerics.hpp"

using namespace wavescatter;

namespace {

BumpFunction sample_bump() {
  Polynomial3 p({Monomial{{0, 0, 0}, 1.0}, Monomial{{1, 0, 0}, 0.7}, Monomial{{0, 2, 1}, -1.3}});
  return make_modulated_bump(1.2, 0.8, {0.1, -0.2, 0.15}, p) + make_radial_bump(0.6, -0.5, {0.3, 0.2, -0.1});
}

}  // namespace

TEST(Bump, CenterAndBoundary) {
  const BumpFunction f = make_radial_bump(1.0, 1.0);
  EXPECT_NEAR(f.value({0, 0, 0}), std::exp(-1.0), 1e-15);
  EXPECT_EQ(f.value({1, 0, 0}), 0.0);
  EXPECT_EQ(f.value({0, 0.8, 0.7}), 0.0);
  EXPECT_EQ(f.support_radius(), 1.0);
}

TEST(Bump, RejectsNonPositiveRadius) {
  EXPECT_THROW(make_radial_bump(0.0, 1.0), std::invalid_argument);
  EXPECT_THROW(make_radial_bump(-1.0, 1.0), std::invalid_argument);
}

TEST(Bump, GradientMatchesFiniteDifference) {
  const BumpFunction f = make_radial_bump(1.0, 1.0);
  const double h = 1e-5;
  const Vec3 x{0.5, 0, 0};
  const double fd = (f.value({0.5 + h, 0, 0}) - f.value({0.5 - h, 0, 0})) / (2 * h);
  EXPECT_NEAR(f.gradient(x)[0], fd, 1e-6);
  EXPECT_NEAR(f.gradient(x)[1], 0.0, 1e-15);
}

TEST(Bump, DerivativesConsistentAtRandomPoints) {
  const BumpFunction f = sample_bump();
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const double h = 1e-4;
  int checked = 0;
  while (checked < 20) {
    const Vec3 x{u(rng), u(rng), u(rng)};
    if (f.value(x) == 0.0) continue;
    const Vec3 g = f.gradient(x);
    const Mat3 H = f.hessian(x);
    for (int k = 0; k < 3; ++k) {
      Vec3 xp = x, xm = x;
      xp[k] += h;
      xm[k] -= h;
      EXPECT_NEAR(g[k], (f.value(xp) - f.value(xm)) / (2 * h), 1e-6);
      const Vec3 gp = f.gradient(xp), gm = f.gradient(xm);
      for (int a = 0; a < 3; ++a) EXPECT_NEAR(H[a][k], (gp[a] - gm[a]) / (2 * h), 1e-5);
    }
    ++checked;
  }
}

TEST(Bump, OneDimensionalJetMatchesValue) {
  const double h = 1e-5;
  for (double s : {-0.8, -0.3, 0.0, 0.45, 0.9}) {
    const BumpJet1D j = bump_jet(s);
    EXPECT_NEAR(j.d1, (bump_jet(s + h).value - bump_jet(s - h).value) / (2 * h), 1e-7);
    EXPECT_NEAR(j.d2, (bump_jet(s + h).d1 - bump_jet(s - h).d1) / (2 * h), 1e-5);
  }
}

TEST(Bump, LinearCombination) {
  const BumpFunction a = make_radial_bump(1.0, 2.0), b = make_radial_bump(0.5, 1.0, {0.2, 0, 0});
  const BumpFunction c = a + (-3.0) * b;
  const Vec3 x{0.25, 0.1, -0.05};
  EXPECT_NEAR(c.value(x), a.value(x) - 3.0 * b.value(x), 1e-15);
  EXPECT_TRUE((0.0 * a).is_zero());
}

TEST(GaussLegendre, IntegratesPolynomialsExactly) {
  const auto r = gauss_legendre(6);
  for (int d = 0; d <= 11; ++d) {
    double s = 0;
    for (std::size_t i = 0; i < r.nodes.size(); ++i) s += r.weights[i] * std::pow(r.nodes[i], d);
    EXPECT_NEAR(s, d % 2 ? 0.0 : 2.0 / (d + 1), 1e-14) << d;
  }
}

TEST(Sphere, AreaAndMoments) {
  for (int level : {1, 2, 3}) {
    const SphereGrid g = sphere_quadrature(level);
    double area = 0;
    for (double w : g.weights) {
      EXPECT_GT(w, 0.0);
      area += w;
    }
    EXPECT_NEAR(area / four_pi, 1.0, 1e-12);
    EXPECT_NEAR(g.integrate([](const Vec3& w) { return w[0]; }), 0.0, 1e-13);
    EXPECT_NEAR(g.integrate([](const Vec3& w) { return w[0] * w[0]; }), four_pi / 3.0, 1e-13);
  }
  EXPECT_THROW(sphere_quadrature(0), std::invalid_argument);
}

TEST(Sphere, ExactOnMonomialsUpToDegree) {
  const SphereGrid g = sphere_quadrature(1);
  ASSERT_EQ(g.exactness_degree, 7);
  // int x^2 y^2 z^2 = 4pi/105, int x^6 = 4pi/7
  EXPECT_NEAR(g.integrate([](const Vec3& w) { return w[0] * w[0] * w[1] * w[1] * w[2] * w[2]; }), four_pi / 105.0,
              1e-14);
  EXPECT_NEAR(g.integrate([](const Vec3& w) { return std::pow(w[0], 6); }), four_pi / 7.0, 1e-14);
  EXPECT_NEAR(g.integrate([](const Vec3& w) { return std::pow(w[1], 5) * w[2] * w[0]; }), 0.0, 1e-14);
}

TEST(Sphere, RefinementMonotone) {
  auto f = [](const Vec3& w) { return std::exp(w[0] + 0.5 * w[1] - 0.3 * w[2]); };
  // exact: 4 pi sinh(|k|)/|k|
  const double k = std::sqrt(1.0 + 0.25 + 0.09);
  const double exact = four_pi * std::sinh(k) / k;
  double prev = 1e300;
  for (int level = 1; level <= 3; ++level) {
    const double err = std::abs(sphere_quadrature(level).integrate(f) - exact);
    EXPECT_TRUE(err < prev || err < 1e-13);
    prev = err;
  }
  EXPECT_LT(prev, 1e-12);
}

TEST(SigmaGridTest, UniformIncreasing) {
  const SigmaGrid g = SigmaGrid::covering(-1.5, 1.5, 0.125);
  EXPECT_EQ(g.size(), 25u);
  EXPECT_DOUBLE_EQ(g.min(), -1.5);
  EXPECT_DOUBLE_EQ(g.max(), 1.5);
  for (std::size_t i = 1; i < g.size(); ++i) EXPECT_NEAR(g[i] - g[i - 1], 0.125, 1e-15);
}

TEST(Adaptive, SineAndEmpty) {
  EXPECT_NEAR(adaptive_line_integral([](double x) { return std::sin(x); }, 0, pi, 1e-12), 2.0, 1e-10);
  EXPECT_EQ(adaptive_line_integral([](double) { return 1.0; }, 3.0, 3.0), 0.0);
}

TEST(Adaptive, BumpProfileAgainstTrapezoidRefinement) {
  auto f = [](double s) { return bump_jet(s).value; };
  // trapezoid is spectrally accurate for a C-infinity function vanishing to all orders at the ends
  const int n = 4000;
  double trap = 0;
  for (int i = 1; i < n; ++i) trap += f(-1.0 + 2.0 * i / n);
  trap *= 2.0 / n;
  EXPECT_NEAR(adaptive_line_integral(f, -1, 1), trap, 1e-8);
}

TEST(Adaptive, ReportsBudgetExhaustion) {
  auto wild = [](double x) { return std::sin(1e6 * x) * x; };
  EXPECT_THROW(adaptive_line_integral(wild, 0, 1, 1e-14, 8), ConvergenceError);
}

TEST(ParallelFor, ThreadCountIndependent) {
  std::vector<double> a(1000), b(1000);
  parallel_for(a.size(), 1, [&](std::size_t i) { a[i] = std::sin(i * 0.1); });
  parallel_for(b.size(), 4, [&](std::size_t i) { b[i] = std::sin(i * 0.1); });
  EXPECT_EQ(a, b);
}

TEST(Fit, RecoversLine) {
  std::vector<double> x{1, 2, 3, 4, 5}, y;
  for (double xi : x) y.push_back(2.0 - 0.5 * xi);
  const FitReport r = linear_fit(x, y);
  EXPECT_NEAR(r.intercept(), 2.0, 1e-14);
  EXPECT_NEAR(r.slope(), -0.5, 1e-14);
  EXPECT_NEAR(r.r2, 1.0, 1e-14);
  EXPECT_EQ(r.n, 5u);
}

TEST(Fit, LogLogPowerLaw) {
  std::vector<double> x{10, 20, 40, 80}, y;
  for (double xi : x) y.push_back(3.0 / xi);
  const FitReport r = loglog_fit(x, y);
  EXPECT_NEAR(r.slope(), -1.0, 1e-12);
  EXPECT_TRUE(loglog_fit(x, {0, 0, 0, 0}).degenerate);
  EXPECT_TRUE(linear_fit({1, 2}, {1, 2}).degenerate);
}
