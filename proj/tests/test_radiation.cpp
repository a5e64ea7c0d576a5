#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <map>

#include "wavescatter/radiation.hpp"

using namespace wavescatter;

namespace {

double half_moment(double sigma, double M) {
  const double a = std::abs(sigma);
  if (a >= M) return 0.0;
  return 0.5 * adaptive_line_integral([&](double r) { return bump_jet(r / M).value * r; }, a, M, 1e-13);
}

BumpFunction shifted_pair_member(double scale, Vec3 center) {
  Polynomial3 p({Monomial{{0, 0, 0}, 1.0}, Monomial{{0, 1, 0}, 0.8}});
  return make_modulated_bump(0.7, scale, center, p);
}

}  // namespace

TEST(Rn, ThreeDimensionalRadial) {
  const BumpFunction f = make_radial_bump(1.0, 1.0);
  for (double s : {-0.9, -0.4, 0.0, 0.6})
    EXPECT_NEAR(rn_transform(f, 3, s, {1, 0, 0}), half_moment(s, 1.0), 1e-12) << s;
  EXPECT_EQ(rn_transform(f, 3, 1.0, {1, 0, 0}), 0.0);
  EXPECT_EQ(rn_transform(f, 3, 2.5, {0, 0, 1}), 0.0);
}

TEST(Rn, RejectsUnsupportedDimension) {
  const BumpFunction f = make_radial_bump(1.0, 1.0);
  EXPECT_THROW(rn_transform(f, 4, 0.0, {1, 0, 0}), std::invalid_argument);
  EXPECT_THROW(rn_transform(f, 1, 0.0, {1, 0, 0}), std::invalid_argument);
}

TEST(Rn, TwoDimensionalOneSidedSupportAndAbelOracle) {
  const BumpFunction f = make_radial_bump(1.0, 1.0);
  EXPECT_EQ(rn_transform(f, 2, 1.0, {1, 0, 0}), 0.0);
  EXPECT_EQ(rn_transform(f, 2, 3.0, {1, 0, 0}), 0.0);
  // direct evaluation of (1/(2 sqrt(2 pi))) int (pi (s - sigma))^{-1/2} R(s) ds, split at s = sigma + 1e-2
  // with the near piece done in the variable u = sqrt(s - sigma) separately
  const double sigma = -0.3;
  auto R = [&](double s) { return radon(f, s, {1, 0, 0}); };
  const double far = adaptive_line_integral([&](double s) { return R(s) / std::sqrt(pi * (s - sigma)); }, sigma + 1e-2,
                                            1.0, 1e-11);
  const double near =
      adaptive_line_integral([&](double u) { return 2.0 * R(sigma + u * u) / std::sqrt(pi); }, 0.0, 0.1, 1e-11);
  EXPECT_NEAR(rn_transform(f, 2, sigma, {1, 0, 0}), (far + near) / (2.0 * std::sqrt(2.0 * pi)), 1e-8);
}

TEST(Rn, TwoDimensionalTailDecaysLikeInverseSqrt) {
  // radial data: the field is omega-independent, so one direction per sigma is enough
  const BumpFunction psi = make_radial_bump(1.0, 1.0);
  const SigmaGrid sg = SigmaGrid::covering(-200.0, 1.5, 8.0);
  std::map<double, double> cache;
  auto V = [&](double s, const Vec3&) {
    auto it = cache.find(s);
    if (it == cache.end()) it = cache.emplace(s, rn_transform(psi, 2, s, {0, 0, 1})).first;
    return it->second;
  };
  const RadiationProfile p = sample_profile(sg, sphere_quadrature(1), 1.0, 1.0, 2, V, V, false);
  for (std::size_t i = 0; i < sg.size(); ++i) {
    if (sg[i] >= 1.0) {
      EXPECT_EQ(p.value(i, 0), 0.0);
    }
  }
  const FitReport r = decay_report(p, -0.5);
  ASSERT_FALSE(r.degenerate);
  EXPECT_NEAR(r.slope(), -0.5, 0.1);
}

TEST(Friedlander, PsiOnly) {
  const BumpFunction psi = make_radial_bump(1.0, 2.0);
  const double c = 1.7;
  const SigmaGrid sg = profile_grid(1.0, 0.25);
  const SphereGrid og = sphere_quadrature(1);
  const RadiationProfile p = friedlander(BumpFunction{}, psi, c, sg, og);
  for (std::size_t i = 0; i < sg.size(); ++i)
    for (std::size_t q = 0; q < og.size(); q += 7)
      EXPECT_NEAR(p.value(i, q), radon(psi, sg[i], og.nodes[q]) / (four_pi * c), 1e-14);
}

TEST(Friedlander, PhiOnlyRadial) {
  const BumpFunction phi = make_radial_bump(1.0, 1.0);
  const FriedlanderEvaluator ev(phi, BumpFunction{}, 1.0);
  for (double s : {-0.75, -0.1, 0.2, 0.8}) {
    const double expected = 2.0 * pi * bump_jet(std::abs(s)).value * std::abs(s) * (s > 0 ? 1.0 : -1.0) / four_pi;
    EXPECT_NEAR(ev.value(s, {0, 0, 1}), expected, 1e-12);
  }
}

TEST(Friedlander, CompactSupportInThreeDimensions) {
  const BumpFunction phi = shifted_pair_member(1.0, {0.2, 0.1, 0.0});
  const BumpFunction psi = make_radial_bump(0.8, 1.0, {-0.1, 0, 0.1});
  const SigmaGrid sg = profile_grid(1.0, 0.125);
  const RadiationProfile p = friedlander(phi, psi, 1.0, sg, sphere_quadrature(1));
  for (std::size_t i = 0; i < sg.size(); ++i) {
    if (std::abs(sg[i]) < p.support_bound) continue;
    for (std::size_t q = 0; q < p.sphere_grid.size(); ++q) {
      EXPECT_EQ(p.value(i, q), 0.0);
      EXPECT_EQ(p.dvalue(i, q), 0.0);
    }
  }
}

TEST(Friedlander, RejectsUncoveredGrid) {
  const BumpFunction psi = make_radial_bump(1.0, 1.0);
  EXPECT_THROW(friedlander(BumpFunction{}, psi, 1.0, SigmaGrid::covering(-0.5, 1.5, 0.1), sphere_quadrature(1)),
               std::invalid_argument);
}

TEST(Friedlander, Linearity) {
  const BumpFunction p1 = shifted_pair_member(1.0, {0.1, 0, 0}), p2 = make_radial_bump(0.6, 1.0, {0, 0.2, 0});
  const BumpFunction psi = make_radial_bump(0.9, 0.5);
  const double a = 0.37, b = -1.9;
  const FriedlanderEvaluator whole(a * p1 + b * p2, psi, 1.3);
  const FriedlanderEvaluator e1(p1, BumpFunction{}, 1.3), e2(p2, BumpFunction{}, 1.3), e3(BumpFunction{}, psi, 1.3);
  const Vec3 w = (1.0 / 3.0) * Vec3{1, 2, 2};
  for (double s : {-0.5, 0.0, 0.45})
    EXPECT_NEAR(whole.value(s, w), a * e1.value(s, w) + b * e2.value(s, w) + e3.value(s, w), 1e-10);
}

TEST(Friedlander, StoredDerivativeMatchesDifferences) {
  const BumpFunction phi = shifted_pair_member(1.0, {0.1, 0.0, -0.1});
  double prev = 0.0;
  for (double h : {0.0125, 0.00625}) {
    const RadiationProfile p = friedlander(phi, BumpFunction{}, 1.0, profile_grid(1.0, h), sphere_quadrature(1));
    double err = 0.0;
    for (std::size_t i = 1; i + 1 < p.sigma_grid.size(); ++i)
      for (std::size_t q = 0; q < p.sphere_grid.size(); ++q)
        err = std::max(err, std::abs((p.value(i + 1, q) - p.value(i - 1, q)) / (2 * h) - p.dvalue(i, q)));
    if (prev > 0.0) {
      EXPECT_GT(prev / err, 3.0);
    }
    prev = err;
  }
}

TEST(DecayReport, CompactSupportAndDegenerate) {
  const BumpFunction psi = make_radial_bump(1.0, 1.0);
  const SigmaGrid sg = SigmaGrid::covering(-6.0, 1.5, 0.25);
  const RadiationProfile p = friedlander(BumpFunction{}, psi, 1.0, sg, sphere_quadrature(1));
  const FitReport r = decay_report(p, 0.0);
  EXPECT_TRUE(r.compact_support);
  const RadiationProfile z = friedlander(BumpFunction{}, 0.0 * psi + make_radial_bump(1.0, 0.0), 1.0, sg,
                                         sphere_quadrature(1));
  EXPECT_TRUE(decay_report(z, 0.0).degenerate);
  const RadiationProfile shortp = friedlander(BumpFunction{}, psi, 1.0, profile_grid(1.0, 0.25), sphere_quadrature(1));
  EXPECT_THROW(decay_report(shortp, 0.0), std::invalid_argument);
}

TEST(EvalSharp, ZeroAndNodeExactness) {
  const SphereGrid og = sphere_quadrature(1);
  const SigmaGrid sg = SigmaGrid::covering(-2.0, 2.0, 0.25);
  auto V = [](double s, const Vec3& w) { return std::sin(s) * (1.0 + w[0] + 0.3 * w[2] * w[2]); };
  const RadiationProfile zero = sample_profile(
      sg, og, 1.0, 2.0, 3, [](double, const Vec3&) { return 0.0; }, [](double, const Vec3&) { return 0.0; }, false);
  EXPECT_EQ(eval_sharp(zero, 1.0, {1, 2, 3}), 0.0);
  const RadiationProfile p = sample_profile(sg, og, 1.0, 2.0, 3, V, V, false);
  EXPECT_THROW(eval_sharp(p, 0.0, {0, 0, 0}), std::invalid_argument);
  for (std::size_t q : {0u, 5u, 17u, 31u}) {
    const double r = sg[12];
    const Vec3 x = r * og.nodes[q];
    EXPECT_NEAR(eval_sharp(p, 0.0, x), V(r, og.nodes[q]) / r, 1e-14);
  }
}

TEST(EvalSharp, SecondOrderInSigma) {
  const SphereGrid og = sphere_quadrature(1);
  auto V = [](double s, const Vec3& w) { return std::cos(1.3 * s) * (2.0 + w[1]); };
  const Vec3 w = og.nodes[9];
  double prev = 0.0;
  for (double h : {0.2, 0.1, 0.05}) {
    const RadiationProfile p = sample_profile(SigmaGrid::covering(-3.0, 3.0, h), og, 2.0, 3.0, 3, V, V, false);
    double err = 0.0;
    for (double t : {0.5, 0.77, 1.01}) {
      const double r = 1.9;
      err = std::max(err, std::abs(eval_sharp(p, t, r * w) - V(r - 2.0 * t, w) / r));
    }
    if (prev > 0.0) {
      EXPECT_NEAR(prev / err, 4.0, 1.0);
    }
    prev = err;
  }
}

TEST(Csv, HeaderAndRows) {
  const SphereGrid og = sphere_quadrature(1);
  const SigmaGrid sg = SigmaGrid::covering(-1.0, 1.0, 0.5);
  const RadiationProfile p = sample_profile(
      sg, og, 1.0, 1.0, 3, [](double s, const Vec3&) { return s / 3.0; }, [](double, const Vec3&) { return 1.0; }, true);
  const auto dir = std::filesystem::temp_directory_path() / "wavescatter_csv_test";
  std::filesystem::create_directories(dir);
  write_profile_csv(p, (dir / "v.csv").string(), (dir / "s.csv").string());
  std::ifstream v(dir / "v.csv"), s(dir / "s.csv");
  std::string line;
  std::getline(v, line);
  EXPECT_EQ(line, "sigma,omega_index,value,dvalue");
  std::getline(v, line);
  EXPECT_EQ(line, "-1,0,-0.33333333333333331,1");
  std::getline(s, line);
  EXPECT_EQ(line, "omega_index,wx,wy,wz,weight");
  std::size_t rows = 0;
  while (std::getline(s, line)) ++rows;
  EXPECT_EQ(rows, og.size());
  EXPECT_EQ(format_double(0.1), "0.10000000000000001");
}
