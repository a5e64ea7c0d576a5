#include <gtest/gtest.h>

#include "wavescatter/nullcond.hpp"

using namespace wavescatter;

namespace {

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

bool exact_and_sampled_agree(const QuadraticSystem& s) {
  const auto v = check_null_condition(s);
  for (const auto& x : v)
    if (x.satisfied != sampled_null_condition(s, x.j)) return false;
  return true;
}

}  // namespace

TEST(ParseRational, Forms) {
  EXPECT_EQ(parse_rational("3"), Rational(3));
  EXPECT_EQ(parse_rational("-0.25"), Rational(-1, 4));
  EXPECT_EQ(parse_rational("1.5e2"), Rational(150));
  EXPECT_EQ(parse_rational("2E-3"), Rational(1, 500));
  EXPECT_EQ(parse_rational("7/3"), Rational(7, 3));
  EXPECT_EQ(parse_rational("0.1"), Rational(1, 10));
  for (const char* bad : {"", "abc", "1.2.3", "1e", "1/0", "--1"}) EXPECT_THROW(parse_rational(bad), std::invalid_argument) << bad;
}

TEST(Validate, ExampleSystemIsValid) { EXPECT_TRUE(validate(two_speed_example(1, 1)).empty()); }

TEST(Validate, ReportsViolations) {
  QuadraticSystem s({Rational(1)});
  s.add_p({1, 1, 1, 1, 0, 0}, 1);
  auto d = validate(s);
  ASSERT_EQ(d.size(), 1u);
  EXPECT_NE(d[0].find("p^{a00}=0"), std::string::npos);

  QuadraticSystem equal({Rational(1), Rational(1)});
  EXPECT_NE(validate(equal).at(0).find("strictly increasing"), std::string::npos);

  QuadraticSystem asym({Rational(1), Rational(2)});
  asym.add_p({1, 1, 2, 0, 1, 2}, 1);
  EXPECT_GE(validate(asym).size(), 2u);  // both partners missing
  QuadraticSystem sym({Rational(1), Rational(2)});
  add_p_symmetric(sym, {1, 1, 2, 0, 1, 2}, 1);
  EXPECT_TRUE(validate(sym).empty());

  QuadraticSystem range({Rational(1)});
  range.add_q({1, 2, 1, 0, 0}, 1);
  EXPECT_NE(validate(range).at(0).find("out of range"), std::string::npos);
  EXPECT_THROW(check_null_condition(range), InvalidSystem);
}

TEST(NullCondition, Q0MatchedSpeed) {
  QuadraticSystem s({Rational(1), Rational(3)});
  add_q0(s, 2, 2, 2, 3, 1);
  const auto v = check_null_condition(s);
  EXPECT_TRUE(null_condition_holds(v));
}

TEST(NullCondition, Q0MismatchedSpeedWitness) {
  QuadraticSystem s({Rational(1), Rational(2)});
  add_q0(s, 2, 2, 2, 1, 1);  // speed c_1 on the c_2 diagonal
  const auto v = check_null_condition(s);
  EXPECT_TRUE(v[0].satisfied);
  ASSERT_FALSE(v[1].satisfied);
  ASSERT_TRUE(v[1].witness.has_value());
  const auto& w = *v[1].witness;
  EXPECT_EQ(w.X, (std::array<double, 4>{2, 1, 0, 0}));
  EXPECT_DOUBLE_EQ(w.value, 4.0 - 1.0);
  EXPECT_EQ(w.symbol, "quadratic");
}

TEST(NullCondition, EveryQabAndCubicForm) {
  for (int a = 0; a < 4; ++a)
    for (int b = a + 1; b < 4; ++b) {
      QuadraticSystem s({Rational(2)});
      add_qab(s, 1, 1, 1, a, b, Rational(5, 3));
      EXPECT_TRUE(null_condition_holds(check_null_condition(s))) << a << b;
    }
  QuadraticSystem s({Rational(1), Rational(2)});
  add_pqab(s, 2, 1, 2, 0, 1);
  EXPECT_TRUE(validate(s).empty());
  EXPECT_FALSE(s.p.empty());
  EXPECT_TRUE(null_condition_holds(check_null_condition(s)));
}

TEST(NullCondition, TwoSpeedExample) {
  const auto s = two_speed_example(1, 1);
  EXPECT_TRUE(null_condition_holds(check_null_condition(s)));
}

TEST(NullCondition, ViolationsHaveNonzeroWitness) {
  QuadraticSystem s({Rational(1)});
  s.add_q({1, 1, 1, 0, 0}, 1);  // (d_t u)^2
  auto v = check_null_condition(s);
  ASSERT_TRUE(v[0].witness);
  EXPECT_DOUBLE_EQ(v[0].witness->value, 1.0);

  // cubic (d_t u)(d_1 d_1 u)
  QuadraticSystem p({Rational(3, 2)});
  p.add_p({1, 1, 1, 0, 1, 1}, 1);
  v = check_null_condition(p);
  ASSERT_TRUE(v[0].witness);
  EXPECT_EQ(v[0].witness->symbol, "cubic");
  EXPECT_NE(v[0].witness->value, 0.0);
}

TEST(NullCondition, WitnessAlwaysFoundOnLattice) {
  // X_1 X_2 X_3 vanishes on all axes and face diagonals
  QuadraticSystem s({Rational(1)});
  s.add_p({1, 1, 1, 1, 2, 3}, Rational(1, 2));
  s.add_p({1, 1, 1, 1, 3, 2}, Rational(1, 2));
  const auto v = check_null_condition(s);
  ASSERT_TRUE(v[0].witness);
  EXPECT_NE(v[0].witness->value, 0.0);
  const auto& X = v[0].witness->X;
  EXPECT_NEAR(X[1] * X[1] + X[2] * X[2] + X[3] * X[3], 1.0, 1e-15);
}

TEST(NullCondition, AgreesWithSampledOracle) {
  std::vector<QuadraticSystem> cases;
  cases.push_back(two_speed_example(1, 1));
  for (std::uint64_t seed = 1; seed <= 20; ++seed) cases.push_back(random_type_one(seed));
  QuadraticSystem q0({Rational(1), Rational(2)});
  add_q0(q0, 1, 1, 1, 1, 1);
  add_q0(q0, 2, 2, 2, 1, 1);
  cases.push_back(q0);
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> coef(-3, 3), idx(0, 3);
  for (int n = 0; n < 30; ++n) {
    QuadraticSystem s({Rational(1), Rational(5, 2)});
    add_q0(s, 1, 1, 1, 1, coef(rng));
    if (n % 3 == 0) s.add_q({1, 1, 1, idx(rng), idx(rng)}, coef(rng));
    if (n % 4 == 0) {
      int b = idx(rng), bp = idx(rng);
      if (b == 0 && bp == 0) b = 2;
      add_p_symmetric(s, {2, 2, 2, idx(rng), b, bp}, coef(rng));
    }
    cases.push_back(s);
  }
  for (const auto& s : cases) EXPECT_TRUE(exact_and_sampled_agree(s));
}

TEST(Classify, PartitionsTerms) {
  const Classification c = classify(two_speed_example(1, 1));
  EXPECT_EQ(c.totals[static_cast<int>(TermClass::typeII)], 2);
  EXPECT_EQ(c.terms.size(), 2u);

  QuadraticSystem d({Rational(1)});
  d.add_q({1, 1, 1, 0, 0}, 1);
  EXPECT_EQ(classify(d).terms.at(0).cls, TermClass::diagonal);

  QuadraticSystem t({Rational(1), Rational(2), Rational(3)});
  add_p_symmetric(t, {1, 2, 3, 0, 1, 1}, 1);
  for (const auto& term : classify(t).terms) EXPECT_EQ(term.cls, TermClass::typeI);

  const QuadraticSystem r = random_type_one(3);
  const Classification cr = classify(r);
  EXPECT_EQ(cr.terms.size(), r.p.size() + r.q.size());
  EXPECT_EQ(cr.totals[0] + cr.totals[1] + cr.totals[2], static_cast<int>(cr.terms.size()));
}

TEST(ClosedForm, MixedPartialsAndZ) {
  const auto f = ClosedFormField::radial_wave(bump_profile(1.5, 2.0), 1.3);
  for (double t : {0.4, 2.0})
    for (const Vec3& x : {Vec3{0.3, 0.4, -0.2}, Vec3{1.0, 1.5, 0.7}}) EXPECT_LE(mixed_partial_defect(f, t, x), 1e-10);
  // S u for an outgoing wave: (r - ct) F'/r - F/r
  const double c = 1.3, t = 10.0;
  const auto g = ClosedFormField::radial_wave(bump_profile(1.0), c, true);
  const Vec3 x{0.0, 0.0, c * t + 0.3};
  const auto F = bump_profile(1.0)(0.3);
  const double r = x[2];
  EXPECT_NEAR(g.Z(t, x)[0], 0.3 * F.d1 / r - F.value / r, 1e-14);
  for (int k = 1; k <= 3; ++k) EXPECT_NEAR(g.Z(t, x)[k], 0.0, 1e-15);  // radial: no rotation
}

TEST(ClosedForm, SolvesWaveEquation) {
  const double c = 0.7;
  const auto f = ClosedFormField::radial_wave(bump_profile(1.0, 1.0, 0.2), c);
  const FieldJet j = f.jet(0.9, {0.2, -0.5, 0.3});
  EXPECT_NEAR(j.dd[0][0] - c * c * (j.dd[1][1] + j.dd[2][2] + j.dd[3][3]), 0.0, 1e-11);
}

TEST(NullForms, AntisymmetryAndBilinearity) {
  const auto f = ClosedFormField::radial_wave(bump_profile(1.0), 1.0);
  const auto g = ClosedFormField::radial_wave(bump_profile(0.7, 1.0, 0.3), 2.0);
  const double t = 0.8;
  const Vec3 x{0.3, 0.2, 0.5};
  for (int a = 0; a < 4; ++a) {
    for (int b = 0; b < 4; ++b) {
      EXPECT_EQ(eval_null_form(NullForm::qab(a, b), f, g, t, x), -eval_null_form(NullForm::qab(b, a), f, g, t, x));
    }
    EXPECT_EQ(eval_null_form(NullForm::qab(a, (a + 1) % 4), f, f, t, x), 0.0);
  }
  const double q = eval_null_form(NullForm::q0(1.5), f, g, t, x);
  EXPECT_NEAR(eval_null_form(NullForm::q0(1.5), f.scaled(3.0), g.scaled(-2.0), t, x), -6.0 * q, 1e-14);
}

TEST(NullForms, Q0CancelsOnTheLightCone) {
  const double c = 1.0;
  const auto f = ClosedFormField::radial_wave(bump_profile(1.0), c, true);
  std::vector<double> rs, q, prod;
  for (double r : {20.0, 40.0, 80.0, 160.0, 320.0}) {
    const double t = (r - 0.4) / c;
    const Vec3 x{0, r, 0};
    rs.push_back(r);
    q.push_back(std::abs(eval_null_form(NullForm::q0(c), f, f, t, x)));
    prod.push_back(std::abs(eval_null_form(NullForm::product(), f, f, t, x)));
  }
  EXPECT_NEAR(loglog_fit(rs, q).slope(), -3.0, 0.05);
  EXPECT_NEAR(loglog_fit(rs, prod).slope(), -2.0, 0.05);
}

TEST(NullAudit, BoundedForQ0AndStable) {
  const double c = 1.0;
  const auto f = ClosedFormField::radial_wave(bump_profile(1.0), c);
  const auto g = ClosedFormField::radial_wave(bump_profile(1.2, 0.5, 0.5), c);
  AuditRegion coarse;
  AuditRegion fine = coarse;
  fine.radial_samples *= 2;
  fine.band_samples = 2 * fine.band_samples - 1;
  const auto a = null_decay_audit(c, NullForm::q0(c), f, g, coarse);
  const auto b = null_decay_audit(c, NullForm::q0(c), f, g, fine);
  EXPECT_TRUE(std::isfinite(a.max_ratio));
  EXPECT_FALSE(a.flagged);
  EXPECT_NEAR(b.max_ratio / a.max_ratio, 1.0, 0.1);
  EXPECT_LT(a.max_ratio, 10.0);
}

TEST(NullAudit, ProductIsFlaggedConstantIsZero) {
  const double c = 1.0;
  const auto f = ClosedFormField::radial_wave(bump_profile(1.0), c);
  const auto rep = null_decay_audit(c, NullForm::product(), f, f, AuditRegion{});
  EXPECT_TRUE(rep.flagged);
  EXPECT_NEAR(rep.growth.slope(), 1.0, 0.2);
  const auto z = null_decay_audit(c, NullForm::q0(c), ClosedFormField::constant(2.0), f, AuditRegion{});
  EXPECT_EQ(z.max_ratio, 0.0);
  EXPECT_FALSE(z.flagged);
  AuditRegion bad;
  bad.r_max = bad.r_min;
  EXPECT_THROW(null_decay_audit(c, NullForm::q0(c), f, f, bad), std::invalid_argument);
}
