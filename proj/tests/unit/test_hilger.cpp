#include <gtest/gtest.h>

#include <cmath>

#include "tsfb/errors.hpp"
#include "tsfb/hilger.hpp"
#include "tsfb/random.hpp"

namespace tsfb {
namespace {

const double kE = std::exp(1.0);

TEST(CirclePlus, Arithmetic) {
  EXPECT_DOUBLE_EQ(circle_plus(-0.5, -0.5, 1.0), -0.75);
  EXPECT_DOUBLE_EQ(circle_plus(2.0, 3.0, 0.0), 5.0);
  const Complex c = circle_plus(Complex(-0.5, 0.0), Complex(-0.5, 0.0), 1.0);
  EXPECT_DOUBLE_EQ(c.real(), -0.75);
  EXPECT_LT(std::abs(1.0 + c), 1.0);
}

TEST(CircleNeg, GroupInverse) {
  EXPECT_DOUBLE_EQ(circle_neg(0.0, 0.3), 0.0);
  EXPECT_DOUBLE_EQ(circle_neg(2.5, 0.0), -2.5);
  EXPECT_DOUBLE_EQ(circle_neg(1.0, 1.0), -0.5);
  EXPECT_DOUBLE_EQ(circle_plus(1.0, circle_neg(1.0, 1.0), 1.0), 0.0);
  EXPECT_THROW(circle_neg(-1.0, 1.0), DomainError);
}

TEST(CircleMinus, UndoesCirclePlus) {
  const double mu = 0.3, p = 1.7, q = -0.4;
  EXPECT_NEAR(circle_minus(circle_plus(p, q, mu), q, mu), p, 1e-14);
}

TEST(Regressivity, MarginAndPositivity) {
  EXPECT_FALSE(is_regressive(-1.0, 1.0));
  EXPECT_TRUE(is_regressive(-3.0, 1.0));
  EXPECT_FALSE(is_positively_regressive(-3.0, 1.0));
  EXPECT_TRUE(is_positively_regressive(-0.5, 1.0));
  EXPECT_TRUE(is_regressive(-1e9, 0.0));
}

TEST(HilgerRe, Values) {
  EXPECT_DOUBLE_EQ(hilger_re(Complex(0.7, 0.0), 0.5), 0.7);
  EXPECT_DOUBLE_EQ(hilger_re(Complex(-1.0, 0.0), 1.0), -1.0);
  EXPECT_THROW(hilger_im(Complex(-1.0, 0.0), 1.0), DomainError);
  EXPECT_NEAR(hilger_re(Complex(0.0, 2.0), 0.5), (std::sqrt(2.0) - 1.0) / 0.5, 1e-15);
  EXPECT_DOUBLE_EQ(hilger_re(Complex(1.0, 2.0), 0.0), 1.0);
  EXPECT_DOUBLE_EQ(hilger_im(Complex(1.0, 2.0), 0.0), 2.0);
}

TEST(HilgerCircle, Membership) {
  EXPECT_TRUE(in_hilger_circle(Complex(-1.0, 0.0), 1.0));
  EXPECT_FALSE(in_hilger_circle(Complex(0.0, 0.0), 1.0));
  for (double mu : {0.01, 1.0, 10.0, 19.9}) {
    EXPECT_TRUE(in_hilger_circle(Complex(-0.1, 0.0), mu)) << mu;
  }
  EXPECT_FALSE(in_hilger_circle(Complex(-0.1, 0.0), 20.5));
}

TEST(Cylinder, RoundTripAndIdentityAtZero) {
  const Complex z(0.3, -1.2);
  EXPECT_EQ(cylinder(z, 0.0), z);
  EXPECT_EQ(inv_cylinder(z, 0.0), z);
  EXPECT_NEAR(std::abs(cylinder(Complex(kE - 1.0, 0.0), 1.0) - 1.0), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(inv_cylinder(Complex(1.0, 0.0), 1.0) - (kE - 1.0)), 0.0, 1e-15);
  EXPECT_THROW(cylinder(Complex(-1.0, 0.0), 1.0), DomainError);
}

TEST(DeltaIntegral, Examples) {
  const TimeScale z = make_scale(UniformGrid{1.0, 0, 10});
  EXPECT_DOUBLE_EQ(delta_integral([](Seconds) { return 1.0; }, z, 2.0, 7.0, 1e-3), 5.0);
  EXPECT_DOUBLE_EQ(delta_integral([](Seconds t) { return t; }, z, 0.0, 4.0, 1e-3), 6.0);
  const TimeScale line({Interval{0.0, 1.0}});
  for (double h : {1e-2, 1e-3}) {
    const double v = delta_integral([](Seconds t) { return t; }, line, 0.0, 1.0, h);
    EXPECT_NEAR(v, 0.5, 2.0 * h);
  }
  const TimeScale mixed({Interval{0.0, 1.0}, Point{1.5}, Point{2.25}});
  EXPECT_NEAR(delta_integral([](Seconds) { return 1.0; }, mixed, 0.0, 2.25, 1e-3), 2.25,
              1e-12);
}

TEST(DeltaIntegral, BoundsAreChecked) {
  const TimeScale z = make_scale(UniformGrid{1.0, 0, 10});
  const ScalarSignal f = [](Seconds t) { return t; };
  EXPECT_THROW(delta_integral(f, z, 4.0, 0.0, 1e-3), Error);
  EXPECT_THROW(delta_integral(f, z, 0.5, 4.0, 1e-3), DomainError);
  EXPECT_DOUBLE_EQ(delta_integral(f, z, 4.0, 4.0, 1e-3), 0.0);
}

TEST(ExpTs, ClosedForms) {
  const TimeScale line({Interval{0.0, 3.0}});
  EXPECT_NEAR(exp_ts(0.7, line, 2.5, 0.5, 1e-3), std::exp(1.4), 1e-12);
  const TimeScale z = make_scale(UniformGrid{1.0, 0, 10});
  EXPECT_DOUBLE_EQ(exp_ts(1.0, z, 5.0, 0.0, 1e-3), 32.0);
  EXPECT_DOUBLE_EQ(exp_ts(1.0, z, 0.0, 5.0, 1e-3), 1.0 / 32.0);
  EXPECT_DOUBLE_EQ(exp_ts(1.0, z, 3.0, 3.0, 1e-3), 1.0);
}

TEST(ExpTs, SignedProductOnDiscreteScale) {
  // 1 + mu p < 0 is regressive; the sign alternates exactly.
  const TimeScale z = make_scale(UniformGrid{1.0, 0, 10});
  EXPECT_DOUBLE_EQ(exp_ts(-3.0, z, 3.0, 0.0, 1e-3), -8.0);
}

TEST(ExpTs, NonRegressiveRateIsDomainError) {
  const TimeScale z = make_scale(UniformGrid{1.0, 0, 10});
  EXPECT_THROW(exp_ts(-1.0, z, 3.0, 0.0, 1e-3), DomainError);
}

TEST(ExpTs, MixedScaleFactorizes) {
  const TimeScale ts({Interval{0.0, 1.0}, Point{1.5}, Interval{2.0, 2.5}});
  const double p = -0.8;
  const double expect = std::exp(p) * (1.0 + 0.5 * p) * (1.0 + 0.5 * p) * std::exp(0.5 * p);
  EXPECT_NEAR(exp_ts(p, ts, 2.5, 0.0, 1e-3), expect, 1e-13);
}

// Closure of the Hilger circle: every in-circle pair maps to an in-circle sum.
TEST(HilgerProperty, ClosureUnderCirclePlus) {
  Rng rng(11);
  for (double mu : {0.01, 0.1, 1.0}) {
    int tested = 0;
    for (int i = 0; i < 10000; ++i) {
      const Complex a((rng.uniform() * 2.0 - 2.0) / mu, (rng.uniform() * 2.0 - 1.0) / mu);
      const Complex b((rng.uniform() * 2.0 - 2.0) / mu, (rng.uniform() * 2.0 - 1.0) / mu);
      if (!in_hilger_circle(a, mu) || !in_hilger_circle(b, mu)) continue;
      ++tested;
      ASSERT_TRUE(in_hilger_circle(circle_plus(a, b, mu), mu)) << a << " " << b;
    }
    EXPECT_GT(tested, 1000);
  }
}

TEST(HilgerProperty, CircleMatchesNegativeHilgerRe) {
  Rng rng(12);
  for (int i = 0; i < 2000; ++i) {
    const double mu = rng.uniform(0.01, 3.0);
    const Complex z(rng.uniform(-3.0, 1.0) / mu, rng.uniform(-2.0, 2.0) / mu);
    EXPECT_EQ(in_hilger_circle(z, mu), hilger_re(z, mu) < 0.0) << z << " mu=" << mu;
  }
}

TEST(HilgerProperty, CylinderRoundTrip) {
  Rng rng(13);
  for (int i = 0; i < 1000; ++i) {
    const double mu = rng.uniform(0.01, 2.0);
    const Complex w = std::polar(rng.uniform(0.05, 3.0), rng.uniform(-3.0, 3.0));
    const Complex z = (w - 1.0) / mu;
    EXPECT_LE(std::abs(inv_cylinder(cylinder(z, mu), mu) - z), 1e-12 * std::max(1.0, std::abs(z)));
  }
}

}  // namespace
}  // namespace tsfb
