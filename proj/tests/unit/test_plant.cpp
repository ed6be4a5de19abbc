#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>

#include "oracles.hpp"
#include "tsfb/errors.hpp"
#include "tsfb/plant.hpp"
#include "tsfb/random.hpp"

namespace tsfb {
namespace {

SimResult scalar_series(const std::vector<double>& values, Seconds dt = 1.0) {
  SimResult r;
  for (std::size_t i = 0; i < values.size(); ++i) {
    r.samples.push_back({static_cast<double>(i) * dt, Vector::Constant(1, values[i]),
                         Vector::Zero(1)});
  }
  r.x0 = r.samples.front().x;
  return r;
}

ControlSystem scalar_system(double a, double b) {
  ControlSystem sys;
  sys.A = MatrixSignal::constant(Matrix::Constant(1, 1, a));
  sys.B = MatrixSignal::constant(Matrix::Constant(1, 1, b));
  return sys;
}

TEST(Discretize, ZeroDriftKeepsInputMatrix) {
  ContinuousLTI p{Matrix::Zero(2, 2), Matrix::Ones(2, 1)};
  for (double mu : {1e-6, 0.1, 3.0}) {
    const Discretization d = discretize(p, mu);
    EXPECT_LE(d.A.norm(), 0.0);
    EXPECT_LE((d.B - p.B_hat).norm(), 1e-15);
  }
}

TEST(Discretize, ContinuousLimit) {
  const ContinuousLTI motor = motor_model();
  const Discretization d = discretize(motor, 1e-6);
  EXPECT_LE((d.A - motor.A_hat).norm(), 1e-4 * motor.A_hat.norm());
  EXPECT_LE((d.B - motor.B_hat).norm(), 1e-4 * motor.B_hat.norm());
  const Discretization zero = discretize(motor, 0.0);
  EXPECT_EQ(zero.A, motor.A_hat);
  EXPECT_EQ(zero.B, motor.B_hat);
}

TEST(Discretize, ScalarOracle) {
  const ContinuousLTI p{Matrix::Constant(1, 1, -0.15), Matrix::Constant(1, 1, 1.0)};
  const Discretization d = discretize(p, 0.1);
  EXPECT_NEAR(d.A(0, 0), std::expm1(-0.015) / 0.1, 1e-15);
  EXPECT_NEAR(d.B(0, 0), std::expm1(-0.015) / -0.015, 1e-15);
}

TEST(Discretize, NegativeGraininessRejected) {
  EXPECT_THROW(discretize(motor_model(), -0.1), ValidationError);
}

// The scattered update reproduces the zero-order-hold solution exactly.
TEST(Discretize, MatchesZeroOrderHold) {
  Rng rng(8);
  const ContinuousLTI motor = motor_model();
  for (int i = 0; i < 50; ++i) {
    const double mu = rng.uniform(1e-5, 0.5);
    const Discretization d = discretize(motor, mu);
    Matrix aug = Matrix::Zero(3, 3);
    aug.topLeftCorner(2, 2) = motor.A_hat * mu;
    aug.topRightCorner(2, 1) = motor.B_hat * mu;
    const Matrix e = testing::taylor_expm(aug);
    Vector x(2);
    x << rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0);
    const double u = rng.uniform(-1.0, 1.0);
    const Vector zoh = e.topLeftCorner(2, 2) * x + e.topRightCorner(2, 1) * u;
    const Vector step = x + mu * (d.A * x + d.B * u);
    EXPECT_LE((step - zoh).norm(), 1e-10 * zoh.norm());
  }
}

TEST(DiscretizeOnScale, NodeWiseMatrices) {
  const ContinuousLTI motor = motor_model();
  const TimeScale grid = make_scale(UniformGrid{0.1, 0, 10});
  const ControlSystem u = discretize_on_scale(motor, grid);
  EXPECT_EQ(u.A(0.0, 0.1), u.A(0.5, 0.1));

  const TimeScale rnd = make_scale(RandomGrid{0.08, 0.15, 30, 4});
  const ControlSystem r = discretize_on_scale(motor, rnd);
  for (Seconds t : rnd.breakpoints()) {
    const Seconds mu = rnd.mu(t);
    if (mu == 0.0) continue;
    EXPECT_EQ(r.A(t, mu), discretize(motor, mu).A);
    EXPECT_EQ(r.B(t, mu), discretize(motor, mu).B);
  }

  const TimeScale pulse = make_scale(PulseTrain{1.0, 2.0, 2});
  const ControlSystem p = discretize_on_scale(motor, pulse);
  EXPECT_EQ(p.A(0.5, 0.0), motor.A_hat);
  EXPECT_EQ(p.A(1.0, 2.0), discretize(motor, 2.0).A);
  EXPECT_TRUE(p.A.constant_on_dense);
}

TEST(Simulate, ZeroInZeroOut) {
  const TimeScale ts = make_scale(RandomGrid{0.08, 0.15, 30, 4});
  const ControlSystem sys = discretize_on_scale(motor_model(), ts);
  const GainSchedule s = gain_schedule(sys, ts, ts.min(), ts.max(), 0.1,
                                       WindowSpec{3, 0.1, 0.05, 1e9}, GramianOptions{});
  const SimResult r = simulate(sys, ts, ts.min(), s.coverage_end(), Vector::Zero(2), s,
                               step_reference(0.0, 1), 1e-3);
  for (const Sample& smp : r.samples) {
    EXPECT_EQ(smp.x.norm(), 0.0);
    EXPECT_EQ(smp.u.norm(), 0.0);
  }
}

TEST(Simulate, DeadbeatOneStep) {
  const TimeScale z = make_scale(UniformGrid{1.0, 0, 10});
  const ControlSystem sys = scalar_system(0.0, 1.0);
  const GainSchedule s = gain_schedule(sys, z, 0.0, 10.0, 0.3,
                                       WindowSpec{1, 0.1, 0.05, 1e9}, GramianOptions{});
  const SimResult r = simulate(sys, z, 0.0, 9.0, Vector::Ones(1), s,
                               [](Seconds) { return Vector::Zero(1); }, 1e-3);
  ASSERT_GE(r.samples.size(), 2u);
  EXPECT_EQ(r.samples[0].x(0), 1.0);
  EXPECT_EQ(r.samples[1].t, 1.0);
  EXPECT_EQ(r.samples[1].x(0), 0.0);
  const DecayFit fit = decay_fit(r, 0.3, z);
  EXPECT_DOUBLE_EQ(fit.gamma, 1.0);
}

TEST(Simulate, MotorStepSettlesIntoBand) {
  const TimeScale ts = make_scale(RandomGrid{0.08, 0.15, 60, 9});
  const ControlSystem sys = discretize_on_scale(motor_model(), ts);
  const GainSchedule s = gain_schedule(sys, ts, ts.min(), ts.max(), 0.1,
                                       WindowSpec{5, 0.1, 0.05, 1e9}, GramianOptions{});
  const SimResult r = simulate(sys, ts, ts.min(), s.coverage_end(), Vector::Zero(2), s,
                               step_reference(2.0, 1), 1e-3);
  const auto settle = settling_time(r, 0, 0.1);
  ASSERT_TRUE(settle.has_value());
  // Gains vary with the graininess, so the tail wanders inside the band rather than freezing.
  const std::size_t n = r.samples.size();
  const std::size_t tail = std::max<std::size_t>(3, (n + 19) / 20);
  double mean = 0.0;
  for (std::size_t i = n - tail; i < n; ++i) mean += r.samples[i].x(0);
  mean /= static_cast<double>(tail);
  EXPECT_GT(std::abs(mean), 0.0);
  for (const Sample& smp : r.samples) {
    if (smp.t >= *settle) {
      EXPECT_LE(std::abs(smp.x(0) - mean), 0.1 * std::abs(mean)) << smp.t;
    }
  }
  EXPECT_LT(*settle, r.samples.back().t);
}

TEST(Simulate, MixedScaleRunsDenseCells) {
  std::vector<Element> els{Interval{0.0, 0.5}, Point{0.62}, Point{0.7}, Point{0.81},
                           Interval{0.9, 1.4}, Point{1.5}, Point{1.6}, Point{1.72},
                           Point{1.8}, Point{1.9}, Point{2.0}};
  const TimeScale ts(std::move(els));
  const ControlSystem sys = discretize_on_scale(motor_model(), ts);
  const GainSchedule s = gain_schedule(sys, ts, ts.min(), ts.max(), 0.2,
                                       WindowSpec{3, 0.2, 0.05, 1e9}, GramianOptions{});
  Vector x0(2);
  x0 << 1.0, 0.0;
  const SimResult r = simulate(sys, ts, ts.min(), s.coverage_end(), x0, s,
                               [](Seconds) { return Vector::Zero(1); }, 1e-3);
  EXPECT_GT(r.samples.size(), 100u);
  EXPECT_LT(r.samples.back().x.norm(), x0.norm());
}

TEST(Simulate, PastCoverageThrows) {
  const TimeScale z = make_scale(UniformGrid{1.0, 0, 10});
  const ControlSystem sys = scalar_system(0.0, 1.0);
  const GainSchedule s = gain_schedule(sys, z, 0.0, 10.0, 0.3,
                                       WindowSpec{3, 0.1, 0.05, 1e9}, GramianOptions{});
  EXPECT_THROW(simulate(sys, z, 0.0, 10.0, Vector::Ones(1), s,
                        [](Seconds) { return Vector::Zero(1); }, 1e-3),
               CoverageError);
}

TEST(SettlingTime, Examples) {
  EXPECT_DOUBLE_EQ(*settling_time(scalar_series(std::vector<double>(20, 3.0)), 0, 0.1), 0.0);

  std::vector<double> staircase(20, 1.0);
  for (int i = 0; i < 7; ++i) staircase[i] = 0.1 * i;
  staircase[6] = 0.5;
  EXPECT_DOUBLE_EQ(*settling_time(scalar_series(staircase), 0, 0.1), 7.0);

  std::vector<double> diverging(20);
  for (int i = 0; i < 20; ++i) diverging[i] = std::pow(1.5, i);
  EXPECT_FALSE(settling_time(scalar_series(diverging), 0, 0.1).has_value());
}

TEST(DecayFit, SyntheticEnvelopeHasUnitGamma) {
  const TimeScale z = make_scale(UniformGrid{0.1, 0, 20});
  const double alpha = 0.5;
  std::vector<double> v(21);
  for (int i = 0; i <= 20; ++i) v[i] = 2.0 * std::pow(1.0 - 0.1 * alpha, i);
  const DecayFit fit = decay_fit(scalar_series(v, 0.1), alpha, z);
  EXPECT_NEAR(fit.gamma, 1.0, 1e-14);
}

TEST(DecayFit, RateInadmissible) {
  const TimeScale ts = scale_from_gaps(0.0, {0.1, 0.15, 0.12});
  std::vector<double> v{1.0, 0.5, 0.2, 0.1};
  SimResult r;
  Seconds t = 0.0;
  const std::vector<Seconds> gaps{0.1, 0.15, 0.12, 0.0};
  for (std::size_t i = 0; i < v.size(); ++i) {
    r.samples.push_back({t, Vector::Constant(1, v[i]), Vector::Zero(1)});
    t += gaps[i];
  }
  r.x0 = Vector::Ones(1);
  EXPECT_THROW(decay_fit(r, 10.0, ts), RateInadmissibleError);
  EXPECT_THROW(require_rate_admissible(ts, 10.0, 0.0, ts.max()), RateInadmissibleError);
  EXPECT_NO_THROW(require_rate_admissible(ts, 5.0, 0.0, ts.max()));
}

TEST(Sweep, SingleCellAndOutOfRange) {
  const TimeScale ts = make_scale(RandomGrid{0.08, 0.15, 20, 3});
  SweepOptions o;
  o.ks = {3};
  o.alphas = {0.1};
  auto rows = sweep(motor_model(), ts, o);
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_TRUE(rows[0].status == "ok" || rows[0].status == "unsettled") << rows[0].status;
  EXPECT_TRUE(std::isfinite(rows[0].max_gain_norm));

  o.ks = {20};
  rows = sweep(motor_model(), ts, o);
  EXPECT_EQ(rows[0].status, "out_of_range");

  o.ks = {3};
  o.alphas = {10.0};
  rows = sweep(motor_model(), ts, o);
  EXPECT_EQ(rows[0].status, "rate_inadmissible");
}

TEST(Sweep, DeterministicAcrossThreadCounts) {
  const TimeScale ts = deadline_scale(DeadlineScaleSpec{});
  SweepOptions o;
  o.ks = {2, 5, 9};
  o.alphas = {0.05, 0.35};
  ::setenv("TSFB_THREADS", "1", 1);
  const auto serial = sweep(motor_model(), ts, o);
  ::setenv("TSFB_THREADS", "4", 1);
  const auto parallel = sweep(motor_model(), ts, o);
  ::unsetenv("TSFB_THREADS");
  ASSERT_EQ(serial.size(), parallel.size());
  for (std::size_t i = 0; i < serial.size(); ++i) {
    EXPECT_EQ(serial[i].k, parallel[i].k);
    EXPECT_EQ(serial[i].alpha, parallel[i].alpha);
    EXPECT_EQ(serial[i].status, parallel[i].status);
    EXPECT_EQ(serial[i].settling_time, parallel[i].settling_time);
    EXPECT_EQ(serial[i].max_gain_norm, parallel[i].max_gain_norm);
  }
}

TEST(DeadlineScale, GapStructure) {
  DeadlineScaleSpec spec;
  spec.seed = 17;
  const TimeScale ts = deadline_scale(spec);
  const auto pts = ts.breakpoints();
  ASSERT_EQ(pts.size(), 100u);
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    const double gap = pts[i + 1] - pts[i];
    if (i < 4) {
      EXPECT_GE(gap, 0.08 - 1e-12);
      EXPECT_LE(gap, 0.09 + 1e-12);
    } else {
      EXPECT_GE(gap, 0.01 - 1e-12);
      EXPECT_LE(gap, 0.02 + 1e-12);
    }
  }
}

}  // namespace
}  // namespace tsfb
