#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "tsfb/errors.hpp"
#include "tsfb/hilger.hpp"
#include "tsfb/linalg.hpp"
#include "tsfb/plant.hpp"
#include "tsfb/random.hpp"
#include "tsfb/transition.hpp"

namespace tsfb {
namespace {

Matrix mat2(double a, double b, double c, double d) {
  Matrix m(2, 2);
  m << a, b, c, d;
  return m;
}

TEST(Linalg, ExpmMatchesTaylorOracle) {
  Rng rng(3);
  for (int i = 0; i < 50; ++i) {
    Matrix a(3, 3);
    for (Eigen::Index r = 0; r < 3; ++r) {
      for (Eigen::Index c = 0; c < 3; ++c) a(r, c) = rng.uniform(-4.0, 4.0);
    }
    const Matrix ref = testing::taylor_expm(a);
    EXPECT_LE((linalg::expm(a) - ref).norm(), 1e-12 * ref.norm());
  }
}

TEST(Linalg, Phi1SeriesAndLimit) {
  const Matrix a = mat2(0.0, 1.0, 0.0, -0.15);
  const Matrix zero = Matrix::Zero(2, 2);
  EXPECT_LE((linalg::phi1(zero) - Matrix::Identity(2, 2)).norm(), 0.0);
  const Matrix x = 0.3 * a;
  // phi1(X) X = e^X - I
  EXPECT_LE((linalg::phi1(x) * x - (testing::taylor_expm(x) - Matrix::Identity(2, 2))).norm(),
            1e-15);
}

TEST(Linalg, SingularityGate) {
  EXPECT_TRUE(linalg::is_numerically_singular(Matrix::Zero(2, 2)));
  EXPECT_FALSE(linalg::is_numerically_singular(Matrix::Identity(2, 2)));
  Matrix out;
  linalg::SymmetricSpectrum spec;
  EXPECT_FALSE(linalg::gated_spd_inverse(mat2(1.0, 0.0, 0.0, 1e-14), 1e-10, out, spec));
  EXPECT_TRUE(linalg::gated_spd_inverse(mat2(2.0, 0.0, 0.0, 4.0), 1e-10, out, spec));
  EXPECT_DOUBLE_EQ(out(1, 1), 0.25);
  EXPECT_DOUBLE_EQ(spec.min, 2.0);
  EXPECT_DOUBLE_EQ(spec.max, 4.0);
}

TEST(Phi, ZeroGeneratorIsIdentity) {
  const TimeScale ts({Interval{0.0, 1.0}, Point{1.5}, Point{2.0}});
  const MatrixSignal zero = MatrixSignal::constant(Matrix::Zero(2, 2));
  for (auto [t, t0] : {std::pair{2.0, 0.0}, std::pair{0.0, 2.0}, std::pair{0.5, 0.25}}) {
    EXPECT_LE((phi(zero, ts, t, t0, 1e-3).value - Matrix::Identity(2, 2)).norm(), 0.0);
  }
}

TEST(Phi, IntegerGridIsRepeatedProduct) {
  const TimeScale z = make_scale(UniformGrid{1.0, 0, 10});
  const Matrix scalar = Matrix::Constant(1, 1, 1.0);
  EXPECT_DOUBLE_EQ(phi(MatrixSignal::constant(scalar), z, 5.0, 0.0, 1e-3).value(0, 0), 32.0);
  EXPECT_DOUBLE_EQ(exp_ts(1.0, z, 5.0, 0.0, 1e-3), 32.0);
}

TEST(Phi, DenseConstantMatchesExponential) {
  const TimeScale line({Interval{0.0, 1.0}});
  const Matrix scalar = Matrix::Constant(1, 1, -1.3);
  EXPECT_NEAR(phi(MatrixSignal::constant(scalar), line, 1.0, 0.0, 1e-3).value(0, 0),
              std::exp(-1.3), 1e-8);
}

TEST(Phi, DenseTimeVaryingUsesRk4) {
  // x' = 2 t x on [0, 1] has transition exp(t^2 - t0^2).
  MatrixSignal a;
  a.rows = a.cols = 1;
  a.eval = [](Seconds t, Seconds) { return Matrix::Constant(1, 1, 2.0 * t); };
  const TimeScale line({Interval{0.0, 1.0}});
  EXPECT_NEAR(phi(a, line, 1.0, 0.2, 1e-3).value(0, 0), std::exp(1.0 - 0.04), 1e-10);
}

TEST(Phi, BackwardUsesInverse) {
  const TimeScale z = make_scale(UniformGrid{1.0, 0, 10});
  const Matrix a = mat2(-0.5, 0.2, 0.1, -0.3);
  const Matrix fwd = phi(MatrixSignal::constant(a), z, 6.0, 2.0, 1e-3).value;
  const Matrix back = phi(MatrixSignal::constant(a), z, 2.0, 6.0, 1e-3).value;
  EXPECT_LE((fwd * back - Matrix::Identity(2, 2)).norm(), 1e-12);
}

TEST(Phi, SingularStepThrowsOnBackwardPass) {
  const TimeScale z = make_scale(UniformGrid{1.0, 0, 10});
  const MatrixSignal minus_i = MatrixSignal::constant(-Matrix::Identity(2, 2));
  EXPECT_LE(phi(minus_i, z, 3.0, 0.0, 1e-3).value.norm(), 0.0);
  EXPECT_THROW(phi(minus_i, z, 0.0, 3.0, 1e-3), SingularityError);
}

TEST(CheckRegressive, Examples) {
  const TimeScale z = make_scale(UniformGrid{1.0, 0, 10});
  EXPECT_TRUE(check_regressive(MatrixSignal::constant(Matrix::Zero(2, 2)), z, 0.0, 10.0).empty());
  const auto bad =
      check_regressive(MatrixSignal::constant(-Matrix::Identity(2, 2)), z, 0.0, 10.0);
  ASSERT_FALSE(bad.empty());
  EXPECT_DOUBLE_EQ(bad.front().t, 0.0);

  // Motor at mu = 0.1: det(I + mu A) = det(e^{A_hat mu}) = e^{tr(A_hat) mu} > 0.
  const ContinuousLTI motor = motor_model();
  const Discretization d = discretize(motor, 0.1);
  const double det = (Matrix::Identity(2, 2) + 0.1 * d.A).determinant();
  EXPECT_NEAR(det, std::exp(motor.A_hat.trace() * 0.1), 1e-14);
  const TimeScale grid = make_scale(UniformGrid{0.1, 0, 20});
  EXPECT_TRUE(check_regressive(discretize_on_scale(motor, grid).A, grid, 0.0, 2.0).empty());
}

// Oracle: on the integers the transition equals (I + A)^t.
TEST(TransitionProperty, IntegerGridOracle) {
  Rng rng(21);
  const TimeScale z = make_scale(UniformGrid{1.0, 0, 30});
  for (int i = 0; i < 100; ++i) {
    Matrix a(2, 2);
    for (Eigen::Index r = 0; r < 2; ++r) {
      for (Eigen::Index c = 0; c < 2; ++c) a(r, c) = rng.uniform(-0.6, 0.3);
    }
    const int t = static_cast<int>(rng.uniform_int(1, 30));
    const Matrix ref = testing::repeated_product(a, 1.0, t);
    const Matrix got = phi(MatrixSignal::constant(a), z, t, 0.0, 1e-3).value;
    EXPECT_LE((got - ref).norm(), 1e-12 * std::max(1.0, ref.norm()));
  }
}

TEST(TransitionProperty, SemigroupOnMixedScales) {
  Rng rng(22);
  for (int i = 0; i < 20; ++i) {
    std::vector<Element> els;
    Seconds t = 0.0;
    for (int e = 0; e < 12; ++e) {
      if (rng.uniform() < 0.4) {
        const Seconds len = rng.uniform(0.1, 0.4);
        els.push_back(Interval{t, t + len});
        t += len;
      } else {
        els.push_back(Point{t});
      }
      t += rng.uniform(0.02, 0.2);
    }
    const TimeScale ts(std::move(els));
    MatrixSignal a;
    a.rows = a.cols = 2;
    a.eval = [](Seconds s, Seconds) { return mat2(-1.0, std::sin(s), 0.3, -0.5 - 0.2 * s); };
    const auto pts = ts.breakpoints();
    const Seconds t0 = pts.front(), t1 = pts[pts.size() / 2], t2 = pts.back();
    const Matrix full = phi(a, ts, t2, t0, 1e-3).value;
    const Matrix split = phi(a, ts, t2, t1, 1e-3).value * phi(a, ts, t1, t0, 1e-3).value;
    EXPECT_LE((split - full).norm(), 1e-8 * full.norm());
  }
}

TEST(TransitionProperty, FourthOrderConvergence) {
  MatrixSignal a;
  a.rows = a.cols = 2;
  a.eval = [](Seconds t, Seconds) { return mat2(std::cos(2.0 * t), 1.0, -1.0, -t); };
  const TimeScale line({Interval{0.0, 1.0}});
  const Matrix p1 = phi(a, line, 1.0, 0.0, 0.1).value;
  const Matrix p2 = phi(a, line, 1.0, 0.0, 0.05).value;
  const Matrix p3 = phi(a, line, 1.0, 0.0, 0.025).value;
  EXPECT_GE((p1 - p2).norm() / (p2 - p3).norm(), 8.0);
}

}  // namespace
}  // namespace tsfb
