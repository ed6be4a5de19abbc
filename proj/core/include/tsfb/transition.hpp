#pragma once

#include <functional>
#include <vector>

#include "tsfb/timescale.hpp"

namespace tsfb {

// Time-varying matrix t -> A(t). The evaluator receives the node time and the
// true graininess there (0 on dense parts), so sampled-data systems can depend
// on mu(t) directly.
struct MatrixSignal {
  std::function<Matrix(Seconds t, Seconds mu)> eval;
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
  // A(t) is constant across every dense interval. Dense cells then use an
  // exact exponential step instead of RK4.
  bool constant_on_dense = false;

  Matrix operator()(Seconds t, Seconds mu) const { return eval(t, mu); }

  static MatrixSignal constant(const Matrix& m);
};

struct TransitionMatrix {
  Matrix value;
  Seconds t = 0.0;
  Seconds t0 = 0.0;
};

// Propagator of X^Delta = A X across one mesh cell: I + mu A(t) on scattered
// nodes, exp(A mu) or one classical RK4 step on dense cells.
Matrix step_matrix(const MatrixSignal& a, const MeshNode& node);

// Phi_A(t, t0) for X^Delta = A(t) X, X(t0) = I. Backward propagation
// (t < t0) multiplies inverted steps and throws SingularityError at the first
// non-regressive node.
TransitionMatrix phi(const MatrixSignal& a, const TimeScale& ts, Seconds t,
                     Seconds t0, Seconds h);

struct RegressivityViolation {
  Seconds t;
  double determinant;
};

// Scattered nodes in [t0, tf) where det(I + mu A) fails the singularity
// margin. An empty result means A is regressive on the range.
std::vector<RegressivityViolation> check_regressive(const MatrixSignal& a,
                                                    const TimeScale& ts,
                                                    Seconds t0, Seconds tf);

}  // namespace tsfb
