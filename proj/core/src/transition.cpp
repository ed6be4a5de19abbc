#include "tsfb/transition.hpp"

#include <sstream>

#include "tsfb/errors.hpp"
#include "tsfb/hilger.hpp"
#include "tsfb/linalg.hpp"

namespace tsfb {

MatrixSignal MatrixSignal::constant(const Matrix& m) {
  MatrixSignal s;
  s.eval = [m](Seconds, Seconds) { return m; };
  s.rows = m.rows();
  s.cols = m.cols();
  s.constant_on_dense = true;
  return s;
}

Matrix step_matrix(const MatrixSignal& a, const MeshNode& node) {
  const Eigen::Index n = a.rows;
  const Matrix eye = Matrix::Identity(n, n);
  if (node.kind == NodeKind::kScattered && node.mu >= kDenseGraininess) {
    return eye + node.mu * a(node.t, node.mu);
  }
  const double d = node.mu;
  if (a.constant_on_dense) {
    return linalg::expm(a(node.t, 0.0) * d);
  }
  const Matrix a0 = a(node.t, 0.0);
  const Matrix am = a(node.t + 0.5 * d, 0.0);
  const Matrix a1 = a(node.t + d, 0.0);
  const Matrix k1 = a0;
  const Matrix k2 = am * (eye + 0.5 * d * k1);
  const Matrix k3 = am * (eye + 0.5 * d * k2);
  const Matrix k4 = a1 * (eye + d * k3);
  return eye + (d / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

TransitionMatrix phi(const MatrixSignal& a, const TimeScale& ts, Seconds t,
                     Seconds t0, Seconds h) {
  const Eigen::Index n = a.rows;
  TransitionMatrix out{Matrix::Identity(n, n), t, t0};
  if (std::abs(t - t0) <= kTimeTolerance) return out;

  if (t > t0) {
    const Mesh mesh = build_mesh(ts, h, t0, t);
    for (const MeshNode& node : mesh.nodes) {
      out.value = step_matrix(a, node) * out.value;
    }
    return out;
  }

  // Phi(t, t0) = F_1^{-1} F_2^{-1} ... F_N^{-1} over the cells of [t, t0).
  const Mesh mesh = build_mesh(ts, h, t, t0);
  for (const MeshNode& node : mesh.nodes) {
    const Matrix f = step_matrix(a, node);
    if (linalg::is_numerically_singular(f)) {
      std::ostringstream os;
      os.precision(17);
      os << "I + mu A is singular at t = " << node.t
         << " during backward propagation";
      throw SingularityError(os.str(), node.t);
    }
    out.value = out.value * f.inverse();
  }
  return out;
}

std::vector<RegressivityViolation> check_regressive(const MatrixSignal& a,
                                                    const TimeScale& ts,
                                                    Seconds t0, Seconds tf) {
  std::vector<RegressivityViolation> out;
  const Seconds span = std::max(tf - t0, 1.0);
  const Mesh mesh = build_mesh(ts, span, t0, tf);
  const Eigen::Index n = a.rows;
  for (const MeshNode& node : mesh.nodes) {
    if (node.kind != NodeKind::kScattered || node.mu < kDenseGraininess) continue;
    const Matrix f = Matrix::Identity(n, n) + node.mu * a(node.t, node.mu);
    if (linalg::is_numerically_singular(f)) {
      out.push_back({node.t, f.determinant()});
    }
  }
  return out;
}

}  // namespace tsfb
