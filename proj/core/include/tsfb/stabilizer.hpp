#pragma once

#include <optional>
#include <string>
#include <vector>

#include "tsfb/transition.hpp"

namespace tsfb {

// x^Delta = A(t) x + B(t) u, y = C(t) x. The feedthrough term is fixed to 0.
struct ControlSystem {
  MatrixSignal A;
  MatrixSignal B;
  std::optional<MatrixSignal> C;

  Eigen::Index n() const { return A.rows; }
  Eigen::Index m() const { return B.cols; }
  Eigen::Index p() const { return C ? C->rows : 0; }

  // Shape checks: A square, B n x m, C p x n, with m, p <= n.
  void validate() const;
};

// Controllability window parameters.
struct WindowSpec {
  int k = 1;              // number of scattered jumps
  Seconds delta1 = 0.1;   // width when t is right-dense
  Seconds delta2 = 0.05;  // pad after sigma^k(t) in the mixed case
  Seconds m_max = 1e9;    // cap on C(t) - t
};

struct GramianOptions {
  Seconds h = 1e-3;               // mesh step on dense parts
  double invert_tolerance = 1e-10;  // lambda_min / lambda_max gate
};

// Window end C(t):
//   t + delta1                    if t is right-dense,
//   sigma^k(t)                    if sigma^0(t) .. sigma^{k-1}(t) are all
//                                 right-scattered,
//   sigma^k(t) + delta2           otherwise,
// snapped forward into the scale. Throws OutOfRangeError when the window
// leaves the truncated scale or exceeds t + m_max.
Seconds window_C(const TimeScale& ts, Seconds t, const WindowSpec& spec);

// Controllability Gramian
//   G_C(t0, tf) = int_{t0}^{tf} Phi(t0, sigma(s)) B B^T Phi^T(t0, sigma(s)) Ds.
Matrix gramian(const ControlSystem& sys, const TimeScale& ts, Seconds t0,
               Seconds tf, const GramianOptions& opts);

// Same integrand weighted by (e_alpha(t0, s))^4.
Matrix weighted_gramian(const ControlSystem& sys, const TimeScale& ts,
                        Seconds t0, Seconds tf, double alpha,
                        const GramianOptions& opts);

struct ControllabilityReport {
  bool controllable = false;
  double eps1 = 0.0;  // lambda_min(G_C)
  double eps2 = 0.0;  // lambda_max(G_C)
};

ControllabilityReport is_controllable(const ControlSystem& sys,
                                      const TimeScale& ts, Seconds t0,
                                      Seconds tf, const GramianOptions& opts);

// K(t) = -B^T(t) (I + mu(t) A^T(t))^{-1} G_{C alpha}^{-1}(t, C(t)).
Matrix gain(const ControlSystem& sys, const TimeScale& ts, Seconds t,
            double alpha, const WindowSpec& spec, const GramianOptions& opts);

struct GainEntry {
  Seconds t = 0.0;
  Seconds cell = 0.0;  // width of the mesh cell owned by this node
  NodeKind kind = NodeKind::kScattered;
  Seconds window_end = 0.0;
  Matrix K;
  Matrix weighted_gramian;
  double min_sv = 0.0;  // lambda_min of the weighted Gramian
};

struct SkippedNode {
  Seconds t;
  std::string reason;
};

struct GainSchedule {
  std::vector<GainEntry> entries;  // sorted by t
  double alpha = 0.0;
  WindowSpec spec;
  GramianOptions opts;
  std::vector<SkippedNode> skipped;  // nodes whose window leaves the scale
  std::vector<std::string> warnings;

  bool empty() const { return entries.empty(); }
  // Entry whose node time matches t, or nullptr.
  const GainEntry* find(Seconds t) const;
  // End of the covered range: last node plus its cell width.
  Seconds coverage_end() const;
  // Gain at node t (mu > 0), or the dense-part gain at an arbitrary t
  // (mu == 0), linearly interpolated between neighbouring dense entries.
  // Throws CoverageError outside the schedule.
  Matrix gain_at(Seconds t, Seconds mu) const;
};

// Gains at every mesh node of [t0, tf). Nodes whose window leaves the scale
// are skipped and listed; any other per-node failure is collected into a
// ScheduleError. Node evaluations run in parallel (see parallel.hpp).
GainSchedule gain_schedule(const ControlSystem& sys, const TimeScale& ts,
                           Seconds t0, Seconds tf, double alpha,
                           const WindowSpec& spec, const GramianOptions& opts);

// A(t) + B(t) K(t), input map unchanged (N = I).
ControlSystem closed_loop(const ControlSystem& sys, const GainSchedule& schedule);

// Relative Frobenius residual of
//   (I + mu A) G(t, C) (I + mu A^T) = mu B B^T + G(sigma(t), C) / (1 + mu alpha)^4
// and of the two rearranged forms obtained by left/right multiplying with
// inverses; the maximum of the three is returned. Zero at right-dense t.
double gramian_identity_residual(const ControlSystem& sys, const TimeScale& ts,
                                 Seconds t, double alpha,
                                 const WindowSpec& spec,
                                 const GramianOptions& opts);

struct StabilityCertificate {
  double eta = 0.0;         // min lambda_min(Q)
  double rho_bound = 0.0;   // max lambda_max(Q)
  double nu = 0.0;          // achieved decrement rate
  bool pass = false;
  Seconds worst_node = 0.0;
  double worst_margin = 0.0;  // -lambda_max of the decrement at worst_node

  double eps2 = 0.0;          // max lambda_max(G_C(t, C(t))) on checked nodes
  double mu_max = 0.0;
  double nu_floor = 0.0;      // alpha / (eps2 (1 + mu_max alpha)^2)
  double nu_stated = 0.0;     // eps2 (1 + mu_max alpha)^2 / alpha
  bool rate_admissible = false;  // 1 - mu nu / rho > 0 at every checked node
  bool dense_dependent = false;  // some checked node is right-dense
  std::size_t checked_nodes = 0;
  std::string diagnostic;
};

// Lyapunov check with Q(t) = G_{C alpha}^{-1}(t, C(t)) on the shifted system
// A_z = (A + B K)(1 + mu alpha) + alpha I. Scattered nodes use the difference
// form [(I + mu A_z^T) Q(sigma) (I + mu A_z) - Q] / mu, right-dense nodes the
// limit A_z^T Q + Q A_z + Q' with Q' from finite differences over the mesh.
StabilityCertificate certify(const ControlSystem& sys,
                             const GainSchedule& schedule, const TimeScale& ts);

}  // namespace tsfb
