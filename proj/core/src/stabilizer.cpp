#include "tsfb/stabilizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <sstream>

#include "tsfb/errors.hpp"
#include "tsfb/hilger.hpp"
#include "tsfb/linalg.hpp"
#include "tsfb/parallel.hpp"

namespace tsfb {
namespace {

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

bool is_jump(const MeshNode& node) {
  return node.kind == NodeKind::kScattered && node.mu >= kDenseGraininess;
}

// Shared accumulation for the plain (alpha = 0) and weighted Gramians.
// P tracks Phi(t0, s) and e tracks e_alpha(t0, s) while sweeping the mesh.
Matrix accumulate_gramian(const ControlSystem& sys, const TimeScale& ts,
                          Seconds t0, Seconds tf, double alpha,
                          const GramianOptions& opts) {
  const Eigen::Index n = sys.n();
  if (tf < t0 - kTimeTolerance) {
    throw ValidationError("gramian requires t0 <= tf");
  }
  Matrix g = Matrix::Zero(n, n);
  if (tf - t0 <= kTimeTolerance) return g;

  const Mesh mesh = build_mesh(ts, opts.h, t0, tf);
  const Matrix eye = Matrix::Identity(n, n);
  Matrix p = eye;
  double e = 1.0;
  for (const MeshNode& node : mesh.nodes) {
    if (is_jump(node)) {
      const Matrix f = eye + node.mu * sys.A(node.t, node.mu);
      if (linalg::is_numerically_singular(f)) {
        throw SingularityError("I + mu A is singular at t = " + fmt(node.t),
                               node.t);
      }
      const double grow = 1.0 + node.mu * alpha;
      if (!(grow > 0.0)) {
        throw DomainError("alpha is not regressive at t = " + fmt(node.t));
      }
      const Matrix pn = p * f.inverse();
      const Matrix pb = pn * sys.B(node.t, node.mu);
      const double w = e * e * e * e;
      g.noalias() += (node.mu * w) * pb * pb.transpose();
      p = pn;
      e /= grow;
    } else {
      const double d = node.mu;
      const Matrix f = step_matrix(sys.A, node);
      const Matrix pn = p * f.inverse();
      const double en = e * std::exp(-alpha * d);
      const Matrix pb0 = p * sys.B(node.t, 0.0);
      const Matrix pb1 = pn * sys.B(node.t + d, 0.0);
      const double w0 = e * e * e * e;
      const double w1 = en * en * en * en;
      g.noalias() += (0.5 * d * w0) * pb0 * pb0.transpose();
      g.noalias() += (0.5 * d * w1) * pb1 * pb1.transpose();
      p = pn;
      e = en;
    }
  }
  return linalg::symmetrize(g);
}

void validate_window(const WindowSpec& spec) {
  if (spec.k < 1) throw ValidationError("window: k must be >= 1");
  if (!(spec.delta1 > 0.0) || !(spec.delta2 > 0.0)) {
    throw ValidationError("window: delta1 and delta2 must be > 0");
  }
  if (!(spec.m_max > 0.0)) throw ValidationError("window: m_max must be > 0");
}

GainEntry compute_entry(const ControlSystem& sys, const TimeScale& ts,
                        const MeshNode& node, double alpha,
                        const WindowSpec& spec, const GramianOptions& opts) {
  GainEntry entry;
  entry.t = node.t;
  entry.cell = node.mu;
  entry.kind = node.kind;
  entry.window_end = window_C(ts, node.t, spec);
  entry.weighted_gramian =
      weighted_gramian(sys, ts, node.t, entry.window_end, alpha, opts);

  Matrix g_inv;
  linalg::SymmetricSpectrum spec_g;
  if (!linalg::gated_spd_inverse(entry.weighted_gramian, opts.invert_tolerance,
                                 g_inv, spec_g)) {
    throw ControllabilityError(
        "weighted Gramian on [" + fmt(node.t) + ", " + fmt(entry.window_end) +
            ") is not invertible (eps1 = " + fmt(spec_g.min) +
            ", eps2 = " + fmt(spec_g.max) + ")",
        node.t, spec_g.min, spec_g.max);
  }
  entry.min_sv = spec_g.min;

  const Seconds mu = is_jump(node) ? node.mu : 0.0;
  const Eigen::Index n = sys.n();
  const Matrix a = sys.A(node.t, mu);
  const Matrix b = sys.B(node.t, mu);
  // B^T (I + mu A^T)^{-1} = ((I + mu A)^{-1} B)^T
  const Matrix f = Matrix::Identity(n, n) + mu * a;
  if (mu > 0.0 && linalg::is_numerically_singular(f)) {
    throw SingularityError("I + mu A is singular at t = " + fmt(node.t), node.t);
  }
  const Matrix fb = f.partialPivLu().solve(b);
  entry.K = -fb.transpose() * g_inv;
  return entry;
}

MeshNode node_at(const TimeScale& ts, Seconds t) {
  const Seconds mu = ts.mu(t);
  const bool dense = ts.is_right_dense(t);
  return {t, dense ? 0.0 : mu, dense ? NodeKind::kDense : NodeKind::kScattered};
}

}  // namespace

void ControlSystem::validate() const {
  if (!A.eval || !B.eval) throw ValidationError("system matrices must be set");
  if (A.rows != A.cols || A.rows < 1) {
    throw ValidationError("A must be square and nonempty");
  }
  if (B.rows != A.rows || B.cols < 1) {
    throw ValidationError("B must have n rows and at least one column");
  }
  if (B.cols > A.rows) throw ValidationError("input count m must be <= n");
  if (C) {
    if (C->cols != A.rows) throw ValidationError("C must have n columns");
    if (C->rows > A.rows) throw ValidationError("output count p must be <= n");
  }
}

Seconds window_C(const TimeScale& ts, Seconds t, const WindowSpec& spec) {
  validate_window(spec);
  Seconds nominal = 0.0;
  if (ts.is_right_dense(t)) {
    nominal = t + spec.delta1;
  } else {
    Seconds x = t;
    bool all_scattered = true;
    for (int i = 0; i < spec.k; ++i) {
      if (ts.is_right_dense(x)) {
        all_scattered = false;
        break;
      }
      const Seconds next = ts.sigma(x);
      if (next == x) {
        throw OutOfRangeError("window from t = " + fmt(t) +
                              " runs past the end of the time scale");
      }
      x = next;
    }
    nominal = all_scattered ? x : x + spec.delta2;
  }
  if (nominal > ts.max() + kTimeTolerance) {
    throw OutOfRangeError("window end " + fmt(nominal) + " from t = " + fmt(t) +
                          " lies past the end of the time scale");
  }
  const Seconds end = ts.snap_forward(nominal);
  if (end - t > spec.m_max + kTimeTolerance) {
    throw OutOfRangeError("window from t = " + fmt(t) + " exceeds m_max = " +
                          fmt(spec.m_max));
  }
  if (!(end > t)) {
    throw DomainError("window end is not after t = " + fmt(t));
  }
  return end;
}

Matrix gramian(const ControlSystem& sys, const TimeScale& ts, Seconds t0,
               Seconds tf, const GramianOptions& opts) {
  return accumulate_gramian(sys, ts, t0, tf, 0.0, opts);
}

Matrix weighted_gramian(const ControlSystem& sys, const TimeScale& ts,
                        Seconds t0, Seconds tf, double alpha,
                        const GramianOptions& opts) {
  if (alpha < 0.0) throw ValidationError("alpha must be >= 0");
  return accumulate_gramian(sys, ts, t0, tf, alpha, opts);
}

ControllabilityReport is_controllable(const ControlSystem& sys,
                                      const TimeScale& ts, Seconds t0,
                                      Seconds tf, const GramianOptions& opts) {
  const Matrix g = gramian(sys, ts, t0, tf, opts);
  const auto spectrum = linalg::symmetric_spectrum(g);
  ControllabilityReport report;
  report.eps1 = std::max(spectrum.min, 0.0);
  report.eps2 = spectrum.max;
  report.controllable =
      spectrum.max > 0.0 && spectrum.min > opts.invert_tolerance * spectrum.max;
  return report;
}

Matrix gain(const ControlSystem& sys, const TimeScale& ts, Seconds t,
            double alpha, const WindowSpec& spec, const GramianOptions& opts) {
  sys.validate();
  return compute_entry(sys, ts, node_at(ts, t), alpha, spec, opts).K;
}

const GainEntry* GainSchedule::find(Seconds t) const {
  auto it = std::lower_bound(
      entries.begin(), entries.end(), t - kTimeTolerance,
      [](const GainEntry& e, Seconds v) { return e.t < v; });
  if (it != entries.end() && std::abs(it->t - t) <= kTimeTolerance) {
    return &*it;
  }
  return nullptr;
}

Seconds GainSchedule::coverage_end() const {
  if (entries.empty()) return 0.0;
  return entries.back().t + entries.back().cell;
}

Matrix GainSchedule::gain_at(Seconds t, Seconds mu) const {
  if (mu > 0.0) {
    if (const GainEntry* e = find(t)) return e->K;
    throw CoverageError("no gain scheduled at t = " + fmt(t), t);
  }
  auto it = std::upper_bound(
      entries.begin(), entries.end(), t + kTimeTolerance,
      [](Seconds v, const GainEntry& e) { return v < e.t; });
  if (it == entries.begin()) {
    throw CoverageError("no gain scheduled at t = " + fmt(t), t);
  }
  std::size_t i = static_cast<std::size_t>(it - entries.begin()) - 1;
  // A dense query landing on a right-scattered endpoint belongs to the dense
  // cell that ends there.
  if (entries[i].kind == NodeKind::kScattered && i > 0 &&
      entries[i - 1].kind == NodeKind::kDense &&
      std::abs(entries[i - 1].t + entries[i - 1].cell - t) <= kTimeTolerance) {
    --i;
  }
  const GainEntry& e = entries[i];
  if (std::abs(t - e.t) <= kTimeTolerance) return e.K;
  if (e.kind != NodeKind::kDense || t > e.t + e.cell + kTimeTolerance) {
    throw CoverageError("no gain scheduled at t = " + fmt(t), t);
  }
  if (i + 1 < entries.size()) {
    const GainEntry& nx = entries[i + 1];
    if (nx.kind == NodeKind::kDense &&
        std::abs(e.t + e.cell - nx.t) <= kTimeTolerance) {
      const double w = (t - e.t) / e.cell;
      return (1.0 - w) * e.K + w * nx.K;
    }
  }
  return e.K;
}

GainSchedule gain_schedule(const ControlSystem& sys, const TimeScale& ts,
                           Seconds t0, Seconds tf, double alpha,
                           const WindowSpec& spec, const GramianOptions& opts) {
  sys.validate();
  validate_window(spec);
  if (!(alpha > 0.0)) throw ValidationError("alpha must be > 0");

  const Mesh mesh = build_mesh(ts, opts.h, t0, tf);
  const std::size_t count = mesh.nodes.size();

  struct Slot {
    std::optional<GainEntry> entry;
    std::optional<SkippedNode> skipped;
    std::optional<ScheduleError::NodeFailure> failure;
  };
  std::vector<Slot> slots(count);

  parallel_for(count, [&](std::size_t i) {
    const MeshNode& node = mesh.nodes[i];
    try {
      slots[i].entry = compute_entry(sys, ts, node, alpha, spec, opts);
    } catch (const OutOfRangeError& e) {
      slots[i].skipped = SkippedNode{node.t, e.what()};
    } catch (const ControllabilityError& e) {
      slots[i].failure = {node.t, "controllability", e.what()};
    } catch (const SingularityError& e) {
      slots[i].failure = {node.t, "singularity", e.what()};
    } catch (const DomainError& e) {
      slots[i].failure = {node.t, "domain", e.what()};
    } catch (const std::exception& e) {
      slots[i].failure = {node.t, "other", e.what()};
    }
  });

  GainSchedule schedule;
  schedule.alpha = alpha;
  schedule.spec = spec;
  schedule.opts = opts;
  std::vector<ScheduleError::NodeFailure> failures;
  for (Slot& s : slots) {
    if (s.entry) schedule.entries.push_back(std::move(*s.entry));
    if (s.skipped) schedule.skipped.push_back(std::move(*s.skipped));
    if (s.failure) failures.push_back(std::move(*s.failure));
  }
  if (!failures.empty()) {
    std::ostringstream os;
    os << failures.size() << " node(s) failed while building the gain schedule;"
       << " first at t = " << fmt(failures.front().t) << ": "
       << failures.front().message;
    throw ScheduleError(os.str(), std::move(failures));
  }
  for (std::size_t i = 1; i < schedule.entries.size(); ++i) {
    if (!(schedule.entries[i].window_end > schedule.entries[i - 1].window_end)) {
      schedule.warnings.push_back("window end is not strictly increasing at t = " +
                                  fmt(schedule.entries[i].t));
    }
  }
  if (schedule.entries.empty()) {
    schedule.warnings.push_back("no node admits a window inside the time scale");
  }
  return schedule;
}

ControlSystem closed_loop(const ControlSystem& sys, const GainSchedule& schedule) {
  sys.validate();
  auto shared = std::make_shared<const GainSchedule>(schedule);
  ControlSystem out = sys;
  const MatrixSignal a = sys.A;
  const MatrixSignal b = sys.B;
  out.A.eval = [a, b, shared](Seconds t, Seconds mu) -> Matrix {
    return a(t, mu) + b(t, mu) * shared->gain_at(t, mu);
  };
  out.A.constant_on_dense = false;
  return out;
}

double gramian_identity_residual(const ControlSystem& sys, const TimeScale& ts,
                                 Seconds t, double alpha,
                                 const WindowSpec& spec,
                                 const GramianOptions& opts) {
  sys.validate();
  if (ts.is_right_dense(t)) return 0.0;
  const Seconds mu = ts.mu(t);
  if (mu < kDenseGraininess) return 0.0;

  const Seconds c = window_C(ts, t, spec);
  const Seconds sig = ts.sigma(t);
  const Eigen::Index n = sys.n();
  const Matrix eye = Matrix::Identity(n, n);
  const Matrix a = sys.A(t, mu);
  const Matrix b = sys.B(t, mu);
  const Matrix f = eye + mu * a;
  const Matrix g = weighted_gramian(sys, ts, t, c, alpha, opts);
  const Matrix gs = weighted_gramian(sys, ts, sig, c, alpha, opts);
  const double q = std::pow(1.0 + mu * alpha, 4);
  const Matrix bbt = mu * b * b.transpose();

  const Matrix lhs = f * g * f.transpose();
  const Matrix rhs = bbt + gs / q;
  const double scale = std::max(lhs.norm(), std::numeric_limits<double>::min());
  double residual = (lhs - rhs).norm() / scale;

  Matrix g_inv;
  linalg::SymmetricSpectrum spectrum;
  if (linalg::gated_spd_inverse(g, opts.invert_tolerance, g_inv, spectrum)) {
    const Matrix f_inv = f.inverse();
    const Matrix inner = f_inv * bbt * f_inv.transpose();
    const Matrix shifted = f_inv * gs * f_inv.transpose();
    // Right form: I - F^{-1} mu B B^T F^{-T} G^{-1}
    const Matrix x_right = inner * g_inv;
    const Matrix y_right = shifted * g_inv / q;
    const double s_right = std::sqrt(static_cast<double>(n)) + x_right.norm();
    residual = std::max(residual, (eye - x_right - y_right).norm() / s_right);
    // Left form: I - G^{-1} F^{-1} mu B B^T F^{-T}
    const Matrix x_left = g_inv * inner;
    const Matrix y_left = g_inv * shifted / q;
    const double s_left = std::sqrt(static_cast<double>(n)) + x_left.norm();
    residual = std::max(residual, (eye - x_left - y_left).norm() / s_left);
  }
  return residual;
}

StabilityCertificate certify(const ControlSystem& sys,
                             const GainSchedule& schedule, const TimeScale& ts) {
  sys.validate();
  StabilityCertificate cert;
  const auto& entries = schedule.entries;
  if (entries.empty()) {
    cert.diagnostic = "empty gain schedule";
    return cert;
  }
  const double alpha = schedule.alpha;
  const Eigen::Index n = sys.n();
  const Matrix eye = Matrix::Identity(n, n);
  const std::size_t count = entries.size();

  std::vector<Matrix> q(count);
  std::vector<linalg::SymmetricSpectrum> q_spec(count);
  std::vector<bool> q_ok(count, false);
  for (std::size_t i = 0; i < count; ++i) {
    linalg::SymmetricSpectrum g_spec;
    q_ok[i] = linalg::gated_spd_inverse(entries[i].weighted_gramian,
                                        schedule.opts.invert_tolerance, q[i],
                                        g_spec);
    if (q_ok[i]) q_spec[i] = linalg::symmetric_spectrum(q[i]);
  }

  struct NodeCheck {
    bool checked = false;
    bool dense = false;
    double lambda = 0.0;
    double eps2 = 0.0;
    double mu = 0.0;
    std::size_t partner = 0;
    std::string problem;
  };
  std::vector<NodeCheck> checks(count);

  auto index_of = [&](Seconds t) -> std::optional<std::size_t> {
    if (const GainEntry* e = schedule.find(t)) {
      return static_cast<std::size_t>(e - entries.data());
    }
    return std::nullopt;
  };
  auto dense_neighbour = [&](std::size_t i, int dir) -> std::optional<std::size_t> {
    if (dir < 0) {
      if (i == 0) return std::nullopt;
      const GainEntry& p = entries[i - 1];
      if (p.kind == NodeKind::kDense &&
          std::abs(p.t + p.cell - entries[i].t) <= kTimeTolerance) {
        return i - 1;
      }
      return std::nullopt;
    }
    if (i + 1 >= count) return std::nullopt;
    const GainEntry& nx = entries[i + 1];
    if (nx.kind == NodeKind::kDense &&
        std::abs(entries[i].t + entries[i].cell - nx.t) <= kTimeTolerance) {
      return i + 1;
    }
    return std::nullopt;
  };

  parallel_for(count, [&](std::size_t i) {
    const GainEntry& e = entries[i];
    NodeCheck& c = checks[i];
    const bool jump = e.kind == NodeKind::kScattered && e.cell >= kDenseGraininess;
    if (jump) {
      const auto j = index_of(e.t + e.cell);
      if (!j) return;  // sigma(t) is past the schedule
      if (!q_ok[i] || !q_ok[*j]) {
        c.problem = "Q is singular or indefinite near t = " + fmt(e.t);
        c.checked = true;
        return;
      }
      const double mu = e.cell;
      const Matrix a_hat = sys.A(e.t, mu) + sys.B(e.t, mu) * e.K;
      const Matrix a_z = a_hat * (1.0 + mu * alpha) + alpha * eye;
      const Matrix step = eye + mu * a_z;
      const Matrix dec = (step.transpose() * q[*j] * step - q[i]) / mu;
      c.lambda = linalg::symmetric_spectrum(dec).max;
      c.mu = mu;
      c.partner = *j;
    } else {
      const auto prev = dense_neighbour(i, -1);
      const auto next = dense_neighbour(i, +1);
      if (!prev && !next) return;
      if (!q_ok[i] || (prev && !q_ok[*prev]) || (next && !q_ok[*next])) {
        c.problem = "Q is singular or indefinite near t = " + fmt(e.t);
        c.checked = true;
        return;
      }
      const std::size_t lo = prev ? *prev : i;
      const std::size_t hi = next ? *next : i;
      const Matrix q_dot = (q[hi] - q[lo]) / (entries[hi].t - entries[lo].t);
      const Matrix a_hat = sys.A(e.t, 0.0) + sys.B(e.t, 0.0) * e.K;
      const Matrix a_z = a_hat + alpha * eye;
      const Matrix dec = a_z.transpose() * q[i] + q[i] * a_z + q_dot;
      c.lambda = linalg::symmetric_spectrum(dec).max;
      c.dense = true;
      c.partner = i;
    }
    const Matrix g_plain = gramian(sys, ts, e.t, e.window_end, schedule.opts);
    c.eps2 = linalg::symmetric_spectrum(g_plain).max;
    c.checked = true;
  });

  cert.eta = std::numeric_limits<double>::infinity();
  cert.rho_bound = 0.0;
  double worst = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < count; ++i) {
    const NodeCheck& c = checks[i];
    if (!c.checked) continue;
    if (!c.problem.empty()) {
      cert.pass = false;
      cert.worst_node = entries[i].t;
      cert.diagnostic = c.problem;
      cert.checked_nodes = 0;
      return cert;
    }
    ++cert.checked_nodes;
    for (std::size_t k : {i, c.partner}) {
      cert.eta = std::min(cert.eta, q_spec[k].min);
      cert.rho_bound = std::max(cert.rho_bound, q_spec[k].max);
    }
    cert.eps2 = std::max(cert.eps2, c.eps2);
    cert.mu_max = std::max(cert.mu_max, c.mu);
    cert.dense_dependent = cert.dense_dependent || c.dense;
    if (c.lambda > worst) {
      worst = c.lambda;
      cert.worst_node = entries[i].t;
    }
  }
  if (cert.checked_nodes == 0) {
    cert.eta = 0.0;
    cert.diagnostic = "no node of the schedule has the neighbours needed for the check";
    return cert;
  }
  cert.nu = -worst;
  cert.worst_margin = -worst;
  const double grow = 1.0 + cert.mu_max * alpha;
  cert.nu_floor = alpha / (cert.eps2 * grow * grow);
  cert.nu_stated = cert.eps2 * grow * grow / alpha;
  cert.rate_admissible = cert.nu > 0.0;
  for (std::size_t i = 0; i < count; ++i) {
    if (checks[i].checked && !checks[i].dense &&
        !(1.0 - checks[i].mu * cert.nu / cert.rho_bound > 0.0)) {
      cert.rate_admissible = false;
    }
  }
  cert.pass = cert.eta > 0.0 && cert.nu > 0.0;
  if (!cert.pass) {
    cert.diagnostic = cert.eta > 0.0
                          ? "decrement condition violated at t = " + fmt(cert.worst_node)
                          : "Q is not positive definite";
  }
  return cert;
}

}  // namespace tsfb
