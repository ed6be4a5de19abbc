#include "tsfb/plant.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <sstream>

#include "tsfb/errors.hpp"
#include "tsfb/hilger.hpp"
#include "tsfb/linalg.hpp"
#include "tsfb/parallel.hpp"
#include "tsfb/random.hpp"

namespace tsfb {
namespace {

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

// Taylor series of phi1 for small arguments.
Matrix phi1_series(const Matrix& x) {
  const Eigen::Index n = x.rows();
  Matrix sum = Matrix::Identity(n, n);
  Matrix term = Matrix::Identity(n, n);
  for (int i = 2; i < 30; ++i) {
    term = term * x / static_cast<double>(i);
    sum += term;
    if (term.norm() <= 1e-18 * sum.norm()) break;
  }
  return sum;
}

// Discretizations keyed by graininess; shared by all copies of the signals.
class DiscretizationCache {
 public:
  explicit DiscretizationCache(ContinuousLTI plant) : plant_(std::move(plant)) {}

  Discretization get(Seconds mu) {
    {
      std::lock_guard<std::mutex> lock(mutex_);
      auto it = cache_.find(mu);
      if (it != cache_.end()) return it->second;
    }
    Discretization d = discretize(plant_, mu);
    std::lock_guard<std::mutex> lock(mutex_);
    return cache_.emplace(mu, std::move(d)).first->second;
  }

 private:
  ContinuousLTI plant_;
  std::mutex mutex_;
  std::map<Seconds, Discretization> cache_;
};

}  // namespace

void ContinuousLTI::validate() const {
  if (A_hat.rows() < 1 || A_hat.rows() != A_hat.cols()) {
    throw ValidationError("A_hat must be square and nonempty");
  }
  if (B_hat.rows() != A_hat.rows() || B_hat.cols() < 1) {
    throw ValidationError("B_hat must be n x m with m >= 1");
  }
  if (!A_hat.allFinite() || !B_hat.allFinite()) {
    throw ValidationError("plant matrices must be finite");
  }
}

ContinuousLTI motor_model() {
  ContinuousLTI plant;
  plant.A_hat.resize(2, 2);
  plant.A_hat << 0.0, 1.0,
                 0.0, -0.15;
  plant.B_hat.resize(2, 1);
  plant.B_hat << 0.0,
                 13.8;
  return plant;
}

Discretization discretize(const ContinuousLTI& plant, Seconds mu) {
  plant.validate();
  if (mu < 0.0) throw ValidationError("discretize: mu must be >= 0");
  if (mu == 0.0) return {plant.A_hat, plant.B_hat};
  const Matrix x = plant.A_hat * mu;
  const Matrix p = (x.norm() < 1e-4) ? phi1_series(x) : linalg::phi1(x);
  return {plant.A_hat * p, p * plant.B_hat};
}

ControlSystem discretize_on_scale(const ContinuousLTI& plant, const TimeScale&) {
  plant.validate();
  auto cache = std::make_shared<DiscretizationCache>(plant);
  ControlSystem sys;
  sys.A.eval = [cache](Seconds, Seconds mu) { return cache->get(mu).A; };
  sys.A.rows = plant.n();
  sys.A.cols = plant.n();
  sys.A.constant_on_dense = true;
  sys.B.eval = [cache](Seconds, Seconds mu) { return cache->get(mu).B; };
  sys.B.rows = plant.n();
  sys.B.cols = plant.m();
  sys.B.constant_on_dense = true;
  return sys;
}

Reference step_reference(double amplitude, Eigen::Index m, Seconds t_step) {
  return [amplitude, m, t_step](Seconds t) -> Vector {
    return (t >= t_step - kTimeTolerance) ? Vector::Constant(m, amplitude)
                                          : Vector::Zero(m);
  };
}

SimResult simulate(const ControlSystem& sys, const TimeScale& ts, Seconds t0,
                   Seconds tf, const Vector& x0, const GainSchedule& schedule,
                   const Reference& r, Seconds h) {
  sys.validate();
  if (x0.size() != sys.n()) throw ValidationError("x0 has the wrong dimension");
  if (!x0.allFinite()) throw ValidationError("x0 must be finite");

  const Mesh mesh = build_mesh(ts, h, t0, tf);
  SimResult result;
  result.t0 = t0;
  result.x0 = x0;
  result.samples.reserve(mesh.nodes.size() + 1);

  Vector x = x0;
  Vector u_last = r(t0);
  auto check = [&](Seconds t) {
    if (!x.allFinite() || x.norm() > kDivergenceNorm) {
      throw DivergenceError("state diverged at t = " + fmt(t), t);
    }
  };

  for (const MeshNode& node : mesh.nodes) {
    if (node.kind == NodeKind::kScattered && node.mu >= kDenseGraininess) {
      const Vector u = schedule.gain_at(node.t, node.mu) * x + r(node.t);
      result.samples.push_back({node.t, x, u});
      x = x + node.mu * (sys.A(node.t, node.mu) * x + sys.B(node.t, node.mu) * u);
      u_last = u;
    } else {
      const Seconds d = node.mu;
      auto field = [&](Seconds s, const Vector& y) -> Vector {
        const Vector u = schedule.gain_at(s, 0.0) * y + r(s);
        return sys.A(s, 0.0) * y + sys.B(s, 0.0) * u;
      };
      const Vector u = schedule.gain_at(node.t, 0.0) * x + r(node.t);
      result.samples.push_back({node.t, x, u});
      const Vector k1 = field(node.t, x);
      const Vector k2 = field(node.t + 0.5 * d, x + 0.5 * d * k1);
      const Vector k3 = field(node.t + 0.5 * d, x + 0.5 * d * k2);
      const Vector k4 = field(node.t + d, x + d * k3);
      x = x + (d / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      u_last = u;
    }
    check(node.next());
  }

  Vector u_final = u_last;
  if (const GainEntry* e = schedule.find(tf)) {
    u_final = e->K * x + r(tf);
  }
  result.samples.push_back({tf, x, u_final});
  return result;
}

std::optional<Seconds> settling_time(const SimResult& result, Eigen::Index channel,
                                     double band) {
  const auto& s = result.samples;
  if (s.empty()) throw ValidationError("settling_time: empty result");
  if (channel < 0 || channel >= s.front().x.size()) {
    throw ValidationError("settling_time: channel out of range");
  }
  if (!(band > 0.0)) throw ValidationError("settling_time: band must be > 0");

  const std::size_t n = s.size();
  const std::size_t tail = std::min<std::size_t>(
      n, std::max<std::size_t>(3, static_cast<std::size_t>(
                                      std::ceil(0.05 * static_cast<double>(n)))));
  double final_value = 0.0;
  for (std::size_t i = n - tail; i < n; ++i) final_value += s[i].x(channel);
  final_value /= static_cast<double>(tail);

  double tol = band * std::abs(final_value);
  if (!(std::abs(final_value) > 0.0)) {
    double peak = 0.0;
    for (const Sample& smp : s) peak = std::max(peak, std::abs(smp.x(channel)));
    tol = band * peak;
  }
  if (!std::isfinite(final_value)) return std::nullopt;

  std::optional<std::size_t> last_out;
  for (std::size_t i = 0; i < n; ++i) {
    const double v = s[i].x(channel);
    if (!std::isfinite(v) || std::abs(v - final_value) > tol) last_out = i;
  }
  if (!last_out) return s.front().t;
  if (*last_out + 1 >= n) return std::nullopt;
  return s[*last_out + 1].t;
}

void require_rate_admissible(const TimeScale& ts, double alpha, Seconds t0,
                             Seconds tf) {
  for (Seconds t : ts.breakpoints()) {
    if (t < t0 - kTimeTolerance || t >= tf - kTimeTolerance) continue;
    if (ts.is_right_dense(t)) continue;
    const Seconds mu = ts.mu(t);
    if (mu > 0.0 && !(1.0 - mu * alpha > 0.0)) {
      throw RateInadmissibleError("-alpha is not positively regressive at t = " +
                                      fmt(t) + " (mu = " + fmt(mu) + ")",
                                  t);
    }
  }
}

DecayFit decay_fit(const SimResult& result, double alpha, const TimeScale& ts) {
  const auto& s = result.samples;
  if (s.empty()) throw ValidationError("decay_fit: empty result");
  const double x0_norm = result.x0.norm();
  if (!(x0_norm > 0.0)) throw ValidationError("decay_fit: ||x0|| must be > 0");

  DecayFit fit;
  fit.alpha = alpha;
  fit.ratios.reserve(s.size());
  fit.envelope.reserve(s.size());
  double envelope = 1.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i > 0) {
      const Seconds prev = s[i - 1].t;
      const Seconds mu = ts.is_right_dense(prev) ? 0.0 : ts.mu(prev);
      if (mu >= kDenseGraininess) {
        const double factor = 1.0 - mu * alpha;
        if (!(factor > 0.0)) {
          throw RateInadmissibleError(
              "-alpha is not positively regressive at t = " + fmt(prev) +
                  " (1 - mu alpha = " + fmt(factor) + ")",
              prev);
        }
        envelope *= factor;
      } else {
        envelope *= std::exp(-alpha * (s[i].t - prev));
      }
    }
    const double ratio = s[i].x.norm() / (envelope * x0_norm);
    fit.ratios.push_back(ratio);
    fit.envelope.push_back(envelope);
    if (ratio > fit.gamma) {
      fit.gamma = ratio;
      fit.max_ratio_node = s[i].t;
    }
  }
  return fit;
}

std::vector<SweepRow> sweep(const ContinuousLTI& plant, const TimeScale& ts,
                            const SweepOptions& options) {
  plant.validate();
  if (options.ks.empty() || options.alphas.empty()) {
    throw ValidationError("sweep: k and alpha ranges must be nonempty");
  }
  const ControlSystem sys = discretize_on_scale(plant, ts);
  const Vector x0 =
      options.x0.size() == 0 ? Vector::Zero(plant.n()) : options.x0;
  const Reference r = step_reference(options.amplitude, plant.m(), ts.min());
  const std::size_t n_alpha = options.alphas.size();
  std::vector<SweepRow> rows(options.ks.size() * n_alpha);

  parallel_for(rows.size(), [&](std::size_t idx) {
    SweepRow& row = rows[idx];
    row.k = options.ks[idx / n_alpha];
    row.alpha = options.alphas[idx % n_alpha];
    row.max_gain_norm = std::numeric_limits<double>::quiet_NaN();
    if (ts.mu_max() * row.alpha >= 1.0) {
      row.status = "rate_inadmissible";
      return;
    }
    const WindowSpec spec{row.k, options.delta1, options.delta2, options.m_max};
    const GramianOptions gopts{options.h, options.invert_tolerance};
    GainSchedule schedule;
    try {
      schedule = gain_schedule(sys, ts, ts.min(), ts.max(), row.alpha, spec, gopts);
    } catch (const ScheduleError& e) {
      row.status =
          e.failures().front().kind == "controllability" ? "singular" : "error";
      return;
    } catch (const std::exception&) {
      row.status = "error";
      return;
    }
    if (schedule.empty()) {
      row.status = "out_of_range";
      return;
    }
    double max_norm = 0.0;
    for (const GainEntry& e : schedule.entries) {
      max_norm = std::max(max_norm, linalg::spectral_norm(e.K));
    }
    row.max_gain_norm = max_norm;
    try {
      const SimResult sim = simulate(sys, ts, ts.min(), schedule.coverage_end(),
                                     x0, schedule, r, options.h);
      row.settling_time = settling_time(sim, options.channel, options.band);
      row.status = row.settling_time ? "ok" : "unsettled";
    } catch (const DivergenceError&) {
      row.status = "diverged";
    } catch (const std::exception&) {
      row.status = "error";
    }
  });
  return rows;
}

TimeScale deadline_scale(const DeadlineScaleSpec& spec) {
  if (!(spec.tick > 0.0)) throw ValidationError("deadline scale: tick must be > 0");
  if (spec.n_points < 2) throw ValidationError("deadline scale: n_points must be >= 2");
  if (spec.head_lo < 1 || spec.head_hi < spec.head_lo || spec.tail_lo < 1 ||
      spec.tail_hi < spec.tail_lo || spec.head_count < 0) {
    throw ValidationError("deadline scale: invalid tick ranges");
  }
  Rng rng(spec.seed);
  std::vector<Seconds> gaps;
  gaps.reserve(static_cast<std::size_t>(spec.n_points - 1));
  for (int i = 0; i + 1 < spec.n_points; ++i) {
    const auto ticks = (i < spec.head_count)
                           ? rng.uniform_int(spec.head_lo, spec.head_hi)
                           : rng.uniform_int(spec.tail_lo, spec.tail_hi);
    gaps.push_back(static_cast<double>(ticks) * spec.tick);
  }
  return scale_from_gaps(0.0, gaps);
}

}  // namespace tsfb
