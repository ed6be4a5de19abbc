#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "tsfb/stabilizer.hpp"

namespace tsfb {

// dx/dt = A_hat x + B_hat u on the reals.
struct ContinuousLTI {
  Matrix A_hat;
  Matrix B_hat;

  Eigen::Index n() const { return A_hat.rows(); }
  Eigen::Index m() const { return B_hat.cols(); }
  void validate() const;
};

// DC motor with inertial load: states (position rev, velocity rev/s), input
// voltage.
ContinuousLTI motor_model();

struct Discretization {
  Matrix A;
  Matrix B;
};

// Sample-and-hold discretization at graininess mu:
//   A = (e^{A_hat mu} - I) / mu,  B = sum_{i>=1} (A_hat mu)^{i-1} / i! B_hat,
// both evaluated as A_hat phi1(A_hat mu) and phi1(A_hat mu) B_hat. A Taylor
// series is used when mu ||A_hat|| < 1e-4; mu = 0 returns (A_hat, B_hat).
Discretization discretize(const ContinuousLTI& plant, Seconds mu);

// Node-wise discretization; dense parts get the mu = 0 limit.
ControlSystem discretize_on_scale(const ContinuousLTI& plant, const TimeScale& ts);

using Reference = std::function<Vector(Seconds)>;

// r(t) = amplitude * ones(m) for t >= t_step, zero before.
Reference step_reference(double amplitude, Eigen::Index m, Seconds t_step = 0.0);

struct Sample {
  Seconds t;
  Vector x;
  Vector u;
};

struct SimResult {
  std::vector<Sample> samples;
  Seconds t0 = 0.0;
  Vector x0;
};

inline constexpr double kDivergenceNorm = 1e12;

// Closed-loop run with u(t) = K(t) x(t) + r(t). Scattered nodes apply
// x(sigma) = x + mu (A x + B u); dense cells take one RK4 step of
// x' = A x + B (K x + r) with K interpolated along the cell. One sample per
// mesh node of [t0, tf) plus the final state at tf, whose input is K(tf) x +
// r(tf) when tf is scheduled and the previous input otherwise.
SimResult simulate(const ControlSystem& sys, const TimeScale& ts, Seconds t0,
                   Seconds tf, const Vector& x0, const GainSchedule& schedule,
                   const Reference& r, Seconds h);

// Earliest sample time after which the channel stays within
// band * |final| of the final value (mean of the last 5% of samples, at least
// three). A zero final value falls back to band * max|signal|. Returns
// nullopt when the last sample is still outside the band.
std::optional<Seconds> settling_time(const SimResult& result, Eigen::Index channel,
                                     double band);

struct DecayFit {
  double gamma = 0.0;
  double alpha = 0.0;
  Seconds max_ratio_node = 0.0;
  std::vector<double> ratios;  // ||x(t)|| / (e_{-alpha}(t, t0) ||x0||)
  std::vector<double> envelope;  // e_{-alpha}(t, t0) per sample
};

// Throws RateInadmissibleError naming the first scattered node of [t0, tf)
// with 1 - mu(t) alpha <= 0.
void require_rate_admissible(const TimeScale& ts, double alpha, Seconds t0,
                             Seconds tf);

// Throws RateInadmissibleError when 1 - mu(t) alpha <= 0 at a scattered node.
DecayFit decay_fit(const SimResult& result, double alpha, const TimeScale& ts);

struct SweepOptions {
  std::vector<int> ks;
  std::vector<double> alphas;
  double band = 0.1;
  Seconds h = 1e-3;
  double invert_tolerance = 1e-10;
  Seconds delta1 = 0.1;
  Seconds delta2 = 0.05;
  Seconds m_max = 1e9;
  Vector x0;              // defaults to zero when empty
  double amplitude = 2.0;
  Eigen::Index channel = 0;
};

struct SweepRow {
  int k = 0;
  double alpha = 0.0;
  std::optional<Seconds> settling_time;
  double max_gain_norm = 0.0;  // NaN when no gain was computed
  // ok | unsettled | out_of_range | singular | rate_inadmissible |
  // diverged | error
  std::string status;
};

// Settling-time grid over k x alpha, row-major in k. Cells are independent
// and run in parallel; the table order is fixed.
std::vector<SweepRow> sweep(const ContinuousLTI& plant, const TimeScale& ts,
                            const SweepOptions& options);

// Purely discrete scale mimicking a real-time loop that misses deadlines:
// gaps are integer multiples of `tick`; the first `head_count` gaps draw from
// [head_lo, head_hi] ticks, the rest from [tail_lo, tail_hi] ticks.
struct DeadlineScaleSpec {
  Seconds tick = 0.01;
  int head_count = 4;
  int head_lo = 8;
  int head_hi = 9;
  int tail_lo = 1;
  int tail_hi = 2;
  int n_points = 100;
  std::uint64_t seed = 1;
};

TimeScale deadline_scale(const DeadlineScaleSpec& spec);

}  // namespace tsfb
