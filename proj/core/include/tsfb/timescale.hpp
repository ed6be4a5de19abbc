#pragma once

#include <cstddef>
#include <cstdint>
#include <variant>
#include <vector>

#include "tsfb/types.hpp"

namespace tsfb {

struct Point {
  Seconds t;
};

// Closed interval [a, b] with a < b.
struct Interval {
  Seconds a;
  Seconds b;
};

using Element = std::variant<Point, Interval>;

Seconds element_begin(const Element& e);
Seconds element_end(const Element& e);

// A finite time scale: an ordered union of isolated points and closed
// intervals. Construction sorts the elements, merges touching or overlapping
// intervals and absorbs points that touch an interval. The maximum is treated
// as its own forward jump.
class TimeScale {
 public:
  explicit TimeScale(std::vector<Element> elements);

  const std::vector<Element>& elements() const { return elements_; }
  std::size_t size() const { return elements_.size(); }

  Seconds min() const;
  Seconds max() const;

  bool contains(Seconds t) const;

  // Forward jump; t itself when right-dense or the maximum.
  Seconds sigma(Seconds t) const;
  // Backward jump; t itself when left-dense or the minimum.
  Seconds rho(Seconds t) const;
  // Graininess sigma(t) - t.
  Seconds mu(Seconds t) const;
  // k-fold forward jump. Dense points are fixed by sigma, so a right-dense t
  // returns t. Throws OutOfRangeError when the maximum is reached before k
  // strict jumps.
  Seconds sigma_k(Seconds t, int k) const;

  bool is_right_dense(Seconds t) const;
  bool is_right_scattered(Seconds t) const { return !is_right_dense(t); }

  // Smallest member >= t, or OutOfRangeError when t exceeds the maximum.
  Seconds snap_forward(Seconds t) const;

  // Largest and smallest positive graininess over the right-scattered
  // members (the maximum excluded). Both are 0 on a scale with no jumps.
  Seconds mu_max() const { return mu_max_; }
  Seconds mu_min() const { return mu_min_; }

  bool has_dense_part() const;
  bool is_discrete() const { return !has_dense_part(); }

  // Every element start and end point in increasing order; for a purely
  // discrete scale this is the full member list.
  std::vector<Seconds> breakpoints() const;

 private:
  // Index of the element containing t, or throws DomainError.
  std::size_t locate(Seconds t) const;

  std::vector<Element> elements_;
  Seconds mu_max_ = 0.0;
  Seconds mu_min_ = 0.0;
};

// Canonical scale generators, all truncated to a finite extent.
struct UniformGrid {  // h * k for k in [k_min, k_max]
  Seconds h;
  std::int64_t k_min;
  std::int64_t k_max;
};

struct QuantumGrid {  // q^k for k in [k_min, k_max]
  double q;
  int k_min;
  int k_max;
};

struct PulseTrain {  // union over k < n_periods of [k(a+b), k(a+b)+a]
  Seconds a;
  Seconds b;
  int n_periods;
};

struct RandomGrid {  // n_points, gaps uniform in [mu_lo, mu_hi]
  Seconds mu_lo;
  Seconds mu_hi;
  int n_points;
  std::uint64_t seed;
  Seconds t0 = 0.0;
};

struct ExplicitScale {
  std::vector<Element> elements;
};

using ScaleSpec =
    std::variant<UniformGrid, QuantumGrid, PulseTrain, RandomGrid, ExplicitScale>;

TimeScale make_scale(const ScaleSpec& spec);

// Purely discrete scale t0, t0 + g0, t0 + g0 + g1, ...
TimeScale scale_from_gaps(Seconds t0, const std::vector<Seconds>& gaps);

enum class NodeKind { kScattered, kDense };

// One quadrature cell [t, t + mu). For scattered nodes mu is the true
// graininess; for dense sub-nodes it is the sub-step width and the true
// graininess is zero.
struct MeshNode {
  Seconds t;
  Seconds mu;
  NodeKind kind;

  Seconds graininess() const { return kind == NodeKind::kScattered ? mu : 0.0; }
  Seconds next() const { return t + mu; }
};

// Numerical carrier for delta-integrals over the half-open range [begin, end).
struct Mesh {
  std::vector<MeshNode> nodes;
  Seconds begin = 0.0;
  Seconds end = 0.0;
  Seconds h = 0.0;

  Seconds total_measure() const;
};

// Mesh over [ts.min(), ts.max()).
Mesh build_mesh(const TimeScale& ts, Seconds h);
// Mesh over [t0, tf); both must be members of ts and t0 <= tf.
Mesh build_mesh(const TimeScale& ts, Seconds h, Seconds t0, Seconds tf);

// Default quadrature step: min(mu_min / 4, 1e-3) when the scale has dense
// parts, otherwise a step that never subdivides anything.
Seconds default_mesh_step(const TimeScale& ts);

}  // namespace tsfb
