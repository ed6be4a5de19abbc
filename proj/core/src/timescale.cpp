#include "tsfb/timescale.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "tsfb/errors.hpp"
#include "tsfb/random.hpp"

namespace tsfb {
namespace {

std::string fmt_time(Seconds t) {
  std::ostringstream os;
  os.precision(17);
  os << t;
  return os.str();
}

bool is_interval(const Element& e) { return std::holds_alternative<Interval>(e); }

}  // namespace

Seconds element_begin(const Element& e) {
  return std::visit(
      [](const auto& v) -> Seconds {
        if constexpr (std::is_same_v<std::decay_t<decltype(v)>, Point>) {
          return v.t;
        } else {
          return v.a;
        }
      },
      e);
}

Seconds element_end(const Element& e) {
  return std::visit(
      [](const auto& v) -> Seconds {
        if constexpr (std::is_same_v<std::decay_t<decltype(v)>, Point>) {
          return v.t;
        } else {
          return v.b;
        }
      },
      e);
}

TimeScale::TimeScale(std::vector<Element> elements) {
  if (elements.empty()) {
    throw ValidationError("time scale must be nonempty");
  }
  for (std::size_t i = 0; i < elements.size(); ++i) {
    const Seconds a = element_begin(elements[i]);
    const Seconds b = element_end(elements[i]);
    if (!std::isfinite(a) || !std::isfinite(b)) {
      throw ValidationError("element " + std::to_string(i) + " is not finite");
    }
    if (is_interval(elements[i]) && !(a < b)) {
      throw ValidationError("element " + std::to_string(i) +
                            ": interval requires a < b");
    }
  }
  std::stable_sort(elements.begin(), elements.end(),
                   [](const Element& x, const Element& y) {
                     return element_begin(x) < element_begin(y);
                   });

  for (const Element& e : elements) {
    if (elements_.empty()) {
      elements_.push_back(e);
      continue;
    }
    Element& last = elements_.back();
    const Seconds last_end = element_end(last);
    const Seconds begin = element_begin(e);
    if (begin > last_end + kTimeTolerance) {
      elements_.push_back(e);
      continue;
    }
    // Touching or overlapping: merge into one element.
    const Seconds end = std::max(last_end, element_end(e));
    if (is_interval(last) || is_interval(e)) {
      last = Interval{element_begin(last), end};
    }
  }

  for (std::size_t i = 0; i + 1 < elements_.size(); ++i) {
    const Seconds gap =
        element_begin(elements_[i + 1]) - element_end(elements_[i]);
    mu_max_ = std::max(mu_max_, gap);
    mu_min_ = (i == 0) ? gap : std::min(mu_min_, gap);
  }
}

Seconds TimeScale::min() const { return element_begin(elements_.front()); }
Seconds TimeScale::max() const { return element_end(elements_.back()); }

std::size_t TimeScale::locate(Seconds t) const {
  auto it = std::upper_bound(
      elements_.begin(), elements_.end(), t + kTimeTolerance,
      [](Seconds v, const Element& e) { return v < element_begin(e); });
  if (it != elements_.begin()) {
    const std::size_t i = static_cast<std::size_t>(it - elements_.begin()) - 1;
    if (t <= element_end(elements_[i]) + kTimeTolerance) {
      return i;
    }
  }
  throw DomainError("t = " + fmt_time(t) + " is not a member of the time scale");
}

bool TimeScale::contains(Seconds t) const {
  try {
    locate(t);
    return true;
  } catch (const DomainError&) {
    return false;
  }
}

bool TimeScale::is_right_dense(Seconds t) const {
  const Element& e = elements_[locate(t)];
  return is_interval(e) && t < element_end(e) - kTimeTolerance;
}

Seconds TimeScale::sigma(Seconds t) const {
  const std::size_t i = locate(t);
  const Element& e = elements_[i];
  if (is_interval(e) && t < element_end(e) - kTimeTolerance) {
    return t;
  }
  if (i + 1 == elements_.size()) {
    return t;
  }
  return element_begin(elements_[i + 1]);
}

Seconds TimeScale::rho(Seconds t) const {
  const std::size_t i = locate(t);
  const Element& e = elements_[i];
  if (is_interval(e) && t > element_begin(e) + kTimeTolerance) {
    return t;
  }
  if (i == 0) {
    return t;
  }
  return element_end(elements_[i - 1]);
}

Seconds TimeScale::mu(Seconds t) const { return sigma(t) - t; }

Seconds TimeScale::sigma_k(Seconds t, int k) const {
  if (k < 1) {
    throw ValidationError("sigma_k requires k >= 1");
  }
  Seconds x = t;
  for (int i = 0; i < k; ++i) {
    const std::size_t idx = locate(x);
    const Element& e = elements_[idx];
    if (is_interval(e) && x < element_end(e) - kTimeTolerance) {
      return x;
    }
    if (idx + 1 == elements_.size()) {
      throw OutOfRangeError("sigma^" + std::to_string(k) + "(" + fmt_time(t) +
                            ") runs past the end of the time scale");
    }
    x = element_begin(elements_[idx + 1]);
  }
  return x;
}

Seconds TimeScale::snap_forward(Seconds t) const {
  for (const Element& e : elements_) {
    if (element_end(e) >= t - kTimeTolerance) {
      return std::max(element_begin(e), std::min(t, element_end(e)));
    }
  }
  throw OutOfRangeError("no member of the time scale at or after " +
                        fmt_time(t));
}

bool TimeScale::has_dense_part() const {
  return std::any_of(elements_.begin(), elements_.end(), is_interval);
}

std::vector<Seconds> TimeScale::breakpoints() const {
  std::vector<Seconds> out;
  out.reserve(2 * elements_.size());
  for (const Element& e : elements_) {
    out.push_back(element_begin(e));
    if (is_interval(e)) {
      out.push_back(element_end(e));
    }
  }
  return out;
}

TimeScale make_scale(const ScaleSpec& spec) {
  struct Visitor {
    TimeScale operator()(const UniformGrid& g) const {
      if (!(g.h > 0.0)) throw ValidationError("hZ: h must be > 0");
      if (g.k_max < g.k_min) throw ValidationError("hZ: k_max < k_min");
      std::vector<Element> els;
      for (std::int64_t k = g.k_min; k <= g.k_max; ++k) {
        els.push_back(Point{g.h * static_cast<double>(k)});
      }
      return TimeScale(std::move(els));
    }
    TimeScale operator()(const QuantumGrid& g) const {
      if (!(g.q > 1.0)) throw ValidationError("qZ: q must be > 1");
      if (g.k_max < g.k_min) throw ValidationError("qZ: k_max < k_min");
      std::vector<Element> els;
      for (int k = g.k_min; k <= g.k_max; ++k) {
        els.push_back(Point{std::pow(g.q, k)});
      }
      return TimeScale(std::move(els));
    }
    TimeScale operator()(const PulseTrain& p) const {
      if (!(p.a > 0.0) || !(p.b > 0.0)) {
        throw ValidationError("pulse: a and b must be > 0");
      }
      if (p.n_periods < 1) throw ValidationError("pulse: n_periods must be >= 1");
      std::vector<Element> els;
      for (int k = 0; k < p.n_periods; ++k) {
        const Seconds start = k * (p.a + p.b);
        els.push_back(Interval{start, start + p.a});
      }
      return TimeScale(std::move(els));
    }
    TimeScale operator()(const RandomGrid& r) const {
      if (!(r.mu_lo > 0.0) || !(r.mu_hi >= r.mu_lo)) {
        throw ValidationError("random: requires mu_hi >= mu_lo > 0");
      }
      if (r.n_points < 2) throw ValidationError("random: n_points must be >= 2");
      Rng rng(r.seed);
      std::vector<Seconds> gaps(static_cast<std::size_t>(r.n_points - 1));
      for (Seconds& g : gaps) {
        g = rng.uniform(r.mu_lo, r.mu_hi);
      }
      return scale_from_gaps(r.t0, gaps);
    }
    TimeScale operator()(const ExplicitScale& e) const {
      return TimeScale(e.elements);
    }
  };
  return std::visit(Visitor{}, spec);
}

TimeScale scale_from_gaps(Seconds t0, const std::vector<Seconds>& gaps) {
  std::vector<Element> els;
  els.reserve(gaps.size() + 1);
  Seconds t = t0;
  els.push_back(Point{t});
  for (Seconds g : gaps) {
    if (!(g > kTimeTolerance)) {
      throw ValidationError("gaps must be positive");
    }
    t += g;
    els.push_back(Point{t});
  }
  return TimeScale(std::move(els));
}

Seconds Mesh::total_measure() const {
  Seconds sum = 0.0;
  for (const MeshNode& n : nodes) sum += n.mu;
  return sum;
}

Mesh build_mesh(const TimeScale& ts, Seconds h) {
  return build_mesh(ts, h, ts.min(), ts.max());
}

Mesh build_mesh(const TimeScale& ts, Seconds h, Seconds t0, Seconds tf) {
  if (!(h > 0.0)) throw ValidationError("mesh step h must be > 0");
  if (!ts.contains(t0) || !ts.contains(tf)) {
    throw DomainError("mesh range [" + fmt_time(t0) + ", " + fmt_time(tf) +
                      ") endpoints must be members of the time scale");
  }
  if (tf < t0) throw ValidationError("mesh range requires t0 <= tf");

  Mesh mesh;
  mesh.begin = t0;
  mesh.end = tf;
  mesh.h = h;
  for (const Element& e : ts.elements()) {
    if (const auto* p = std::get_if<Point>(&e)) {
      if (p->t >= t0 - kTimeTolerance && p->t < tf - kTimeTolerance) {
        mesh.nodes.push_back({p->t, 0.0, NodeKind::kScattered});
      }
      continue;
    }
    const auto& iv = std::get<Interval>(e);
    const Seconds lo = std::max(iv.a, t0);
    const Seconds hi = std::min(iv.b, tf);
    if (hi - lo > kTimeTolerance) {
      const auto n = static_cast<std::size_t>(
          std::max(1.0, std::ceil((hi - lo) / h - 1e-9)));
      for (std::size_t j = 0; j < n; ++j) {
        const Seconds t =
            lo + (hi - lo) * static_cast<double>(j) / static_cast<double>(n);
        mesh.nodes.push_back({t, 0.0, NodeKind::kDense});
      }
    }
    // The right endpoint owns the jump to the next element.
    if (iv.b >= t0 - kTimeTolerance && iv.b < tf - kTimeTolerance) {
      mesh.nodes.push_back({iv.b, 0.0, NodeKind::kScattered});
    }
  }
  for (std::size_t i = 0; i < mesh.nodes.size(); ++i) {
    const Seconds next = (i + 1 < mesh.nodes.size()) ? mesh.nodes[i + 1].t : tf;
    mesh.nodes[i].mu = next - mesh.nodes[i].t;
  }
  return mesh;
}

Seconds default_mesh_step(const TimeScale& ts) {
  if (ts.mu_min() > 0.0) return std::min(ts.mu_min() / 4.0, 1e-3);
  return 1e-3;
}

}  // namespace tsfb
