#include "tsfb/hilger.hpp"

#include <cmath>
#include <sstream>

#include "tsfb/errors.hpp"

namespace tsfb {
namespace {

void require_in_domain(Complex z, Seconds mu, const char* op) {
  if (mu > 0.0 && std::abs(1.0 + z * mu) <= kRegressiveMargin) {
    std::ostringstream os;
    os << op << ": z = " << z << " equals -1/mu for mu = " << mu;
    throw DomainError(os.str());
  }
}

}  // namespace

double circle_plus(double a, double b, Seconds mu) { return a + b + mu * a * b; }

Complex circle_plus(Complex a, Complex b, Seconds mu) {
  return a + b + mu * a * b;
}

bool is_regressive(double p, Seconds mu) {
  return std::abs(1.0 + mu * p) > kRegressiveMargin;
}

bool is_positively_regressive(double p, Seconds mu) {
  return 1.0 + mu * p > kRegressiveMargin;
}

double circle_neg(double p, Seconds mu) {
  if (!is_regressive(p, mu)) {
    std::ostringstream os;
    os << "circle_neg: p = " << p << " is not regressive at mu = " << mu;
    throw DomainError(os.str());
  }
  return -p / (1.0 + mu * p);
}

double circle_minus(double p, double q, Seconds mu) {
  return circle_plus(p, circle_neg(q, mu), mu);
}

double hilger_re(Complex z, Seconds mu) {
  // Defined at z = -1/mu as well (the circle centre); only Arg is not.
  if (mu <= 0.0) return z.real();
  return (std::abs(z * mu + 1.0) - 1.0) / mu;
}

double hilger_im(Complex z, Seconds mu) {
  if (mu <= 0.0) return z.imag();
  require_in_domain(z, mu, "hilger_im");
  return std::arg(z * mu + 1.0) / mu;
}

bool in_hilger_circle(Complex z, Seconds mu) {
  if (mu <= 0.0) return z.real() < 0.0;
  return std::abs(1.0 + mu * z) < 1.0;
}

Complex cylinder(Complex z, Seconds mu) {
  if (mu <= 0.0) return z;
  require_in_domain(z, mu, "cylinder");
  return std::log(1.0 + z * mu) / mu;
}

Complex inv_cylinder(Complex z, Seconds mu) {
  if (mu <= 0.0) return z;
  return (std::exp(z * mu) - 1.0) / mu;
}

double delta_integral(const ScalarSignal& f, const TimeScale& ts, Seconds a,
                      Seconds b, Seconds h) {
  if (b < a) throw ValidationError("delta_integral requires a <= b");
  const Mesh mesh = build_mesh(ts, h, a, b);
  double sum = 0.0;
  for (const MeshNode& n : mesh.nodes) {
    sum += f(n.t) * n.mu;
  }
  return sum;
}

double exp_ts(const ScalarSignal& p, const TimeScale& ts, Seconds t, Seconds s,
              Seconds h) {
  if (!ts.contains(t) || !ts.contains(s)) {
    throw DomainError("exp_ts: t and s must be members of the time scale");
  }
  if (std::abs(t - s) <= kTimeTolerance) return 1.0;
  if (t < s) return 1.0 / exp_ts(p, ts, s, t, h);

  const Mesh mesh = build_mesh(ts, h, s, t);
  double product = 1.0;
  double log_dense = 0.0;
  for (const MeshNode& n : mesh.nodes) {
    const double rate = p(n.t);
    if (n.kind == NodeKind::kScattered && n.mu >= kDenseGraininess) {
      const double factor = 1.0 + n.mu * rate;
      if (std::abs(factor) <= kRegressiveMargin) {
        std::ostringstream os;
        os.precision(17);
        os << "exp_ts: p is not regressive at t = " << n.t;
        throw DomainError(os.str());
      }
      product *= factor;
    } else {
      log_dense += rate * n.mu;
    }
  }
  return product * std::exp(log_dense);
}

double exp_ts(double p, const TimeScale& ts, Seconds t, Seconds s, Seconds h) {
  return exp_ts([p](Seconds) { return p; }, ts, t, s, h);
}

}  // namespace tsfb
