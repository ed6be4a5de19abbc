#pragma once

#include <complex>
#include <functional>

#include "tsfb/timescale.hpp"

namespace tsfb {

using Complex = std::complex<double>;

// Real-valued rate t -> p(t) in 1/s.
using ScalarSignal = std::function<double(Seconds)>;

// Below this graininess the cylinder transform is replaced by its mu -> 0
// limit (the identity).
inline constexpr double kDenseGraininess = 1e-10;

// |1 + mu p| must exceed this for p to count as regressive.
inline constexpr double kRegressiveMargin = 1e-12;

// a (+) b = a + b + mu a b.
double circle_plus(double a, double b, Seconds mu);
Complex circle_plus(Complex a, Complex b, Seconds mu);

// Group inverse -p / (1 + mu p). Throws DomainError when p is not regressive.
double circle_neg(double p, Seconds mu);

// p (-) q = p (+) ((-) q).
double circle_minus(double p, double q, Seconds mu);

bool is_regressive(double p, Seconds mu);
bool is_positively_regressive(double p, Seconds mu);

// Hilger real and imaginary parts; the ordinary parts when mu = 0.
double hilger_re(Complex z, Seconds mu);
double hilger_im(Complex z, Seconds mu);

// |1 + mu z| < 1, or Re z < 0 when mu = 0.
bool in_hilger_circle(Complex z, Seconds mu);

// Cylinder transform (1/mu) Log(1 + z mu) with principal Log, and its inverse
// (e^{z mu} - 1)/mu. Both are the identity when mu = 0.
Complex cylinder(Complex z, Seconds mu);
Complex inv_cylinder(Complex z, Seconds mu);

// Delta-integral of f over [a, b): the mesh sum of f(t) * mu_eff(t). Exact on
// discrete parts, first order in h on dense parts.
double delta_integral(const ScalarSignal& f, const TimeScale& ts, Seconds a,
                      Seconds b, Seconds h);

// Generalized exponential e_p(t, s). Scattered nodes contribute the exact
// factor 1 + mu p (which may be negative), dense cells the factor
// exp(p * mu_eff). Reversed order uses e_p(t, s) = 1 / e_p(s, t).
double exp_ts(const ScalarSignal& p, const TimeScale& ts, Seconds t, Seconds s,
              Seconds h);

// Constant-rate convenience overload.
double exp_ts(double p, const TimeScale& ts, Seconds t, Seconds s, Seconds h);

}  // namespace tsfb
