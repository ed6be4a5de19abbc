#pragma once

#include "tsfb/types.hpp"

namespace tsfb::linalg {

// Matrix exponential (Pade scaling and squaring).
Matrix expm(const Matrix& a);

// phi_1(X) = sum_{i>=1} X^{i-1} / i!, read off the exponential of the
// augmented matrix [[X, I], [0, 0]].
Matrix phi1(const Matrix& x);

struct SymmetricSpectrum {
  double min = 0.0;
  double max = 0.0;
};

// Extreme eigenvalues of the symmetric part of m.
SymmetricSpectrum symmetric_spectrum(const Matrix& m);

Matrix symmetrize(const Matrix& m);

// Inverse of a symmetric positive definite matrix through its eigen
// decomposition. Returns false (leaving `out` untouched) when
// lambda_min <= tolerance * lambda_max.
bool gated_spd_inverse(const Matrix& m, double tolerance, Matrix& out,
                       SymmetricSpectrum& spectrum);

// |det(m)| <= 1e-12 * ||m||_F^n counts as singular.
bool is_numerically_singular(const Matrix& m);

double spectral_norm(const Matrix& m);
double spectral_radius(const Matrix& m);

}  // namespace tsfb::linalg
