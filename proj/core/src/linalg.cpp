#include "tsfb/linalg.hpp"

#include <cmath>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <unsupported/Eigen/MatrixFunctions>

namespace tsfb::linalg {

Matrix expm(const Matrix& a) { return a.exp(); }

Matrix phi1(const Matrix& x) {
  const Eigen::Index n = x.rows();
  Matrix aug = Matrix::Zero(2 * n, 2 * n);
  aug.topLeftCorner(n, n) = x;
  aug.topRightCorner(n, n) = Matrix::Identity(n, n);
  const Matrix e = aug.exp();
  return e.topRightCorner(n, n);
}

Matrix symmetrize(const Matrix& m) { return 0.5 * (m + m.transpose()); }

SymmetricSpectrum symmetric_spectrum(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(m),
                                           Eigen::EigenvaluesOnly);
  const auto& ev = es.eigenvalues();
  return {ev.minCoeff(), ev.maxCoeff()};
}

bool gated_spd_inverse(const Matrix& m, double tolerance, Matrix& out,
                       SymmetricSpectrum& spectrum) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(m));
  const Vector& ev = es.eigenvalues();
  spectrum = {ev.minCoeff(), ev.maxCoeff()};
  if (!(spectrum.max > 0.0) || !(spectrum.min > tolerance * spectrum.max)) {
    return false;
  }
  const Matrix& v = es.eigenvectors();
  out = v * ev.cwiseInverse().asDiagonal() * v.transpose();
  out = symmetrize(out);
  return true;
}

bool is_numerically_singular(const Matrix& m) {
  const double det = std::abs(m.determinant());
  const double scale = std::pow(m.norm(), static_cast<double>(m.rows()));
  return det <= 1e-12 * scale;
}

double spectral_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues()(0);
}

double spectral_radius(const Matrix& m) {
  Eigen::EigenSolver<Matrix> es(m, false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace tsfb::linalg
