#include "adiabatic/linalg.hpp"

#include <cmath>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

namespace adiabatic {

namespace {

bool is_diagonal(const Matrix& m) {
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      if (r != c && m(r, c) != Complex{}) return false;
    }
  }
  return true;
}

}  // namespace

Matrix hermitian_propagator(const Matrix& hermitian, double dt) {
  const Eigen::Index n = hermitian.rows();
  if (is_diagonal(hermitian)) {
    Matrix out = Matrix::Zero(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
      out(j, j) = std::exp(-kI * dt * hermitian(j, j).real());
    }
    return out;
  }
  Eigen::SelfAdjointEigenSolver<Matrix> eig(hermitian);
  const Matrix& v = eig.eigenvectors();
  Vector phases(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    phases(j) = std::exp(-kI * dt * eig.eigenvalues()(j));
  }
  return v * phases.asDiagonal() * v.adjoint();
}

double max_abs(const Matrix& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

double unitarity_defect(const Matrix& m) {
  return max_abs(m.adjoint() * m - Matrix::Identity(m.cols(), m.cols()));
}

double hermiticity_defect(const Matrix& m) {
  return max_abs(m - m.adjoint());
}

double spectral_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues()(0);
}

}  // namespace adiabatic
