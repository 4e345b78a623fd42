#pragma once

#include <complex>

#include <Eigen/Dense>

namespace adiabatic {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;

inline constexpr Complex kI{0.0, 1.0};

/// Reduced Planck constant. Everything runs in units with hbar = 1; the
/// constant is kept explicit so formulas read the same as their derivations.
inline constexpr double kHbar = 1.0;

/// exp(-i * dt * H) for Hermitian H, via eigendecomposition. The result is
/// unitary to roundoff. A diagonal input takes an exact fast path.
Matrix hermitian_propagator(const Matrix& hermitian, double dt);

/// Largest absolute entry.
double max_abs(const Matrix& m);

/// max |(M^dagger M - I)_{ab}|.
double unitarity_defect(const Matrix& m);

/// max |(M - M^dagger)_{ab}|.
double hermiticity_defect(const Matrix& m);

/// Spectral (operator 2-) norm.
double spectral_norm(const Matrix& m);

}  // namespace adiabatic
