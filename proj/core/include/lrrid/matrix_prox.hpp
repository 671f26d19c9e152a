#pragma once

#include <Eigen/Dense>

namespace lrrid {

/// Dense real matrix, column-major storage (Eigen default).
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Thin singular value decomposition A = U * diag(sigma) * Vt with
/// r = min(rows, cols) and sigma sorted non-increasing.
struct SvdFactors {
    Matrix U;      // rows x r
    Vector sigma;  // r
    Matrix Vt;     // r x cols
};

/// Elementwise shrinkage sign(a) * max(|a| - eps, 0).
/// Throws std::invalid_argument if eps < 0.
Matrix soft_threshold(const Matrix& A, double eps);

/// Proximal map of tau * nuclear norm: shrink the singular values of A by tau.
/// Throws std::invalid_argument if tau < 0, NumericalError if the SVD fails.
Matrix singular_value_threshold(const Matrix& A, double tau);

/// Thin SVD. Throws NumericalError on non-finite input or failed convergence.
SvdFactors svd(const Matrix& A);

/// Singular values only, non-increasing.
Vector singular_values(const Matrix& A);

/// Sum of singular values.
double nuclear_norm(const Matrix& A);

/// Rescales every column with l2 norm > 1 onto the unit sphere; other
/// columns are left untouched, so the result lies in the unit ball.
Matrix project_columns_unit_ball(const Matrix& D);

/// Rescales every nonzero column to unit l2 norm. Zero columns stay zero.
Matrix normalize_columns_unit_sphere(const Matrix& D);

/// Solves A X = B for symmetric positive definite A by Cholesky.
/// Throws std::invalid_argument on shape mismatch and NumericalError when A
/// is not numerically SPD.
Matrix solve_spd(const Matrix& A, const Matrix& B);

/// Largest eigenvalue of a symmetric positive semidefinite matrix by power
/// iteration from a fixed start vector.
double spectral_norm_psd(const Matrix& S, int iterations = 50);

/// max_ij |A_ij|; 0 for an empty matrix.
double max_abs(const Matrix& A);

bool all_finite(const Matrix& A);

}  // namespace lrrid
