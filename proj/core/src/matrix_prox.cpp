#include "lrrid/matrix_prox.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "lrrid/errors.hpp"

namespace lrrid {

namespace {

double shrink(double a, double eps) {
    const double magnitude = std::abs(a) - eps;
    if (magnitude <= 0.0) return 0.0;
    return a > 0.0 ? magnitude : -magnitude;
}

void require_finite(const Matrix& A, const char* what) {
    if (!all_finite(A)) {
        throw NumericalError(std::string(what) + ": input contains NaN or Inf");
    }
}

}  // namespace

bool all_finite(const Matrix& A) { return A.allFinite(); }

double max_abs(const Matrix& A) {
    return A.size() == 0 ? 0.0 : A.cwiseAbs().maxCoeff();
}

Matrix soft_threshold(const Matrix& A, double eps) {
    if (!(eps >= 0.0)) {
        throw std::invalid_argument("soft_threshold: threshold must be non-negative");
    }
    return A.unaryExpr([eps](double a) { return shrink(a, eps); });
}

SvdFactors svd(const Matrix& A) {
    require_finite(A, "svd");
    SvdFactors out;
    if (A.size() == 0) {
        const auto r = std::min(A.rows(), A.cols());
        out.U = Matrix::Zero(A.rows(), r);
        out.sigma = Vector::Zero(r);
        out.Vt = Matrix::Zero(r, A.cols());
        return out;
    }
    Eigen::BDCSVD<Matrix> dec(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
    if (dec.info() != Eigen::Success) {
        std::ostringstream msg;
        msg << "svd: decomposition of a " << A.rows() << "x" << A.cols()
            << " matrix did not converge (max |a| = " << max_abs(A) << ")";
        throw NumericalError(msg.str());
    }
    out.U = dec.matrixU();
    out.sigma = dec.singularValues();
    out.Vt = dec.matrixV().transpose();
    return out;
}

Vector singular_values(const Matrix& A) {
    require_finite(A, "singular_values");
    if (A.size() == 0) return Vector::Zero(std::min(A.rows(), A.cols()));
    Eigen::BDCSVD<Matrix> dec(A);
    if (dec.info() != Eigen::Success) {
        throw NumericalError("singular_values: decomposition did not converge");
    }
    return dec.singularValues();
}

double nuclear_norm(const Matrix& A) { return singular_values(A).sum(); }

Matrix singular_value_threshold(const Matrix& A, double tau) {
    if (!(tau >= 0.0)) {
        throw std::invalid_argument(
            "singular_value_threshold: threshold must be non-negative");
    }
    const SvdFactors f = svd(A);
    Eigen::Index rank = 0;
    while (rank < f.sigma.size() && f.sigma(rank) > tau) ++rank;
    if (rank == 0) return Matrix::Zero(A.rows(), A.cols());
    const Vector shrunk = f.sigma.head(rank).array() - tau;
    return f.U.leftCols(rank) * shrunk.asDiagonal() * f.Vt.topRows(rank);
}

Matrix project_columns_unit_ball(const Matrix& D) {
    Matrix out = D;
    for (Eigen::Index j = 0; j < out.cols(); ++j) {
        // Columns already rescaled can land a few ulps above 1; leave them alone.
        const double norm = out.col(j).norm();
        if (norm > 1.0 + 4.0 * std::numeric_limits<double>::epsilon()) out.col(j) /= norm;
    }
    return out;
}

Matrix normalize_columns_unit_sphere(const Matrix& D) {
    Matrix out = D;
    for (Eigen::Index j = 0; j < out.cols(); ++j) {
        const double norm = out.col(j).norm();
        if (norm > 0.0) out.col(j) /= norm;
    }
    return out;
}

Matrix solve_spd(const Matrix& A, const Matrix& B) {
    if (A.rows() != A.cols()) {
        throw std::invalid_argument("solve_spd: system matrix must be square");
    }
    if (A.rows() != B.rows()) {
        throw std::invalid_argument("solve_spd: right-hand side row count mismatch");
    }
    require_finite(A, "solve_spd");
    require_finite(B, "solve_spd");
    if (A.size() == 0) return Matrix::Zero(0, B.cols());

    const double asym = (A - A.transpose()).cwiseAbs().maxCoeff();
    if (asym > 1e-10 * std::max(1.0, max_abs(A))) {
        throw NumericalError("solve_spd: system matrix is not symmetric");
    }
    const Eigen::LLT<Matrix> llt(A);
    if (llt.info() != Eigen::Success) {
        throw NumericalError("solve_spd: system matrix is not positive definite");
    }
    const Vector diag = Matrix(llt.matrixL()).diagonal();
    const double ratio = diag.minCoeff() / diag.maxCoeff();
    // Cholesky pivots are square roots of the eigenvalue scale.
    if (!(ratio * ratio > 64.0 * std::numeric_limits<double>::epsilon())) {
        throw NumericalError("solve_spd: system matrix is numerically singular");
    }
    Matrix X = llt.solve(B);
    // One step of iterative refinement tightens the residual for
    // moderately conditioned systems.
    X += llt.solve(B - A * X);
    return X;
}

double spectral_norm_psd(const Matrix& S, int iterations) {
    if (S.size() == 0) return 0.0;
    Vector v = Vector::Ones(S.cols()) / std::sqrt(static_cast<double>(S.cols()));
    double estimate = 0.0;
    for (int i = 0; i < iterations; ++i) {
        const Vector w = S * v;
        const double norm = w.norm();
        if (norm == 0.0) return 0.0;
        estimate = norm;
        v = w / norm;
    }
    return estimate;
}

}  // namespace lrrid
