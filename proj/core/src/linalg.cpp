#include "skelreg/linalg.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <cmath>
#include <stdexcept>
#include <string>

namespace skelreg {

void require_finite(const Matrix& m, const char* what) {
    if (!m.allFinite()) {
        throw NonFiniteError(std::string(what) + " contains NaN or Inf");
    }
}

void require_finite(const Vector& v, const char* what) {
    if (!v.allFinite()) {
        throw NonFiniteError(std::string(what) + " contains NaN or Inf");
    }
}

namespace {

void require_positive_tol(double tol) {
    if (!(tol > 0.0)) {
        throw std::invalid_argument("tolerance must be positive");
    }
}

Eigen::JacobiSVD<Matrix> thin_svd(const Matrix& m) {
    return Eigen::JacobiSVD<Matrix>(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
}

Index rank_from_singular_values(const Eigen::VectorXd& sv, double tol) {
    if (sv.size() == 0 || sv(0) <= 0.0) {
        return 0;
    }
    const double cutoff = tol * sv(0);
    Index r = 0;
    while (r < sv.size() && sv(r) > cutoff) {
        ++r;
    }
    return r;
}

bool near_cutoff(const Eigen::VectorXd& sv, double tol) {
    if (sv.size() == 0 || sv(0) <= 0.0) {
        return false;
    }
    const double cutoff = tol * sv(0);
    for (Index i = 0; i < sv.size(); ++i) {
        if (sv(i) > cutoff / 10.0 && sv(i) < cutoff * 10.0) {
            return true;
        }
    }
    return false;
}

}  // namespace

SkeletonFactorization full_rank_factorize(const Matrix& m, double tol) {
    require_finite(m, "matrix");
    require_positive_tol(tol);

    SkeletonFactorization out;
    out.tol_used = tol;

    if (m.size() == 0) {
        out.left = Matrix(m.rows(), 0);
        out.right = Matrix(0, m.cols());
        return out;
    }

    const auto svd = thin_svd(m);
    const Eigen::VectorXd& sv = svd.singularValues();
    const Index r = rank_from_singular_values(sv, tol);

    out.rank = r;
    out.tolerance_ambiguous = near_cutoff(sv, tol);
    out.left = svd.matrixU().leftCols(r) * sv.head(r).asDiagonal();
    out.right = svd.matrixV().leftCols(r).transpose();

    // Deterministic sign: largest-magnitude entry of each row of `right`
    // made positive (column of `left` flipped to compensate).
    for (Index i = 0; i < r; ++i) {
        Index argmax = 0;
        out.right.row(i).cwiseAbs().maxCoeff(&argmax);
        if (out.right(i, argmax) < 0.0) {
            out.right.row(i) = -out.right.row(i);
            out.left.col(i) = -out.left.col(i);
        }
    }
    return out;
}

Index rank_of(const Matrix& m, double tol) {
    require_finite(m, "matrix");
    require_positive_tol(tol);
    if (m.size() == 0) {
        return 0;
    }
    Eigen::JacobiSVD<Matrix> svd(m);
    return rank_from_singular_values(svd.singularValues(), tol);
}

Spectrum eigenvalues(const Matrix& m) {
    if (m.rows() != m.cols()) {
        throw std::invalid_argument("eigenvalues: matrix must be square");
    }
    require_finite(m, "matrix");
    if (m.rows() == 0) {
        return {};
    }
    if (m.rows() == 1) {
        return {Complex(m(0, 0), 0.0)};
    }
    Eigen::EigenSolver<Matrix> es(m, /*computeEigenvectors=*/false);
    if (es.info() != Eigen::Success) {
        throw NoConvergenceError("eigenvalue iteration did not converge");
    }
    const auto& ev = es.eigenvalues();
    return Spectrum(ev.data(), ev.data() + ev.size());
}

LinearSolve solve_linear(const Matrix& m, const Vector& rhs, double tol) {
    if (m.rows() != m.cols()) {
        throw std::invalid_argument("solve_linear: matrix must be square");
    }
    if (m.rows() != rhs.size()) {
        throw std::invalid_argument("solve_linear: rhs dimension mismatch");
    }
    require_finite(m, "matrix");
    require_finite(rhs, "rhs");
    require_positive_tol(tol);

    if (m.rows() == 0) {
        return {Vector(0), 1.0};
    }

    const auto svd = thin_svd(m);
    const Eigen::VectorXd& sv = svd.singularValues();
    const double smax = sv(0);
    const double smin = sv(sv.size() - 1);
    if (smax <= 0.0 || smin <= tol * smax) {
        throw SingularError("solve_linear: matrix is singular at tolerance");
    }
    return {svd.solve(rhs), smax / smin};
}

NullspaceBasis adjoint_nullspace(const Matrix& m, double tol) {
    if (m.rows() != m.cols()) {
        throw std::invalid_argument("adjoint_nullspace: matrix must be square");
    }
    require_finite(m, "matrix");
    require_positive_tol(tol);

    const Index n = m.rows();
    if (n == 0) {
        return {Matrix(0, 0)};
    }
    // ker(m^T) is spanned by the left singular vectors of m whose
    // singular values fall below the rank cutoff.
    Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeFullU);
    const Index r = rank_from_singular_values(svd.singularValues(), tol);
    return {svd.matrixU().rightCols(n - r)};
}

}  // namespace skelreg
