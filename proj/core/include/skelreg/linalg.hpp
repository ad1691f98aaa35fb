#pragma once

#include "skelreg/errors.hpp"
#include "skelreg/types.hpp"

namespace skelreg {

/// Full-rank (skeleton) factorization m = left * right with inner
/// dimension equal to the numerical rank of m.
///
/// Convention: from a truncated SVD U_r * S_r * V_r^T, left = U_r * S_r
/// and right = V_r^T, so right has orthonormal rows and the conditioning
/// of m concentrates in left. Signs are fixed by making the
/// largest-magnitude entry of each row of right positive, which makes the
/// factors deterministic.
struct SkeletonFactorization {
    Matrix left;    ///< rows x rank
    Matrix right;   ///< rank x cols
    Index rank = 0;
    double tol_used = 0.0;
    /// Set when some singular value lies within a factor of 10 of the
    /// rank cutoff; the rank decision is then sensitive to the tolerance.
    bool tolerance_ambiguous = false;
};

/// Rank-revealing skeleton factorization. rank = number of singular
/// values above tol * sigma_max (zero matrix gives rank 0 and factors
/// with zero inner dimension).
///
/// Throws NonFiniteError for NaN/Inf input and std::invalid_argument for
/// tol <= 0. A borderline spectrum is reported through
/// tolerance_ambiguous, never as an error.
[[nodiscard]] SkeletonFactorization full_rank_factorize(const Matrix& m, double tol);

/// Numerical rank under the relative threshold tol * sigma_max.
[[nodiscard]] Index rank_of(const Matrix& m, double tol);

/// All eigenvalues of a square matrix, with algebraic multiplicity, in
/// unspecified order. Backed by a real-Schur eigensolver; the computed
/// values are exact eigenvalues of a matrix within
/// O(machine-epsilon * ||m||) of the input.
[[nodiscard]] Spectrum eigenvalues(const Matrix& m);

/// Solution of a numerically nonsingular square system.
struct LinearSolve {
    Vector x;
    /// sigma_max / sigma_min of the coefficient matrix.
    double condition = 0.0;
};

/// Solve m * x = rhs. Throws SingularError when m is rank-deficient at
/// the given tolerance (sigma_min <= tol * sigma_max). The SVD-based
/// solve keeps the relative residual at the backward-stable level, about
/// machine-epsilon times the condition number.
[[nodiscard]] LinearSolve solve_linear(const Matrix& m, const Vector& rhs, double tol = 1e-12);

/// Orthonormal basis of ker(m^T), the null space of the adjoint.
struct NullspaceBasis {
    /// n x k matrix whose columns span ker(m^T); k = n - rank(m).
    Matrix vectors;

    [[nodiscard]] Index dimension() const noexcept { return vectors.cols(); }
};

[[nodiscard]] NullspaceBasis adjoint_nullspace(const Matrix& m, double tol);

/// Throws NonFiniteError if any entry is NaN/Inf. `what` names the
/// operand in the message.
void require_finite(const Matrix& m, const char* what);
void require_finite(const Vector& v, const char* what);

}  // namespace skelreg
