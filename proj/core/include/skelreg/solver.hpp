#pragma once

#include "skelreg/chain.hpp"
#include "skelreg/signal.hpp"
#include "skelreg/types.hpp"

#include <memory>
#include <vector>

namespace skelreg {

/// Initial-value problem for b * dx/dt = x + f(t) with the hyperplane
/// condition M * x(0) = c0 on the terminal space of b's skeleton chain.
/// c0 lives in the coordinates produced by this library's chain (the
/// factor convention is deterministic, so the frame is reproducible).
struct RegularizedIVP {
    Matrix b;
    Signal f;
    Vector c0;
    double t_end = 1.0;
    double step = 1e-2;
};

/// Same equation for a degenerate (nilpotent) operator: no initial data
/// is admissible and none is required; the solution is unique.
struct DegenerateProblem {
    Matrix b;
    Signal f;
    double t_end = 1.0;
    double step = 1e-2;
};

/// Sampled solution on a uniform grid starting at t = 0. `derivatives`
/// holds x'(t_k) evaluated from the analytic representation of the
/// solution (never finite differences of the samples), which is what
/// residual_norm consumes.
struct Trajectory {
    std::vector<double> times;
    std::vector<Vector> states;
    std::vector<Vector> derivatives;
    /// Intermediate level trajectories x_1..x_p (level_states[i-1] is x_i),
    /// sampled on the same grid; empty when levels were not requested.
    std::vector<std::vector<Vector>> level_states;
    /// max over the grid of ||B x'(t) - x(t) - f(t)||_inf.
    double residual_max = 0.0;
    /// ||M x(0) - c0||_inf for regular solves, 0 otherwise.
    double hyperplane_defect = 0.0;
};

struct SolveOptions {
    /// Bound on the step-halving error estimate of the fixed-step
    /// integrator; exceeding it raises StepTooCoarseError.
    double integ_tol = 1e-8;
    /// Verification bound on ||M x(0) - c0||_inf.
    double hyperplane_tol = 1e-10;
    /// Entrywise tolerance for "chain was built from this matrix".
    double chain_match_tol = 1e-12;
    bool with_levels = true;
};

/// Solve the regularized problem along a regular chain: integrates the
/// reduced system B^p x_p' = x_p + M f on the grid with the classical
/// fourth-order one-step method, then back-substitutes through the chain.
/// Derivatives of x_p are eliminated algebraically through the reduced
/// equation, so every level is an exact affine function of x_p(t) and the
/// derivatives of f; no numerical differentiation is involved.
[[nodiscard]] Trajectory solve_regular(const RegularizedIVP& ivp, const SkeletonChain& chain,
                                       const SolveOptions& opt = {});

/// Forcing-evaluator variant of the same solve (see Forcing): f must
/// support derivatives up to chain.length() + 1.
[[nodiscard]] Trajectory solve_regular(const Matrix& b, const Forcing& f, const Vector& c0,
                                       double t_end, double step, const SkeletonChain& chain,
                                       const SolveOptions& opt = {});

/// Closed-form solution along a degenerate chain: the terminal level is
/// -M f, each level back-substitutes one factor, and the result is a
/// finite sum of matrix-weighted derivatives of f evaluated exactly.
[[nodiscard]] Trajectory solve_degenerate(const DegenerateProblem& prob, const SkeletonChain& chain,
                                          const SolveOptions& opt = {});

[[nodiscard]] Trajectory solve_degenerate(const Matrix& b, const Forcing& f, double t_end,
                                          double step, const SkeletonChain& chain,
                                          const SolveOptions& opt = {});

/// Direct iteration for nilpotent b (b^p = 0): u_0 = 0,
/// u_n = -f + b * u_{n-1}', performed symbolically on the coefficient
/// matrices. Post-verifies that the unrolled coefficients equal -b^k.
/// Throws NotNilpotentError when b^p is not zero at `tol`.
[[nodiscard]] Trajectory solve_nilpotent_iteration(const Matrix& b, const Signal& f, Index p,
                                                   double t_end, double step, double tol = 1e-10,
                                                   const SolveOptions& opt = {});

enum class Consistency { Consistent, Inconsistent };

[[nodiscard]] constexpr const char* to_string(Consistency c) noexcept {
    return c == Consistency::Consistent ? "consistent" : "inconsistent";
}

/// Classical solvability check: x(0) + f(0) must be orthogonal to every
/// null vector of the adjoint of b.
struct ConsistencyReport {
    Consistency verdict = Consistency::Consistent;
    /// max |<x0 + f(0), psi>| over the (unit-norm) adjoint null basis.
    double defect = 0.0;
    Index nullspace_dim = 0;
};

[[nodiscard]] ConsistencyReport check_classical_consistency(const Matrix& b, const Vector& x0,
                                                            const Signal& f, double tol);

enum class StabilityVerdict { Stable, Unstable, Indeterminate };

[[nodiscard]] constexpr const char* to_string(StabilityVerdict v) noexcept {
    switch (v) {
        case StabilityVerdict::Stable: return "stable";
        case StabilityVerdict::Unstable: return "unstable";
        default: return "indeterminate";
    }
}

struct StabilityReport {
    StabilityVerdict verdict = StabilityVerdict::Indeterminate;
    /// Eigenvalues of the terminal iterate B^p.
    Spectrum spectrum;
    /// max Re over the terminal spectrum.
    double spectral_abscissa = 0.0;
    /// max Re over the reciprocals 1/lambda: the abscissa of the
    /// propagation matrix (B^p)^{-1}, which sets the actual decay rate.
    /// Re(lambda) < 0 iff Re(1/lambda) < 0, so the verdict is the same
    /// either way.
    double propagation_abscissa = 0.0;
    double margin = 0.0;
};

/// Stability of the homogeneous regularized problem, decided from the
/// terminal spectrum. Eigenvalues inside the +-margin band around the
/// imaginary axis yield Indeterminate rather than a guess.
[[nodiscard]] StabilityReport check_stability(const SkeletonChain& chain, double margin = 1e-9);

/// max over sample points of ||b x'(t) - x(t) - f(t)||_inf; verdict data,
/// never throws on a large residual.
[[nodiscard]] double residual_norm(const Matrix& b, const Trajectory& traj, const Signal& f);
[[nodiscard]] double residual_norm(const Matrix& b, const Trajectory& traj, const Forcing& f);

/// Uniform grid {0, step, 2 step, ..., t_end} used by all solvers (a
/// shorter final interval absorbs a step that does not divide t_end).
[[nodiscard]] std::vector<double> sample_grid(double t_end, double step);

}  // namespace skelreg
