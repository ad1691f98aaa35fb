#pragma once

#include "skelreg/signal.hpp"
#include "skelreg/types.hpp"

#include <cstdint>
#include <vector>

namespace skelreg {

/// Recipe for a test problem with a known analytic solution: the operator
/// is assembled as b = S * diag(core, nilpotent) * S^{-1}, which
/// decouples the equation into an invertible block (a well-posed linear
/// ODE) and a nilpotent block (closed-form algebraic solution).
struct SynthSpec {
    Matrix core;        ///< c x c, invertible
    Matrix nilpotent;   ///< q x q with nilpotent^q = 0 (strictly upper triangular)
    Matrix similarity;  ///< (c+q) x (c+q), invertible
    Signal f;           ///< forcing, dim c+q
    Vector c0_core;     ///< initial value of the core block, dim c

    [[nodiscard]] Index core_dim() const noexcept { return core.rows(); }
    [[nodiscard]] Index nilpotent_dim() const noexcept { return nilpotent.rows(); }
    [[nodiscard]] Index dim() const noexcept { return core_dim() + nilpotent_dim(); }
};

struct Synthesized;

/// Closed-form evaluator of the synthesized solution.
///
/// Core block: modal decomposition of the reduced system, with the
/// forcing convolved exactly against each mode (exp-poly-trig integrals
/// in closed form). When the eigenvector matrix is too ill-conditioned
/// for the modal route, falls back to fixed-step reference integration
/// (step 1e-4, Richardson-extrapolated), which is reproducible
/// bit-for-bit. Nilpotent block: the finite derivative sum, exact.
class AnalyticSolution {
public:
    [[nodiscard]] Index dim() const noexcept { return similarity_.rows(); }

    [[nodiscard]] Vector eval(double t) const;

    /// Evaluate on an increasing grid starting at 0 (the only mode the
    /// reference-integration fallback supports efficiently).
    [[nodiscard]] std::vector<Vector> eval_on(const std::vector<double>& times) const;

    [[nodiscard]] Vector initial_state() const { return eval(0.0); }

    [[nodiscard]] bool used_reference_integration() const noexcept { return reference_path_; }

private:
    friend Synthesized synthesize(const SynthSpec& spec);

    // One complex exponential-polynomial forcing contribution to a mode.
    struct ModalTerm {
        Complex gamma;
        int power = 0;
        Complex rate;
    };

    Matrix similarity_;
    Index core_dim_ = 0;

    // Modal route.
    bool reference_path_ = false;
    Eigen::MatrixXcd modes_;                        // eigenvectors V
    Eigen::VectorXcd lambdas_;                      // eigenvalues of core^{-1}
    Eigen::VectorXcd w0_;                           // V^{-1} y(0)
    std::vector<std::vector<ModalTerm>> mode_terms_;

    // Reference route.
    Matrix core_;
    Signal core_forcing_;  // core^{-1} g1
    Vector y0_;

    // Nilpotent block: z(t) = sum_k z_coeff_[k] g2^{(k)}(t).
    std::vector<Matrix> z_coeff_;
    std::vector<Signal> g2_derivs_;

    [[nodiscard]] Vector eval_core(double t) const;
    [[nodiscard]] Vector eval_nilpotent(double t) const;
};

struct Synthesized {
    Matrix b;
    AnalyticSolution analytic;
};

/// Assemble the operator and its analytic solution. Throws
/// SpecInvalidError when the spec violates its invariants.
[[nodiscard]] Synthesized synthesize(const SynthSpec& spec);

/// Deterministic pseudo-random spec: block split drawn from the seed,
/// condition numbers of core and similarity kept modest (far below the
/// 1e3 cap), forcing with at most 3 terms per component and bounded
/// rates so that derivatives stay well scaled over desk-scale horizons.
[[nodiscard]] SynthSpec random_spec(std::uint64_t seed, Index n);

/// Same generator with the block sizes pinned (used to target purely
/// nilpotent or purely regular ensembles).
[[nodiscard]] SynthSpec random_spec_with_blocks(std::uint64_t seed, Index core_dim, Index nilpotent_dim);

}  // namespace skelreg
