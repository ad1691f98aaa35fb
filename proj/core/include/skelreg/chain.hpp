#pragma once

#include "skelreg/linalg.hpp"
#include "skelreg/types.hpp"

#include <functional>
#include <string>
#include <vector>

namespace skelreg {

/// One factorization level of a skeleton chain.
///
/// Level i (1-based) factors the previous iterate as
///   B_{i-1} = a_odd * a_even       (a_odd: r_{i-1} x r_i, a_even: r_i x r_{i-1})
/// and forms the next iterate by permuting the factors:
///   b_next = a_even * a_odd        (r_i x r_i)
struct ChainLevel {
    Matrix a_odd;
    Matrix a_even;
    Matrix b_next;
    bool tolerance_ambiguous = false;
};

enum class ChainKind { Regular, Degenerate };

[[nodiscard]] constexpr const char* to_string(ChainKind k) noexcept {
    return k == ChainKind::Regular ? "regular" : "degenerate";
}

/// The skeleton chain of a square operator: the sequence of iterates
/// obtained by factoring each singular iterate and permuting the factors,
/// continued until the iterate is invertible (Regular) or zero
/// (Degenerate). Dimensions decrease strictly, so the chain has at most n
/// levels.
struct SkeletonChain {
    Matrix b0;                      ///< the original operator, n x n
    std::vector<ChainLevel> levels; ///< length p
    ChainKind kind = ChainKind::Regular;
    std::vector<Index> dims;        ///< [n, r_1, ..., r_p], strictly decreasing
    double tol = 0.0;               ///< rank tolerance the chain was built with

    [[nodiscard]] Index length() const noexcept { return static_cast<Index>(levels.size()); }

    /// Terminal iterate B^p (B itself when p = 0).
    [[nodiscard]] const Matrix& terminal() const noexcept {
        return levels.empty() ? b0 : levels.back().b_next;
    }

    [[nodiscard]] Index terminal_dim() const noexcept { return dims.back(); }

    [[nodiscard]] bool any_tolerance_ambiguous() const noexcept {
        for (const auto& level : levels) {
            if (level.tolerance_ambiguous) return true;
        }
        return false;
    }
};

/// Pluggable factorization hook; build_chain_with uses it in place of
/// full_rank_factorize. Any output satisfying the SkeletonFactorization
/// contract (left * right = input, both factors of full rank) yields a
/// valid chain; downstream results are invariant to the choice.
using Factorizer = std::function<SkeletonFactorization(const Matrix&, double)>;

/// Build the skeleton chain of a square matrix.
///
/// The terminal test at each iterate, relative to the scale of the
/// original matrix:
///   zero        if max-norm <= tol * (1 + max-norm of b)
///   invertible  if sigma_min > tol * sigma_max
/// and otherwise the iterate is factored and the chain continues.
[[nodiscard]] SkeletonChain build_chain(const Matrix& b, double tol);

[[nodiscard]] SkeletonChain build_chain_with(const Matrix& b, double tol, const Factorizer& factorize);

/// Regularizing map M onto the terminal space: the composition of the
/// even factors, applied innermost-first (dimension-forced order). Shape
/// r_p x n; the identity when p = 0.
[[nodiscard]] Matrix build_projector(const SkeletonChain& chain);

struct ChainCheck {
    std::string name;
    Index level = 0;  ///< 0 for whole-chain checks
    bool pass = false;
    double residual = 0.0;
};

struct ChainReport {
    std::vector<ChainCheck> checks;

    [[nodiscard]] bool all_pass() const noexcept {
        for (const auto& c : checks) {
            if (!c.pass) return false;
        }
        return true;
    }
};

/// Re-derive every chain invariant from the stored matrices: the two
/// factorization identities per level, full factor ranks, strict
/// dimension decrease, the terminal invertible-or-zero dichotomy, and
/// agreement of the nonzero spectra of consecutive iterates. Verdicts
/// are data; nothing throws.
[[nodiscard]] ChainReport verify_chain(const SkeletonChain& chain, double tol);

}  // namespace skelreg
