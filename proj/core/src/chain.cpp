#include "skelreg/chain.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace skelreg {

namespace {

struct TerminalTest {
    bool zero = false;
    bool invertible = false;
};

TerminalTest classify_iterate(const Matrix& iterate, double tol, double scale0) {
    TerminalTest t;
    t.zero = max_norm(iterate) <= tol * (1.0 + scale0);
    if (!t.zero && iterate.size() > 0) {
        Eigen::JacobiSVD<Matrix> svd(iterate);
        const auto& sv = svd.singularValues();
        t.invertible = sv(sv.size() - 1) > tol * sv(0);
    }
    return t;
}

/// Distance between the nonzero parts of two spectra. Eigenvalues below
/// `cutoff` count as zero; a defective zero eigenvalue of Jordan index k
/// is computed only to O(eps^{1/k}), so values that land inside the
/// hysteresis band [cutoff, 10 cutoff) may stay unmatched without
/// penalty. Matched pairs report their worst distance.
double nonzero_spectrum_distance(const Spectrum& sa, const Spectrum& sb, double cutoff) {
    Spectrum a, b;
    for (const Complex& z : sa) {
        if (std::abs(z) > cutoff) a.push_back(z);
    }
    for (const Complex& z : sb) {
        if (std::abs(z) > cutoff) b.push_back(z);
    }
    if (a.size() > b.size()) {
        std::swap(a, b);
    }
    double worst = 0.0;
    for (const Complex& x : a) {
        double best = std::numeric_limits<double>::infinity();
        std::size_t best_j = 0;
        for (std::size_t j = 0; j < b.size(); ++j) {
            const double d = std::abs(x - b[j]);
            if (d < best) {
                best = d;
                best_j = j;
            }
        }
        worst = std::max(worst, best);
        b.erase(b.begin() + static_cast<std::ptrdiff_t>(best_j));
    }
    for (const Complex& leftover : b) {
        if (std::abs(leftover) >= 10.0 * cutoff) {
            return std::numeric_limits<double>::infinity();
        }
    }
    return worst;
}

}  // namespace

SkeletonChain build_chain(const Matrix& b, double tol) {
    return build_chain_with(b, tol, [](const Matrix& m, double t) { return full_rank_factorize(m, t); });
}

SkeletonChain build_chain_with(const Matrix& b, double tol, const Factorizer& factorize) {
    if (b.rows() != b.cols()) {
        throw std::invalid_argument("build_chain: matrix must be square");
    }
    require_finite(b, "matrix");
    if (!(tol > 0.0)) {
        throw std::invalid_argument("build_chain: tolerance must be positive");
    }

    SkeletonChain chain;
    chain.b0 = b;
    chain.tol = tol;
    chain.dims.push_back(b.rows());

    const double scale0 = max_norm(b);
    Matrix iterate = b;

    while (true) {
        const TerminalTest t = classify_iterate(iterate, tol, scale0);
        if (t.zero) {
            chain.kind = ChainKind::Degenerate;
            return chain;
        }
        if (t.invertible) {
            chain.kind = ChainKind::Regular;
            return chain;
        }

        // Singular and nonzero: factor and permute. The rank drop keeps
        // the dimensions strictly decreasing, so this loop runs at most
        // n times.
        SkeletonFactorization f = factorize(iterate, tol);
        ChainLevel level;
        level.a_odd = std::move(f.left);
        level.a_even = std::move(f.right);
        level.b_next = level.a_even * level.a_odd;
        level.tolerance_ambiguous = f.tolerance_ambiguous;

        if (f.rank >= chain.dims.back()) {
            throw NumericError("build_chain: rank did not decrease; factorization inconsistent with terminal test");
        }
        chain.dims.push_back(f.rank);
        iterate = level.b_next;
        chain.levels.push_back(std::move(level));
    }
}

Matrix build_projector(const SkeletonChain& chain) {
    const Index n = chain.b0.rows();
    Matrix m = Matrix::Identity(n, n);
    for (const ChainLevel& level : chain.levels) {
        m = level.a_even * m;
    }
    return m;
}

ChainReport verify_chain(const SkeletonChain& chain, double tol) {
    ChainReport report;
    const double scale0 = max_norm(chain.b0);

    const Matrix* prev = &chain.b0;
    for (std::size_t i = 0; i < chain.levels.size(); ++i) {
        const ChainLevel& level = chain.levels[i];
        const Index lvl = static_cast<Index>(i) + 1;

        const double cond1 = max_norm(Matrix(level.a_odd * level.a_even - *prev));
        report.checks.push_back({"factorization", lvl, cond1 <= tol * (1.0 + max_norm(*prev)), cond1});

        const double perm = max_norm(Matrix(level.b_next - level.a_even * level.a_odd));
        report.checks.push_back({"permuted_product", lvl, perm <= tol * (1.0 + max_norm(level.b_next)), perm});

        const Index r = level.a_odd.cols();
        const bool ranks_full = rank_of(level.a_odd, tol) == r && rank_of(level.a_even, tol) == r;
        report.checks.push_back({"factor_ranks", lvl, ranks_full, 0.0});

        // Permuting the factors of a product preserves the nonzero
        // spectrum, so consecutive iterates must agree there.
        const double spec_cutoff = 1e-3 * (1.0 + scale0);
        const double spec_dist =
            nonzero_spectrum_distance(eigenvalues(*prev), eigenvalues(level.b_next), spec_cutoff);
        report.checks.push_back({"nonzero_spectrum", lvl, spec_dist <= 1e-7 * (1.0 + scale0), spec_dist});

        prev = &level.b_next;
    }

    bool strictly_decreasing = true;
    for (std::size_t i = 1; i < chain.dims.size(); ++i) {
        if (chain.dims[i] >= chain.dims[i - 1]) {
            strictly_decreasing = false;
        }
    }
    report.checks.push_back({"dims_strictly_decreasing", 0, strictly_decreasing, 0.0});

    // Interior iterates must be singular and nonzero; the terminal one is
    // invertible xor zero, matching the stored kind.
    bool interior_ok = true;
    const Matrix* it = &chain.b0;
    for (std::size_t i = 0; i < chain.levels.size(); ++i) {
        const TerminalTest t = classify_iterate(*it, tol, scale0);
        if (t.zero || t.invertible) {
            interior_ok = false;
        }
        it = &chain.levels[i].b_next;
    }
    report.checks.push_back({"interior_iterates_singular_nonzero", 0, interior_ok, 0.0});

    const TerminalTest t = classify_iterate(chain.terminal(), tol, scale0);
    const bool dichotomy = (t.zero != t.invertible) &&
                           (chain.kind == (t.zero ? ChainKind::Degenerate : ChainKind::Regular));
    report.checks.push_back({"terminal_dichotomy", 0, dichotomy, 0.0});

    return report;
}

}  // namespace skelreg
