#pragma once

// Shared test helpers. The rank and derivative oracles here are kept
// deliberately independent of the library's SVD/eigensolver path: rank by
// Gaussian elimination with full pivoting, derivatives by central
// differences.

#include <skelreg/types.hpp>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

namespace test_support {

using skelreg::Complex;
using skelreg::Index;
using skelreg::Matrix;
using skelreg::Vector;

/// Rank by Gaussian elimination with full pivoting; pivots below
/// tol * (first pivot) stop the elimination.
inline Index elimination_rank(Matrix m, double tol) {
    const Index rows = m.rows();
    const Index cols = m.cols();
    Index rank = 0;
    double first_pivot = 0.0;
    for (Index step = 0; step < std::min(rows, cols); ++step) {
        Index pi = step, pj = step;
        double pivot = 0.0;
        for (Index i = step; i < rows; ++i) {
            for (Index j = step; j < cols; ++j) {
                if (std::abs(m(i, j)) > pivot) {
                    pivot = std::abs(m(i, j));
                    pi = i;
                    pj = j;
                }
            }
        }
        if (step == 0) {
            first_pivot = pivot;
        }
        if (pivot <= tol * (first_pivot > 0.0 ? first_pivot : 1.0)) {
            break;
        }
        m.row(step).swap(m.row(pi));
        m.col(step).swap(m.col(pj));
        for (Index i = step + 1; i < rows; ++i) {
            const double factor = m(i, step) / m(step, step);
            m.row(i).tail(cols - step) -= factor * m.row(step).tail(cols - step);
        }
        ++rank;
    }
    return rank;
}

/// Deterministic uniforms (same construction as the library generator,
/// reimplemented here on purpose).
struct TestRng {
    std::mt19937_64 engine;

    explicit TestRng(std::uint64_t seed) : engine(seed) {}

    double uniform() { return static_cast<double>(engine() >> 11) * 0x1.0p-53; }

    double range(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    double gaussian() {
        const double u1 = std::max(uniform(), 1e-300);
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
    }

    Matrix gaussian_matrix(Index rows, Index cols) {
        Matrix m(rows, cols);
        for (Index i = 0; i < rows; ++i) {
            for (Index j = 0; j < cols; ++j) {
                m(i, j) = gaussian();
            }
        }
        return m;
    }

    /// Random n x n matrix of exact construction rank r.
    Matrix rank_deficient(Index n, Index r) {
        if (r == 0) {
            return Matrix::Zero(n, n);
        }
        return gaussian_matrix(n, r) * gaussian_matrix(r, n) / std::sqrt(static_cast<double>(n));
    }
};

/// Greedy multiset match; infinity when sizes differ.
inline double match_spectra(std::vector<Complex> a, std::vector<Complex> b) {
    if (a.size() != b.size()) {
        return std::numeric_limits<double>::infinity();
    }
    double worst = 0.0;
    for (const Complex& x : a) {
        double best = std::numeric_limits<double>::infinity();
        std::size_t best_j = 0;
        for (std::size_t j = 0; j < b.size(); ++j) {
            if (std::abs(x - b[j]) < best) {
                best = std::abs(x - b[j]);
                best_j = j;
            }
        }
        worst = std::max(worst, best);
        if (!b.empty()) {
            b.erase(b.begin() + static_cast<std::ptrdiff_t>(best_j));
        }
    }
    return worst;
}

inline std::vector<Complex> nonzero_of(const std::vector<Complex>& s, double cutoff) {
    std::vector<Complex> out;
    for (const Complex& z : s) {
        if (std::abs(z) > cutoff) out.push_back(z);
    }
    return out;
}

/// Match the nonzero parts of two spectra, forgiving unmatched values
/// inside [cutoff, 10 cutoff): a defective zero eigenvalue of Jordan
/// index k is only computed to O(eps^{1/k}) and may straddle the cutoff.
inline double nonzero_match(const std::vector<Complex>& sa, const std::vector<Complex>& sb,
                            double cutoff) {
    std::vector<Complex> a = nonzero_of(sa, cutoff);
    std::vector<Complex> b = nonzero_of(sb, cutoff);
    if (a.size() > b.size()) {
        std::swap(a, b);
    }
    double worst = 0.0;
    for (const Complex& x : a) {
        double best = std::numeric_limits<double>::infinity();
        std::size_t best_j = 0;
        for (std::size_t j = 0; j < b.size(); ++j) {
            if (std::abs(x - b[j]) < best) {
                best = std::abs(x - b[j]);
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

}  // namespace test_support
