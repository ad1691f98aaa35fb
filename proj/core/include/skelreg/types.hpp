#pragma once

#include <Eigen/Core>
#include <complex>
#include <vector>

namespace skelreg {

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Complex = std::complex<double>;
using Spectrum = std::vector<Complex>;

/// Entrywise max-norm; 0 for empty matrices.
[[nodiscard]] inline double max_norm(const Matrix& m) {
    return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

[[nodiscard]] inline double max_norm(const Vector& v) {
    return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff();
}

}  // namespace skelreg
