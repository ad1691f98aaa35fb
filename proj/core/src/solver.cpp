#include "skelreg/solver.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>

namespace skelreg {

std::vector<double> sample_grid(double t_end, double step) {
    if (!(t_end > 0.0)) {
        throw std::invalid_argument("t_end must be positive");
    }
    if (!(step > 0.0) || step > t_end * (1.0 + 1e-12)) {
        throw std::invalid_argument("step must satisfy 0 < step <= t_end");
    }
    std::vector<double> times;
    const auto n_full = static_cast<std::size_t>(std::floor(t_end / step + 1e-9));
    times.reserve(n_full + 2);
    for (std::size_t k = 0; k <= n_full; ++k) {
        times.push_back(static_cast<double>(k) * step);
    }
    if (times.back() < t_end - 1e-12 * t_end) {
        times.push_back(t_end);
    } else {
        times.back() = t_end;  // absorb rounding in the last multiple
    }
    return times;
}

namespace {

void check_chain_matches(const Matrix& b, const SkeletonChain& chain, double tol) {
    if (chain.b0.rows() != b.rows() || chain.b0.cols() != b.cols() ||
        max_norm(Matrix(chain.b0 - b)) > tol * (1.0 + max_norm(b))) {
        throw ChainMismatchError("chain was not built from this problem's matrix");
    }
}

/// Affine representation of one chain level:
///   x_i(t) = state_part * x_p(t) + sum_j forcing_parts[j] * f^{(j)}(t).
/// Degenerate chains carry no reduced state; state_part then has zero
/// columns and x_p is the empty vector.
struct LevelForm {
    Matrix state_part;
    std::vector<Matrix> forcing_parts;
};

Vector eval_form(const LevelForm& form, const Vector& xp, const std::vector<Vector>& fd) {
    Vector v = form.state_part * xp;
    for (std::size_t j = 0; j < form.forcing_parts.size(); ++j) {
        v += form.forcing_parts[j] * fd[j];
    }
    return v;
}

/// d/dt of the form, with x_p' already eliminated through the reduced
/// equation: xp_dot = K (x_p + M f).
Vector eval_form_derivative(const LevelForm& form, const Vector& xp_dot,
                            const std::vector<Vector>& fd) {
    Vector v = form.state_part * xp_dot;
    for (std::size_t j = 0; j < form.forcing_parts.size(); ++j) {
        v += form.forcing_parts[j] * fd[j + 1];
    }
    return v;
}

void append_forcing(LevelForm& dst, std::size_t index, const Matrix& add) {
    if (dst.forcing_parts.size() <= index) {
        dst.forcing_parts.resize(index + 1, Matrix::Zero(dst.state_part.rows(), add.cols()));
    }
    dst.forcing_parts[index] += add;
}

/// Back-substitution through the chain, top level downwards. `kmap`
/// applies (B^p)^{-1}; pass nullptr for degenerate chains, where the
/// terminal level is -M f and no state survives.
///
/// Recursion per level i (a_odd = A_{2i+1}, prefix = A_{2i}...A_2):
///   x_i = -prefix * f + a_odd * x_{i+1}'
std::vector<LevelForm> build_level_forms(const SkeletonChain& chain, const Matrix& projector,
                                         const Matrix* kmap) {
    const Index n = chain.b0.rows();
    const Index p = chain.length();
    const Index rp = chain.terminal_dim();
    const bool regular = kmap != nullptr;

    // Prefix projectors: prefix[i] = A_{2i} * ... * A_2 (identity at i=0).
    std::vector<Matrix> prefix(static_cast<std::size_t>(p) + 1);
    prefix[0] = Matrix::Identity(n, n);
    for (Index i = 1; i <= p; ++i) {
        prefix[static_cast<std::size_t>(i)] =
            chain.levels[static_cast<std::size_t>(i - 1)].a_even * prefix[static_cast<std::size_t>(i - 1)];
    }

    std::vector<LevelForm> forms(static_cast<std::size_t>(p) + 1);
    LevelForm& top = forms[static_cast<std::size_t>(p)];
    if (regular) {
        top.state_part = Matrix::Identity(rp, rp);
    } else {
        top.state_part = Matrix(rp, 0);
        top.forcing_parts.push_back(-prefix[static_cast<std::size_t>(p)]);
    }

    for (Index i = p - 1; i >= 0; --i) {
        const LevelForm& above = forms[static_cast<std::size_t>(i + 1)];
        const Matrix& a_odd = chain.levels[static_cast<std::size_t>(i)].a_odd;
        LevelForm& form = forms[static_cast<std::size_t>(i)];

        form.state_part = regular ? Matrix(a_odd * above.state_part * *kmap)
                                  : Matrix(chain.dims[static_cast<std::size_t>(i)], 0);
        append_forcing(form, 0, -prefix[static_cast<std::size_t>(i)]);
        if (regular) {
            append_forcing(form, 0, a_odd * above.state_part * *kmap * projector);
        }
        for (std::size_t j = 0; j < above.forcing_parts.size(); ++j) {
            append_forcing(form, j + 1, a_odd * above.forcing_parts[j]);
        }
    }
    return forms;
}

std::size_t max_forcing_order(const std::vector<LevelForm>& forms) {
    std::size_t m = 0;
    for (const auto& form : forms) {
        m = std::max(m, form.forcing_parts.size());
    }
    return m;
}

/// Classical RK4 over the grid for x' = solve(x + g(t)), `substeps` equal
/// steps per grid interval. Returns the state at every grid point.
template <typename Solve, typename GEval>
std::vector<Vector> integrate_rk4(const Solve& solve, const GEval& g, const Vector& x0,
                                  const std::vector<double>& times, int substeps) {
    std::vector<Vector> states;
    states.reserve(times.size());
    states.push_back(x0);
    Vector x = x0;
    for (std::size_t k = 0; k + 1 < times.size(); ++k) {
        const double h = (times[k + 1] - times[k]) / substeps;
        double t = times[k];
        for (int s = 0; s < substeps; ++s) {
            const Vector g0 = g(t);
            const Vector gh = g(t + 0.5 * h);
            const Vector g1 = g(t + h);
            const Vector k1 = solve(x + g0);
            const Vector k2 = solve(x + 0.5 * h * k1 + gh);
            const Vector k3 = solve(x + 0.5 * h * k2 + gh);
            const Vector k4 = solve(x + h * k3 + g1);
            x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            t += h;
        }
        states.push_back(x);
    }
    return states;
}

Trajectory sample_trajectory(const SkeletonChain& chain, const Forcing& f,
                             const std::vector<LevelForm>& forms,
                             const std::vector<double>& times,
                             const std::vector<Vector>& xp_states, const Matrix* kmap,
                             const Matrix& projector, const SolveOptions& opt) {
    const Index p = chain.length();
    const std::size_t order = max_forcing_order(forms);

    Trajectory traj;
    traj.times = times;
    traj.states.reserve(times.size());
    traj.derivatives.reserve(times.size());
    if (opt.with_levels && p > 0) {
        traj.level_states.assign(static_cast<std::size_t>(p), {});
    }

    const bool regular = kmap != nullptr;
    const Vector empty(0);
    std::vector<Vector> fd(order + 1);
    for (std::size_t k = 0; k < times.size(); ++k) {
        const double t = times[k];
        for (std::size_t j = 0; j <= order; ++j) {
            fd[j] = f.derivative(t, static_cast<int>(j));
        }
        const Vector& xp = regular ? xp_states[k] : empty;
        const Vector xp_dot = regular ? Vector(*kmap * (xp + projector * fd[0])) : empty;

        traj.states.push_back(eval_form(forms[0], xp, fd));
        traj.derivatives.push_back(eval_form_derivative(forms[0], xp_dot, fd));
        if (opt.with_levels) {
            for (Index i = 1; i <= p; ++i) {
                traj.level_states[static_cast<std::size_t>(i - 1)].push_back(
                    eval_form(forms[static_cast<std::size_t>(i)], xp, fd));
            }
        }
    }

    for (const Vector& x : traj.states) {
        if (!x.allFinite()) {
            throw NumericError("trajectory left the finite range (unstable growth or overflow)");
        }
    }
    traj.residual_max = residual_norm(chain.b0, traj, f);
    return traj;
}

}  // namespace

Trajectory solve_regular(const Matrix& b, const Forcing& f, const Vector& c0, double t_end,
                         double step, const SkeletonChain& chain, const SolveOptions& opt) {
    if (b.rows() != b.cols()) {
        throw std::invalid_argument("solve_regular: matrix must be square");
    }
    require_finite(b, "matrix");
    require_finite(c0, "c0");
    if (f.dim() != b.rows()) {
        throw std::invalid_argument("solve_regular: forcing dimension mismatch");
    }
    check_chain_matches(b, chain, opt.chain_match_tol);
    if (chain.kind != ChainKind::Regular) {
        throw ChainMismatchError("solve_regular requires a regular chain");
    }
    if (c0.size() != chain.terminal_dim()) {
        throw ChainMismatchError("c0 dimension " + std::to_string(c0.size()) +
                                 " does not match terminal chain dimension " +
                                 std::to_string(chain.terminal_dim()));
    }

    const Matrix projector = build_projector(chain);
    const Matrix& terminal = chain.terminal();

    Eigen::FullPivLU<Matrix> lu(terminal);
    lu.setThreshold(chain.tol);
    if (!lu.isInvertible()) {
        throw SingularError("terminal iterate is singular; chain classification is inconsistent");
    }
    const Matrix kmap = lu.inverse();

    const std::vector<double> times = sample_grid(t_end, step);
    const auto solve = [&lu](const Vector& v) { return Vector(lu.solve(v)); };
    const auto g = [&](double t) { return Vector(projector * f.derivative(t, 0)); };

    const std::vector<Vector> coarse = integrate_rk4(solve, g, c0, times, 1);
    const std::vector<Vector> fine = integrate_rk4(solve, g, c0, times, 2);
    double err_estimate = 0.0;
    for (std::size_t k = 0; k < times.size(); ++k) {
        err_estimate = std::max(err_estimate, max_norm(Vector(coarse[k] - fine[k])) / 15.0);
    }
    if (err_estimate > opt.integ_tol) {
        throw StepTooCoarseError("step-halving error estimate " + std::to_string(err_estimate) +
                                 " exceeds the integration tolerance");
    }

    const std::vector<LevelForm> forms = build_level_forms(chain, projector, &kmap);
    Trajectory traj = sample_trajectory(chain, f, forms, times, coarse, &kmap, projector, opt);

    traj.hyperplane_defect = max_norm(Vector(projector * traj.states.front() - c0));
    if (traj.hyperplane_defect > opt.hyperplane_tol) {
        throw NumericError("hyperplane condition M x(0) = c0 violated beyond tolerance: defect " +
                           std::to_string(traj.hyperplane_defect));
    }
    return traj;
}

Trajectory solve_regular(const RegularizedIVP& ivp, const SkeletonChain& chain,
                         const SolveOptions& opt) {
    const SignalForcing forcing(ivp.f, static_cast<int>(chain.length()) + 1);
    return solve_regular(ivp.b, forcing, ivp.c0, ivp.t_end, ivp.step, chain, opt);
}

Trajectory solve_degenerate(const Matrix& b, const Forcing& f, double t_end, double step,
                            const SkeletonChain& chain, const SolveOptions& opt) {
    if (b.rows() != b.cols()) {
        throw std::invalid_argument("solve_degenerate: matrix must be square");
    }
    require_finite(b, "matrix");
    if (f.dim() != b.rows()) {
        throw std::invalid_argument("solve_degenerate: forcing dimension mismatch");
    }
    check_chain_matches(b, chain, opt.chain_match_tol);
    if (chain.kind != ChainKind::Degenerate) {
        throw ChainMismatchError("solve_degenerate requires a degenerate chain");
    }

    const Matrix projector = build_projector(chain);
    const std::vector<double> times = sample_grid(t_end, step);
    const std::vector<LevelForm> forms = build_level_forms(chain, projector, nullptr);
    return sample_trajectory(chain, f, forms, times, {}, nullptr, projector, opt);
}

Trajectory solve_degenerate(const DegenerateProblem& prob, const SkeletonChain& chain,
                            const SolveOptions& opt) {
    const SignalForcing forcing(prob.f, static_cast<int>(chain.length()) + 1);
    return solve_degenerate(prob.b, forcing, prob.t_end, prob.step, chain, opt);
}

Trajectory solve_nilpotent_iteration(const Matrix& b, const Signal& f, Index p, double t_end,
                                     double step, double tol, const SolveOptions& opt) {
    (void)opt;
    if (b.rows() != b.cols()) {
        throw std::invalid_argument("solve_nilpotent_iteration: matrix must be square");
    }
    require_finite(b, "matrix");
    if (p < 1) {
        throw std::invalid_argument("solve_nilpotent_iteration: p must be at least 1");
    }
    if (f.dim() != b.rows()) {
        throw std::invalid_argument("solve_nilpotent_iteration: forcing dimension mismatch");
    }

    const Index n = b.rows();
    const double scale = 1.0 + max_norm(b);

    std::vector<Matrix> b_powers;  // b^0 .. b^p
    b_powers.push_back(Matrix::Identity(n, n));
    for (Index k = 0; k < p; ++k) {
        b_powers.push_back(Matrix(b * b_powers.back()));
    }
    if (max_norm(b_powers.back()) > tol * scale) {
        throw NotNilpotentError("b^p is not zero at tolerance");
    }

    // u_n = -f + b u_{n-1}' on the coefficient matrices of
    // u(t) = sum_j coeff[j] f^{(j)}(t).
    std::vector<Matrix> coeff;
    for (Index iter = 0; iter < p; ++iter) {
        std::vector<Matrix> next(coeff.size() + 1, Matrix::Zero(n, n));
        next[0] = -Matrix::Identity(n, n);
        for (std::size_t j = 0; j < coeff.size(); ++j) {
            next[j + 1] += b * coeff[j];
        }
        // Trailing all-zero coefficients (killed by nilpotency) drop out.
        while (!next.empty() && max_norm(next.back()) == 0.0) {
            next.pop_back();
        }
        coeff = std::move(next);
    }

    // Unrolled, the iteration must reproduce -b^k f^{(k)}.
    double scale_k = 1.0;
    for (std::size_t k = 0; k < coeff.size(); ++k) {
        if (max_norm(Matrix(coeff[k] + b_powers[k])) > 1e-8 * (1.0 + scale_k)) {
            throw NumericError("nilpotent iteration coefficients deviate from -b^k");
        }
        scale_k *= max_norm(b) > 0 ? max_norm(b) : 1.0;
    }

    const std::vector<double> times = sample_grid(t_end, step);
    const int order = static_cast<int>(coeff.size());
    const std::vector<Signal> f_derivs = derivative_table(f, order);

    Trajectory traj;
    traj.times = times;
    traj.states.reserve(times.size());
    traj.derivatives.reserve(times.size());
    for (const double t : times) {
        Vector x = Vector::Zero(n);
        Vector dx = Vector::Zero(n);
        for (std::size_t j = 0; j < coeff.size(); ++j) {
            x += coeff[j] * f_derivs[j].eval(t);
            dx += coeff[j] * f_derivs[j + 1].eval(t);
        }
        traj.states.push_back(std::move(x));
        traj.derivatives.push_back(std::move(dx));
    }
    traj.residual_max = residual_norm(b, traj, f);
    return traj;
}

ConsistencyReport check_classical_consistency(const Matrix& b, const Vector& x0, const Signal& f,
                                              double tol) {
    if (b.rows() != b.cols()) {
        throw std::invalid_argument("check_classical_consistency: matrix must be square");
    }
    require_finite(b, "matrix");
    require_finite(x0, "x0");
    if (x0.size() != b.rows() || f.dim() != b.rows()) {
        throw std::invalid_argument("check_classical_consistency: dimension mismatch");
    }

    const NullspaceBasis basis = adjoint_nullspace(b, tol);
    ConsistencyReport report;
    report.nullspace_dim = basis.dimension();
    if (basis.dimension() == 0) {
        return report;  // trivially consistent
    }
    const Vector w = x0 + f.eval(0.0);
    report.defect = max_norm(Vector(basis.vectors.transpose() * w));
    report.verdict = report.defect <= tol ? Consistency::Consistent : Consistency::Inconsistent;
    return report;
}

StabilityReport check_stability(const SkeletonChain& chain, double margin) {
    if (chain.kind != ChainKind::Regular) {
        throw ChainNotRegularError("stability analysis requires a regular chain");
    }
    StabilityReport report;
    report.margin = margin;
    report.spectrum = eigenvalues(chain.terminal());

    double abscissa = -std::numeric_limits<double>::infinity();
    double prop_abscissa = -std::numeric_limits<double>::infinity();
    bool any_right = false;
    bool all_left = true;
    for (const Complex& lambda : report.spectrum) {
        abscissa = std::max(abscissa, lambda.real());
        prop_abscissa = std::max(prop_abscissa, (1.0 / lambda).real());
        if (lambda.real() > margin) any_right = true;
        if (!(lambda.real() < -margin)) all_left = false;
    }
    report.spectral_abscissa = abscissa;
    report.propagation_abscissa = prop_abscissa;
    report.verdict = any_right  ? StabilityVerdict::Unstable
                     : all_left ? StabilityVerdict::Stable
                                : StabilityVerdict::Indeterminate;
    return report;
}

double residual_norm(const Matrix& b, const Trajectory& traj, const Forcing& f) {
    if (traj.derivatives.size() != traj.times.size() || traj.states.size() != traj.times.size()) {
        throw std::invalid_argument("residual_norm: trajectory lacks analytic derivative samples");
    }
    double worst = 0.0;
    for (std::size_t k = 0; k < traj.times.size(); ++k) {
        const Vector r =
            b * traj.derivatives[k] - traj.states[k] - f.derivative(traj.times[k], 0);
        worst = std::max(worst, max_norm(r));
    }
    return worst;
}

double residual_norm(const Matrix& b, const Trajectory& traj, const Signal& f) {
    return residual_norm(b, traj, SignalForcing(f, 0));
}

}  // namespace skelreg
