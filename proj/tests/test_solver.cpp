#include <skelreg/solver.hpp>

#include <skelreg/synth.hpp>

#include <doctest.h>

#include "support.hpp"

#include <Eigen/LU>

#include <cmath>
#include <functional>

using namespace skelreg;
using test_support::TestRng;

namespace {

constexpr double kTol = 1e-10;

Matrix mat2(double a, double b, double c, double d) {
    Matrix m(2, 2);
    m << a, b, c, d;
    return m;
}

Vector vec1(double a) {
    Vector v(1);
    v << a;
    return v;
}

double max_deviation(const Trajectory& traj, const std::function<Vector(double)>& reference) {
    double worst = 0.0;
    for (std::size_t k = 0; k < traj.times.size(); ++k) {
        worst = std::max(worst, max_norm(Vector(traj.states[k] - reference(traj.times[k]))));
    }
    return worst;
}

}  // namespace

TEST_CASE("regular solve reproduces the exponential closed form") {
    const Matrix b = mat2(1, 0, 0, 0);
    const SkeletonChain chain = build_chain(b, kTol);
    REQUIRE(chain.kind == ChainKind::Regular);

    RegularizedIVP ivp{b, Signal::zero(2), vec1(1.0), 1.0, 1e-3};
    const Trajectory traj = solve_regular(ivp, chain);

    CHECK(max_deviation(traj, [](double t) {
              Vector x(2);
              x << std::exp(t), 0.0;
              return x;
          }) <= 1e-9);
    CHECK(traj.hyperplane_defect <= 1e-10);
    CHECK(traj.residual_max <= 1e-6);
    CHECK(traj.times.front() == 0.0);
    CHECK(traj.times.back() == doctest::Approx(1.0));
}

TEST_CASE("regular solve decays for a negative terminal block") {
    const Matrix b = mat2(-1, 0, 0, 0);
    const SkeletonChain chain = build_chain(b, kTol);
    RegularizedIVP ivp{b, Signal::zero(2), vec1(1.0), 1.0, 1e-3};
    const Trajectory traj = solve_regular(ivp, chain);
    CHECK(max_deviation(traj, [](double t) {
              Vector x(2);
              x << std::exp(-t), 0.0;
              return x;
          }) <= 1e-9);
    CHECK(max_norm(traj.states.back()) < max_norm(traj.states.front()));
}

TEST_CASE("forcing in the annihilated direction is carried by back-substitution") {
    const Matrix b = mat2(1, 0, 0, 0);
    const SkeletonChain chain = build_chain(b, kTol);
    RegularizedIVP ivp{b, parse_signal("0; sin(t)", 2), vec1(0.0), 1.0, 1e-3};
    const Trajectory traj = solve_regular(ivp, chain);
    CHECK(max_deviation(traj, [](double t) {
              Vector x(2);
              x << 0.0, -std::sin(t);
              return x;
          }) <= 1e-9);
    CHECK(traj.residual_max <= 1e-9);
}

TEST_CASE("degenerate solve matches the hand-computed closed form") {
    const Matrix b = mat2(0, 1, 0, 0);
    const SkeletonChain chain = build_chain(b, kTol);
    REQUIRE(chain.kind == ChainKind::Degenerate);

    DegenerateProblem prob{b, parse_signal("t; t^2", 2), 2.0, 1e-2};
    const Trajectory traj = solve_degenerate(prob, chain);

    CHECK(max_deviation(traj, [](double t) {
              Vector x(2);
              x << -3.0 * t, -t * t;
              return x;
          }) <= 1e-12);
    CHECK(traj.residual_max <= 1e-10);

    // level trajectory x_1 = -t^2
    REQUIRE(traj.level_states.size() == 1);
    for (std::size_t k = 0; k < traj.times.size(); ++k) {
        const double t = traj.times[k];
        CHECK(traj.level_states[0][k](0) == doctest::Approx(-t * t).epsilon(1e-12));
    }
}

TEST_CASE("homogeneous degenerate problems have only the trivial solution") {
    const Matrix b = mat2(0, 1, 0, 0);
    const SkeletonChain chain = build_chain(b, kTol);
    DegenerateProblem prob{b, Signal::zero(2), 1.0, 1e-2};
    const Trajectory traj = solve_degenerate(prob, chain);
    for (const Vector& x : traj.states) {
        CHECK(max_norm(x) <= 1e-12);
    }
}

TEST_CASE("the zero operator sends the solution to minus the forcing") {
    const Matrix b = Matrix::Zero(2, 2);
    const SkeletonChain chain = build_chain(b, kTol);
    CHECK(chain.length() == 0);
    const Signal f = parse_signal("exp(0.5*t); t + 1", 2);
    DegenerateProblem prob{b, f, 1.0, 1e-2};
    const Trajectory traj = solve_degenerate(prob, chain);
    CHECK(max_deviation(traj, [&f](double t) { return Vector(-f.eval(t)); }) <= 1e-14);
}

TEST_CASE("nilpotent iteration agrees with the degenerate solve") {
    const Matrix b = mat2(0, 1, 0, 0);
    const Signal f = parse_signal("t; t^2", 2);

    const Trajectory iterated = solve_nilpotent_iteration(b, f, 2, 2.0, 1e-2);
    CHECK(max_deviation(iterated, [](double t) {
              Vector x(2);
              x << -3.0 * t, -t * t;
              return x;
          }) <= 1e-12);

    const SkeletonChain chain = build_chain(b, kTol);
    const Trajectory direct = solve_degenerate({b, f, 2.0, 1e-2}, chain);
    REQUIRE(direct.times.size() == iterated.times.size());
    for (std::size_t k = 0; k < direct.times.size(); ++k) {
        CHECK(max_norm(Vector(direct.states[k] - iterated.states[k])) <= 1e-12);
    }

    SUBCASE("zero forcing stays zero") {
        const Trajectory zero = solve_nilpotent_iteration(b, Signal::zero(2), 2, 1.0, 1e-1);
        for (const Vector& x : zero.states) {
            CHECK(max_norm(x) == 0.0);
        }
    }
    SUBCASE("non-nilpotent input is rejected") {
        CHECK_THROWS_AS(
            (void)solve_nilpotent_iteration(Matrix::Identity(2, 2), f, 2, 1.0, 1e-1),
            NotNilpotentError);
    }
}

TEST_CASE("classical consistency condition") {
    SUBCASE("invertible operator is trivially consistent") {
        Vector x0(2);
        x0 << 4.0, -3.0;
        const ConsistencyReport report =
            check_classical_consistency(Matrix::Identity(2, 2), x0, Signal::zero(2), 1e-8);
        CHECK(report.verdict == Consistency::Consistent);
        CHECK(report.nullspace_dim == 0);
    }
    SUBCASE("data with a component against the adjoint null space is inconsistent") {
        Vector x0(2);
        x0 << 0.0, 1.0;
        const ConsistencyReport report =
            check_classical_consistency(mat2(0, 1, 0, 0), x0, Signal::zero(2), 1e-8);
        CHECK(report.verdict == Consistency::Inconsistent);
        CHECK(report.nullspace_dim == 1);
        CHECK(report.defect == doctest::Approx(1.0).epsilon(1e-12));
    }
    SUBCASE("orthogonal data is consistent even with forcing") {
        Vector x0(2);
        x0 << 5.0, 0.0;
        const ConsistencyReport report =
            check_classical_consistency(mat2(0, 1, 0, 0), x0, parse_signal("t; t^2", 2), 1e-8);
        CHECK(report.verdict == Consistency::Consistent);
    }
}

TEST_CASE("stability verdicts from the terminal spectrum") {
    SUBCASE("negative terminal block is stable") {
        const StabilityReport report = check_stability(build_chain(mat2(-1, 0, 0, 0), kTol));
        CHECK(report.verdict == StabilityVerdict::Stable);
        CHECK(report.spectral_abscissa == doctest::Approx(-1.0));
        CHECK(report.propagation_abscissa == doctest::Approx(-1.0));
    }
    SUBCASE("positive terminal block is unstable") {
        const StabilityReport report = check_stability(build_chain(mat2(1, 0, 0, 0), kTol));
        CHECK(report.verdict == StabilityVerdict::Unstable);
    }
    SUBCASE("triangular terminal reads off the diagonal") {
        const StabilityReport report = check_stability(build_chain(mat2(-1, 5, 0, -2), kTol));
        CHECK(report.verdict == StabilityVerdict::Stable);
        CHECK(test_support::match_spectra(report.spectrum, {{-1.0, 0.0}, {-2.0, 0.0}}) <= 1e-12);
    }
    SUBCASE("eigenvalues inside the margin band are indeterminate") {
        Matrix b(1, 1);
        b << 5e-10;  // above the chain's zero cutoff, inside the stability margin
        const StabilityReport report = check_stability(build_chain(b, kTol));
        CHECK(report.verdict == StabilityVerdict::Indeterminate);
    }
    SUBCASE("degenerate chains are rejected") {
        CHECK_THROWS_AS((void)check_stability(build_chain(mat2(0, 1, 0, 0), kTol)),
                        ChainNotRegularError);
    }
}

TEST_CASE("residual_norm reports faults instead of raising") {
    const Matrix b = mat2(0, 1, 0, 0);
    const Signal f = parse_signal("t; t^2", 2);
    const SkeletonChain chain = build_chain(b, kTol);
    Trajectory traj = solve_degenerate({b, f, 1.0, 1e-1}, chain);
    CHECK(residual_norm(b, traj, f) <= 1e-10);

    traj.states[5].setZero();
    CHECK(residual_norm(b, traj, f) > 0.1);
}

TEST_CASE("solutions are linear in the initial data") {
    const SynthSpec spec = random_spec_with_blocks(51, 2, 1);
    const Synthesized syn = synthesize(spec);
    const SkeletonChain chain = build_chain(syn.b, kTol);
    REQUIRE(chain.kind == ChainKind::Regular);
    const Index rp = chain.terminal_dim();

    TestRng rng(6);
    Vector c0(rp), d0(rp);
    for (Index i = 0; i < rp; ++i) {
        c0(i) = rng.range(-1.0, 1.0);
        d0(i) = rng.range(-1.0, 1.0);
    }
    const double alpha = 0.7, beta = -1.3;

    const auto solve_with = [&](const Vector& init) {
        return solve_regular({syn.b, spec.f, init, 1.0, 1e-2}, chain);
    };
    const Trajectory tc = solve_with(c0);
    const Trajectory td = solve_with(d0);
    const Trajectory tz = solve_with(Vector::Zero(rp));
    const Trajectory tmix = solve_with(Vector(alpha * c0 + beta * d0));

    for (std::size_t k = 0; k < tmix.times.size(); ++k) {
        const Vector expected =
            alpha * tc.states[k] + beta * td.states[k] + (1.0 - alpha - beta) * tz.states[k];
        CHECK(max_norm(Vector(tmix.states[k] - expected)) <= 1e-9 * (1.0 + max_norm(expected)));
    }
}

TEST_CASE("solution is invariant under the factor choice once c0 is mapped") {
    const SynthSpec spec = random_spec_with_blocks(77, 2, 2);
    const Synthesized syn = synthesize(spec);
    const SkeletonChain chain = build_chain(syn.b, kTol);
    REQUIRE(chain.kind == ChainKind::Regular);

    TestRng rng(12);
    const Factorizer remixed = [&rng](const Matrix& m, double tol) {
        SkeletonFactorization f = full_rank_factorize(m, tol);
        Matrix t = Matrix::Identity(f.rank, f.rank) + 0.25 * rng.gaussian_matrix(f.rank, f.rank);
        f.left = f.left * t;
        f.right = t.fullPivLu().solve(f.right);
        return f;
    };
    const SkeletonChain mixed = build_chain_with(syn.b, kTol, remixed);
    REQUIRE(mixed.kind == ChainKind::Regular);

    const Vector x0 = syn.analytic.initial_state();
    const Vector c0 = build_projector(chain) * x0;
    const Vector c0_mixed = build_projector(mixed) * x0;

    const Trajectory a = solve_regular({syn.b, spec.f, c0, 1.0, 1e-3}, chain);
    const Trajectory b = solve_regular({syn.b, spec.f, c0_mixed, 1.0, 1e-3}, mixed,
                                       {1e-8, 1e-8, 1e-12, true});
    for (std::size_t k = 0; k < a.times.size(); ++k) {
        CHECK(max_norm(Vector(a.states[k] - b.states[k])) <= 1e-7 * (1.0 + max_norm(a.states[k])));
    }
}

TEST_CASE("a step too coarse for the dynamics is reported") {
    Matrix b(1, 1);
    b << 0.05;  // propagation rate 20
    const SkeletonChain chain = build_chain(b, kTol);
    RegularizedIVP ivp{b, Signal::zero(1), vec1(1.0), 1.0, 0.5};
    CHECK_THROWS_AS((void)solve_regular(ivp, chain), StepTooCoarseError);
}

TEST_CASE("mismatched chains and dimensions are rejected") {
    const Matrix b = mat2(1, 0, 0, 0);
    const SkeletonChain chain = build_chain(b, kTol);
    const SkeletonChain other = build_chain(mat2(0, 1, 0, 0), kTol);

    CHECK_THROWS_AS((void)solve_regular({b, Signal::zero(2), vec1(1.0), 1.0, 1e-2}, other),
                    ChainMismatchError);
    CHECK_THROWS_AS((void)solve_regular({mat2(0, 1, 0, 0), Signal::zero(2), vec1(1.0), 1.0, 1e-2},
                                        other),
                    ChainMismatchError);  // degenerate chain on the regular path
    Vector c0_wrong(2);
    c0_wrong << 1.0, 2.0;
    CHECK_THROWS_AS((void)solve_regular({b, Signal::zero(2), c0_wrong, 1.0, 1e-2}, chain),
                    ChainMismatchError);
    CHECK_THROWS_AS((void)solve_degenerate({b, Signal::zero(2), 1.0, 1e-2}, chain),
                    ChainMismatchError);
    CHECK_THROWS_AS((void)solve_regular({b, Signal::zero(2), vec1(1.0), 1.0, 2.0}, chain),
                    std::invalid_argument);  // step > t_end
}

namespace {

/// Forcing outside the built-in term class, with hand-coded derivatives:
/// f(t) = (sin t, t^2).
class CustomForcing final : public Forcing {
public:
    [[nodiscard]] Index dim() const override { return 2; }

    [[nodiscard]] Vector derivative(double t, int order) const override {
        Vector v(2);
        switch (order % 4) {
            case 0: v(0) = std::sin(t); break;
            case 1: v(0) = std::cos(t); break;
            case 2: v(0) = -std::sin(t); break;
            default: v(0) = -std::cos(t); break;
        }
        v(1) = order == 0 ? t * t : order == 1 ? 2.0 * t : order == 2 ? 2.0 : 0.0;
        return v;
    }
};

}  // namespace

TEST_CASE("caller-provided derivative evaluators drive the solvers") {
    const Matrix b = mat2(0, 1, 0, 0);
    const SkeletonChain chain = build_chain(b, kTol);
    const CustomForcing custom;
    const Trajectory via_custom = solve_degenerate(b, custom, 1.0, 1e-2, chain);
    const Trajectory via_signal =
        solve_degenerate({b, parse_signal("sin(t); t^2", 2), 1.0, 1e-2}, chain);
    REQUIRE(via_custom.times.size() == via_signal.times.size());
    for (std::size_t k = 0; k < via_custom.times.size(); ++k) {
        CHECK(max_norm(Vector(via_custom.states[k] - via_signal.states[k])) <= 1e-13);
    }

    const Matrix br = mat2(1, 0, 0, 0);
    const SkeletonChain chain_r = build_chain(br, kTol);
    const Trajectory reg_custom = solve_regular(br, custom, vec1(0.5), 1.0, 1e-3, chain_r);
    const Trajectory reg_signal =
        solve_regular({br, parse_signal("sin(t); t^2", 2), vec1(0.5), 1.0, 1e-3}, chain_r);
    for (std::size_t k = 0; k < reg_custom.times.size(); ++k) {
        CHECK(max_norm(Vector(reg_custom.states[k] - reg_signal.states[k])) <= 1e-12);
    }
}

TEST_CASE("grids start at zero, increase strictly, and land on t_end") {
    const std::vector<double> grid = sample_grid(1.0, 0.3);
    REQUIRE(grid.size() == 5);
    CHECK(grid.front() == 0.0);
    CHECK(grid.back() == 1.0);
    for (std::size_t k = 1; k < grid.size(); ++k) {
        CHECK(grid[k] > grid[k - 1]);
    }
    CHECK(sample_grid(1.0, 1e-3).size() == 1001);
}
