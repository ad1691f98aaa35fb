#include <skelreg/synth.hpp>

#include <skelreg/chain.hpp>
#include <skelreg/solver.hpp>

#include <doctest.h>

#include "support.hpp"

#include <Eigen/SVD>

#include <cmath>

using namespace skelreg;

namespace {

constexpr double kTol = 1e-10;

double condition_of(const Matrix& m) {
    Eigen::JacobiSVD<Matrix> svd(m);
    const auto& sv = svd.singularValues();
    return sv(0) / sv(sv.size() - 1);
}

double max_grid_error(const std::vector<Vector>& a, const std::vector<Vector>& b) {
    double worst = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        worst = std::max(worst, max_norm(Vector(a[k] - b[k])));
    }
    return worst;
}

}  // namespace

TEST_CASE("synthesis of a decoupled scalar core and scalar zero block") {
    SynthSpec spec;
    spec.core = Matrix(1, 1);
    spec.core << -1.0;
    spec.nilpotent = Matrix::Zero(1, 1);
    spec.similarity = Matrix::Identity(2, 2);
    spec.f = Signal::zero(2);
    spec.c0_core = Vector(1);
    spec.c0_core << 0.7;

    const Synthesized syn = synthesize(spec);
    CHECK(syn.b(0, 0) == doctest::Approx(-1.0));
    CHECK(syn.b(1, 1) == doctest::Approx(0.0));

    // core: -y' = y, so y(t) = y0 e^{-t}; zero block carries nothing
    for (double t : {0.0, 0.5, 1.0, 2.0}) {
        const Vector x = syn.analytic.eval(t);
        CHECK(x(0) == doctest::Approx(0.7 * std::exp(-t)).epsilon(1e-12));
        CHECK(x(1) == doctest::Approx(0.0));
    }
}

TEST_CASE("purely nilpotent synthesis matches the hand-worked solution") {
    SynthSpec spec;
    spec.core = Matrix(0, 0);
    spec.nilpotent = Matrix::Zero(2, 2);
    spec.nilpotent(0, 1) = 1.0;
    spec.similarity = Matrix::Identity(2, 2);
    spec.f = parse_signal("t; t^2", 2);
    spec.c0_core = Vector(0);

    const Synthesized syn = synthesize(spec);
    for (double t : {0.0, 0.5, 1.0, 2.0}) {
        const Vector x = syn.analytic.eval(t);
        CHECK(x(0) == doctest::Approx(-3.0 * t).epsilon(1e-13));
        CHECK(x(1) == doctest::Approx(-t * t).epsilon(1e-13));
    }
}

TEST_CASE("a missing nilpotent block reduces to a classical ODE") {
    SynthSpec spec;
    spec.core = Matrix(1, 1);
    spec.core << -2.0;
    spec.nilpotent = Matrix(0, 0);
    spec.similarity = Matrix::Identity(1, 1);
    spec.f = parse_signal("1", 1);
    spec.c0_core = Vector(1);
    spec.c0_core << 3.0;

    const Synthesized syn = synthesize(spec);
    const SkeletonChain chain = build_chain(syn.b, kTol);
    CHECK(chain.length() == 0);
    CHECK(chain.kind == ChainKind::Regular);

    // -2 y' = y + 1  =>  y(t) = (y0 + 1) e^{-t/2} - 1
    for (double t : {0.0, 0.4, 1.0, 3.0}) {
        CHECK(syn.analytic.eval(t)(0) ==
              doctest::Approx(4.0 * std::exp(-0.5 * t) - 1.0).epsilon(1e-12));
    }
}

TEST_CASE("random specs are deterministic in the seed") {
    const SynthSpec a = random_spec(123, 5);
    const SynthSpec b = random_spec(123, 5);
    CHECK(max_norm(Matrix(a.core - b.core)) == 0.0);
    CHECK(max_norm(Matrix(a.nilpotent - b.nilpotent)) == 0.0);
    CHECK(max_norm(Matrix(a.similarity - b.similarity)) == 0.0);
    CHECK(to_string(a.f) == to_string(b.f));
    CHECK(max_norm(Vector(a.c0_core - b.c0_core)) == 0.0);

    const SynthSpec c = random_spec(124, 5);
    CHECK(max_norm(Matrix(a.similarity - c.similarity)) > 0.0);
}

TEST_CASE("chain shape is predicted by the block structure") {
    for (std::uint64_t seed = 1; seed <= 12; ++seed) {
        const Index c = static_cast<Index>(seed % 4);        // 0..3
        const Index q = static_cast<Index>(1 + (seed % 3));  // 1..3
        const SynthSpec spec = random_spec_with_blocks(seed, c, q);
        const Synthesized syn = synthesize(spec);
        const SkeletonChain chain = build_chain(syn.b, kTol);
        CAPTURE(seed);
        CAPTURE(c);
        CAPTURE(q);
        if (c == 0) {
            CHECK(chain.kind == ChainKind::Degenerate);
        } else {
            CHECK(chain.kind == ChainKind::Regular);
            CHECK(chain.terminal_dim() == c);
        }
    }
    SUBCASE("no nilpotent part means the chain is the operator itself") {
        const Synthesized syn = synthesize(random_spec_with_blocks(9, 3, 0));
        const SkeletonChain chain = build_chain(syn.b, kTol);
        CHECK(chain.length() == 0);
        CHECK(chain.kind == ChainKind::Regular);
    }
}

TEST_CASE("random spec condition numbers are capped") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const SynthSpec spec = random_spec(seed, 6);
        CHECK(condition_of(spec.similarity) <= 1e3);
        if (spec.core_dim() > 0) {
            CHECK(condition_of(spec.core) <= 1e3);
        }
    }
}

TEST_CASE("solver output matches the analytic oracle") {
    SUBCASE("regular problems") {
        for (std::uint64_t seed = 20; seed < 26; ++seed) {
            const SynthSpec spec = random_spec_with_blocks(seed, 2, 2);
            const Synthesized syn = synthesize(spec);
            const SkeletonChain chain = build_chain(syn.b, kTol);
            REQUIRE(chain.kind == ChainKind::Regular);

            const Vector c0 = build_projector(chain) * syn.analytic.initial_state();
            const Trajectory traj = solve_regular({syn.b, spec.f, c0, 1.0, 1e-3}, chain);
            CAPTURE(seed);
            CHECK(max_grid_error(traj.states, syn.analytic.eval_on(traj.times)) <= 1e-6);
        }
    }
    SUBCASE("degenerate problems") {
        for (std::uint64_t seed = 40; seed < 46; ++seed) {
            const SynthSpec spec = random_spec_with_blocks(seed, 0, 3);
            const Synthesized syn = synthesize(spec);
            const SkeletonChain chain = build_chain(syn.b, kTol);
            REQUIRE(chain.kind == ChainKind::Degenerate);

            const Trajectory traj = solve_degenerate({syn.b, spec.f, 1.0, 1e-2}, chain);
            CAPTURE(seed);
            CHECK(max_grid_error(traj.states, syn.analytic.eval_on(traj.times)) <= 1e-9);
        }
    }
}

TEST_CASE("a defective core falls back to reference integration") {
    SynthSpec spec;
    spec.core = Matrix(2, 2);
    spec.core << 1.0, 1.0, 0.0, 1.0;  // Jordan block: eigenvector matrix is singular
    spec.nilpotent = Matrix(0, 0);
    spec.similarity = Matrix::Identity(2, 2);
    spec.f = parse_signal("sin(t); 0", 2);
    spec.c0_core = Vector(2);
    spec.c0_core << 1.0, -0.5;

    const Synthesized syn = synthesize(spec);
    CHECK(syn.analytic.used_reference_integration());

    const SkeletonChain chain = build_chain(syn.b, kTol);
    const Vector c0 = build_projector(chain) * syn.analytic.initial_state();
    const Trajectory traj = solve_regular({syn.b, spec.f, c0, 1.0, 1e-3}, chain);
    CHECK(max_grid_error(traj.states, syn.analytic.eval_on(traj.times)) <= 1e-6);
}

TEST_CASE("invalid specs are rejected") {
    SynthSpec spec;
    spec.core = Matrix::Zero(2, 2);  // singular core
    spec.nilpotent = Matrix(0, 0);
    spec.similarity = Matrix::Identity(2, 2);
    spec.f = Signal::zero(2);
    spec.c0_core = Vector::Zero(2);
    CHECK_THROWS_AS((void)synthesize(spec), SpecInvalidError);

    spec.core = Matrix::Identity(2, 2);
    spec.nilpotent = Matrix::Identity(1, 1);  // not nilpotent
    spec.similarity = Matrix::Identity(3, 3);
    spec.f = Signal::zero(3);
    CHECK_THROWS_AS((void)synthesize(spec), SpecInvalidError);

    spec.nilpotent = Matrix::Zero(1, 1);
    spec.similarity = Matrix::Zero(3, 3);  // singular similarity
    CHECK_THROWS_AS((void)synthesize(spec), SpecInvalidError);

    spec.similarity = Matrix::Identity(3, 3);
    spec.f = Signal::zero(2);  // wrong dimension
    CHECK_THROWS_AS((void)synthesize(spec), SpecInvalidError);

    CHECK_THROWS_AS((void)random_spec(1, 0), std::invalid_argument);
    CHECK_THROWS_AS((void)random_spec(1, 13), std::invalid_argument);
}
