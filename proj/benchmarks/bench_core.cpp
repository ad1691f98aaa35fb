// Desk-scale performance tracking for the hot paths: factorization,
// chain construction, and the two solver routes.

#include <skelreg/chain.hpp>
#include <skelreg/solver.hpp>
#include <skelreg/synth.hpp>

#include <benchmark/benchmark.h>

namespace {

using namespace skelreg;

Matrix bench_matrix(Index n) {
    const SynthSpec spec = random_spec_with_blocks(1234, n / 2, n - n / 2);
    return synthesize(spec).b;
}

void BM_FullRankFactorize(benchmark::State& state) {
    const Matrix m = bench_matrix(state.range(0));
    for (auto _ : state) {
        benchmark::DoNotOptimize(full_rank_factorize(m, 1e-10));
    }
}
BENCHMARK(BM_FullRankFactorize)->Arg(4)->Arg(8)->Arg(12);

void BM_BuildChain(benchmark::State& state) {
    const Matrix m = bench_matrix(state.range(0));
    for (auto _ : state) {
        benchmark::DoNotOptimize(build_chain(m, 1e-10));
    }
}
BENCHMARK(BM_BuildChain)->Arg(4)->Arg(8)->Arg(12);

void BM_SolveRegular(benchmark::State& state) {
    const SynthSpec spec = random_spec_with_blocks(7, 3, 3);
    const Synthesized syn = synthesize(spec);
    const SkeletonChain chain = build_chain(syn.b, 1e-10);
    const Matrix projector = build_projector(chain);
    RegularizedIVP ivp{syn.b, spec.f, Vector(projector * syn.analytic.initial_state()), 1.0, 1e-3};
    for (auto _ : state) {
        benchmark::DoNotOptimize(solve_regular(ivp, chain));
    }
}
BENCHMARK(BM_SolveRegular);

void BM_SolveDegenerate(benchmark::State& state) {
    const SynthSpec spec = random_spec_with_blocks(11, 0, 6);
    const Synthesized syn = synthesize(spec);
    const SkeletonChain chain = build_chain(syn.b, 1e-10);
    DegenerateProblem prob{syn.b, spec.f, 1.0, 1e-3};
    for (auto _ : state) {
        benchmark::DoNotOptimize(solve_degenerate(prob, chain));
    }
}
BENCHMARK(BM_SolveDegenerate);

}  // namespace

BENCHMARK_MAIN();
