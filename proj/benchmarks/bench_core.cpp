#include <benchmark/benchmark.h>

#include "emqm/fastsim.hpp"
#include "emqm/harness.hpp"
#include "emqm/mixing.hpp"
#include "emqm/reference.hpp"

using namespace emqm;

namespace {

Model make_model(int n, int depth) {
    ModelParams p;
    p.n = n;
    p.depth = depth;
    p.delta_t = 0.5 / n;
    p.m0 = 1e-3;
    p.delta_m = 1e-6;
    p.seed = 1;
    return Model::build(p, make_named_spec("yx-y", n));
}

} // namespace

static void StepThroughput(benchmark::State& state) {
    const Model model = make_model(4, static_cast<int>(state.range(0)));
    CircuitState st = init_state(model, 0);
    for (auto _ : state) {
        step(model, st);
        benchmark::DoNotOptimize(st.tau);
    }
    state.SetItemsProcessed(state.iterations() * model.params.depth * model.params.n / 2);
}
BENCHMARK(StepThroughput)->Arg(16)->Arg(64)->Arg(256);

static void BoundaryDistribution(benchmark::State& state) {
    const Model model = make_model(4, static_cast<int>(state.range(0)));
    const CircuitState st = init_state(model, 0);
    for (auto _ : state) {
        auto p = boundary_distribution(st);
        benchmark::DoNotOptimize(p.data());
    }
}
BENCHMARK(BoundaryDistribution)->Arg(64)->Arg(1024);

static void JumpBatch(benchmark::State& state) {
    const Model model = make_model(4, static_cast<int>(state.range(0)));
    CircuitState st = init_state(model, 0);
    for (auto _ : state) {
        jump(model, st, 1000);
        benchmark::DoNotOptimize(st.tau);
    }
}
BENCHMARK(JumpBatch)->Arg(64)->Arg(1024);

static void MatrixExponential(benchmark::State& state) {
    const auto spec = make_named_spec("yx-y", static_cast<int>(state.range(0)));
    const Eigen::MatrixXd g = assemble_dense(spec);
    for (auto _ : state) {
        auto p = expm(g);
        benchmark::DoNotOptimize(p.data());
    }
}
BENCHMARK(MatrixExponential)->Arg(4)->Arg(6);

static void MixingAccumulate(benchmark::State& state) {
    const Model model = make_model(4, static_cast<int>(state.range(0)));
    const CircuitState st = init_state(model, 0);
    for (auto _ : state) {
        auto w = accumulate_w(st);
        benchmark::DoNotOptimize(w.data());
    }
}
BENCHMARK(MixingAccumulate)->Arg(256)->Arg(4096);

BENCHMARK_MAIN();
