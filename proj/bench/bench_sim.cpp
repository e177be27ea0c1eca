#include "jointcrm/sim_harness.hpp"

#include <benchmark/benchmark.h>

using namespace jcrm;

namespace {

NamedDesign design(DesignMethod m) {
    DesignSpec d;
    d.method = m;
    d.initialK = 3;
    return {to_string(m), d};
}

constexpr int kReps = 64;

void run(benchmark::State& state, DesignMethod m, Execution exec) {
    const auto scen = standard_scenarios();
    const GenerationParams gen;
    const NamedDesign nd = design(m);
    const int workers = exec == Execution::Parallel ? static_cast<int>(state.range(0)) : 1;
    for (auto _ : state) {
        auto c = run_cell(scen[2], 2, nd, gen, kReps, 1, {}, exec, workers);
        benchmark::DoNotOptimize(c.oc.pcs);
    }
    state.SetItemsProcessed(state.iterations() * kReps);
}

void BM_ProbitSerial(benchmark::State& s) { run(s, DesignMethod::Probit, Execution::Serial); }
void BM_ProbitParallel(benchmark::State& s) { run(s, DesignMethod::Probit, Execution::Parallel); }
void BM_Joint9dSerial(benchmark::State& s) { run(s, DesignMethod::Joint9d, Execution::Serial); }
void BM_Joint9dParallel(benchmark::State& s) { run(s, DesignMethod::Joint9d, Execution::Parallel); }

}  // namespace

BENCHMARK(BM_ProbitSerial)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_ProbitParallel)->Arg(2)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_Joint9dSerial)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_Joint9dParallel)->Arg(2)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
