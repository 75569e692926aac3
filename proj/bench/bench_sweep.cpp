// Parallel sweep kernels against their serial references.

#include <benchmark/benchmark.h>

#include "wolbachia/sweep.hpp"

using namespace wolbachia;

namespace {

const ModelParameters kParams = ModelParameters::wmelpop();

std::vector<double> n0_grid(int points) {
    std::vector<double> g;
    for (int k = 1; k <= points; ++k) g.push_back(kParams.n_sharp() * k / points);
    return g;
}

std::vector<PlanCell> plan_cells() {
    const std::vector<double> n0s = {0.25 * kParams.n_sharp(), 0.5 * kParams.n_sharp(), 0.75 * kParams.n_sharp(),
                                     kParams.n_sharp()};
    const std::vector<double> taus = {1.0, 2.0, 3.0, 5.0};
    return make_plan_cells(n0s, taus, 12);
}

const SeparatrixCurve& curve() {
    static const SeparatrixCurve c = separatrix_backward(kParams);
    return c;
}

void BM_thresholds_serial(benchmark::State& state) {
    const auto grid = n0_grid(static_cast<int>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(sweep::minimal_viable_w_grid_serial(kParams, grid, {}));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_thresholds_parallel(benchmark::State& state) {
    const auto grid = n0_grid(static_cast<int>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(sweep::minimal_viable_w_grid(kParams, grid, {}));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_plan_serial(benchmark::State& state) {
    const auto cells = plan_cells();
    for (auto _ : state) benchmark::DoNotOptimize(sweep::plan_grid_serial(kParams, cells, curve(), {}));
    state.SetItemsProcessed(state.iterations() * static_cast<long>(cells.size()));
}

void BM_plan_parallel(benchmark::State& state) {
    const auto cells = plan_cells();
    for (auto _ : state) benchmark::DoNotOptimize(sweep::plan_grid(kParams, cells, curve(), {}));
    state.SetItemsProcessed(state.iterations() * static_cast<long>(cells.size()));
}

}  // namespace

BENCHMARK(BM_thresholds_serial)->Arg(32)->Arg(128)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_thresholds_parallel)->Arg(32)->Arg(128)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_plan_serial)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_plan_parallel)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
