#include <benchmark/benchmark.h>

#include "loracap/airtime.hpp"
#include "loracap/model.hpp"
#include "loracap/simulator.hpp"
#include "loracap/sweep.hpp"

using namespace loracap;

namespace {

const ScenarioConfig& preset() {
    static const ScenarioConfig sc = validate_scenario(reference_preset());
    return sc;
}

const TimingTable& timing() {
    static const TimingTable t = build_timing_table(preset());
    return t;
}

void bm_solve_p_data(benchmark::State& state) {
    for (auto _ : state)
        benchmark::DoNotOptimize(solve_p_data(0.02, 2.793472, 0.991232));
}
BENCHMARK(bm_solve_p_data);

void bm_p_x_retry(benchmark::State& state) {
    for (auto _ : state)
        benchmark::DoNotOptimize(p_x_retry(0.5, 1.5, 2.0));
}
BENCHMARK(bm_p_x_retry);

void bm_evaluate_model(benchmark::State& state) {
    for (auto _ : state)
        benchmark::DoNotOptimize(evaluate_model(preset(), timing(), 0.05));
}
BENCHMARK(bm_evaluate_model);

void bm_px_monte_carlo(benchmark::State& state) {
    for (auto _ : state)
        benchmark::DoNotOptimize(px_monte_carlo_oracle(0.5, 1.5, 2.0, 100000, 7));
}
BENCHMARK(bm_px_monte_carlo);

void bm_simulation_short(benchmark::State& state) {
    SimConfig cfg;
    cfg.duration = 5000.0;
    cfg.warmup = 500.0;
    cfg.seed = 1;
    for (auto _ : state)
        benchmark::DoNotOptimize(run_simulation(preset(), timing(), 0.068, cfg));
}
BENCHMARK(bm_simulation_short)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
