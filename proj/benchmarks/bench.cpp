// Microbenchmarks for the numeric kernels, the pricing sweep, and the
// discrete-event simulator.
#include <benchmark/benchmark.h>

#include <array>
#include <cstddef>

#include "qdprice/pricer.hpp"
#include "qdprice/queueing.hpp"
#include "qdprice/scenario.hpp"
#include "qdprice/sim.hpp"

namespace {

using namespace qdp;

// Cycle through a handful of inputs so the compiler cannot fold the call
// and the branch predictor sees realistic variety.
template <std::size_t N>
std::array<double, N> ramp(double lo, double hi) {
    std::array<double, N> xs{};
    for (std::size_t i = 0; i < N; ++i)
        xs[i] = lo + (hi - lo) * static_cast<double>(i) / (N - 1);
    return xs;
}

void BM_UpperIncompleteGamma(benchmark::State& state) {
    const auto xs = ramp<64>(0.05, 5.0);
    std::size_t i = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(upper_incomplete_gamma(0.4, xs[i]));
        i = (i + 1) % xs.size();
    }
}
BENCHMARK(BM_UpperIncompleteGamma);

void BM_ExpAdmissibleRate(benchmark::State& state) {
    const ExponentialQueueSpec spec;
    const auto phis = ramp<64>(0.0, 8.0);
    std::size_t i = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(exp_lambda_max(spec, phis[i]));
        i = (i + 1) % phis.size();
    }
}
BENCHMARK(BM_ExpAdmissibleRate);

void BM_ParetoAdmissibleRate(benchmark::State& state) {
    const ParetoQueueSpec spec;
    const auto phis = ramp<64>(0.05, 8.0);
    std::size_t i = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(pareto_lambda_max(phis[i], spec));
        i = (i + 1) % phis.size();
    }
}
BENCHMARK(BM_ParetoAdmissibleRate);

// Full exhaustive pricing sweep on the reference cell: 50 users, five
// service levels, fleet of 800. Throughput is reported in candidates/s.
void BM_PricingSweepReferenceCell(benchmark::State& state) {
    Scenario sc;
    const UserPopulation pop = sc.population(WeightScheme::Compact, 0.45);
    unsigned long long candidates = 0;
    for (auto _ : state) {
        const auto sol =
            optimize_prices(800, pop, sc.menu_waits, sc.model);
        candidates += sol.candidates_evaluated;
        benchmark::DoNotOptimize(sol.total_unit_revenue);
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(candidates));
}
BENCHMARK(BM_PricingSweepReferenceCell)->Unit(benchmark::kMillisecond);

// Single queue at moderate load; throughput is reported in jobs/s.
void BM_Simulator(benchmark::State& state) {
    SimConfig cfg;
    cfg.arrival_rate = 0.6;
    cfg.total_jobs = 200000;
    cfg.seed = 7;
    std::int64_t jobs = 0;
    for (auto _ : state) {
        const SimStats stats = simulate_pool(cfg, 2.0);
        jobs += cfg.total_jobs;
        benchmark::DoNotOptimize(stats.mean_wait);
    }
    state.SetItemsProcessed(jobs);
}
BENCHMARK(BM_Simulator)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
