#include <benchmark/benchmark.h>

#include "cmf/metrics.hpp"
#include "cmf/rng.hpp"
#include "cmf/synth.hpp"

using namespace cmf;

namespace {

std::pair<LabelMask, LabelMask> benchmark_masks(Dims3 dims) {
    const auto a = synth_pair(31, dims, 2, 2);
    const auto b = synth_pair(32, dims, 2, 2);
    return {*a.gt, *b.gt};
}

}  // namespace

static void BM_dsc(benchmark::State& state) {
    const auto [pred, gt] = benchmark_masks({64, 64, 16});
    for (auto _ : state) benchmark::DoNotOptimize(dsc(pred, gt, 1));
}
BENCHMARK(BM_dsc)->Unit(benchmark::kMillisecond);

static void BM_asd(benchmark::State& state) {
    const auto [pred, gt] = benchmark_masks({64, 64, 16});
    for (auto _ : state) benchmark::DoNotOptimize(asd(pred, gt, 1, {3.0, 1.0, 1.0}));
}
BENCHMARK(BM_asd)->Unit(benchmark::kMillisecond);

static void BM_evaluate_case(benchmark::State& state) {
    const auto [pred, gt] = benchmark_masks({64, 64, 16});
    for (auto _ : state) benchmark::DoNotOptimize(evaluate_case(pred, gt, "bench"));
}
BENCHMARK(BM_evaluate_case)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
