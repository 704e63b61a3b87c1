#include <benchmark/benchmark.h>

#include "cmf/losses.hpp"
#include "cmf/rng.hpp"

using namespace cmf;

namespace {

std::vector<float> random_probs(MapDims dims, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<float> z(std::size_t(dims.total()));
    for (auto& v : z) v = float(rng.gaussian());
    std::vector<float> y(z.size());
    softmax_channels(z.data(), dims, y.data());
    return y;
}

std::vector<float> random_image(std::int64_t n, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<float> img(static_cast<std::size_t>(n));
    for (auto& v : img) v = rng.next_float();
    return img;
}

}  // namespace

static void BM_crf_slice_dense(benchmark::State& state) {
    const int side = int(state.range(0));
    const MapDims dims{2, 1, side, side};
    const auto y = random_probs(dims, 1);
    const auto img = random_image(dims.spatial(), 2);
    CrfConfig cfg;
    std::vector<float> dy(y.size());
    for (auto _ : state) {
        std::fill(dy.begin(), dy.end(), 0.0f);
        benchmark::DoNotOptimize(
            crf_loss_2d(y.data(), 2, side, side, img.data(), cfg, dy.data()));
    }
}
BENCHMARK(BM_crf_slice_dense)->Arg(16)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

static void BM_crf_slice_subsampled(benchmark::State& state) {
    const int side = 64;
    const MapDims dims{2, 1, side, side};
    const auto y = random_probs(dims, 1);
    const auto img = random_image(dims.spatial(), 2);
    CrfConfig cfg;
    cfg.max_pixels_per_slice = int(state.range(0));
    std::vector<float> dy(y.size());
    for (auto _ : state) {
        std::fill(dy.begin(), dy.end(), 0.0f);
        benchmark::DoNotOptimize(
            crf_loss_2d(y.data(), 2, side, side, img.data(), cfg, dy.data(), 7));
    }
}
BENCHMARK(BM_crf_slice_subsampled)->Arg(128)->Arg(256)->Arg(512)->Unit(benchmark::kMillisecond);

static void BM_mcrf_volume(benchmark::State& state) {
    const MapDims dims{2, 16, 64, 64};
    const auto y = random_probs(dims, 3);
    const auto img = random_image(dims.spatial(), 4);
    CrfConfig cfg;
    cfg.max_pixels_per_slice = 256;
    std::vector<float> dy(y.size());
    for (auto _ : state) {
        std::fill(dy.begin(), dy.end(), 0.0f);
        benchmark::DoNotOptimize(mcrf_loss(y.data(), dims, img.data(), cfg, dy.data()));
    }
}
BENCHMARK(BM_mcrf_volume)->Unit(benchmark::kMillisecond);

static void BM_pce(benchmark::State& state) {
    const MapDims dims{2, 16, 64, 64};
    const auto y = random_probs(dims, 5);
    Rng rng(6);
    std::vector<std::uint8_t> s(std::size_t(dims.spatial()), 255);
    for (int i = 0; i < 60; ++i)
        s[std::size_t(rng.next_below(std::uint64_t(dims.spatial())))] =
            std::uint8_t(rng.next_below(2));
    std::vector<float> dy(y.size());
    for (auto _ : state) {
        std::fill(dy.begin(), dy.end(), 0.0f);
        benchmark::DoNotOptimize(pce_loss(y.data(), dims, s.data(), false, dy.data()));
    }
}
BENCHMARK(BM_pce)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
