#include <benchmark/benchmark.h>

#include "cmf/losses.hpp"
#include "cmf/network.hpp"
#include "cmf/rng.hpp"

using namespace cmf;

namespace {

Tensor random_input(int n, Dims3 d, std::uint64_t seed) {
    Tensor t(n, 1, d.d, d.h, d.w);
    Rng rng(seed);
    for (auto& v : t.v) v = rng.next_float();
    return t;
}

}  // namespace

static void BM_forward_default_96(benchmark::State& state) {
    NetworkConfig cfg;  // CT3/MR4, base 16, kernel 5
    CmfModel model(cfg);
    model.init_params(1);
    const Tensor ct = random_input(1, {96, 96, 16}, 2);
    const Tensor mr = random_input(1, {96, 96, 16}, 3);
    for (auto _ : state) {
        auto out = model.forward(ct, mr);
        benchmark::DoNotOptimize(out.probs.y_mm.v.data());
    }
}
BENCHMARK(BM_forward_default_96)->Unit(benchmark::kMillisecond)->Iterations(2);

static void BM_train_step_desk(benchmark::State& state) {
    NetworkConfig cfg;
    cfg.base_channels = int(state.range(0));
    cfg.branch_kernel = 3;
    CmfModel model(cfg);
    model.init_params(1);
    const Tensor ct = random_input(2, {64, 64, 16}, 2);
    const Tensor mr = random_input(2, {64, 64, 16}, 3);
    const MapDims md{2, 64, 64, 16};

    std::vector<std::uint8_t> scribble(std::size_t(md.spatial()), 255);
    Rng rng(5);
    for (int i = 0; i < 60; ++i)
        scribble[std::size_t(rng.next_below(std::uint64_t(md.spatial())))] =
            std::uint8_t(rng.next_below(2));
    CrfConfig crf;
    crf.max_pixels_per_slice = 256;

    for (auto _ : state) {
        model.zero_grads();
        auto out = model.forward(ct, mr, true, 7);
        Tensor dz_ct(2, md.c, md.d, md.h, md.w), dz_mr = dz_ct, dz_mm = dz_ct;
        for (int ni = 0; ni < 2; ++ni) {
            std::vector<float> d_yct(std::size_t(md.total()), 0.0f);
            std::vector<float> d_ymr(d_yct.size(), 0.0f), d_ymm(d_yct.size(), 0.0f);
            total_loss(out.probs.y_ct.sample(ni), out.probs.y_mr.sample(ni),
                       out.probs.y_mm.sample(ni), md, scribble.data(), ct.sample(ni),
                       mr.sample(ni), LossWeights{}, crf, LossToggles{}, false, false,
                       d_yct.data(), d_ymr.data(), d_ymm.data());
            softmax_backward(out.probs.y_ct.sample(ni), d_yct.data(), md, dz_ct.sample(ni));
            softmax_backward(out.probs.y_mr.sample(ni), d_ymr.data(), md, dz_mr.sample(ni));
            softmax_backward(out.probs.y_mm.sample(ni), d_ymm.data(), md, dz_mm.sample(ni));
        }
        model.backward(dz_ct, dz_mr, dz_mm);
        benchmark::DoNotOptimize(model.params()[0]->g.data());
    }
}
BENCHMARK(BM_train_step_desk)->Arg(8)->Arg(16)->Unit(benchmark::kMillisecond)->Iterations(3);

BENCHMARK_MAIN();
