#include <benchmark/benchmark.h>

#include "hfq/config.hpp"
#include "hfq/hfq_former.hpp"

using namespace hfq;

namespace {

Tensor window_features(int t, int d) {
    Rng rng(10);
    return Tensor::randn({t, d}, rng, 0.f, 1.f);
}

// One 30 s window (1500 frames) through the desk-sized stack.
void bm_desk_window(benchmark::State& state) {
    HfqConfig cfg = HfqConfig::desk();
    Rng rng(11);
    HfqFormer model(cfg, rng);
    Tensor x = window_features(1500, cfg.d_model);
    for (auto _ : state) {
        Graph g;
        auto res = model.forward(g, x);
        benchmark::DoNotOptimize(res.tokens.data->data());
    }
}
BENCHMARK(bm_desk_window)->Unit(benchmark::kMillisecond);

// Five minutes of desk-sized audio: ten independent windows.
void bm_desk_long_form(benchmark::State& state) {
    HfqConfig cfg = HfqConfig::desk();
    Rng rng(12);
    HfqFormer model(cfg, rng);
    Tensor x = window_features(15000, cfg.d_model);
    for (auto _ : state) {
        auto windows = model.compress_long_form(x);
        benchmark::DoNotOptimize(windows.back().tokens.data->data());
    }
}
BENCHMARK(bm_desk_long_form)->Unit(benchmark::kMillisecond);

// One window at the full model size (d=1280, 80 queries, 50 tokens).
void bm_full_scale_window(benchmark::State& state) {
    HfqConfig cfg = HfqConfig::full_scale();
    Rng rng(13);
    HfqFormer model(cfg, rng);
    Tensor x = window_features(1500, cfg.d_model);
    for (auto _ : state) {
        Graph g;
        auto res = model.forward(g, x);
        benchmark::DoNotOptimize(res.tokens.data->data());
    }
}
BENCHMARK(bm_full_scale_window)->Unit(benchmark::kMillisecond)->Iterations(3);

// Desk-sized training step: forward + backward through the whole stack.
void bm_desk_backward(benchmark::State& state) {
    HfqConfig cfg = HfqConfig::desk();
    Rng rng(14);
    HfqFormer model(cfg, rng);
    Tensor x = window_features(60, cfg.d_model);
    for (auto _ : state) {
        Graph g;
        g.set_recording(true);
        Tensor loss = mean_square(g, model.forward(g, x).tokens);
        g.backward(loss);
        benchmark::DoNotOptimize(loss.data->data());
        for (auto& [name, p] : model.parameters()) p.zero_grad();
    }
}
BENCHMARK(bm_desk_backward)->Unit(benchmark::kMillisecond);

} // namespace
