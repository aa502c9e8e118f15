#include <benchmark/benchmark.h>

#include "hfq/ops.hpp"

using namespace hfq;

namespace {

void bm_matmul(benchmark::State& state) {
    const int n = int(state.range(0));
    Rng rng(1);
    Tensor a = Tensor::randn({n, n}, rng, 0.f, 1.f);
    Tensor b = Tensor::randn({n, n}, rng, 0.f, 1.f);
    Graph g;
    for (auto _ : state) {
        Tensor c = matmul(g, a, b);
        benchmark::DoNotOptimize(c.data->data());
    }
    state.SetItemsProcessed(state.iterations() * 2ll * n * n * n);
}
BENCHMARK(bm_matmul)->Arg(64)->Arg(256)->Arg(512);

void bm_matmul_backward(benchmark::State& state) {
    const int n = int(state.range(0));
    Rng rng(2);
    Tensor a = Tensor::randn({n, n}, rng, 0.f, 0.1f, true);
    Tensor b = Tensor::randn({n, n}, rng, 0.f, 0.1f, true);
    for (auto _ : state) {
        Graph g;
        g.set_recording(true);
        Tensor loss = sum(g, matmul(g, a, b));
        g.backward(loss);
        benchmark::DoNotOptimize(a.grad->data());
        a.zero_grad();
        b.zero_grad();
    }
}
BENCHMARK(bm_matmul_backward)->Arg(64)->Arg(256);

void bm_softmax_rows(benchmark::State& state) {
    Rng rng(3);
    Tensor x = Tensor::randn({256, 1024}, rng, 0.f, 1.f);
    Graph g;
    for (auto _ : state) {
        Tensor y = softmax_rows(g, x);
        benchmark::DoNotOptimize(y.data->data());
    }
}
BENCHMARK(bm_softmax_rows);

void bm_conv1d(benchmark::State& state) {
    const int d = int(state.range(0));
    Rng rng(4);
    Tensor x = Tensor::randn({1500, d}, rng, 0.f, 1.f);
    Tensor w = Tensor::randn({3, d, d}, rng, 0.f, 0.05f);
    Tensor b = Tensor::zeros({d});
    Graph g;
    for (auto _ : state) {
        Tensor y = conv1d(g, x, w, b, 2, 1);
        benchmark::DoNotOptimize(y.data->data());
    }
}
BENCHMARK(bm_conv1d)->Arg(64)->Arg(256);

} // namespace
