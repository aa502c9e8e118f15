#include <benchmark/benchmark.h>

#include <cmath>

#include "hfq/frontend.hpp"

using namespace hfq;

namespace {

WaveBuffer one_second_tone() {
    WaveBuffer w;
    w.samples.resize(16000);
    for (int i = 0; i < 16000; ++i) {
        w.samples[i] = 0.5f * float(std::sin(2.0 * 3.14159265358979 * 440.0 * i / 16000.0));
    }
    return w;
}

void bm_mel_spectrogram(benchmark::State& state) {
    WaveBuffer w = one_second_tone();
    for (auto _ : state) {
        MelFrames mel = mel_spectrogram(w, 80);
        benchmark::DoNotOptimize(mel.frames.data->data());
    }
    state.SetItemsProcessed(state.iterations() * 98); // frames per second of audio
}
BENCHMARK(bm_mel_spectrogram)->Unit(benchmark::kMillisecond);

void bm_synth_features(benchmark::State& state) {
    SyntheticSpec spec;
    spec.duration_sec = 30.0;
    spec.d = 64;
    for (auto _ : state) {
        Tensor f = synth_features(spec);
        benchmark::DoNotOptimize(f.data->data());
    }
}
BENCHMARK(bm_synth_features)->Unit(benchmark::kMillisecond);

void bm_toy_encoder(benchmark::State& state) {
    Rng rng(20);
    ToyEncoder enc(80, 64, rng);
    Rng fill(21);
    Tensor mel = Tensor::randn({98, 80}, fill, 0.f, 1.f);
    Graph g;
    for (auto _ : state) {
        Tensor out = enc.forward(g, mel);
        benchmark::DoNotOptimize(out.data->data());
    }
}
BENCHMARK(bm_toy_encoder)->Unit(benchmark::kMillisecond);

} // namespace
