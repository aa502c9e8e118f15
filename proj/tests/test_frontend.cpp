#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "hfq/frontend.hpp"
#include "hfq/gradcheck.hpp"

using namespace hfq;

namespace {

// Minimal PCM16 mono WAV writer used only to exercise the reader.
void write_test_wav(const std::string& path, const std::vector<std::int16_t>& samples,
                    std::uint32_t rate = 16000, std::uint16_t channels = 1) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    auto u32 = [&](std::uint32_t v) { out.write(reinterpret_cast<const char*>(&v), 4); };
    auto u16 = [&](std::uint16_t v) { out.write(reinterpret_cast<const char*>(&v), 2); };
    const std::uint32_t data_bytes = std::uint32_t(samples.size() * 2);
    out.write("RIFF", 4);
    u32(36 + data_bytes);
    out.write("WAVE", 4);
    out.write("fmt ", 4);
    u32(16);
    u16(1); // PCM
    u16(channels);
    u32(rate);
    u32(rate * channels * 2);
    u16(std::uint16_t(channels * 2));
    u16(16);
    out.write("data", 4);
    u32(data_bytes);
    out.write(reinterpret_cast<const char*>(samples.data()), data_bytes);
}

WaveBuffer tone(double freq_hz, double duration_sec, float amplitude = 0.5f) {
    WaveBuffer w;
    const int n = int(duration_sec * 16000);
    w.samples.resize(n);
    for (int i = 0; i < n; ++i) {
        w.samples[i] = amplitude * float(std::sin(2.0 * 3.14159265358979 * freq_hz * i / 16000.0));
    }
    return w;
}

} // namespace

TEST_SUITE("wav reader") {

TEST_CASE("round-trips PCM16 mono samples") {
    const std::string path = "test_tone.wav";
    std::vector<std::int16_t> samples = {0, 16384, -16384, 32767, -32768};
    write_test_wav(path, samples);
    WaveBuffer w = read_wav(path);
    REQUIRE(w.samples.size() == samples.size());
    CHECK(w.sample_rate_hz == 16000);
    for (std::size_t i = 0; i < samples.size(); ++i) {
        CHECK(w.samples[i] == doctest::Approx(samples[i] / 32768.f).epsilon(1e-6));
    }
    std::remove(path.c_str());
}

TEST_CASE("rejects the formats it does not support") {
    const std::string path = "test_bad.wav";
    write_test_wav(path, {0, 0, 0}, 44100);
    CHECK_THROWS_AS(read_wav(path), FormatError);
    write_test_wav(path, {0, 0, 0, 0}, 16000, 2);
    CHECK_THROWS_AS(read_wav(path), FormatError);
    std::ofstream(path, std::ios::trunc) << "not a wav";
    CHECK_THROWS_AS(read_wav(path), FormatError);
    std::remove(path.c_str());
}

} // suite

TEST_SUITE("mel spectrogram") {

TEST_CASE("one second of silence hits the log floor everywhere") {
    WaveBuffer w;
    w.samples.assign(16000, 0.f);
    MelFrames mel = mel_spectrogram(w, 16);
    CHECK(mel.frames.rows() == 98); // 1 + (16000 - 400) / 160
    for (float v : *mel.frames.data) CHECK(v == doctest::Approx(-10.f).epsilon(1e-6));
}

TEST_CASE("frame-count law holds across a duration grid") {
    for (double sec = 0.5; sec <= 120.0; sec += 0.5) {
        const std::size_t n = std::size_t(sec * 16000);
        CHECK(mel_frame_count(n) == 1 + int((n - 400) / 160));
    }
    CHECK_THROWS_AS(mel_frame_count(399), LengthError);
}

TEST_CASE("frame counts match the formula on real signals") {
    for (double sec : {0.5, 1.0, 2.7}) {
        WaveBuffer w = tone(440.0, sec);
        MelFrames mel = mel_spectrogram(w, 16);
        CHECK(mel.frames.rows() == mel_frame_count(w.samples.size()));
    }
}

TEST_CASE("a 1 kHz tone peaks in the filter whose center is nearest 1 kHz") {
    MelFrames mel = mel_spectrogram(tone(1000.0, 1.0), 16);
    auto centers = mel_center_frequencies_hz(16);
    int expect = 0;
    for (int m = 1; m < 16; ++m) {
        if (std::abs(centers[m] - 1000.0) < std::abs(centers[expect] - 1000.0)) expect = m;
    }
    for (int t = 0; t < mel.frames.rows(); ++t) {
        int peak = 0;
        for (int m = 1; m < 16; ++m) {
            if (mel.frames.at(t, m) > mel.frames.at(t, peak)) peak = m;
        }
        CHECK(peak == expect);
    }
}

TEST_CASE("one hop of leading silence shifts interior frames by one") {
    WaveBuffer w = tone(700.0, 1.0);
    MelFrames base = mel_spectrogram(w, 16);
    WaveBuffer padded;
    padded.samples.assign(160, 0.f);
    padded.samples.insert(padded.samples.end(), w.samples.begin(), w.samples.end());
    MelFrames shifted = mel_spectrogram(padded, 16);
    for (int t = 1; t + 1 < base.frames.rows(); ++t) {
        for (int m = 0; m < 16; ++m) {
            CHECK(shifted.frames.at(t + 1, m) == doctest::Approx(base.frames.at(t, m)).epsilon(1e-4));
        }
    }
}

TEST_CASE("wrong sample rate is a format error") {
    WaveBuffer w;
    w.samples.assign(8000, 0.f);
    w.sample_rate_hz = 8000;
    CHECK_THROWS_AS(mel_spectrogram(w, 16), FormatError);
}

} // suite

TEST_SUITE("toy encoder") {

TEST_CASE("halves the frame rate with a ceiling") {
    Rng rng(80);
    ToyEncoder enc(16, 64, rng);
    Graph g;
    for (int t_mel : {2, 3, 9, 100}) {
        Rng fill(81);
        Tensor mel = Tensor::randn({t_mel, 16}, fill, 0.f, 1.f);
        Tensor out = enc.forward(g, mel);
        CHECK(out.rows() == (t_mel + 1) / 2);
        CHECK(out.cols() == 64);
    }
    CHECK_THROWS_AS(enc.forward(g, Tensor::zeros({1, 16})), LengthError);
}

TEST_CASE("gradients match finite differences") {
    Rng rng(82);
    ToyEncoderT<double> enc(6, 8, rng);
    Rng fill(83);
    TensorT<double> mel = TensorT<double>::randn({5, 6}, fill, 0.0, 1.0, true);
    std::vector<TensorT<double>> params = {mel};
    NamedParamsT<double> named;
    enc.collect("enc", named);
    for (auto& [name, t] : named) params.push_back(t);
    GraphT<double> g;
    auto loss = [&](GraphT<double>& gr) { return mean_square(gr, enc.forward(gr, mel)); };
    CHECK(grad_check<double>(g, loss, params) < 1e-4);
}

} // suite

TEST_SUITE("synthetic features") {

TEST_CASE("identical specs are bit-identical") {
    SyntheticSpec spec;
    spec.seed = 7;
    spec.duration_sec = 0.7;
    spec.d = 12;
    spec.class_id = 3;
    Tensor a = synth_features(spec);
    Tensor b = synth_features(spec);
    CHECK(*a.data == *b.data);
}

TEST_CASE("fifty frames per second") {
    SyntheticSpec spec;
    spec.duration_sec = 1.2;
    spec.d = 4;
    CHECK(synth_features(spec).rows() == 60);
    spec.duration_sec = 0.02;
    CHECK(synth_features(spec).rows() == 1);
}

TEST_CASE("classes stay separated for every pattern and seed 0 through 9") {
    for (auto pattern : {SynthPattern::tones, SynthPattern::chirps, SynthPattern::noise}) {
        for (std::uint64_t seed = 0; seed < 10; ++seed) {
            SyntheticSpec a, b;
            a.seed = b.seed = seed;
            a.duration_sec = b.duration_sec = 1.0;
            a.d = b.d = 8;
            a.pattern = b.pattern = pattern;
            a.class_id = 0;
            b.class_id = 1;
            Tensor fa = synth_features(a);
            Tensor fb = synth_features(b);
            float max_diff = 0.f;
            for (std::size_t i = 0; i < fa.numel(); ++i) {
                max_diff = std::max(max_diff, std::abs((*fa.data)[i] - (*fb.data)[i]));
            }
            CHECK(max_diff > 0.1f);
        }
    }
}

TEST_CASE("rejects non-positive durations") {
    SyntheticSpec spec;
    spec.duration_sec = 0.0;
    CHECK_THROWS_AS(synth_features(spec), DomainError);
}

} // suite
