#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hfq/layers.hpp"

namespace hfq {

// ---------------------------------------------------------------------------
// Audio input
// ---------------------------------------------------------------------------

struct WaveBuffer {
    std::vector<float> samples; // in [-1, 1]
    int sample_rate_hz = 16000;

    double duration_sec() const {
        return sample_rate_hz > 0 ? double(samples.size()) / sample_rate_hz : 0.0;
    }
};

// RIFF/WAVE reader, deliberately narrow: PCM 16-bit, mono, 16 kHz only.
WaveBuffer read_wav(const std::string& path);

// ---------------------------------------------------------------------------
// Log-mel spectrogram: 25 ms Hann window, 10 ms hop, 512-point FFT,
// triangular mel filterbank over 0-8 kHz, log10 with a 1e-10 floor.
// ---------------------------------------------------------------------------

struct MelFrames {
    Tensor frames; // [T_mel x n_mels], 100 frames per second
    int n_mels = 0;
};

constexpr int kMelWinSamples = 400; // 25 ms at 16 kHz
constexpr int kMelHopSamples = 160; // 10 ms at 16 kHz
constexpr int kMelFftSize = 512;
constexpr float kMelLogFloor = 1e-10f;

MelFrames mel_spectrogram(const WaveBuffer& wave, int n_mels);

// Frame count for a sample count: 1 + floor((n - win) / hop), needing n >= win.
int mel_frame_count(std::size_t num_samples);

// Center frequencies (Hz) of the filterbank, for locating energy peaks.
std::vector<double> mel_center_frequencies_hz(int n_mels);

// ---------------------------------------------------------------------------
// Synthetic 50 Hz features: deterministic class-conditioned motifs + noise
// ---------------------------------------------------------------------------

enum class SynthPattern { tones, chirps, noise };

SynthPattern synth_pattern_from_string(const std::string& s);

struct SyntheticSpec {
    std::uint64_t seed = 0;
    double duration_sec = 1.0;
    int d = 64;
    int class_id = 0;
    SynthPattern pattern = SynthPattern::tones;
};

// [round(duration * 50) x d]; identical specs give bit-identical output.
Tensor synth_features(const SyntheticSpec& spec);

// ---------------------------------------------------------------------------
// Toy encoder standing in for a real speech encoder: linear lift of the mel
// bins to the model width, then one strided conv halving 100 Hz to 50 Hz.
// ---------------------------------------------------------------------------

template <class Real>
struct ToyEncoderT {
    LinearT<Real> lift; // n_mels -> d
    TensorT<Real> conv_w, conv_b;

    ToyEncoderT() = default;

    ToyEncoderT(int n_mels, int d, Rng& rng) : lift(n_mels, d, rng) {
        conv_w = TensorT<Real>::randn({3, d, d}, rng, 0.0, 1.0 / std::sqrt(3.0 * d), true);
        conv_b = TensorT<Real>::zeros({d}, true);
    }

    // [T_mel x n_mels] -> [ceil(T_mel/2) x d]
    TensorT<Real> forward(GraphT<Real>& g, const TensorT<Real>& mel) const {
        if (mel.rows() < 2) {
            throw LengthError("toy encoder needs at least 2 frames, got " + mel.shape_str());
        }
        return gelu(g, conv1d(g, lift.forward(g, mel), conv_w, conv_b, 2, 1));
    }

    void collect(const std::string& prefix, NamedParamsT<Real>& out) const {
        lift.collect(prefix + ".lift", out);
        out.emplace_back(prefix + ".conv.weight", conv_w);
        out.emplace_back(prefix + ".conv.bias", conv_b);
    }
};
using ToyEncoder = ToyEncoderT<float>;

} // namespace hfq
