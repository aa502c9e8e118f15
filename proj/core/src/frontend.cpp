#include <cmath>
#include <complex>

#include "hfq/frontend.hpp"

namespace hfq {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Iterative radix-2 complex FFT, in place. n must be a power of two.
void fft_inplace(std::vector<std::complex<double>>& a) {
    const std::size_t n = a.size();
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double angle = -2.0 * kPi / double(len);
        const std::complex<double> wlen(std::cos(angle), std::sin(angle));
        for (std::size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (std::size_t k = 0; k < len / 2; ++k) {
                const std::complex<double> u = a[i + k];
                const std::complex<double> v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= wlen;
            }
        }
    }
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

// Triangular filters over the magnitude bins, [n_mels x (fft/2 + 1)].
std::vector<std::vector<double>> mel_filterbank(int n_mels) {
    const int bins = kMelFftSize / 2 + 1;
    const double bin_hz = 16000.0 / kMelFftSize;
    const double mel_hi = hz_to_mel(8000.0);
    std::vector<double> edges(n_mels + 2);
    for (int i = 0; i < n_mels + 2; ++i) {
        edges[i] = mel_to_hz(mel_hi * i / (n_mels + 1));
    }
    std::vector<std::vector<double>> fb(n_mels, std::vector<double>(bins, 0.0));
    for (int m = 0; m < n_mels; ++m) {
        const double lo = edges[m], mid = edges[m + 1], hi = edges[m + 2];
        for (int k = 0; k < bins; ++k) {
            const double f = k * bin_hz;
            if (f > lo && f < mid) {
                fb[m][k] = (f - lo) / (mid - lo);
            } else if (f >= mid && f < hi) {
                fb[m][k] = (hi - f) / (hi - mid);
            }
        }
    }
    return fb;
}

} // namespace

int mel_frame_count(std::size_t num_samples) {
    if (num_samples < std::size_t(kMelWinSamples)) {
        throw LengthError("audio shorter than one 25 ms analysis window: " +
                          std::to_string(num_samples) + " samples");
    }
    return 1 + int((num_samples - kMelWinSamples) / kMelHopSamples);
}

std::vector<double> mel_center_frequencies_hz(int n_mels) {
    const double mel_hi = hz_to_mel(8000.0);
    std::vector<double> centers(n_mels);
    for (int m = 0; m < n_mels; ++m) {
        centers[m] = mel_to_hz(mel_hi * (m + 1) / (n_mels + 1));
    }
    return centers;
}

MelFrames mel_spectrogram(const WaveBuffer& wave, int n_mels) {
    if (wave.sample_rate_hz != 16000) {
        throw FormatError("mel path requires 16 kHz input, got " +
                          std::to_string(wave.sample_rate_hz) + " Hz");
    }
    if (n_mels < 1) {
        throw ConfigError("n_mels must be >= 1");
    }
    const int t_mel = mel_frame_count(wave.samples.size());

    // Periodic Hann window.
    std::vector<double> window(kMelWinSamples);
    for (int i = 0; i < kMelWinSamples; ++i) {
        window[i] = 0.5 * (1.0 - std::cos(2.0 * kPi * i / kMelWinSamples));
    }
    const auto fb = mel_filterbank(n_mels);
    const int bins = kMelFftSize / 2 + 1;

    MelFrames out;
    out.n_mels = n_mels;
    out.frames = Tensor::zeros({t_mel, n_mels});
    std::vector<std::complex<double>> buf(kMelFftSize);
    std::vector<double> mag(bins);
    for (int t = 0; t < t_mel; ++t) {
        const std::size_t base = std::size_t(t) * kMelHopSamples;
        for (int i = 0; i < kMelFftSize; ++i) {
            buf[i] = i < kMelWinSamples ? wave.samples[base + i] * window[i] : 0.0;
        }
        fft_inplace(buf);
        for (int k = 0; k < bins; ++k) mag[k] = std::abs(buf[k]);
        for (int m = 0; m < n_mels; ++m) {
            double energy = 0.0;
            for (int k = 0; k < bins; ++k) energy += fb[m][k] * mag[k];
            out.frames.at(t, m) = float(std::log10(std::max(double(kMelLogFloor), energy)));
        }
    }
    return out;
}

SynthPattern synth_pattern_from_string(const std::string& s) {
    if (s == "tones") return SynthPattern::tones;
    if (s == "chirps") return SynthPattern::chirps;
    if (s == "noise") return SynthPattern::noise;
    throw ConfigError("pattern must be \"tones\", \"chirps\", or \"noise\", got \"" + s + "\"");
}

Tensor synth_features(const SyntheticSpec& spec) {
    if (spec.duration_sec <= 0) {
        throw DomainError("synthetic duration must be positive");
    }
    if (spec.d < 1) {
        throw ConfigError("synthetic feature dimension must be >= 1");
    }
    const int frames = int(std::llround(spec.duration_sec * 50.0));
    if (frames < 1) {
        throw DomainError("duration too short for a single 50 Hz frame");
    }

    // One independent stream per (seed, class, pattern) triple.
    const std::uint64_t mixed = spec.seed ^
                                (0x9E3779B97F4A7C15ULL * std::uint64_t(spec.class_id + 1)) ^
                                (0xBF58476D1CE4E5B9ULL * (std::uint64_t(spec.pattern) + 1));
    Rng rng(mixed);

    Tensor out = Tensor::zeros({frames, spec.d});
    const int c = spec.class_id;
    for (int t = 0; t < frames; ++t) {
        const double tau = t / 50.0;
        for (int j = 0; j < spec.d; ++j) {
            double motif = 0.0;
            switch (spec.pattern) {
            case SynthPattern::tones:
                motif = 0.8 * std::sin(2.0 * kPi * (1.0 + 0.5 * c) * tau + 0.7 * j);
                break;
            case SynthPattern::chirps:
                motif = 0.8 * std::sin(2.0 * kPi * (0.5 * tau + 0.5 * (0.8 + 0.4 * c) * tau * tau) +
                                       0.5 * j);
                break;
            case SynthPattern::noise:
                motif = 0.0;
                break;
            }
            const double noise_std = spec.pattern == SynthPattern::noise ? 0.4 + 0.15 * c : 0.05;
            out.at(t, j) = float(motif + rng.normal(0.0, noise_std));
        }
    }
    return out;
}

} // namespace hfq
