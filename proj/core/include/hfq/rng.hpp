#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace hfq {

// Deterministic 64-bit PRNG: xoshiro256** seeded via splitmix64.
// The full generation scheme (state setup, uniform mapping, Box-Muller
// normals) is fixed here so that a seed fully determines every parameter
// and every synthetic input, bit for bit, across runs.
class Rng {
public:
    explicit Rng(std::uint64_t seed) {
        // splitmix64 expands the seed into the four xoshiro words.
        std::uint64_t x = seed;
        for (auto& word : state_) {
            x += 0x9e3779b97f4a7c15ULL;
            std::uint64_t z = x;
            z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
            z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
            word = z ^ (z >> 31);
        }
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // Uniform in [0, 1): top 53 bits scaled by 2^-53.
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // Standard normal via Box-Muller; the sine partner of each pair is cached.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        if (u1 <= 0.0) {
            u1 = 0x1.0p-53;
        }
        const double u2 = uniform();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * pi() * u2;
        spare_ = radius * std::sin(angle);
        has_spare_ = true;
        return radius * std::cos(angle);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    // Split off an independent stream (for per-example seeds and the like).
    // Child generator with an independent stream, for per-tensor seeding.
    Rng derive() { return Rng(next_u64()); }

    template <class Real>
    void fill_normal(std::vector<Real>& out, double mean, double stddev) {
        for (auto& v : out) {
            v = static_cast<Real>(normal(mean, stddev));
        }
    }

private:
    static constexpr double pi() { return 3.14159265358979323846; }
    static std::uint64_t rotl(std::uint64_t v, int k) { return (v << k) | (v >> (64 - k)); }

    std::uint64_t state_[4] = {};
    double spare_ = 0.0;
    bool has_spare_ = false;
};

} // namespace hfq
