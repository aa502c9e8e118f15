#include <cstring>
#include <fstream>

#include "hfq/frontend.hpp"

namespace hfq {

namespace {

std::uint32_t read_u32(std::istream& in, const std::string& path) {
    unsigned char b[4];
    if (!in.read(reinterpret_cast<char*>(b), 4)) {
        throw FormatError("truncated WAV file: " + path);
    }
    return std::uint32_t(b[0]) | std::uint32_t(b[1]) << 8 | std::uint32_t(b[2]) << 16 |
           std::uint32_t(b[3]) << 24;
}

std::uint16_t read_u16(std::istream& in, const std::string& path) {
    unsigned char b[2];
    if (!in.read(reinterpret_cast<char*>(b), 2)) {
        throw FormatError("truncated WAV file: " + path);
    }
    return std::uint16_t(b[0] | b[1] << 8);
}

} // namespace

WaveBuffer read_wav(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw FormatError("cannot open WAV file: " + path);
    }
    char tag[4];
    if (!in.read(tag, 4) || std::memcmp(tag, "RIFF", 4) != 0) {
        throw FormatError("not a RIFF file: " + path);
    }
    read_u32(in, path); // RIFF payload size, unused
    if (!in.read(tag, 4) || std::memcmp(tag, "WAVE", 4) != 0) {
        throw FormatError("not a WAVE file: " + path);
    }

    bool have_fmt = false;
    WaveBuffer wave;
    while (in.read(tag, 4)) {
        const std::uint32_t chunk_size = read_u32(in, path);
        if (std::memcmp(tag, "fmt ", 4) == 0) {
            if (chunk_size < 16) {
                throw FormatError("malformed fmt chunk: " + path);
            }
            const std::uint16_t format = read_u16(in, path);
            const std::uint16_t channels = read_u16(in, path);
            const std::uint32_t rate = read_u32(in, path);
            read_u32(in, path); // byte rate
            read_u16(in, path); // block align
            const std::uint16_t bits = read_u16(in, path);
            in.ignore(chunk_size - 16);
            if (format != 1 || bits != 16) {
                throw FormatError("only PCM 16-bit WAV is supported: " + path);
            }
            if (channels != 1) {
                throw FormatError("only mono WAV is supported, got " + std::to_string(channels) +
                                  " channels: " + path);
            }
            if (rate != 16000) {
                throw FormatError("only 16 kHz WAV is supported, got " + std::to_string(rate) +
                                  " Hz: " + path);
            }
            wave.sample_rate_hz = static_cast<int>(rate);
            have_fmt = true;
        } else if (std::memcmp(tag, "data", 4) == 0) {
            if (!have_fmt) {
                throw FormatError("data chunk before fmt chunk: " + path);
            }
            const std::size_t count = chunk_size / 2;
            std::vector<char> raw(chunk_size);
            if (!in.read(raw.data(), chunk_size)) {
                throw FormatError("truncated data chunk: " + path);
            }
            wave.samples.resize(count);
            for (std::size_t i = 0; i < count; ++i) {
                const std::int16_t s =
                    std::int16_t(std::uint8_t(raw[2 * i]) | std::uint8_t(raw[2 * i + 1]) << 8);
                wave.samples[i] = float(s) / 32768.0f;
            }
            return wave;
        } else {
            // Skip unknown chunks (LIST, fact, ...), honoring word alignment.
            in.ignore(chunk_size + (chunk_size & 1));
        }
    }
    throw FormatError("no data chunk found: " + path);
}

} // namespace hfq
