#include "hfq/feature_io.hpp"

#include <cstdio>
#include <fstream>

#include "hfq/errors.hpp"

namespace hfq {

namespace {

void write_u32(std::ostream& out, std::uint32_t v) {
    const unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                                static_cast<unsigned char>(v >> 16),
                                static_cast<unsigned char>(v >> 24)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t read_u32(std::istream& in, const std::string& path) {
    unsigned char b[4];
    if (!in.read(reinterpret_cast<char*>(b), 4)) {
        throw FormatError("truncated feature file: " + path);
    }
    return std::uint32_t(b[0]) | std::uint32_t(b[1]) << 8 | std::uint32_t(b[2]) << 16 |
           std::uint32_t(b[3]) << 24;
}

} // namespace

void write_features(const std::string& path, const Tensor& features) {
    if (features.rank() != 2) {
        throw DimensionError("feature files hold rank-2 matrices, got " + features.shape_str());
    }
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw FormatError("cannot write feature file: " + tmp);
        }
        write_u32(out, static_cast<std::uint32_t>(features.shape[0]));
        write_u32(out, static_cast<std::uint32_t>(features.shape[1]));
        out.write(reinterpret_cast<const char*>(features.data->data()),
                  static_cast<std::streamsize>(features.numel() * 4));
        if (!out) {
            throw FormatError("write failed for feature file: " + tmp);
        }
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0) {
        std::remove(tmp.c_str());
        throw FormatError("cannot move feature file into place: " + path);
    }
}

Tensor read_features(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw FormatError("cannot open feature file: " + path);
    }
    const std::uint32_t t = read_u32(in, path);
    const std::uint32_t d = read_u32(in, path);
    if (t == 0 || d == 0 || t > (1u << 28) || d > (1u << 20)) {
        throw FormatError("implausible feature dimensions " + std::to_string(t) + "x" +
                          std::to_string(d) + ": " + path);
    }
    Tensor out = Tensor::zeros({static_cast<int>(t), static_cast<int>(d)});
    if (!in.read(reinterpret_cast<char*>(out.data->data()),
                 static_cast<std::streamsize>(out.numel() * 4))) {
        throw FormatError("truncated feature payload: " + path);
    }
    return out;
}

} // namespace hfq
