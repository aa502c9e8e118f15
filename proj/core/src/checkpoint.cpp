#include "hfq/checkpoint.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>

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
        throw FormatError("truncated checkpoint: " + path);
    }
    return std::uint32_t(b[0]) | std::uint32_t(b[1]) << 8 | std::uint32_t(b[2]) << 16 |
           std::uint32_t(b[3]) << 24;
}

static_assert(sizeof(float) == 4, "payload format assumes 4-byte floats");

void write_f32_le(std::ostream& out, const std::vector<float>& values) {
    // Little-endian hosts (the only ones supported by the build) can write the
    // buffer directly.
    out.write(reinterpret_cast<const char*>(values.data()),
              static_cast<std::streamsize>(values.size() * 4));
}

} // namespace

void save_checkpoint(const std::string& path, const NamedParams& params) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw FormatError("cannot write checkpoint: " + tmp);
        }
        out.write("HFQC", 4);
        write_u32(out, kCheckpointVersion);
        write_u32(out, static_cast<std::uint32_t>(params.size()));
        for (const auto& [name, t] : params) {
            write_u32(out, static_cast<std::uint32_t>(name.size()));
            out.write(name.data(), static_cast<std::streamsize>(name.size()));
            write_u32(out, static_cast<std::uint32_t>(t.shape.size()));
            for (int dim : t.shape) write_u32(out, static_cast<std::uint32_t>(dim));
            write_f32_le(out, *t.data);
        }
        if (!out) {
            throw FormatError("write failed for checkpoint: " + tmp);
        }
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0) {
        std::remove(tmp.c_str());
        throw FormatError("cannot move checkpoint into place: " + path);
    }
}

std::vector<std::pair<std::string, Tensor>> load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw FormatError("cannot open checkpoint: " + path);
    }
    char magic[4];
    if (!in.read(magic, 4) || std::memcmp(magic, "HFQC", 4) != 0) {
        throw FormatError("bad checkpoint magic: " + path);
    }
    const std::uint32_t version = read_u32(in, path);
    if (version != kCheckpointVersion) {
        throw FormatError("unsupported checkpoint version " + std::to_string(version) + ": " + path);
    }
    const std::uint32_t count = read_u32(in, path);
    std::vector<std::pair<std::string, Tensor>> out;
    out.reserve(count);
    for (std::uint32_t e = 0; e < count; ++e) {
        const std::uint32_t name_len = read_u32(in, path);
        std::string name(name_len, '\0');
        if (!in.read(name.data(), name_len)) {
            throw FormatError("truncated checkpoint: " + path);
        }
        const std::uint32_t rank = read_u32(in, path);
        if (rank == 0 || rank > 8) {
            throw FormatError("implausible tensor rank " + std::to_string(rank) + " for \"" + name +
                              "\": " + path);
        }
        std::vector<int> shape(rank);
        std::size_t numel = 1;
        for (auto& dim : shape) {
            const std::uint32_t d = read_u32(in, path);
            if (d == 0 || d > (1u << 28)) {
                throw FormatError("implausible dimension for \"" + name + "\": " + path);
            }
            dim = static_cast<int>(d);
            numel *= d;
        }
        Tensor t = Tensor::zeros(shape);
        if (!in.read(reinterpret_cast<char*>(t.data->data()),
                     static_cast<std::streamsize>(numel * 4))) {
            throw FormatError("truncated checkpoint payload for \"" + name + "\": " + path);
        }
        out.emplace_back(std::move(name), std::move(t));
    }
    return out;
}

void load_checkpoint_into(const std::string& path, const NamedParams& params) {
    auto entries = load_checkpoint(path);
    // Resolve and validate everything before touching any destination buffer,
    // so a mismatch cannot leave partially-loaded state.
    std::vector<const Tensor*> sources(params.size(), nullptr);
    for (std::size_t i = 0; i < params.size(); ++i) {
        const auto& [name, dst] = params[i];
        for (const auto& [ename, src] : entries) {
            if (ename == name) {
                if (src.shape != dst.shape) {
                    throw SchemaError("checkpoint tensor \"" + name + "\" has shape " +
                                      src.shape_str() + ", expected " + dst.shape_str());
                }
                sources[i] = &src;
                break;
            }
        }
        if (!sources[i]) {
            throw SchemaError("checkpoint is missing tensor \"" + name + "\"");
        }
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
        *params[i].second.data = *sources[i]->data;
    }
}

} // namespace hfq
