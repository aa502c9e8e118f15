#pragma once

#include <string>
#include <utility>
#include <vector>

#include "hfq/layers.hpp"

namespace hfq {

// Binary parameter container, little-endian:
//   magic "HFQC", version u32 (currently 1), entry count u32, then per entry
//   name length u32, UTF-8 name, rank u32, dims u32 x rank, f32 payload
//   row-major. Round-trips bit-exactly; writes go through a temp file + rename.
constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const std::string& path, const NamedParams& params);

// All entries in file order.
std::vector<std::pair<std::string, Tensor>> load_checkpoint(const std::string& path);

// Loads into existing tensors: every destination name must be present with
// identical shape (schema error naming the first offender), buffers are
// overwritten in place.
void load_checkpoint_into(const std::string& path, const NamedParams& params);

} // namespace hfq
