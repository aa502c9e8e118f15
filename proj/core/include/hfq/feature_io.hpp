#pragma once

#include <string>

#include "hfq/tensor.hpp"

namespace hfq {

// Raw feature matrix file, little-endian: header T u32, d u32, then T*d
// 32-bit floats row-major. Written atomically (temp + rename).
void write_features(const std::string& path, const Tensor& features);
Tensor read_features(const std::string& path);

} // namespace hfq
