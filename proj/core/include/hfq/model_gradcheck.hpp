#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hfq/config.hpp"

namespace hfq {

struct GradCheckGroup {
    std::string name;
    double max_rel_err = 0.0;
    std::size_t coords_probed = 0;
    std::size_t numel = 0;
};

struct GradCheckReport {
    std::vector<GradCheckGroup> groups;
    double max_rel_err = 0.0;
    bool passed = false; // every group under the threshold
    double threshold = 1e-3;
};

// Verifies reverse-mode gradients of the full encoder + compression + head
// graph against 64-bit central differences, one parameter group at a time.
// Within a group, up to max_coords_per_group coordinates are probed on a
// deterministic even spread (every coordinate when the group is small enough).
GradCheckReport run_model_gradcheck(const HfqConfig& cfg, std::uint64_t seed,
                                    int t_mel = 8, int n_mels = 16,
                                    std::size_t max_coords_per_group = 48);

} // namespace hfq
