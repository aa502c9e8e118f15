#pragma once

#include <string>

#include "hfq/layers.hpp"

namespace hfq {

// Architectural hyperparameters for the compression stack. JSON round-trips
// use exactly these field names; unknown keys are rejected, omitted keys keep
// the desk defaults.
struct HfqConfig {
    int d_model = 64;
    int num_stages = 3;
    int queries_per_stage = 8;
    int compressed_tokens = 5;
    int heads = 4;
    int downsample_kernel = 3;
    int downsample_stride = 2;
    double window_seconds = 30.0;
    double frame_rate_hz = 50.0;
    AttentionMode attention_mode = AttentionMode::projected;

    // Small test-sized default: d=64, 3 stages, 8 queries each, 5 tokens out.
    static HfqConfig desk();
    // Full-sized configuration: d=1280, 80 queries per stage, 50 tokens out.
    static HfqConfig full_scale();

    // Tokens emitted per second of audio (compressed_tokens per window).
    double token_rate() const { return compressed_tokens / window_seconds; }
    // Frames per processing window (1500 at 50 Hz / 30 s).
    int window_frames() const { return static_cast<int>(window_seconds * frame_rate_hz + 0.5); }

    void validate() const;

    std::string to_json() const;
    static HfqConfig from_json(const std::string& text);
    static HfqConfig load_file(const std::string& path);
    void save_file(const std::string& path) const;
};

} // namespace hfq
