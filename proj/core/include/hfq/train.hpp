#pragma once

#include <cstdint>
#include <vector>

#include "hfq/pipeline.hpp"

namespace hfq {

// A deterministic classification exercise on synthetic features: enough to
// demonstrate the stack trains, small enough to finish in seconds.
struct ToyTaskSpec {
    int num_classes = 8;
    int examples_per_class = 64;
    int heldout_per_class = 8;
    double duration_sec = 1.2;
    std::uint64_t seed = 0;
    int steps = 300;
    double learning_rate = 3e-3;
    int batch_size = 16;
    SynthPattern pattern = SynthPattern::tones;
    std::vector<int> label_map; // optional class relabeling; empty = identity
};

struct TrainLogRow {
    int step = 0;
    double loss = 0.0;
    double grad_norm = 0.0;
};

struct TrainResult {
    std::vector<TrainLogRow> rows;
    double initial_loss = 0.0; // full training set, before the first update
    double final_loss = 0.0;   // full training set, after the last update
    double heldout_accuracy = 0.0;
    NamedParams parameters; // trained pipeline weights, checkpoint-ready
};

// Plain SGD on mini-batch softmax cross-entropy. Throws a training error
// naming the step if the loss leaves the finite range.
TrainResult train_toy(const ToyTaskSpec& task, const HfqConfig& cfg);

} // namespace hfq
