#include "hfq/train.hpp"

#include <cmath>

namespace hfq {

namespace {

struct Example {
    Tensor features;
    int label = 0;
};

std::vector<Example> make_dataset(const ToyTaskSpec& task, const HfqConfig& cfg, Rng& seeds,
                                  int per_class) {
    std::vector<Example> out;
    out.reserve(static_cast<std::size_t>(task.num_classes) * per_class);
    for (int c = 0; c < task.num_classes; ++c) {
        const int label = task.label_map.empty() ? c : task.label_map[c];
        for (int e = 0; e < per_class; ++e) {
            SyntheticSpec spec;
            spec.seed = seeds.next_u64();
            spec.duration_sec = task.duration_sec;
            spec.d = cfg.d_model;
            spec.class_id = c;
            spec.pattern = task.pattern;
            out.push_back({synth_features(spec), label});
        }
    }
    return out;
}

double full_set_loss(const Pipeline& model, const std::vector<Example>& data) {
    double total = 0.0;
    for (const auto& ex : data) {
        Graph g; // recording off: evaluation only
        Tensor loss = cross_entropy_logits(g, model.forward_logits(g, ex.features), {ex.label});
        total += loss.value();
    }
    return total / double(data.size());
}

int argmax_row(const Tensor& logits) {
    int best = 0;
    for (int j = 1; j < logits.cols(); ++j) {
        if (logits.at(0, j) > logits.at(0, best)) best = j;
    }
    return best;
}

} // namespace

TrainResult train_toy(const ToyTaskSpec& task, const HfqConfig& cfg) {
    if (task.num_classes < 2) {
        throw ConfigError("toy task needs at least 2 classes");
    }
    if (task.examples_per_class < 1 || task.heldout_per_class < 1 || task.batch_size < 1) {
        throw ConfigError("toy task sizes must be positive");
    }
    if (task.steps < 0 || task.learning_rate <= 0) {
        throw ConfigError("toy task needs steps >= 0 and a positive learning rate");
    }
    if (!task.label_map.empty()) {
        if (static_cast<int>(task.label_map.size()) != task.num_classes) {
            throw ConfigError("label map must cover every class");
        }
        for (int l : task.label_map) {
            if (l < 0 || l >= task.num_classes) {
                throw ConfigError("label map entry outside the class range");
            }
        }
    }
    cfg.validate();

    // Everything downstream is seeded from the task seed: dataset, parameter
    // initialization, and batch order are reproducible bit for bit.
    Rng data_seeds(task.seed ^ 0xD15EA5E5D15EA5E5ULL);
    std::vector<Example> train_set = make_dataset(task, cfg, data_seeds, task.examples_per_class);
    std::vector<Example> heldout = make_dataset(task, cfg, data_seeds, task.heldout_per_class);

    Rng model_rng(task.seed ^ 0x1A2B3C4D5E6F7081ULL);
    Pipeline model(cfg, task.num_classes, model_rng);
    NamedParams params = model.parameters();

    TrainResult result;
    result.initial_loss = full_set_loss(model, train_set);

    Rng batch_rng(task.seed ^ 0xBA7C0212F00D5EEDULL);
    const float lr = static_cast<float>(task.learning_rate);
    for (int step = 0; step < task.steps; ++step) {
        Graph g;
        g.set_recording(true);
        Tensor batch_loss;
        for (int b = 0; b < task.batch_size; ++b) {
            const auto& ex = train_set[batch_rng.next_u64() % train_set.size()];
            Tensor li = cross_entropy_logits(g, model.forward_logits(g, ex.features), {ex.label});
            batch_loss = b == 0 ? li : add(g, batch_loss, li);
        }
        Tensor loss = scale(g, batch_loss, 1.0f / float(task.batch_size));
        const double loss_value = loss.value();
        if (!std::isfinite(loss_value)) {
            throw TrainingError("loss diverged at step " + std::to_string(step + 1));
        }
        for (auto& [name, p] : params) p.zero_grad();
        g.backward(loss);

        double grad_sq = 0.0;
        for (auto& [name, p] : params) {
            for (float gv : *p.grad) grad_sq += double(gv) * gv;
        }
        for (auto& [name, p] : params) {
            for (std::size_t i = 0; i < p.numel(); ++i) {
                (*p.data)[i] -= lr * (*p.grad)[i];
            }
        }
        result.rows.push_back({step + 1, loss_value, std::sqrt(grad_sq)});
    }

    result.final_loss = full_set_loss(model, train_set);

    int correct = 0;
    for (const auto& ex : heldout) {
        Graph g;
        if (argmax_row(model.forward_logits(g, ex.features)) == ex.label) ++correct;
    }
    result.heldout_accuracy = double(correct) / double(heldout.size());
    result.parameters = std::move(params);
    return result;
}

} // namespace hfq
