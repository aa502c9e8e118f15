#include "hfq/model_gradcheck.hpp"

#include <algorithm>

#include "hfq/gradcheck.hpp"
#include "hfq/pipeline.hpp"

namespace hfq {

GradCheckReport run_model_gradcheck(const HfqConfig& cfg, std::uint64_t seed, int t_mel,
                                    int n_mels, std::size_t max_coords_per_group) {
    cfg.validate();
    constexpr int kClasses = 4;
    Rng rng(seed);
    PipelineT<double> model(cfg, n_mels, kClasses, rng);

    Rng fill(seed ^ 0x5EEDF00D5EEDF00DULL);
    TensorT<double> input = TensorT<double>::randn({t_mel, n_mels}, fill, 0.0, 1.0, true);
    const std::vector<int> labels = {2};

    auto loss = [&](GraphT<double>& g) {
        return cross_entropy_logits(g, model.forward_logits(g, input), labels);
    };

    NamedParamsT<double> groups;
    groups.emplace_back("input", input);
    for (auto& [name, t] : model.parameters()) groups.emplace_back(name, t);

    GradCheckReport report;
    // Step 1e-4: on a graph this deep the default 1e-3 shows its own O(h^2)
    // truncation, an artifact of the difference formula, not of the gradients.
    const double step = 1e-4;
    for (auto& [name, tensor] : groups) {
        GradCheckGroup group;
        group.name = name;
        group.numel = tensor.numel();
        group.coords_probed = max_coords_per_group == 0
                                  ? tensor.numel()
                                  : std::min(tensor.numel(), max_coords_per_group);
        GraphT<double> g;
        group.max_rel_err =
            grad_check<double>(g, loss, {tensor}, step, max_coords_per_group);
        report.groups.push_back(group);
        report.max_rel_err = std::max(report.max_rel_err, group.max_rel_err);
    }
    report.passed = report.max_rel_err < report.threshold;
    return report;
}

} // namespace hfq
