#pragma once

#include <string>

#include "hfq/frontend.hpp"
#include "hfq/hfq_former.hpp"

namespace hfq {

// Trainable composition: optional toy encoder, the compression stack, and a
// mean-pool classification head over the compressed tokens.
template <class Real>
struct PipelineT {
    bool has_encoder = false;
    ToyEncoderT<Real> encoder;
    HfqFormerT<Real> hfq;
    LinearT<Real> head;
    int num_classes = 0;

    PipelineT() = default;

    // Feature-level pipeline: input is already [T x d_model].
    PipelineT(const HfqConfig& cfg, int num_classes_, Rng& rng)
        : hfq(cfg, rng), num_classes(num_classes_) {
        head = LinearT<Real>(cfg.d_model, num_classes_, rng);
    }

    // Mel-level pipeline: input is [T_mel x n_mels], lifted by the encoder.
    PipelineT(const HfqConfig& cfg, int n_mels, int num_classes_, Rng& rng)
        : has_encoder(true), encoder(n_mels, cfg.d_model, rng), hfq(cfg, rng),
          num_classes(num_classes_) {
        head = LinearT<Real>(cfg.d_model, num_classes_, rng);
    }

    // [1 x num_classes]
    TensorT<Real> forward_logits(GraphT<Real>& g, const TensorT<Real>& input) const {
        TensorT<Real> features = has_encoder ? encoder.forward(g, input) : input;
        TensorT<Real> tokens = hfq.forward(g, features).tokens;
        return head.forward(g, mean_rows(g, tokens));
    }

    NamedParamsT<Real> parameters() const {
        NamedParamsT<Real> out;
        if (has_encoder) encoder.collect("encoder", out);
        for (auto& [name, t] : hfq.parameters()) {
            out.emplace_back("hfq." + name, t);
        }
        head.collect("head", out);
        return out;
    }
};
using Pipeline = PipelineT<float>;

} // namespace hfq
