#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "hfq/config.hpp"
#include "hfq/layers.hpp"

namespace hfq {

// ---------------------------------------------------------------------------
// Downsampler: conv(k, stride 1) -> GELU -> conv(k, stride s) -> GELU
// Halves temporal length (ceil division) at the default kernel 3 / stride 2.
// ---------------------------------------------------------------------------

template <class Real>
struct DownsamplerT {
    TensorT<Real> w1, b1; // [K x d x d], [d]
    TensorT<Real> w2, b2;
    int kernel = 3;
    int stride = 2;

    DownsamplerT() = default;

    DownsamplerT(int d, int kernel_, int stride_, Rng& rng) : kernel(kernel_), stride(stride_) {
        const double fan_in = double(kernel) * d;
        w1 = TensorT<Real>::randn({kernel, d, d}, rng, 0.0, 1.0 / std::sqrt(fan_in), true);
        b1 = TensorT<Real>::zeros({d}, true);
        w2 = TensorT<Real>::randn({kernel, d, d}, rng, 0.0, 1.0 / std::sqrt(fan_in), true);
        b2 = TensorT<Real>::zeros({d}, true);
    }

    TensorT<Real> forward(GraphT<Real>& g, const TensorT<Real>& x) const {
        const int pad = kernel / 2;
        TensorT<Real> h = gelu(g, conv1d(g, x, w1, b1, 1, pad));
        return gelu(g, conv1d(g, h, w2, b2, stride, pad));
    }

    void collect(const std::string& prefix, NamedParamsT<Real>& out) const {
        out.emplace_back(prefix + ".conv1.weight", w1);
        out.emplace_back(prefix + ".conv1.bias", b1);
        out.emplace_back(prefix + ".conv2.weight", w2);
        out.emplace_back(prefix + ".conv2.bias", b2);
    }
};

// ---------------------------------------------------------------------------
// One compressor stage: learnable queries cross-attending over that stage's
// resolution of the feature sequence. Stages past the first own the
// downsampler that produces their resolution.
// ---------------------------------------------------------------------------

template <class Real>
struct StageT {
    TensorT<Real> queries; // [M x d]
    CrossAttentionT<Real> compressor;
    DownsamplerT<Real> downsampler;
    bool has_downsampler = false;

    StageT() = default;

    StageT(const HfqConfig& cfg, bool with_downsampler, Rng& rng)
        : has_downsampler(with_downsampler) {
        queries = TensorT<Real>::randn({cfg.queries_per_stage, cfg.d_model}, rng, 0.0, 0.02, true);
        compressor = CrossAttentionT<Real>(cfg.d_model, cfg.heads, cfg.attention_mode, rng);
        if (with_downsampler) {
            downsampler =
                DownsamplerT<Real>(cfg.d_model, cfg.downsample_kernel, cfg.downsample_stride, rng);
        }
    }

    void collect(const std::string& prefix, NamedParamsT<Real>& out) const {
        out.emplace_back(prefix + ".queries", queries);
        compressor.collect(prefix + ".compressor", out);
        if (has_downsampler) downsampler.collect(prefix + ".downsampler", out);
    }
};

// ---------------------------------------------------------------------------
// Compressed output + attention diagnostics
// ---------------------------------------------------------------------------

template <class Real>
struct CompressedTokensT {
    TensorT<Real> tokens; // [N_c x d]
    int window_index = 0;
    double source_duration_sec = 0.0;
};
using CompressedTokens = CompressedTokensT<float>;

template <class Real>
struct DiagnosticsT {
    std::vector<TensorT<Real>> stage_attention; // per stage, [M x T_i]
    TensorT<Real> distill_attention;            // [N_c x S*M]
    TensorT<Real> recovery_attention;           // [N_c x (T_1 + ... + T_S)]
};

// Per-stage share of the condensing step's attention: column-block sums of the
// [N_c x S*M] weight matrix, averaged over output tokens. Sums to 1.
template <class Real>
std::vector<Real> attention_mass_per_stage(const TensorT<Real>& distill_weights, int num_stages,
                                           int queries_per_stage) {
    if (distill_weights.cols() != num_stages * queries_per_stage) {
        throw DimensionError("attention mass: weights " + distill_weights.shape_str() +
                             " do not cover " + std::to_string(num_stages) + " stages of " +
                             std::to_string(queries_per_stage) + " queries");
    }
    const int rows = distill_weights.rows();
    std::vector<Real> mass(num_stages, Real(0));
    for (int i = 0; i < rows; ++i) {
        for (int s = 0; s < num_stages; ++s) {
            for (int q = 0; q < queries_per_stage; ++q) {
                mass[s] += distill_weights.at(i, s * queries_per_stage + q);
            }
        }
    }
    for (Real& m : mass) m /= Real(rows);
    return mass;
}

// ---------------------------------------------------------------------------
// The full compression stack
// ---------------------------------------------------------------------------

template <class Real>
struct HfqFormerT {
    HfqConfig cfg;
    std::vector<StageT<Real>> stages;
    TensorT<Real> compressed_queries; // [N_c x d]
    CrossAttentionT<Real> distill_attn;
    LayerNormT<Real> recovery_ln_attn;
    CrossAttentionT<Real> recovery_attn;
    LayerNormT<Real> recovery_ln_ffn;
    FeedForwardT<Real> recovery_ffn;

    HfqFormerT() = default;

    HfqFormerT(const HfqConfig& cfg_, Rng& rng) : cfg(cfg_) {
        cfg.validate();
        stages.reserve(cfg.num_stages);
        for (int i = 0; i < cfg.num_stages; ++i) {
            stages.emplace_back(cfg, /*with_downsampler=*/i > 0, rng);
        }
        compressed_queries =
            TensorT<Real>::randn({cfg.compressed_tokens, cfg.d_model}, rng, 0.0, 0.02, true);
        distill_attn = CrossAttentionT<Real>(cfg.d_model, cfg.heads, cfg.attention_mode, rng);
        recovery_ln_attn = LayerNormT<Real>(cfg.d_model);
        recovery_attn = CrossAttentionT<Real>(cfg.d_model, cfg.heads, cfg.attention_mode, rng);
        recovery_ln_ffn = LayerNormT<Real>(cfg.d_model);
        recovery_ffn = FeedForwardT<Real>(cfg.d_model, rng);
    }

    struct ForwardResult {
        TensorT<Real> tokens; // [N_c x d]
        DiagnosticsT<Real> diagnostics;
    };

    // One window: stage compressions over successively halved resolutions,
    // condensing the stacked stage outputs down to N_c tokens, then one
    // residual attention + feed-forward pass back over all resolutions.
    ForwardResult forward(GraphT<Real>& g, const TensorT<Real>& features) const {
        if (features.cols() != cfg.d_model) {
            throw DimensionError("forward: features " + features.shape_str() + " do not match d_model " +
                                 std::to_string(cfg.d_model));
        }
        if (features.rows() < 1) {
            throw LengthError("forward: need at least one frame");
        }

        ForwardResult result;
        std::vector<TensorT<Real>> stage_outputs; // [M x d] each
        std::vector<TensorT<Real>> resolutions;   // feature bank, [T_i x d]
        TensorT<Real> x = features;
        for (int i = 0; i < cfg.num_stages; ++i) {
            if (stages[i].has_downsampler) {
                x = stages[i].downsampler.forward(g, x);
            }
            resolutions.push_back(x);
            auto attn = stages[i].compressor.forward(g, stages[i].queries, x, /*use_pe=*/true);
            stage_outputs.push_back(attn.output);
            result.diagnostics.stage_attention.push_back(attn.weights);
        }

        // Condense the stacked stage outputs to N_c tokens. The stack is not a
        // temporal sequence, so no positional encoding here.
        TensorT<Real> stacked = concat_rows(g, stage_outputs);
        auto distilled =
            distill_attn.forward(g, compressed_queries, stacked, /*use_pe=*/false);
        result.diagnostics.distill_attention = distilled.weights;

        // Residual attention back over every resolution, then a residual
        // feed-forward, both pre-normalized on the token side.
        TensorT<Real> bank = concat_rows(g, resolutions);
        auto recovered = recovery_attn.forward(g, recovery_ln_attn.forward(g, distilled.output),
                                               bank, /*use_pe=*/false);
        result.diagnostics.recovery_attention = recovered.weights;
        TensorT<Real> h = add(g, distilled.output, recovered.output);
        TensorT<Real> out = add(g, h, recovery_ffn.forward(g, recovery_ln_ffn.forward(g, h)));
        result.tokens = out;
        return result;
    }

    // Splits a long feature sequence into fixed windows (zero-padding the
    // last), compressing each independently. Diagnostics, when requested, come
    // back one entry per window.
    std::vector<CompressedTokensT<Real>> compress_long_form(
        const TensorT<Real>& features, std::vector<DiagnosticsT<Real>>* diagnostics = nullptr) const {
        if (features.cols() != cfg.d_model) {
            throw DimensionError("compress_long_form: features " + features.shape_str() +
                                 " do not match d_model " + std::to_string(cfg.d_model));
        }
        const int total = features.rows();
        const int win = cfg.window_frames();
        const int num_windows = (total + win - 1) / win;
        std::vector<CompressedTokensT<Real>> out;
        out.reserve(num_windows);
        if (diagnostics) {
            diagnostics->clear();
            diagnostics->reserve(num_windows);
        }
        for (int w = 0; w < num_windows; ++w) {
            const int begin = w * win;
            const int extent = std::min(win, total - begin);
            TensorT<Real> window = TensorT<Real>::zeros({win, cfg.d_model});
            std::copy(features.data->begin() + static_cast<std::size_t>(begin) * cfg.d_model,
                      features.data->begin() + static_cast<std::size_t>(begin + extent) * cfg.d_model,
                      window.data->begin());
            GraphT<Real> g; // recording stays off: inference only
            ForwardResult res = forward(g, window);
            CompressedTokensT<Real> ct;
            ct.tokens = std::move(res.tokens);
            ct.window_index = w;
            ct.source_duration_sec = extent / cfg.frame_rate_hz;
            out.push_back(std::move(ct));
            if (diagnostics) diagnostics->push_back(std::move(res.diagnostics));
        }
        return out;
    }

    NamedParamsT<Real> parameters() const {
        NamedParamsT<Real> out;
        for (int i = 0; i < cfg.num_stages; ++i) {
            stages[i].collect("stage" + std::to_string(i + 1), out);
        }
        out.emplace_back("distill.queries", compressed_queries);
        distill_attn.collect("distill.attn", out);
        recovery_ln_attn.collect("recovery.ln_attn", out);
        recovery_attn.collect("recovery.attn", out);
        recovery_ln_ffn.collect("recovery.ln_ffn", out);
        recovery_ffn.collect("recovery.ffn", out);
        return out;
    }

    std::size_t count_parameters() const {
        std::size_t n = 0;
        for (const auto& [name, t] : parameters()) n += t.numel();
        return n;
    }
};
using HfqFormer = HfqFormerT<float>;

} // namespace hfq
