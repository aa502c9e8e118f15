#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "hfq/ops.hpp"
#include "hfq/rng.hpp"
#include "hfq/tensor.hpp"

namespace hfq {

template <class Real>
using NamedParamsT = std::vector<std::pair<std::string, TensorT<Real>>>;
using NamedParams = NamedParamsT<float>;

enum class AttentionMode { literal_eq1, projected };

inline const char* to_string(AttentionMode m) {
    return m == AttentionMode::literal_eq1 ? "literal_eq1" : "projected";
}

inline AttentionMode attention_mode_from_string(const std::string& s) {
    if (s == "literal_eq1") return AttentionMode::literal_eq1;
    if (s == "projected") return AttentionMode::projected;
    throw ConfigError("attention_mode must be \"literal_eq1\" or \"projected\", got \"" + s + "\"");
}

// Constant sinusoidal positional encoding:
//   PE[pos, 2i] = sin(pos / 10000^(2i/d)), PE[pos, 2i+1] = cos(pos / 10000^(2i/d)).
template <class Real>
TensorT<Real> sinusoidal_pe(int length, int d) {
    if (d % 2 != 0) {
        throw ConfigError("positional encoding needs an even dimension, got " + std::to_string(d));
    }
    if (length < 1) {
        throw ContractError("positional encoding needs length >= 1");
    }
    TensorT<Real> pe = TensorT<Real>::zeros({length, d});
    for (int pos = 0; pos < length; ++pos) {
        for (int i = 0; i < d / 2; ++i) {
            const double angle = pos * std::pow(10000.0, -2.0 * i / d);
            pe.at(pos, 2 * i) = static_cast<Real>(std::sin(angle));
            pe.at(pos, 2 * i + 1) = static_cast<Real>(std::cos(angle));
        }
    }
    return pe;
}

// ---------------------------------------------------------------------------
// Linear
// ---------------------------------------------------------------------------

template <class Real>
struct LinearT {
    TensorT<Real> weight; // [d_in x d_out]
    TensorT<Real> bias;   // [d_out], empty shape list when absent
    bool has_bias = true;

    LinearT() = default;

    LinearT(int d_in, int d_out, Rng& rng, bool with_bias = true) : has_bias(with_bias) {
        weight = TensorT<Real>::randn({d_in, d_out}, rng, 0.0, 1.0 / std::sqrt(double(d_in)), true);
        if (with_bias) {
            bias = TensorT<Real>::zeros({d_out}, true);
        }
    }

    TensorT<Real> forward(GraphT<Real>& g, const TensorT<Real>& x) const {
        TensorT<Real> y = matmul(g, x, weight);
        return has_bias ? add_bias(g, y, bias) : y;
    }

    void collect(const std::string& prefix, NamedParamsT<Real>& out) const {
        out.emplace_back(prefix + ".weight", weight);
        if (has_bias) out.emplace_back(prefix + ".bias", bias);
    }
};

// ---------------------------------------------------------------------------
// LoRA linear: frozen base plus (alpha/r) * x a b low-rank path
// ---------------------------------------------------------------------------

template <class Real>
struct LoraLinearT {
    LinearT<Real> base; // frozen
    TensorT<Real> a;    // [d_in x r]
    TensorT<Real> b;    // [r x d_out], zero at init so the layer starts as the base
    int rank = 0;
    Real alpha = Real(0);

    LoraLinearT() = default;

    LoraLinearT(int d_in, int d_out, int r, Real alpha_, Rng& rng)
        : base(d_in, d_out, rng), rank(r), alpha(alpha_) {
        if (r <= 0 || alpha_ <= Real(0)) {
            throw ConfigError("LoRA rank and alpha must be positive");
        }
        base.weight.set_requires_grad(false);
        if (base.has_bias) base.bias.set_requires_grad(false);
        a = TensorT<Real>::randn({d_in, r}, rng, 0.0, 1.0 / std::sqrt(double(d_in)), true);
        b = TensorT<Real>::zeros({r, d_out}, true);
    }

    Real scaling() const { return alpha / Real(rank); }

    TensorT<Real> forward(GraphT<Real>& g, const TensorT<Real>& x) const {
        TensorT<Real> main = base.forward(g, x);
        TensorT<Real> low = matmul(g, matmul(g, x, a), b);
        return add(g, main, scale(g, low, scaling()));
    }

    // Folds the low-rank delta into a plain linear layer: W + (alpha/r) a b.
    LinearT<Real> merged_linear() const {
        LinearT<Real> merged;
        merged.has_bias = base.has_bias;
        merged.weight = base.weight.clone();
        if (base.has_bias) merged.bias = base.bias.clone();
        const int d_in = base.weight.shape[0], d_out = base.weight.shape[1];
        const Real s = scaling();
        for (int i = 0; i < d_in; ++i) {
            for (int j = 0; j < d_out; ++j) {
                Real acc = Real(0);
                for (int k = 0; k < rank; ++k) {
                    acc += a.at(i, k) * b.at(k, j);
                }
                merged.weight.at(i, j) += s * acc;
            }
        }
        return merged;
    }

    void collect(const std::string& prefix, NamedParamsT<Real>& out) const {
        base.collect(prefix + ".base", out);
        out.emplace_back(prefix + ".a", a);
        out.emplace_back(prefix + ".b", b);
    }
};

// ---------------------------------------------------------------------------
// LayerNorm
// ---------------------------------------------------------------------------

template <class Real>
struct LayerNormT {
    TensorT<Real> gain;
    TensorT<Real> shift;
    Real epsilon = Real(1e-5);

    LayerNormT() = default;

    explicit LayerNormT(int d) {
        gain = TensorT<Real>::zeros({d}, true);
        std::fill(gain.data->begin(), gain.data->end(), Real(1));
        shift = TensorT<Real>::zeros({d}, true);
    }

    TensorT<Real> forward(GraphT<Real>& g, const TensorT<Real>& x) const {
        return layer_norm(g, x, gain, shift, epsilon);
    }

    void collect(const std::string& prefix, NamedParamsT<Real>& out) const {
        out.emplace_back(prefix + ".gain", gain);
        out.emplace_back(prefix + ".shift", shift);
    }
};

// ---------------------------------------------------------------------------
// Position-wise feed-forward: d -> 4d -> d with GELU
// ---------------------------------------------------------------------------

template <class Real>
struct FeedForwardT {
    LinearT<Real> fc1;
    LinearT<Real> fc2;

    FeedForwardT() = default;

    FeedForwardT(int d, Rng& rng) : fc1(d, 4 * d, rng), fc2(4 * d, d, rng) {}

    TensorT<Real> forward(GraphT<Real>& g, const TensorT<Real>& x) const {
        return fc2.forward(g, gelu(g, fc1.forward(g, x)));
    }

    void collect(const std::string& prefix, NamedParamsT<Real>& out) const {
        fc1.collect(prefix + ".fc1", out);
        fc2.collect(prefix + ".fc2", out);
    }
};

// ---------------------------------------------------------------------------
// Multi-head cross-attention
// ---------------------------------------------------------------------------

template <class Real>
struct AttentionResultT {
    TensorT<Real> output;  // [m x d]
    TensorT<Real> weights; // [m x n], head-averaged, detached from the graph
};

// Two modes sharing one interface:
//  - literal_eq1: single head, no projections; output = Softmax((Q+PE)(X+PE)^T / sqrt(d)) X.
//    PE goes on queries and keys, never on values.
//  - projected:   PE first (same placement), then learned Wq/Wk/Wv per head and a
//    final Wo; per-head scale 1/sqrt(d/heads).
template <class Real>
struct CrossAttentionT {
    int d = 0;
    int heads = 1;
    AttentionMode mode = AttentionMode::projected;
    LinearT<Real> wq, wk, wv, wo;

    CrossAttentionT() = default;

    CrossAttentionT(int d_, int heads_, AttentionMode mode_, Rng& rng)
        : d(d_), heads(heads_), mode(mode_) {
        if (mode == AttentionMode::literal_eq1) {
            if (heads != 1) {
                throw ConfigError("literal_eq1 attention is single-head; got heads=" +
                                  std::to_string(heads));
            }
        } else {
            if (heads < 1 || d % heads != 0) {
                throw ConfigError("heads must divide the model dimension: d=" + std::to_string(d) +
                                  ", heads=" + std::to_string(heads));
            }
            wq = LinearT<Real>(d, d, rng);
            wk = LinearT<Real>(d, d, rng);
            wv = LinearT<Real>(d, d, rng);
            wo = LinearT<Real>(d, d, rng);
        }
    }

    AttentionResultT<Real> forward(GraphT<Real>& g, const TensorT<Real>& queries,
                                   const TensorT<Real>& keys_values, bool use_pe) const {
        if (queries.cols() != d || keys_values.cols() != d) {
            throw DimensionError("cross_attention: expected width " + std::to_string(d) + ", got " +
                                 queries.shape_str() + " and " + keys_values.shape_str());
        }
        const int m = queries.rows();
        const int n = keys_values.rows();

        TensorT<Real> q_in = queries;
        TensorT<Real> k_in = keys_values;
        if (use_pe) {
            q_in = add(g, queries, sinusoidal_pe<Real>(m, d));
            k_in = add(g, keys_values, sinusoidal_pe<Real>(n, d));
        }

        AttentionResultT<Real> result;
        result.weights = TensorT<Real>::zeros({m, n});

        if (mode == AttentionMode::literal_eq1) {
            TensorT<Real> logits =
                scale(g, matmul(g, q_in, transpose(g, k_in)), Real(1) / std::sqrt(Real(d)));
            TensorT<Real> attn = softmax_rows(g, logits);
            result.output = matmul(g, attn, keys_values); // raw rows as values
            std::copy(attn.data->begin(), attn.data->end(), result.weights.data->begin());
            return result;
        }

        TensorT<Real> q = wq.forward(g, q_in);
        TensorT<Real> k = wk.forward(g, k_in);
        TensorT<Real> v = wv.forward(g, keys_values); // values skip PE in both modes
        const int dh = d / heads;
        const Real inv_sqrt_dh = Real(1) / std::sqrt(Real(dh));
        std::vector<TensorT<Real>> head_outputs;
        head_outputs.reserve(heads);
        for (int h = 0; h < heads; ++h) {
            TensorT<Real> qh = slice_cols(g, q, h * dh, dh);
            TensorT<Real> kh = slice_cols(g, k, h * dh, dh);
            TensorT<Real> vh = slice_cols(g, v, h * dh, dh);
            TensorT<Real> attn =
                softmax_rows(g, scale(g, matmul(g, qh, transpose(g, kh)), inv_sqrt_dh));
            head_outputs.push_back(matmul(g, attn, vh));
            for (std::size_t i = 0; i < attn.numel(); ++i) {
                (*result.weights.data)[i] += (*attn.data)[i] / Real(heads);
            }
        }
        result.output = wo.forward(g, concat_cols(g, head_outputs));
        return result;
    }

    void collect(const std::string& prefix, NamedParamsT<Real>& out) const {
        if (mode == AttentionMode::projected) {
            wq.collect(prefix + ".wq", out);
            wk.collect(prefix + ".wk", out);
            wv.collect(prefix + ".wv", out);
            wo.collect(prefix + ".wo", out);
        }
    }
};

} // namespace hfq
