#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "hfq/tensor.hpp"

namespace hfq {

namespace detail {

template <class Real>
using Mat = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class Real>
using MatMap = Eigen::Map<Mat<Real>>;
template <class Real>
using ConstMatMap = Eigen::Map<const Mat<Real>>;

template <class Real>
ConstMatMap<Real> as_mat(const TensorT<Real>& t, int rows, int cols) {
    return ConstMatMap<Real>(t.data->data(), rows, cols);
}

template <class Real>
MatMap<Real> as_grad_mat(const TensorT<Real>& t, int rows, int cols) {
    return MatMap<Real>(t.grad->data(), rows, cols);
}

template <class Real>
bool track(const GraphT<Real>& g, std::initializer_list<const TensorT<Real>*> inputs) {
    if (!g.recording()) {
        return false;
    }
    for (const auto* t : inputs) {
        if (t->requires_grad) {
            return true;
        }
    }
    return false;
}

template <class Real>
void require_rank2(const TensorT<Real>& t, const char* op) {
    if (t.rank() != 2) {
        throw DimensionError(std::string(op) + ": expected a rank-2 tensor, got " + t.shape_str());
    }
}

} // namespace detail

// ---------------------------------------------------------------------------
// matmul
// ---------------------------------------------------------------------------

template <class Real>
TensorT<Real> matmul(GraphT<Real>& g, const TensorT<Real>& a, const TensorT<Real>& b) {
    detail::require_rank2(a, "matmul");
    detail::require_rank2(b, "matmul");
    if (a.shape[1] != b.shape[0]) {
        throw DimensionError("matmul: inner dimensions differ, " + a.shape_str() + " x " + b.shape_str());
    }
    const int m = a.shape[0], k = a.shape[1], n = b.shape[1];
    TensorT<Real> out = TensorT<Real>::zeros({m, n});
    {
        detail::MatMap<Real> c(out.data->data(), m, n);
        c.noalias() = detail::as_mat(a, m, k) * detail::as_mat(b, k, n);
    }
    if (detail::track(g, {&a, &b})) {
        out.set_requires_grad(true);
        g.record([a, b, out, m, k, n]() {
            detail::ConstMatMap<Real> dc(out.grad->data(), m, n);
            if (a.requires_grad) {
                detail::as_grad_mat(a, m, k).noalias() += dc * detail::as_mat(b, k, n).transpose();
            }
            if (b.requires_grad) {
                detail::as_grad_mat(b, k, n).noalias() += detail::as_mat(a, m, k).transpose() * dc;
            }
        });
    }
    return out;
}

template <class Real>
TensorT<Real> transpose(GraphT<Real>& g, const TensorT<Real>& x) {
    detail::require_rank2(x, "transpose");
    const int m = x.shape[0], n = x.shape[1];
    TensorT<Real> out = TensorT<Real>::zeros({n, m});
    detail::MatMap<Real>(out.data->data(), n, m) = detail::as_mat(x, m, n).transpose();
    if (detail::track(g, {&x})) {
        out.set_requires_grad(true);
        g.record([x, out, m, n]() {
            detail::as_grad_mat(x, m, n).noalias() +=
                detail::ConstMatMap<Real>(out.grad->data(), n, m).transpose();
        });
    }
    return out;
}

// ---------------------------------------------------------------------------
// elementwise
// ---------------------------------------------------------------------------

template <class Real>
TensorT<Real> add(GraphT<Real>& g, const TensorT<Real>& a, const TensorT<Real>& b) {
    if (a.shape != b.shape) {
        throw DimensionError("add: shape mismatch, " + a.shape_str() + " vs " + b.shape_str());
    }
    TensorT<Real> out = TensorT<Real>::zeros(a.shape);
    const std::size_t n = a.numel();
    for (std::size_t i = 0; i < n; ++i) {
        (*out.data)[i] = (*a.data)[i] + (*b.data)[i];
    }
    if (detail::track(g, {&a, &b})) {
        out.set_requires_grad(true);
        g.record([a, b, out, n]() {
            if (a.requires_grad) {
                for (std::size_t i = 0; i < n; ++i) (*a.grad)[i] += (*out.grad)[i];
            }
            if (b.requires_grad) {
                for (std::size_t i = 0; i < n; ++i) (*b.grad)[i] += (*out.grad)[i];
            }
        });
    }
    return out;
}

template <class Real>
TensorT<Real> mul(GraphT<Real>& g, const TensorT<Real>& a, const TensorT<Real>& b) {
    if (a.shape != b.shape) {
        throw DimensionError("mul: shape mismatch, " + a.shape_str() + " vs " + b.shape_str());
    }
    TensorT<Real> out = TensorT<Real>::zeros(a.shape);
    const std::size_t n = a.numel();
    for (std::size_t i = 0; i < n; ++i) {
        (*out.data)[i] = (*a.data)[i] * (*b.data)[i];
    }
    if (detail::track(g, {&a, &b})) {
        out.set_requires_grad(true);
        g.record([a, b, out, n]() {
            if (a.requires_grad) {
                for (std::size_t i = 0; i < n; ++i) (*a.grad)[i] += (*out.grad)[i] * (*b.data)[i];
            }
            if (b.requires_grad) {
                for (std::size_t i = 0; i < n; ++i) (*b.grad)[i] += (*out.grad)[i] * (*a.data)[i];
            }
        });
    }
    return out;
}

template <class Real>
TensorT<Real> scale(GraphT<Real>& g, const TensorT<Real>& x, Real c) {
    TensorT<Real> out = TensorT<Real>::zeros(x.shape);
    const std::size_t n = x.numel();
    for (std::size_t i = 0; i < n; ++i) {
        (*out.data)[i] = c * (*x.data)[i];
    }
    if (detail::track(g, {&x})) {
        out.set_requires_grad(true);
        g.record([x, out, c, n]() {
            for (std::size_t i = 0; i < n; ++i) (*x.grad)[i] += c * (*out.grad)[i];
        });
    }
    return out;
}

// x: [n x d], bias: [d], broadcast over rows.
template <class Real>
TensorT<Real> add_bias(GraphT<Real>& g, const TensorT<Real>& x, const TensorT<Real>& bias) {
    detail::require_rank2(x, "add_bias");
    if (bias.rank() != 1 || bias.shape[0] != x.shape[1]) {
        throw DimensionError("add_bias: bias " + bias.shape_str() + " does not match " + x.shape_str());
    }
    const int n = x.shape[0], d = x.shape[1];
    TensorT<Real> out = TensorT<Real>::zeros(x.shape);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < d; ++j) {
            (*out.data)[static_cast<std::size_t>(i) * d + j] =
                (*x.data)[static_cast<std::size_t>(i) * d + j] + (*bias.data)[j];
        }
    }
    if (detail::track(g, {&x, &bias})) {
        out.set_requires_grad(true);
        g.record([x, bias, out, n, d]() {
            if (x.requires_grad) {
                const std::size_t total = static_cast<std::size_t>(n) * d;
                for (std::size_t i = 0; i < total; ++i) (*x.grad)[i] += (*out.grad)[i];
            }
            if (bias.requires_grad) {
                for (int i = 0; i < n; ++i) {
                    for (int j = 0; j < d; ++j) {
                        (*bias.grad)[j] += (*out.grad)[static_cast<std::size_t>(i) * d + j];
                    }
                }
            }
        });
    }
    return out;
}

// ---------------------------------------------------------------------------
// softmax / gelu
// ---------------------------------------------------------------------------

// Row-wise softmax with max subtraction. Rows sum to 1 for any finite input.
template <class Real>
TensorT<Real> softmax_rows(GraphT<Real>& g, const TensorT<Real>& x) {
    detail::require_rank2(x, "softmax_rows");
    const int m = x.shape[0], n = x.shape[1];
    TensorT<Real> out = TensorT<Real>::zeros(x.shape);
    for (int i = 0; i < m; ++i) {
        const Real* row = x.data->data() + static_cast<std::size_t>(i) * n;
        Real* orow = out.data->data() + static_cast<std::size_t>(i) * n;
        Real mx = row[0];
        for (int j = 1; j < n; ++j) mx = std::max(mx, row[j]);
        Real denom = Real(0);
        for (int j = 0; j < n; ++j) {
            orow[j] = std::exp(row[j] - mx);
            denom += orow[j];
        }
        for (int j = 0; j < n; ++j) orow[j] /= denom;
    }
    if (detail::track(g, {&x})) {
        out.set_requires_grad(true);
        g.record([x, out, m, n]() {
            for (int i = 0; i < m; ++i) {
                const Real* y = out.data->data() + static_cast<std::size_t>(i) * n;
                const Real* dy = out.grad->data() + static_cast<std::size_t>(i) * n;
                Real* dx = x.grad->data() + static_cast<std::size_t>(i) * n;
                Real dot = Real(0);
                for (int j = 0; j < n; ++j) dot += dy[j] * y[j];
                for (int j = 0; j < n; ++j) dx[j] += y[j] * (dy[j] - dot);
            }
        });
    }
    return out;
}

namespace detail {

template <class Real>
inline Real gelu_scalar(Real x) {
    const Real c = Real(0.7978845608028654); // sqrt(2/pi)
    const Real u = c * (x + Real(0.044715) * x * x * x);
    return Real(0.5) * x * (Real(1) + std::tanh(u));
}

template <class Real>
inline Real gelu_grad_scalar(Real x) {
    const Real c = Real(0.7978845608028654);
    const Real u = c * (x + Real(0.044715) * x * x * x);
    const Real t = std::tanh(u);
    const Real du = c * (Real(1) + Real(0.134145) * x * x); // 3 * 0.044715
    return Real(0.5) * (Real(1) + t) + Real(0.5) * x * (Real(1) - t * t) * du;
}

} // namespace detail

// Tanh-approximation GELU, fixed so outputs are reproducible everywhere.
template <class Real>
TensorT<Real> gelu(GraphT<Real>& g, const TensorT<Real>& x) {
    TensorT<Real> out = TensorT<Real>::zeros(x.shape);
    const std::size_t n = x.numel();
    for (std::size_t i = 0; i < n; ++i) {
        (*out.data)[i] = detail::gelu_scalar((*x.data)[i]);
    }
    if (detail::track(g, {&x})) {
        out.set_requires_grad(true);
        g.record([x, out, n]() {
            for (std::size_t i = 0; i < n; ++i) {
                (*x.grad)[i] += (*out.grad)[i] * detail::gelu_grad_scalar((*x.data)[i]);
            }
        });
    }
    return out;
}

// ---------------------------------------------------------------------------
// conv1d
// ---------------------------------------------------------------------------

// x: [T x C_in], w: [K x C_in x C_out], bias: [C_out]. Zero padding.
// Output length T' = floor((T + 2*pad - K)/stride) + 1. The K taps are
// evaluated as shifted [T' x C_in] x [C_in x C_out] products.
template <class Real>
TensorT<Real> conv1d(GraphT<Real>& g, const TensorT<Real>& x, const TensorT<Real>& w,
                     const TensorT<Real>& bias, int stride, int pad) {
    detail::require_rank2(x, "conv1d");
    if (w.rank() != 3) {
        throw DimensionError("conv1d: kernel must be rank 3 [K x C_in x C_out], got " + w.shape_str());
    }
    const int T = x.shape[0], c_in = x.shape[1];
    const int K = w.shape[0], c_out = w.shape[2];
    if (w.shape[1] != c_in) {
        throw DimensionError("conv1d: kernel " + w.shape_str() + " does not match input " + x.shape_str());
    }
    if (bias.rank() != 1 || bias.shape[0] != c_out) {
        throw DimensionError("conv1d: bias " + bias.shape_str() + " does not match C_out " +
                             std::to_string(c_out));
    }
    if (K % 2 == 0 || stride < 1 || pad < 0) {
        throw ContractError("conv1d: requires odd K, stride >= 1, pad >= 0");
    }
    if (T + 2 * pad < K) {
        throw LengthError("conv1d: input length " + std::to_string(T) + " with pad " +
                          std::to_string(pad) + " is shorter than kernel " + std::to_string(K));
    }
    const int t_out = (T + 2 * pad - K) / stride + 1;

    TensorT<Real> out = TensorT<Real>::zeros({t_out, c_out});
    for (int to = 0; to < t_out; ++to) {
        Real* orow = out.data->data() + static_cast<std::size_t>(to) * c_out;
        for (int co = 0; co < c_out; ++co) orow[co] = (*bias.data)[co];
    }
    // Per-tap GEMM on the rows that fall inside [0, T).
    detail::MatMap<Real> om(out.data->data(), t_out, c_out);
    for (int k = 0; k < K; ++k) {
        detail::ConstMatMap<Real> wk(w.data->data() + static_cast<std::size_t>(k) * c_in * c_out,
                                     c_in, c_out);
        for (int to = 0; to < t_out; ++to) {
            const int ti = to * stride - pad + k;
            if (ti < 0 || ti >= T) continue;
            // Find the contiguous run of output rows whose tap stays in range.
            int run_end = to;
            while (run_end + 1 < t_out && (run_end + 1) * stride - pad + k < T) ++run_end;
            const int rows = run_end - to + 1;
            if (stride == 1) {
                detail::ConstMatMap<Real> xs(x.data->data() + static_cast<std::size_t>(ti) * c_in,
                                             rows, c_in);
                om.middleRows(to, rows).noalias() += xs * wk;
            } else {
                using StridedMap = Eigen::Map<const detail::Mat<Real>, 0,
                                              Eigen::Stride<Eigen::Dynamic, 1>>;
                StridedMap xs(x.data->data() + static_cast<std::size_t>(ti) * c_in, rows, c_in,
                              Eigen::Stride<Eigen::Dynamic, 1>(stride * c_in, 1));
                om.middleRows(to, rows).noalias() += xs * wk;
            }
            break;
        }
    }

    if (detail::track(g, {&x, &w, &bias})) {
        out.set_requires_grad(true);
        g.record([x, w, bias, out, T, c_in, K, c_out, stride, pad, t_out]() {
            detail::ConstMatMap<Real> dout(out.grad->data(), t_out, c_out);
            if (bias.requires_grad) {
                for (int to = 0; to < t_out; ++to) {
                    for (int co = 0; co < c_out; ++co) {
                        (*bias.grad)[co] += dout(to, co);
                    }
                }
            }
            for (int k = 0; k < K; ++k) {
                for (int to = 0; to < t_out; ++to) {
                    const int ti = to * stride - pad + k;
                    if (ti < 0 || ti >= T) continue;
                    const Real* dorow = out.grad->data() + static_cast<std::size_t>(to) * c_out;
                    if (w.requires_grad) {
                        const Real* xrow = x.data->data() + static_cast<std::size_t>(ti) * c_in;
                        Real* dwk = w.grad->data() + static_cast<std::size_t>(k) * c_in * c_out;
                        for (int ci = 0; ci < c_in; ++ci) {
                            const Real xv = xrow[ci];
                            Real* dwrow = dwk + static_cast<std::size_t>(ci) * c_out;
                            for (int co = 0; co < c_out; ++co) dwrow[co] += xv * dorow[co];
                        }
                    }
                    if (x.requires_grad) {
                        const Real* wk = w.data->data() + static_cast<std::size_t>(k) * c_in * c_out;
                        Real* dxrow = x.grad->data() + static_cast<std::size_t>(ti) * c_in;
                        for (int ci = 0; ci < c_in; ++ci) {
                            const Real* wrow = wk + static_cast<std::size_t>(ci) * c_out;
                            Real acc = Real(0);
                            for (int co = 0; co < c_out; ++co) acc += wrow[co] * dorow[co];
                            dxrow[ci] += acc;
                        }
                    }
                }
            }
        });
    }
    return out;
}

// ---------------------------------------------------------------------------
// concatenation / slicing
// ---------------------------------------------------------------------------

template <class Real>
TensorT<Real> concat_rows(GraphT<Real>& g, const std::vector<TensorT<Real>>& parts) {
    if (parts.empty()) {
        throw ContractError("concat_rows: no inputs");
    }
    const int d = parts[0].cols();
    int total = 0;
    for (const auto& p : parts) {
        if (p.cols() != d) {
            throw DimensionError("concat_rows: column mismatch, " + parts[0].shape_str() + " vs " +
                                 p.shape_str());
        }
        total += p.rows();
    }
    TensorT<Real> out = TensorT<Real>::zeros({total, d});
    std::size_t offset = 0;
    for (const auto& p : parts) {
        std::copy(p.data->begin(), p.data->end(), out.data->begin() + offset);
        offset += p.numel();
    }
    bool any_grad = false;
    for (const auto& p : parts) any_grad = any_grad || p.requires_grad;
    if (g.recording() && any_grad) {
        out.set_requires_grad(true);
        g.record([parts, out]() {
            std::size_t off = 0;
            for (const auto& p : parts) {
                if (p.requires_grad) {
                    for (std::size_t i = 0; i < p.numel(); ++i) {
                        (*p.grad)[i] += (*out.grad)[off + i];
                    }
                }
                off += p.numel();
            }
        });
    }
    return out;
}

template <class Real>
TensorT<Real> slice_cols(GraphT<Real>& g, const TensorT<Real>& x, int start, int len) {
    detail::require_rank2(x, "slice_cols");
    const int n = x.shape[0], d = x.shape[1];
    if (start < 0 || len <= 0 || start + len > d) {
        throw DimensionError("slice_cols: range [" + std::to_string(start) + ", " +
                             std::to_string(start + len) + ") outside " + x.shape_str());
    }
    TensorT<Real> out = TensorT<Real>::zeros({n, len});
    for (int i = 0; i < n; ++i) {
        const Real* src = x.data->data() + static_cast<std::size_t>(i) * d + start;
        std::copy(src, src + len, out.data->data() + static_cast<std::size_t>(i) * len);
    }
    if (detail::track(g, {&x})) {
        out.set_requires_grad(true);
        g.record([x, out, n, d, start, len]() {
            for (int i = 0; i < n; ++i) {
                Real* dst = x.grad->data() + static_cast<std::size_t>(i) * d + start;
                const Real* src = out.grad->data() + static_cast<std::size_t>(i) * len;
                for (int j = 0; j < len; ++j) dst[j] += src[j];
            }
        });
    }
    return out;
}

template <class Real>
TensorT<Real> concat_cols(GraphT<Real>& g, const std::vector<TensorT<Real>>& parts) {
    if (parts.empty()) {
        throw ContractError("concat_cols: no inputs");
    }
    const int n = parts[0].rows();
    int total = 0;
    for (const auto& p : parts) {
        if (p.rows() != n) {
            throw DimensionError("concat_cols: row mismatch, " + parts[0].shape_str() + " vs " +
                                 p.shape_str());
        }
        total += p.cols();
    }
    TensorT<Real> out = TensorT<Real>::zeros({n, total});
    int col = 0;
    for (const auto& p : parts) {
        const int w = p.cols();
        for (int i = 0; i < n; ++i) {
            std::copy(p.data->data() + static_cast<std::size_t>(i) * w,
                      p.data->data() + static_cast<std::size_t>(i) * w + w,
                      out.data->data() + static_cast<std::size_t>(i) * total + col);
        }
        col += w;
    }
    bool any_grad = false;
    for (const auto& p : parts) any_grad = any_grad || p.requires_grad;
    if (g.recording() && any_grad) {
        out.set_requires_grad(true);
        g.record([parts, out, n, total]() {
            int c = 0;
            for (const auto& p : parts) {
                const int w = p.cols();
                if (p.requires_grad) {
                    for (int i = 0; i < n; ++i) {
                        Real* dst = p.grad->data() + static_cast<std::size_t>(i) * w;
                        const Real* src = out.grad->data() + static_cast<std::size_t>(i) * total + c;
                        for (int j = 0; j < w; ++j) dst[j] += src[j];
                    }
                }
                c += w;
            }
        });
    }
    return out;
}

// ---------------------------------------------------------------------------
// reductions
// ---------------------------------------------------------------------------

template <class Real>
TensorT<Real> sum(GraphT<Real>& g, const TensorT<Real>& x) {
    TensorT<Real> out = TensorT<Real>::zeros({1});
    Real acc = Real(0);
    for (Real v : *x.data) acc += v;
    (*out.data)[0] = acc;
    if (detail::track(g, {&x})) {
        out.set_requires_grad(true);
        g.record([x, out]() {
            const Real go = (*out.grad)[0];
            for (auto& v : *x.grad) v += go;
        });
    }
    return out;
}

template <class Real>
TensorT<Real> mean_rows(GraphT<Real>& g, const TensorT<Real>& x) {
    detail::require_rank2(x, "mean_rows");
    const int n = x.shape[0], d = x.shape[1];
    TensorT<Real> out = TensorT<Real>::zeros({1, d});
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < d; ++j) {
            (*out.data)[j] += (*x.data)[static_cast<std::size_t>(i) * d + j];
        }
    }
    const Real inv = Real(1) / Real(n);
    for (int j = 0; j < d; ++j) (*out.data)[j] *= inv;
    if (detail::track(g, {&x})) {
        out.set_requires_grad(true);
        g.record([x, out, n, d, inv]() {
            for (int i = 0; i < n; ++i) {
                for (int j = 0; j < d; ++j) {
                    (*x.grad)[static_cast<std::size_t>(i) * d + j] += inv * (*out.grad)[j];
                }
            }
        });
    }
    return out;
}

// Mean of squared entries; the usual reconstruction-style scalar loss.
template <class Real>
TensorT<Real> mean_square(GraphT<Real>& g, const TensorT<Real>& x) {
    TensorT<Real> sq = mul(g, x, x);
    TensorT<Real> s = sum(g, sq);
    return scale(g, s, Real(1) / Real(x.numel()));
}

// ---------------------------------------------------------------------------
// layer norm (fused)
// ---------------------------------------------------------------------------

template <class Real>
TensorT<Real> layer_norm(GraphT<Real>& g, const TensorT<Real>& x, const TensorT<Real>& gain,
                         const TensorT<Real>& shift, Real epsilon) {
    detail::require_rank2(x, "layer_norm");
    const int n = x.shape[0], d = x.shape[1];
    if (gain.rank() != 1 || gain.shape[0] != d || shift.rank() != 1 || shift.shape[0] != d) {
        throw DimensionError("layer_norm: gain/shift must be [" + std::to_string(d) + "]");
    }
    if (d < 2) {
        throw ContractError("layer_norm: needs at least 2 features per row");
    }
    TensorT<Real> out = TensorT<Real>::zeros(x.shape);
    auto normalized = std::make_shared<std::vector<Real>>(x.numel());
    auto inv_std = std::make_shared<std::vector<Real>>(n);
    for (int i = 0; i < n; ++i) {
        const Real* row = x.data->data() + static_cast<std::size_t>(i) * d;
        Real mean = Real(0);
        for (int j = 0; j < d; ++j) mean += row[j];
        mean /= Real(d);
        Real var = Real(0);
        for (int j = 0; j < d; ++j) {
            const Real c = row[j] - mean;
            var += c * c;
        }
        var /= Real(d);
        const Real istd = Real(1) / std::sqrt(var + epsilon);
        (*inv_std)[i] = istd;
        Real* nrow = normalized->data() + static_cast<std::size_t>(i) * d;
        Real* orow = out.data->data() + static_cast<std::size_t>(i) * d;
        for (int j = 0; j < d; ++j) {
            nrow[j] = (row[j] - mean) * istd;
            orow[j] = (*gain.data)[j] * nrow[j] + (*shift.data)[j];
        }
    }
    if (detail::track(g, {&x, &gain, &shift})) {
        out.set_requires_grad(true);
        g.record([x, gain, shift, out, normalized, inv_std, n, d]() {
            for (int i = 0; i < n; ++i) {
                const Real* dy = out.grad->data() + static_cast<std::size_t>(i) * d;
                const Real* xh = normalized->data() + static_cast<std::size_t>(i) * d;
                if (gain.requires_grad) {
                    for (int j = 0; j < d; ++j) (*gain.grad)[j] += dy[j] * xh[j];
                }
                if (shift.requires_grad) {
                    for (int j = 0; j < d; ++j) (*shift.grad)[j] += dy[j];
                }
                if (x.requires_grad) {
                    const Real istd = (*inv_std)[i];
                    Real mean_dxh = Real(0), mean_dxh_xh = Real(0);
                    for (int j = 0; j < d; ++j) {
                        const Real dxh = dy[j] * (*gain.data)[j];
                        mean_dxh += dxh;
                        mean_dxh_xh += dxh * xh[j];
                    }
                    mean_dxh /= Real(d);
                    mean_dxh_xh /= Real(d);
                    Real* dx = x.grad->data() + static_cast<std::size_t>(i) * d;
                    for (int j = 0; j < d; ++j) {
                        const Real dxh = dy[j] * (*gain.data)[j];
                        dx[j] += istd * (dxh - mean_dxh - xh[j] * mean_dxh_xh);
                    }
                }
            }
        });
    }
    return out;
}

// ---------------------------------------------------------------------------
// softmax cross-entropy (fused)
// ---------------------------------------------------------------------------

// Mean cross-entropy of row-wise softmax(logits) against integer labels.
template <class Real>
TensorT<Real> cross_entropy_logits(GraphT<Real>& g, const TensorT<Real>& logits,
                                   const std::vector<int>& labels) {
    detail::require_rank2(logits, "cross_entropy_logits");
    const int b = logits.shape[0], c = logits.shape[1];
    if (static_cast<int>(labels.size()) != b) {
        throw DimensionError("cross_entropy_logits: " + std::to_string(labels.size()) +
                             " labels for " + logits.shape_str());
    }
    for (int label : labels) {
        if (label < 0 || label >= c) {
            throw DomainError("cross_entropy_logits: label " + std::to_string(label) +
                              " outside [0, " + std::to_string(c) + ")");
        }
    }
    auto probs = std::make_shared<std::vector<Real>>(logits.numel());
    Real loss = Real(0);
    for (int i = 0; i < b; ++i) {
        const Real* row = logits.data->data() + static_cast<std::size_t>(i) * c;
        Real* prow = probs->data() + static_cast<std::size_t>(i) * c;
        Real mx = row[0];
        for (int j = 1; j < c; ++j) mx = std::max(mx, row[j]);
        Real denom = Real(0);
        for (int j = 0; j < c; ++j) {
            prow[j] = std::exp(row[j] - mx);
            denom += prow[j];
        }
        for (int j = 0; j < c; ++j) prow[j] /= denom;
        loss -= std::log(std::max(prow[labels[i]], std::numeric_limits<Real>::min()));
    }
    loss /= Real(b);
    TensorT<Real> out = TensorT<Real>::scalar(loss);
    if (detail::track(g, {&logits})) {
        out.set_requires_grad(true);
        g.record([logits, out, probs, labels, b, c]() {
            const Real go = (*out.grad)[0] / Real(b);
            for (int i = 0; i < b; ++i) {
                const Real* prow = probs->data() + static_cast<std::size_t>(i) * c;
                Real* drow = logits.grad->data() + static_cast<std::size_t>(i) * c;
                for (int j = 0; j < c; ++j) {
                    drow[j] += go * (prow[j] - (j == labels[i] ? Real(1) : Real(0)));
                }
            }
        });
    }
    return out;
}

} // namespace hfq
