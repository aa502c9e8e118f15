#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <numeric>
#include <string>
#include <vector>

#include "hfq/errors.hpp"
#include "hfq/rng.hpp"

namespace hfq {

// Dense row-major tensor. The handle is value-like: copies share the
// underlying buffers, which is what the autograd tape captures; clone()
// makes an independent deep copy. Artifact math runs on Real = float,
// the finite-difference oracle instantiates the same code with double.
template <class Real>
struct TensorT {
    std::vector<int> shape;
    std::shared_ptr<std::vector<Real>> data;
    std::shared_ptr<std::vector<Real>> grad; // allocated iff requires_grad
    bool requires_grad = false;

    TensorT() : data(std::make_shared<std::vector<Real>>()) {}

    static std::size_t shape_numel(const std::vector<int>& shape) {
        std::size_t n = 1;
        for (int d : shape) {
            if (d <= 0) {
                throw DimensionError("tensor dimensions must be positive, got " + shape_str(shape));
            }
            n *= static_cast<std::size_t>(d);
        }
        return n;
    }

    static TensorT zeros(std::vector<int> shape, bool requires_grad = false) {
        TensorT t;
        const std::size_t n = shape_numel(shape);
        t.shape = std::move(shape);
        t.data = std::make_shared<std::vector<Real>>(n, Real(0));
        t.set_requires_grad(requires_grad);
        return t;
    }

    static TensorT from(std::vector<int> shape, std::vector<Real> values, bool requires_grad = false) {
        const std::size_t n = shape_numel(shape);
        if (values.size() != n) {
            throw DimensionError("value count " + std::to_string(values.size()) +
                                 " does not match shape " + shape_str(shape));
        }
        TensorT t;
        t.shape = std::move(shape);
        t.data = std::make_shared<std::vector<Real>>(std::move(values));
        t.set_requires_grad(requires_grad);
        return t;
    }

    static TensorT scalar(Real v) { return from({1}, {v}); }

    static TensorT randn(std::vector<int> shape, Rng& rng, double mean, double stddev,
                         bool requires_grad = false) {
        TensorT t = zeros(std::move(shape), requires_grad);
        rng.fill_normal(*t.data, mean, stddev);
        return t;
    }

    static TensorT identity(int n) {
        TensorT t = zeros({n, n});
        for (int i = 0; i < n; ++i) {
            (*t.data)[static_cast<std::size_t>(i) * n + i] = Real(1);
        }
        return t;
    }

    void set_requires_grad(bool on) {
        requires_grad = on;
        if (on) {
            if (!grad || grad->size() != data->size()) {
                grad = std::make_shared<std::vector<Real>>(data->size(), Real(0));
            }
        } else {
            grad.reset();
        }
    }

    // Const on the handle: buffers are shared, clearing them is not a reseat.
    void zero_grad() const {
        if (grad) {
            std::fill(grad->begin(), grad->end(), Real(0));
        }
    }

    TensorT clone() const {
        TensorT t;
        t.shape = shape;
        t.data = std::make_shared<std::vector<Real>>(*data);
        t.requires_grad = requires_grad;
        if (grad) {
            t.grad = std::make_shared<std::vector<Real>>(*grad);
        }
        return t;
    }

    std::size_t numel() const { return data->size(); }
    int rank() const { return static_cast<int>(shape.size()); }

    int rows() const {
        require_rank2("rows()");
        return shape[0];
    }
    int cols() const {
        require_rank2("cols()");
        return shape[1];
    }

    Real& at(int i, int j) {
        require_rank2("at()");
        return (*data)[static_cast<std::size_t>(i) * shape[1] + j];
    }
    Real at(int i, int j) const {
        require_rank2("at()");
        return (*data)[static_cast<std::size_t>(i) * shape[1] + j];
    }

    Real value() const {
        if (numel() != 1) {
            throw ContractError("value() requires a single-element tensor, got " + shape_str(shape));
        }
        return (*data)[0];
    }

    bool all_finite() const {
        for (Real v : *data) {
            if (!std::isfinite(static_cast<double>(v))) {
                return false;
            }
        }
        return true;
    }

    static std::string shape_str(const std::vector<int>& shape) {
        std::string s = "[";
        for (std::size_t i = 0; i < shape.size(); ++i) {
            if (i) s += "x";
            s += std::to_string(shape[i]);
        }
        return s + "]";
    }
    std::string shape_str() const { return shape_str(shape); }

private:
    void require_rank2(const char* what) const {
        if (shape.size() != 2) {
            throw ContractError(std::string(what) + " requires a rank-2 tensor, got " + shape_str(shape));
        }
    }
};

// Reverse-mode tape. Operations append their backward closure as they
// execute, so the list is topologically ordered by construction; backward
// replays it once, in reverse. One graph per forward pass; graphs share
// no state, so independent passes can run on different threads.
template <class Real>
class GraphT {
public:
    GraphT() = default;
    explicit GraphT(bool recording) : recording_(recording) {}

    bool recording() const { return recording_; }
    void set_recording(bool on) { recording_ = on; }

    void record(std::function<void()> backward_fn) {
        tape_.push_back(std::move(backward_fn));
    }

    std::size_t node_count() const { return tape_.size(); }

    // Seeds d(loss)/d(loss) = 1 and replays the tape in reverse; each node
    // runs exactly once. Gradients accumulate into every requires_grad
    // tensor reachable from the loss; unreachable ones keep their zeros.
    void backward(const TensorT<Real>& loss) {
        if (loss.numel() != 1) {
            throw ContractError("backward requires a scalar loss, got " + loss.shape_str());
        }
        if (!loss.requires_grad || !loss.grad) {
            throw ContractError("backward requires a loss produced from a recorded graph");
        }
        (*loss.grad)[0] = Real(1);
        for (auto it = tape_.rbegin(); it != tape_.rend(); ++it) {
            (*it)();
        }
    }

    void clear() { tape_.clear(); }

private:
    std::vector<std::function<void()>> tape_;
    bool recording_ = true;
};

using Tensor = TensorT<float>;
using Graph = GraphT<float>;

} // namespace hfq
