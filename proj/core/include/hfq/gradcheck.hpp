#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

#include "hfq/tensor.hpp"

namespace hfq {

// Compares reverse-mode gradients against central finite differences.
//
// loss_fn is evaluated twice per probed coordinate with recording off, then
// once with recording on to pull analytic gradients. Returns the worst
// relative error  max |analytic - numeric| / (|numeric| + 1e-8)  over the
// probed coordinates. Intended to run with Real = double: the forward passes
// must carry more precision than the differences they are asked to resolve.
//
// max_coords_per_param > 0 probes a deterministic even-spread subset of each
// parameter's coordinates instead of all of them; 0 probes everything.
template <class Real>
Real grad_check(GraphT<Real>& g,
                const std::function<TensorT<Real>(GraphT<Real>&)>& loss_fn,
                const std::vector<TensorT<Real>>& params,
                Real step = Real(1e-3),
                std::size_t max_coords_per_param = 0) {
    g.clear();
    g.set_recording(true);
    for (const auto& p : params) p.zero_grad();
    TensorT<Real> loss = loss_fn(g);
    g.backward(loss);
    g.set_recording(false);

    Real worst = Real(0);
    for (const auto& p : params) {
        const std::size_t n = p.numel();
        std::size_t probes = n;
        std::size_t stride = 1;
        if (max_coords_per_param > 0 && max_coords_per_param < n) {
            probes = max_coords_per_param;
            stride = n / probes;
        }
        for (std::size_t k = 0; k < probes; ++k) {
            const std::size_t i = k * stride;
            const Real saved = (*p.data)[i];
            (*p.data)[i] = saved + step;
            const Real up = loss_fn(g).value();
            (*p.data)[i] = saved - step;
            const Real down = loss_fn(g).value();
            (*p.data)[i] = saved;
            const Real numeric = (up - down) / (Real(2) * step);
            const Real analytic = (*p.grad)[i];
            const Real rel = std::abs(analytic - numeric) / (std::abs(numeric) + Real(1e-8));
            worst = std::max(worst, rel);
        }
    }
    g.clear();
    return worst;
}

} // namespace hfq
