#pragma once

#include <cmath>
#include <string>

#include "pointgr/param_store.hpp"
#include "pointgr/rng.hpp"

namespace pointgr {

template <typename T>
struct LinearLayer {
    Var w;
    Var b;
};

/// Weight init is uniform over +-sqrt(6 / fan_in), bias zero. With
/// `zero_init` both are zero; final classifier layers use that so a fresh
/// model emits exactly uniform logits.
template <typename T>
LinearLayer<T> register_linear(ParamStore<T>& ps, const std::string& prefix, std::size_t in,
                               std::size_t out, Rng& rng, bool zero_init = false) {
    Tensor<T> w({in, out});
    if (!zero_init) {
        T bound = std::sqrt(T(6) / static_cast<T>(in));
        w = random_uniform<T>(rng, {in, out}, -bound, bound);
    }
    LinearLayer<T> layer;
    layer.w = ps.add(prefix + "/w", std::move(w));
    layer.b = ps.add(prefix + "/b", Tensor<T>({out}));
    return layer;
}

template <typename T>
Var linear_forward(Graph<T>& g, const LinearLayer<T>& layer, Var x) {
    return g.linear(x, layer.w, layer.b);
}

template <typename T>
struct BatchNormLayer {
    Var gamma;
    Var beta;
    Var run_mean;
    Var run_var;
};

template <typename T>
BatchNormLayer<T> register_batch_norm(ParamStore<T>& ps, const std::string& prefix,
                                      std::size_t channels) {
    BatchNormLayer<T> layer;
    layer.gamma = ps.add(prefix + "/gamma", Tensor<T>::full({channels}, T(1)));
    layer.beta = ps.add(prefix + "/beta", Tensor<T>({channels}));
    layer.run_mean = ps.add(prefix + "/running_mean", Tensor<T>({channels}), false);
    layer.run_var = ps.add(prefix + "/running_var", Tensor<T>::full({channels}, T(1)), false);
    return layer;
}

template <typename T>
Var batch_norm_forward(Graph<T>& g, const BatchNormLayer<T>& layer, Var x, bool training,
                       T momentum = T(0.9), T eps = T(1e-5)) {
    return g.batch_norm(x, layer.gamma, layer.beta, g.value_mut(layer.run_mean),
                        g.value_mut(layer.run_var), training, momentum, eps);
}

} // namespace pointgr
