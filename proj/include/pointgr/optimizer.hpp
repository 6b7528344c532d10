#pragma once

#include <cmath>
#include <numbers>

#include "pointgr/param_store.hpp"

namespace pointgr {

/// Cosine annealing from lr_max at t = 0 to lr_min at t = T.
template <typename T>
T cosine_lr(std::size_t t, std::size_t total, T lr_max, T lr_min) {
    if (total == 0) return lr_max;
    T phase = static_cast<T>(t) / static_cast<T>(total);
    return lr_min + T(0.5) * (lr_max - lr_min) * (T(1) + std::cos(std::numbers::pi_v<T> * phase));
}

/// SGD with momentum: v <- momentum * v + g, p <- p - lr * v. Velocity is
/// kept per trainable parameter and survives checkpointing. A parameter
/// whose gradient buffer is absent this step contributes g = 0.
template <typename T>
class SgdMomentum {
public:
    explicit SgdMomentum(ParamStore<T>& ps, T momentum = T(0.9)) : ps_(&ps), momentum_(momentum) {
        for (const auto& [name, e] : ps.entries()) {
            if (e.trainable) {
                velocity_.emplace(name, Tensor<T>(ps.graph().value(e.var).shape()));
            }
        }
    }

    T momentum() const { return momentum_; }

    void step(T lr) {
        Graph<T>& g = ps_->graph();
        for (const auto& [name, e] : ps_->entries()) {
            if (!e.trainable) continue;
            Tensor<T>& v = velocity_.at(name);
            Tensor<T>& p = g.value_mut(e.var);
            if (g.has_grad(e.var)) {
                const Tensor<T>& grad = g.grad(e.var);
                if (!grad.all_finite()) {
                    throw NumericError("non-finite gradient in parameter " + name);
                }
                for (std::size_t i = 0; i < v.numel(); ++i) {
                    v[i] = momentum_ * v[i] + grad[i];
                }
            } else {
                for (std::size_t i = 0; i < v.numel(); ++i) v[i] = momentum_ * v[i];
            }
            for (std::size_t i = 0; i < p.numel(); ++i) p[i] -= lr * v[i];
        }
    }

    const std::map<std::string, Tensor<T>>& velocity() const { return velocity_; }

    void load_velocity(const std::map<std::string, Tensor<T>>& values) {
        for (auto& [name, v] : velocity_) {
            auto it = values.find(name);
            if (it == values.end()) throw ValidationError("missing velocity for " + name);
            if (it->second.shape() != v.shape()) {
                throw ValidationError("velocity shape mismatch for " + name);
            }
            v = it->second;
        }
    }

private:
    ParamStore<T>* ps_;
    T momentum_;
    std::map<std::string, Tensor<T>> velocity_;
};

} // namespace pointgr
