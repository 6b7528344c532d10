#pragma once

#include <map>
#include <string>

#include "pointgr/autodiff.hpp"
#include "pointgr/weights_io.hpp"

namespace pointgr {

/// Named registry of graph leaves. Trainable entries get gradients and are
/// touched by the optimizer; non-trainable entries (batch norm running
/// statistics) are still part of the saved state.
template <typename T>
class ParamStore {
public:
    struct Entry {
        Var var;
        bool trainable = true;
    };

    explicit ParamStore(Graph<T>& g) : graph_(&g) {}

    Var add(const std::string& name, Tensor<T> value, bool trainable = true) {
        if (entries_.count(name)) throw ValidationError("duplicate parameter: " + name);
        Var v = graph_->leaf(std::move(value), trainable);
        entries_[name] = Entry{v, trainable};
        return v;
    }

    bool contains(const std::string& name) const { return entries_.count(name) != 0; }

    Var var(const std::string& name) const {
        auto it = entries_.find(name);
        if (it == entries_.end()) throw ValidationError("unknown parameter: " + name);
        return it->second.var;
    }

    const std::map<std::string, Entry>& entries() const { return entries_; }
    Graph<T>& graph() { return *graph_; }

    std::size_t count_trainable() const {
        std::size_t total = 0;
        for (const auto& [name, e] : entries_) {
            if (e.trainable) total += graph_->value(e.var).numel();
        }
        return total;
    }

    std::map<std::string, Tensor<T>> snapshot() const {
        std::map<std::string, Tensor<T>> out;
        for (const auto& [name, e] : entries_) out.emplace(name, graph_->value(e.var));
        return out;
    }

    /// Overwrite values in place from a snapshot. Every registered parameter
    /// must be present with a matching shape; extra keys are rejected so a
    /// checkpoint from a different architecture fails loudly.
    void load_values(const std::map<std::string, Tensor<T>>& values) {
        for (const auto& [name, e] : entries_) {
            auto it = values.find(name);
            if (it == values.end()) throw ValidationError("missing parameter in weights: " + name);
            Tensor<T>& dst = graph_->value_mut(e.var);
            if (dst.shape() != it->second.shape()) {
                throw ValidationError("shape mismatch for " + name + ": expected " +
                                      shape_str(dst.shape()) + ", got " +
                                      shape_str(it->second.shape()));
            }
            dst = it->second;
        }
        for (const auto& [name, t] : values) {
            if (!entries_.count(name)) throw ValidationError("unexpected parameter in weights: " + name);
        }
    }

private:
    Graph<T>* graph_;
    std::map<std::string, Entry> entries_;
};

} // namespace pointgr
