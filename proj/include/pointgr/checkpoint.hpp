#pragma once

#include <map>
#include <string>
#include <vector>

#include "pointgr/manifest.hpp"
#include "pointgr/models.hpp"
#include "pointgr/optimizer.hpp"
#include "pointgr/weights_io.hpp"

namespace pointgr {

/// Everything needed to rebuild a model: task, label-space sizes, and the
/// architecture knobs. Stored as `key = value` text next to the weights.
struct ModelConfig {
    Task task = Task::classification;
    std::size_t classes = 0;
    std::size_t channels = 3;
    std::size_t categories = 0;  // part segmentation only
    int k = 20;
    std::size_t pre_hidden = 64;
    std::vector<std::size_t> fln = {64, 128, 256};
    std::size_t aggregate = 1024;
    std::vector<std::size_t> head = {512, 256};
    std::size_t label_dim = 64;
    double dropout = 0.5;
    std::string precision = "f32";
};

std::string model_config_to_text(const ModelConfig& mc);
ModelConfig parse_model_config(const std::string& text, const std::string& what);
ModelConfig load_model_config(const std::string& path);

ClassifierSpec to_classifier_spec(const ModelConfig& mc);
PartSegSpec to_part_seg_spec(const ModelConfig& mc);
SceneSegSpec to_scene_seg_spec(const ModelConfig& mc);

/// A checkpoint is <stem>.cfg plus <stem>.pgrw. The weights container holds
/// every parameter (including batch norm running stats) plus one
/// "opt/velocity/<name>" entry per trainable parameter when an optimizer is
/// given.
template <typename T>
void save_checkpoint(const std::string& stem, const ModelConfig& mc, const ParamStore<T>& ps,
                     const SgdMomentum<T>* opt) {
    write_file_bytes(stem + ".cfg", model_config_to_text(mc));
    std::map<std::string, Tensor<T>> entries = ps.snapshot();
    if (opt) {
        for (const auto& [name, v] : opt->velocity()) {
            entries.emplace("opt/velocity/" + name, v);
        }
    }
    save_weights(stem + ".pgrw", entries);
}

template <typename T>
struct CheckpointData {
    ModelConfig config;
    std::map<std::string, Tensor<T>> weights;
    std::map<std::string, Tensor<T>> velocity;
};

template <typename T>
CheckpointData<T> load_checkpoint(const std::string& stem) {
    CheckpointData<T> ckpt;
    ckpt.config = load_model_config(stem + ".cfg");
    const std::string prefix = "opt/velocity/";
    for (auto& [name, tensor] : load_weights<T>(stem + ".pgrw")) {
        if (name.rfind(prefix, 0) == 0) {
            ckpt.velocity.emplace(name.substr(prefix.size()), std::move(tensor));
        } else {
            ckpt.weights.emplace(name, std::move(tensor));
        }
    }
    return ckpt;
}

} // namespace pointgr
