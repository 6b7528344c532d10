#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pointgr/manifest.hpp"

namespace pointgr {

/// Training configuration. Optional fields fall back to per-task defaults
/// when resolved: lr 0.1 for classification and 0.01 for segmentation,
/// lr_min = lr/100, head widths {512,256} for classification and {256,128}
/// for segmentation.
struct TrainConfig {
    std::optional<double> lr;
    std::optional<double> lr_min;
    double momentum = 0.9;
    std::size_t batch = 32;
    std::size_t epochs = 10;
    std::uint64_t seed = 0;
    std::optional<std::string> precision;  // f32 | f64; unset defers to PGR_PRECISION, then f32

    std::size_t points = 0;  // resample each cloud to this many points; 0 keeps native
    int k = 20;
    double label_smoothing = 0.0;
    double dropout = 0.5;

    // architecture overrides
    std::size_t pre_hidden = 64;
    std::vector<std::size_t> fln = {64, 128, 256};
    std::size_t aggregate = 1024;
    std::optional<std::vector<std::size_t>> head;
    std::size_t label_dim = 64;

    // stop as soon as the train split reaches the target (checked per epoch)
    std::optional<double> stop_train_acc;
    std::optional<double> stop_train_miou;
};

/// Concrete per-task values after defaulting and validation. The precision
/// default comes from the PGR_PRECISION environment variable when the config
/// leaves it unset.
struct ResolvedTrainConfig {
    TrainConfig raw;
    double lr = 0.0;
    double lr_min = 0.0;
    std::vector<std::size_t> head;
    std::string precision = "f32";
};

ResolvedTrainConfig resolve_config(const TrainConfig& cfg, Task task);

/// Parses UTF-8 `key = value` lines; # starts a comment, blank lines are
/// skipped. Unknown keys and malformed values raise ValidationError naming
/// the key.
TrainConfig parse_train_config(const std::string& text, const std::string& what);
TrainConfig load_train_config(const std::string& path);

std::string train_config_to_text(const TrainConfig& cfg);

} // namespace pointgr
