#pragma once

#include <cstdint>
#include <vector>

#include "pointgr/errors.hpp"

namespace pointgr {

/// Confusion-matrix derived metrics. confusion[t * m + p] counts points of
/// true class t predicted as p.
///
/// mean_class_accuracy averages per-class recall over classes with support.
/// per_class_iou[c] = TP / (TP + FP + FN); a class absent from both pred and
/// truth is reported as 1 and excluded from mean_iou. overall_iou is the
/// micro, point-wise figure (equal to overall accuracy for single-label
/// points).
struct MetricReport {
    double overall_accuracy = 0.0;
    double mean_class_accuracy = 0.0;
    std::vector<double> per_class_iou;
    double mean_iou = 0.0;
    double overall_iou = 0.0;
    std::vector<std::int64_t> confusion;
    std::size_t num_classes = 0;
};

MetricReport compute_metrics(const std::vector<std::int32_t>& pred,
                             const std::vector<std::int32_t>& truth, std::size_t num_classes);

/// Part-segmentation mean IoU over shapes. Each shape is scored over the
/// parts belonging to its category only (catalog[category] lists global part
/// ids); a part missing from both prediction and truth scores 1. The result
/// is the unweighted mean of the per-shape scores.
double partseg_mean_iou(const std::vector<std::vector<std::int32_t>>& pred,
                        const std::vector<std::vector<std::int32_t>>& truth,
                        const std::vector<std::int32_t>& categories,
                        const std::vector<std::vector<std::int32_t>>& catalog);

} // namespace pointgr
