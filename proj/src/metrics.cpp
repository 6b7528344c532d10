#include "pointgr/metrics.hpp"

#include <string>

namespace pointgr {

MetricReport compute_metrics(const std::vector<std::int32_t>& pred,
                             const std::vector<std::int32_t>& truth, std::size_t num_classes) {
    if (pred.size() != truth.size()) {
        throw ValidationError("compute_metrics: " + std::to_string(pred.size()) +
                              " predictions vs " + std::to_string(truth.size()) + " labels");
    }
    if (pred.empty()) throw ValidationError("compute_metrics: empty label vectors");
    if (num_classes == 0) throw ValidationError("compute_metrics: num_classes must be positive");

    MetricReport r;
    r.num_classes = num_classes;
    r.confusion.assign(num_classes * num_classes, 0);
    for (std::size_t i = 0; i < pred.size(); ++i) {
        std::int32_t t = truth[i], p = pred[i];
        if (t < 0 || p < 0 || static_cast<std::size_t>(t) >= num_classes ||
            static_cast<std::size_t>(p) >= num_classes) {
            throw ValidationError("compute_metrics: label out of range at index " +
                                  std::to_string(i));
        }
        ++r.confusion[static_cast<std::size_t>(t) * num_classes + static_cast<std::size_t>(p)];
    }

    const double total = static_cast<double>(pred.size());
    double trace = 0.0;
    double recall_sum = 0.0;
    std::size_t supported = 0;
    double iou_sum = 0.0;
    std::size_t iou_classes = 0;
    r.per_class_iou.assign(num_classes, 1.0);
    for (std::size_t c = 0; c < num_classes; ++c) {
        std::int64_t tp = r.confusion[c * num_classes + c];
        std::int64_t row = 0, col = 0;
        for (std::size_t j = 0; j < num_classes; ++j) {
            row += r.confusion[c * num_classes + j];
            col += r.confusion[j * num_classes + c];
        }
        trace += static_cast<double>(tp);
        if (row > 0) {
            recall_sum += static_cast<double>(tp) / static_cast<double>(row);
            ++supported;
        }
        std::int64_t uni = row + col - tp;
        if (uni > 0) {
            r.per_class_iou[c] = static_cast<double>(tp) / static_cast<double>(uni);
            iou_sum += r.per_class_iou[c];
            ++iou_classes;
        }
    }
    r.overall_accuracy = trace / total;
    r.mean_class_accuracy = supported ? recall_sum / static_cast<double>(supported) : 0.0;
    r.mean_iou = iou_classes ? iou_sum / static_cast<double>(iou_classes) : 0.0;
    r.overall_iou = r.overall_accuracy;
    return r;
}

double partseg_mean_iou(const std::vector<std::vector<std::int32_t>>& pred,
                        const std::vector<std::vector<std::int32_t>>& truth,
                        const std::vector<std::int32_t>& categories,
                        const std::vector<std::vector<std::int32_t>>& catalog) {
    if (pred.size() != truth.size() || pred.size() != categories.size()) {
        throw ValidationError("partseg_mean_iou: shape/label/category counts differ");
    }
    if (pred.empty()) throw ValidationError("partseg_mean_iou: no shapes");

    double total = 0.0;
    for (std::size_t s = 0; s < pred.size(); ++s) {
        if (pred[s].size() != truth[s].size()) {
            throw ValidationError("partseg_mean_iou: point count mismatch in shape " +
                                  std::to_string(s));
        }
        std::int32_t cat = categories[s];
        if (cat < 0 || static_cast<std::size_t>(cat) >= catalog.size()) {
            throw ValidationError("partseg_mean_iou: category out of range in shape " +
                                  std::to_string(s));
        }
        const std::vector<std::int32_t>& parts = catalog[static_cast<std::size_t>(cat)];
        if (parts.empty()) {
            throw ValidationError("partseg_mean_iou: category with no parts");
        }
        double shape_sum = 0.0;
        for (std::int32_t part : parts) {
            std::int64_t inter = 0, uni = 0;
            for (std::size_t i = 0; i < pred[s].size(); ++i) {
                bool in_p = pred[s][i] == part;
                bool in_t = truth[s][i] == part;
                inter += in_p && in_t;
                uni += in_p || in_t;
            }
            shape_sum += uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
        }
        total += shape_sum / static_cast<double>(parts.size());
    }
    return total / static_cast<double>(pred.size());
}

} // namespace pointgr
