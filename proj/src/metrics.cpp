#include "pfnbench/metrics.hpp"

#include <string>

#include "pfnbench/errors.hpp"

namespace pfnbench {

ConfusionCounts binary_confusion(const std::vector<int>& y_true, const std::vector<int>& y_pred,
                                 int positive_class) {
    if (y_true.size() != y_pred.size()) {
        throw DimensionError("binary_confusion: length mismatch");
    }
    ConfusionCounts c;
    for (std::size_t i = 0; i < y_true.size(); ++i) {
        const bool truth = y_true[i] == positive_class;
        const bool pred = y_pred[i] == positive_class;
        if (truth && pred) ++c.tp;
        else if (!truth && pred) ++c.fp;
        else if (truth && !pred) ++c.fn;
        else ++c.tn;
    }
    return c;
}

double f1_binary(const ConfusionCounts& counts) {
    const std::int64_t denom = 2 * counts.tp + counts.fp + counts.fn;
    if (denom == 0) return 0.0;
    return 2.0 * static_cast<double>(counts.tp) / static_cast<double>(denom);
}

double f1_macro(const std::vector<int>& y_true, const std::vector<int>& y_pred, int n_classes) {
    if (y_true.size() != y_pred.size()) throw DimensionError("f1_macro: length mismatch");
    if (n_classes < 1) throw ConfigError("f1_macro: n_classes must be >= 1");
    double sum = 0.0;
    for (int c = 0; c < n_classes; ++c) {
        sum += f1_binary(binary_confusion(y_true, y_pred, c));
    }
    return sum / static_cast<double>(n_classes);
}

double accuracy(const std::vector<int>& y_true, const std::vector<int>& y_pred) {
    if (y_true.size() != y_pred.size()) throw DimensionError("accuracy: length mismatch");
    if (y_true.empty()) throw DimensionError("accuracy: undefined for empty input");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < y_true.size(); ++i) hits += y_true[i] == y_pred[i] ? 1 : 0;
    return static_cast<double>(hits) / static_cast<double>(y_true.size());
}

}  // namespace pfnbench
