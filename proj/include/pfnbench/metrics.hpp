#pragma once

#include <cstdint>
#include <vector>

namespace pfnbench {

struct ConfusionCounts {
    std::int64_t tp = 0;
    std::int64_t fp = 0;
    std::int64_t fn = 0;
    std::int64_t tn = 0;

    std::int64_t total() const { return tp + fp + fn + tn; }
};

ConfusionCounts binary_confusion(const std::vector<int>& y_true, const std::vector<int>& y_pred,
                                 int positive_class);

// 2TP / (2TP + FP + FN); 0 by convention when the denominator is 0.
double f1_binary(const ConfusionCounts& counts);

// Unweighted mean of per-class one-vs-rest F1 over all n_classes; classes
// absent from both truth and prediction contribute 0.
double f1_macro(const std::vector<int>& y_true, const std::vector<int>& y_pred, int n_classes);

double accuracy(const std::vector<int>& y_true, const std::vector<int>& y_pred);

}  // namespace pfnbench
