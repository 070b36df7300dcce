#pragma once

#include <cstddef>
#include <vector>

namespace pfnbench {

// Relative data efficiency: how much of the data a method leaves unused
// when it first reaches 90% of the best score seen on this split, relative
// to the first method that gets there.

struct EfficiencyRecord {
    std::size_t n_max = 0;   // total train points available
    std::size_t n_best = 0;  // points the first-crossing method needed
    std::size_t n_m = 0;     // points this method needed (n_max if never)
    double eta = 0.0;        // (n_max - n_m) / (n_max - n_best)
};

// curves[m][f]: score of method m at fraction index f; point_counts[f]:
// cumulative train rows at that fraction (shared grid, ascending). The
// threshold is threshold_ratio * max over methods and fractions. The first
// method to cross scores exactly 1; methods that never cross score 0. If
// no score exceeds zero, or crossing requires all points, every method
// scores 0 (degenerate split, documented).
std::vector<EfficiencyRecord> data_efficiency(const std::vector<std::vector<double>>& curves,
                                              const std::vector<std::size_t>& point_counts,
                                              std::size_t n_max, double threshold_ratio = 0.9);

}  // namespace pfnbench
