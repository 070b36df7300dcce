#include "pfnbench/efficiency.hpp"

#include <algorithm>

#include "pfnbench/errors.hpp"

namespace pfnbench {

std::vector<EfficiencyRecord> data_efficiency(const std::vector<std::vector<double>>& curves,
                                              const std::vector<std::size_t>& point_counts,
                                              std::size_t n_max, double threshold_ratio) {
    if (curves.empty()) throw ConfigError("data_efficiency: no curves");
    if (point_counts.empty()) throw ConfigError("data_efficiency: empty point grid");
    for (const auto& curve : curves) {
        if (curve.size() != point_counts.size()) {
            throw DimensionError("data_efficiency: curves must share the fraction grid");
        }
    }
    for (std::size_t f = 1; f < point_counts.size(); ++f) {
        if (point_counts[f] < point_counts[f - 1]) {
            throw ConfigError("data_efficiency: point counts must be ascending");
        }
    }
    if (point_counts.back() > n_max) {
        throw ConfigError("data_efficiency: grid exceeds n_max");
    }

    double best = curves[0][0];
    for (const auto& curve : curves) {
        for (double v : curve) best = std::max(best, v);
    }

    std::vector<EfficiencyRecord> out(curves.size());
    for (auto& rec : out) rec.n_max = n_max;

    if (best <= 0.0) {
        // flat-zero curves: nobody demonstrates any skill at any size
        for (auto& rec : out) {
            rec.n_best = n_max;
            rec.n_m = n_max;
            rec.eta = 0.0;
        }
        return out;
    }

    const double threshold = threshold_ratio * best;
    std::size_t n_best = n_max;
    for (std::size_t m = 0; m < curves.size(); ++m) {
        std::size_t n_m = n_max;
        for (std::size_t f = 0; f < point_counts.size(); ++f) {
            if (curves[m][f] >= threshold) {
                n_m = point_counts[f];
                break;
            }
        }
        out[m].n_m = n_m;
        n_best = std::min(n_best, n_m);
    }
    for (auto& rec : out) rec.n_best = n_best;

    if (n_best == n_max) {
        // crossing required the full dataset; by the "all data -> 0" rule
        // every method, including the first crosser, scores 0
        for (auto& rec : out) rec.eta = 0.0;
        return out;
    }
    for (auto& rec : out) {
        rec.eta = static_cast<double>(n_max - rec.n_m) / static_cast<double>(n_max - n_best);
    }
    return out;
}

}  // namespace pfnbench
