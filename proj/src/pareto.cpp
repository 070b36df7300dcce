#include "pfnbench/pareto.hpp"

#include "pfnbench/errors.hpp"

namespace pfnbench {

double auc_trapezoid(const std::vector<double>& fractions, const std::vector<double>& values) {
    if (fractions.size() != values.size()) throw DimensionError("auc_trapezoid: length mismatch");
    if (fractions.size() < 2) throw ConfigError("auc_trapezoid: need at least 2 points");
    for (std::size_t i = 1; i < fractions.size(); ++i) {
        if (fractions[i] <= fractions[i - 1]) {
            throw ConfigError("auc_trapezoid: fractions must be strictly increasing");
        }
    }
    double area = 0.0;
    for (std::size_t i = 1; i < fractions.size(); ++i) {
        area += 0.5 * (values[i] + values[i - 1]) * (fractions[i] - fractions[i - 1]);
    }
    return area / (fractions.back() - fractions.front());
}

std::vector<int> pareto_rank(const std::vector<std::pair<double, double>>& points) {
    const std::size_t n = points.size();
    if (n == 0) throw ConfigError("pareto_rank: no points");

    auto dominates = [&](std::size_t a, std::size_t b) {
        const bool no_worse =
            points[a].first >= points[b].first && points[a].second <= points[b].second;
        const bool strictly_better =
            points[a].first > points[b].first || points[a].second < points[b].second;
        return no_worse && strictly_better;
    };

    std::vector<int> ranks(n, 0);
    std::vector<bool> assigned(n, false);
    int current = 1;
    std::size_t remaining = n;
    while (remaining > 0) {
        std::vector<std::size_t> front;
        for (std::size_t i = 0; i < n; ++i) {
            if (assigned[i]) continue;
            bool dominated = false;
            for (std::size_t j = 0; j < n && !dominated; ++j) {
                if (!assigned[j] && j != i && dominates(j, i)) dominated = true;
            }
            if (!dominated) front.push_back(i);
        }
        for (std::size_t i : front) {
            ranks[i] = current;
            assigned[i] = true;
        }
        remaining -= front.size();
        ++current;
    }
    return ranks;
}

}  // namespace pfnbench
