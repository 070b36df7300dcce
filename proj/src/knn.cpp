#include <algorithm>
#include <string>

#include "pfnbench/baselines.hpp"
#include "pfnbench/errors.hpp"

namespace pfnbench {

std::vector<int> knn_predict(const Dataset& train, const Mat64& x_query, const KnnParams& params) {
    const std::size_t n = train.rows();
    if (n == 0) throw ConfigError("knn_predict: empty training set");
    if (params.k < 1 || static_cast<std::size_t>(params.k) > n) {
        throw ConfigError("knn_predict: k=" + std::to_string(params.k) + " outside [1, " +
                          std::to_string(n) + "]");
    }
    if (x_query.cols != train.features()) {
        throw DimensionError("knn_predict: query feature width mismatch");
    }
    const auto k = static_cast<std::size_t>(params.k);

    std::vector<int> out(x_query.rows);
    std::vector<std::pair<double, std::size_t>> dist(n);
    for (std::size_t qi = 0; qi < x_query.rows; ++qi) {
        const double* q = x_query.row(qi);
        for (std::size_t i = 0; i < n; ++i) {
            const double* t = train.x.row(i);
            double d2 = 0.0;
            for (std::size_t j = 0; j < x_query.cols; ++j) {
                const double d = q[j] - t[j];
                d2 += d * d;
            }
            dist[i] = {d2, i};
        }
        // distance ties resolve to the lower row index via the pair ordering
        std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());

        std::vector<int> votes(static_cast<std::size_t>(train.n_classes), 0);
        for (std::size_t i = 0; i < k; ++i) ++votes[static_cast<std::size_t>(train.y[dist[i].second])];
        int best = 0;
        for (int c = 1; c < train.n_classes; ++c) {
            if (votes[static_cast<std::size_t>(c)] > votes[static_cast<std::size_t>(best)]) best = c;
        }
        out[qi] = best;
    }
    return out;
}

}  // namespace pfnbench
