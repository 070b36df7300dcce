#include <algorithm>
#include <numeric>

#include "pfnbench/baselines.hpp"
#include "pfnbench/errors.hpp"

namespace pfnbench {
namespace {

double gini_of_counts(const std::vector<std::size_t>& counts, std::size_t total) {
    if (total == 0) return 0.0;
    double sum_sq = 0.0;
    for (std::size_t c : counts) {
        const double p = static_cast<double>(c) / static_cast<double>(total);
        sum_sq += p * p;
    }
    return 1.0 - sum_sq;
}

int majority_class(const std::vector<std::size_t>& counts) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < counts.size(); ++c) {
        if (counts[c] > counts[best]) best = c;  // ties keep the lowest class
    }
    return static_cast<int>(best);
}

struct BestSplit {
    bool found = false;
    int feature = -1;
    double threshold = 0.0;
    double weighted_gini = 0.0;
};

struct Builder {
    const Dataset& train;
    const TreeParams& params;
    DecisionTree tree;

    int build(std::vector<std::size_t>& rows, int depth) {
        const std::size_t n = rows.size();
        std::vector<std::size_t> counts(static_cast<std::size_t>(train.n_classes), 0);
        for (std::size_t r : rows) ++counts[static_cast<std::size_t>(train.y[r])];

        TreeNode node;
        node.n_samples = n;
        node.gini = gini_of_counts(counts, n);
        node.leaf_class = majority_class(counts);

        const bool splittable = depth < params.max_depth &&
                                n >= static_cast<std::size_t>(params.min_samples_split) &&
                                node.gini > 0.0;
        BestSplit best;
        if (splittable) best = find_best_split(rows, counts);

        const int index = static_cast<int>(tree.nodes.size());
        tree.nodes.push_back(node);
        if (!splittable || !best.found) return index;

        std::vector<std::size_t> left_rows, right_rows;
        for (std::size_t r : rows) {
            (train.x(r, static_cast<std::size_t>(best.feature)) < best.threshold ? left_rows
                                                                                 : right_rows)
                .push_back(r);
        }
        rows.clear();
        rows.shrink_to_fit();
        const int left = build(left_rows, depth + 1);
        const int right = build(right_rows, depth + 1);
        tree.nodes[static_cast<std::size_t>(index)].feature = best.feature;
        tree.nodes[static_cast<std::size_t>(index)].threshold = best.threshold;
        tree.nodes[static_cast<std::size_t>(index)].left = left;
        tree.nodes[static_cast<std::size_t>(index)].right = right;
        return index;
    }

    // Scans every feature and every midpoint between consecutive distinct
    // values; the lowest (feature, threshold) wins impurity ties.
    BestSplit find_best_split(const std::vector<std::size_t>& rows,
                              const std::vector<std::size_t>& total_counts) {
        const std::size_t n = rows.size();
        const auto min_leaf = static_cast<std::size_t>(params.min_samples_leaf);
        BestSplit best;

        std::vector<std::pair<double, int>> values(n);  // (feature value, class)
        for (std::size_t j = 0; j < train.features(); ++j) {
            for (std::size_t i = 0; i < n; ++i) {
                values[i] = {train.x(rows[i], j), train.y[rows[i]]};
            }
            std::sort(values.begin(), values.end());

            std::vector<std::size_t> left_counts(static_cast<std::size_t>(train.n_classes), 0);
            std::vector<std::size_t> right_counts = total_counts;
            for (std::size_t i = 0; i + 1 < n; ++i) {
                ++left_counts[static_cast<std::size_t>(values[i].second)];
                --right_counts[static_cast<std::size_t>(values[i].second)];
                if (values[i].first == values[i + 1].first) continue;  // not a boundary
                const std::size_t n_left = i + 1;
                const std::size_t n_right = n - n_left;
                if (n_left < min_leaf || n_right < min_leaf) continue;
                const double wg =
                    (static_cast<double>(n_left) * gini_of_counts(left_counts, n_left) +
                     static_cast<double>(n_right) * gini_of_counts(right_counts, n_right)) /
                    static_cast<double>(n);
                const double threshold = 0.5 * (values[i].first + values[i + 1].first);
                if (!best.found || wg < best.weighted_gini) {
                    best = {true, static_cast<int>(j), threshold, wg};
                }
            }
        }
        return best;
    }
};

}  // namespace

DecisionTree tree_fit(const Dataset& train, const TreeParams& params) {
    if (train.rows() == 0) throw ConfigError("tree_fit: empty training set");
    if (params.max_depth < 1 || params.min_samples_split < 2 || params.min_samples_leaf < 1) {
        throw ConfigError("tree_fit: invalid parameters");
    }
    Builder builder{train, params, {}};
    builder.tree.n_classes = train.n_classes;
    std::vector<std::size_t> rows(train.rows());
    std::iota(rows.begin(), rows.end(), 0);
    builder.build(rows, 0);
    return builder.tree;
}

std::vector<int> tree_predict(const DecisionTree& tree, const Mat64& x_query) {
    if (tree.nodes.empty()) throw ConfigError("tree_predict: empty tree");
    std::vector<int> out(x_query.rows);
    for (std::size_t i = 0; i < x_query.rows; ++i) {
        const double* row = x_query.row(i);
        std::size_t node = 0;
        while (tree.nodes[node].feature >= 0) {
            const auto& nd = tree.nodes[node];
            node = static_cast<std::size_t>(row[static_cast<std::size_t>(nd.feature)] < nd.threshold
                                                ? nd.left
                                                : nd.right);
        }
        out[i] = tree.nodes[node].leaf_class;
    }
    return out;
}

}  // namespace pfnbench
