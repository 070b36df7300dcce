#pragma once

#include <cstdint>
#include <vector>

#include "pfnbench/dataset.hpp"
#include "pfnbench/rng.hpp"

namespace pfnbench {

// Classical comparison methods. Both are exact (no approximation) and all
// tie-breaks are deterministic so reruns reproduce predictions bit-for-bit.

struct KnnParams {
    int k = 5;
};

// Euclidean k-nearest neighbors, majority vote. Distance ties go to the
// lower row index, vote ties to the lower class index.
std::vector<int> knn_predict(const Dataset& train, const Mat64& x_query, const KnnParams& params);

struct TreeParams {
    int max_depth = 10;
    int min_samples_split = 2;
    int min_samples_leaf = 1;
};

struct TreeNode {
    int feature = -1;      // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    int leaf_class = 0;
    double gini = 0.0;
    std::size_t n_samples = 0;
};

struct DecisionTree {
    std::vector<TreeNode> nodes;  // node 0 is the root
    int n_classes = 0;
};

// Greedy CART on Gini impurity. Splits test x[feature] < threshold with
// thresholds at midpoints of consecutive distinct values; ties prefer the
// lowest feature index, then the lowest threshold.
DecisionTree tree_fit(const Dataset& train, const TreeParams& params);
std::vector<int> tree_predict(const DecisionTree& tree, const Mat64& x_query);

// ------------------------------------------------------------------ tuning

enum class BaselineFamily { knn, tree };

struct TuneBudget {
    int folds = 5;
    int max_configs = 100;
    std::uint64_t seed = 0;
};

struct TuneResult {
    BaselineFamily family = BaselineFamily::knn;
    KnnParams knn;
    TreeParams tree;
    double cv_accuracy = 0.0;
    bool unstratified_fallback = false;  // some class had fewer members than folds
    std::vector<int> fold_of_row;        // fold audit: the exact CV partition
    int configs_evaluated = 0;
    double seconds = 0.0;
};

// Random search over documented ranges (k in [1, min(50, n_train)]; depth
// in [1,20], min-split in [2,20], min-leaf in [1,10]), scored by mean
// cross-validation accuracy on stratified folds. The first configuration
// reaching the best score wins ties.
TuneResult tune(BaselineFamily family, const Dataset& train, const TuneBudget& budget, Rng& rng);

// Stratified fold assignment (round-robin per class in seeded random
// order); falls back to unstratified when any class has < folds members.
std::vector<int> make_folds(const std::vector<int>& y, int n_classes, int folds, Rng& rng,
                            bool* unstratified);

}  // namespace pfnbench
