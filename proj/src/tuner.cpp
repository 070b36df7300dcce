#include <algorithm>
#include <chrono>
#include <numeric>

#include "pfnbench/baselines.hpp"
#include "pfnbench/errors.hpp"
#include "pfnbench/metrics.hpp"

namespace pfnbench {

std::vector<int> make_folds(const std::vector<int>& y, int n_classes, int folds, Rng& rng,
                            bool* unstratified) {
    const std::size_t n = y.size();
    std::vector<int> fold_of_row(n, -1);

    std::vector<std::size_t> class_counts(static_cast<std::size_t>(n_classes), 0);
    for (int label : y) ++class_counts[static_cast<std::size_t>(label)];
    const bool stratify =
        std::all_of(class_counts.begin(), class_counts.end(),
                    [&](std::size_t c) { return c == 0 || c >= static_cast<std::size_t>(folds); });
    if (unstratified) *unstratified = !stratify;

    if (stratify) {
        for (int c = 0; c < n_classes; ++c) {
            std::vector<std::size_t> members;
            for (std::size_t i = 0; i < n; ++i) {
                if (y[i] == c) members.push_back(i);
            }
            rng.shuffle(members);
            for (std::size_t i = 0; i < members.size(); ++i) {
                fold_of_row[members[i]] = static_cast<int>(i % static_cast<std::size_t>(folds));
            }
        }
    } else {
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), 0);
        rng.shuffle(order);
        for (std::size_t i = 0; i < n; ++i) {
            fold_of_row[order[i]] = static_cast<int>(i % static_cast<std::size_t>(folds));
        }
    }
    return fold_of_row;
}

namespace {

Dataset subset(const Dataset& ds, const std::vector<std::size_t>& rows) {
    Dataset out;
    out.name = ds.name;
    out.n_classes = ds.n_classes;
    out.discrete_cols = ds.discrete_cols;
    out.x = Mat64(rows.size(), ds.features());
    out.y.resize(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        std::copy(ds.x.row(rows[i]), ds.x.row(rows[i]) + ds.features(), out.x.row(i));
        out.y[i] = ds.y[rows[i]];
    }
    return out;
}

double cv_accuracy(BaselineFamily family, const Dataset& train, const KnnParams& kp,
                   const TreeParams& tp, const std::vector<int>& fold_of_row, int folds) {
    double acc_sum = 0.0;
    int used_folds = 0;
    for (int f = 0; f < folds; ++f) {
        std::vector<std::size_t> fit_rows, val_rows;
        for (std::size_t i = 0; i < train.rows(); ++i) {
            (fold_of_row[i] == f ? val_rows : fit_rows).push_back(i);
        }
        if (val_rows.empty() || fit_rows.empty()) continue;
        const Dataset fit = subset(train, fit_rows);
        const Dataset val = subset(train, val_rows);
        std::vector<int> pred;
        if (family == BaselineFamily::knn) {
            KnnParams clamped = kp;
            clamped.k = std::min<int>(clamped.k, static_cast<int>(fit.rows()));
            pred = knn_predict(fit, val.x, clamped);
        } else {
            pred = tree_predict(tree_fit(fit, tp), val.x);
        }
        acc_sum += accuracy(val.y, pred);
        ++used_folds;
    }
    if (used_folds == 0) throw ConfigError("tune: no usable folds");
    return acc_sum / used_folds;
}

}  // namespace

TuneResult tune(BaselineFamily family, const Dataset& train, const TuneBudget& budget, Rng& rng) {
    if (budget.folds < 2) throw ConfigError("tune: folds must be >= 2");
    if (budget.max_configs < 1) throw ConfigError("tune: max_configs must be >= 1");
    if (train.rows() < static_cast<std::size_t>(budget.folds)) {
        throw ConfigError("tune: need at least as many rows as folds");
    }
    const auto t0 = std::chrono::steady_clock::now();

    TuneResult result;
    result.family = family;
    result.fold_of_row =
        make_folds(train.y, train.n_classes, budget.folds, rng, &result.unstratified_fallback);

    const int k_max = std::min<int>(50, static_cast<int>(train.rows()));
    bool have_best = false;
    for (int cfg = 0; cfg < budget.max_configs; ++cfg) {
        KnnParams kp;
        TreeParams tp;
        if (family == BaselineFamily::knn) {
            kp.k = static_cast<int>(rng.uniform_int(1, k_max));
        } else {
            tp.max_depth = static_cast<int>(rng.uniform_int(1, 20));
            tp.min_samples_split = static_cast<int>(rng.uniform_int(2, 20));
            tp.min_samples_leaf = static_cast<int>(rng.uniform_int(1, 10));
        }
        const double score =
            cv_accuracy(family, train, kp, tp, result.fold_of_row, budget.folds);
        ++result.configs_evaluated;
        if (!have_best || score > result.cv_accuracy) {  // first-found wins ties
            have_best = true;
            result.cv_accuracy = score;
            result.knn = kp;
            result.tree = tp;
        }
    }
    result.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return result;
}

}  // namespace pfnbench
