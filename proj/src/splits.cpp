#include "pfnbench/splits.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "pfnbench/errors.hpp"
#include "pfnbench/rng.hpp"

namespace pfnbench {

std::size_t SplitPlan::n_test(std::size_t n_rows) const {
    if (uses_fixed_test) return 0;
    return static_cast<std::size_t>(std::floor(test_fraction * static_cast<double>(n_rows)));
}

namespace {

bool guard_ok(const Dataset& ds, const std::vector<std::size_t>& permutation,
              std::size_t train_begin, int guard_min, int guard_window) {
    int found = 0;
    const std::size_t end =
        std::min(permutation.size(), train_begin + static_cast<std::size_t>(guard_window));
    for (std::size_t i = train_begin; i < end; ++i) {
        if (ds.y[permutation[i]] == ds.guard_class) ++found;
    }
    return found >= guard_min;
}

}  // namespace

std::vector<SplitPlan> make_splits(const Dataset& ds, int n_reps, std::uint64_t seed) {
    if (n_reps < 1) throw ConfigError("make_splits: n_reps must be >= 1");
    ds.validate();

    std::vector<SplitPlan> plans;
    plans.reserve(static_cast<std::size_t>(n_reps));
    for (int rep = 0; rep < n_reps; ++rep) {
        Rng rng(hash_combine(hash_combine(hash_combine(0xCBF29CE484222325ULL, seed),
                                          std::string_view(ds.name)),
                             static_cast<std::uint64_t>(rep)));
        SplitPlan plan;
        plan.uses_fixed_test = ds.fixed_test != nullptr;
        plan.guard_applied = ds.imbalance_guard;

        std::vector<std::size_t> perm(ds.rows());
        std::iota(perm.begin(), perm.end(), 0);

        // Test rows are the first 20% of the permutation; the guard scans
        // the first guard_window rows of the remaining training block.
        const std::size_t train_begin = plan.uses_fixed_test ? 0 : plan.n_test(ds.rows());
        bool ok = false;
        for (int attempt = 0; attempt < 1000; ++attempt) {
            rng.shuffle(perm);
            if (!ds.imbalance_guard ||
                guard_ok(ds, perm, train_begin, plan.guard_min, plan.guard_window)) {
                ok = true;
                break;
            }
        }
        if (!ok) {
            throw ConfigError("make_splits: imbalance guard unsatisfiable for dataset '" + ds.name +
                              "' (class " + std::to_string(ds.guard_class) + ")");
        }
        plan.permutation = std::move(perm);
        plans.push_back(std::move(plan));
    }
    return plans;
}

SplitData apply_split(const Dataset& ds, const SplitPlan& plan) {
    if (plan.permutation.size() != ds.rows()) {
        throw DimensionError("apply_split: permutation size mismatch");
    }
    SplitData out;
    const std::size_t d = ds.features();
    if (plan.uses_fixed_test) {
        if (!ds.fixed_test) throw ConfigError("apply_split: plan expects a fixed test set");
        out.x_test = ds.fixed_test->x;
        out.y_test = ds.fixed_test->y;
        out.x_train = Mat64(ds.rows(), d);
        out.y_train.resize(ds.rows());
        for (std::size_t i = 0; i < ds.rows(); ++i) {
            std::copy(ds.x.row(plan.permutation[i]), ds.x.row(plan.permutation[i]) + d,
                      out.x_train.row(i));
            out.y_train[i] = ds.y[plan.permutation[i]];
        }
        return out;
    }

    const std::size_t n_test = plan.n_test(ds.rows());
    const std::size_t n_train = ds.rows() - n_test;
    if (n_train == 0 || n_test == 0) {
        throw ConfigError("apply_split: dataset '" + ds.name + "' too small to split");
    }
    out.x_test = Mat64(n_test, d);
    out.y_test.resize(n_test);
    out.x_train = Mat64(n_train, d);
    out.y_train.resize(n_train);
    for (std::size_t i = 0; i < n_test; ++i) {
        std::copy(ds.x.row(plan.permutation[i]), ds.x.row(plan.permutation[i]) + d,
                  out.x_test.row(i));
        out.y_test[i] = ds.y[plan.permutation[i]];
    }
    for (std::size_t i = 0; i < n_train; ++i) {
        const std::size_t src = plan.permutation[n_test + i];
        std::copy(ds.x.row(src), ds.x.row(src) + d, out.x_train.row(i));
        out.y_train[i] = ds.y[src];
    }
    return out;
}

std::vector<double> fraction_schedule() {
    return {0.05, 0.10, 0.20, 0.30, 0.40, 0.50, 0.60, 0.70, 0.80, 0.90, 1.00};
}

std::size_t prefix_rows(double fraction, std::size_t n_train, int n_classes) {
    if (fraction <= 0.0 || fraction > 1.0) throw ConfigError("prefix_rows: bad fraction");
    auto rows = static_cast<std::size_t>(
        std::ceil(fraction * static_cast<double>(n_train) - 1e-12));
    const auto floor_rows = static_cast<std::size_t>(std::max(2, n_classes));
    rows = std::max(rows, floor_rows);
    return std::min(rows, n_train);
}

ScalerParams fit_scaler(const Mat64& x_train) {
    if (x_train.rows == 0) throw ConfigError("fit_scaler: empty training matrix");
    ScalerParams s;
    s.mean.assign(x_train.cols, 0.0);
    s.std.assign(x_train.cols, 1.0);
    for (std::size_t j = 0; j < x_train.cols; ++j) {
        double mean = 0.0;
        for (std::size_t i = 0; i < x_train.rows; ++i) mean += x_train(i, j);
        mean /= static_cast<double>(x_train.rows);
        double var = 0.0;
        for (std::size_t i = 0; i < x_train.rows; ++i) {
            const double d = x_train(i, j) - mean;
            var += d * d;
        }
        var /= static_cast<double>(x_train.rows);
        s.mean[j] = mean;
        s.std[j] = var > 0.0 ? std::sqrt(var) : 1.0;  // constant feature: sigma := 1
    }
    return s;
}

Mat64 apply_scaler(const ScalerParams& scaler, const Mat64& x) {
    if (scaler.mean.size() != x.cols) throw DimensionError("apply_scaler: width mismatch");
    Mat64 out(x.rows, x.cols);
    for (std::size_t i = 0; i < x.rows; ++i) {
        for (std::size_t j = 0; j < x.cols; ++j) {
            out(i, j) = (x(i, j) - scaler.mean[j]) / scaler.std[j];
        }
    }
    return out;
}

int LabelMap::remap(int original) const {
    if (original < 0 || static_cast<std::size_t>(original) >= to_contiguous.size() ||
        to_contiguous[static_cast<std::size_t>(original)] < 0) {
        throw IndexError("LabelMap: label " + std::to_string(original) + " absent from train");
    }
    return to_contiguous[static_cast<std::size_t>(original)];
}

int LabelMap::restore(int contiguous) const {
    if (contiguous < 0 || static_cast<std::size_t>(contiguous) >= to_original.size()) {
        throw IndexError("LabelMap: contiguous label " + std::to_string(contiguous) +
                         " out of range");
    }
    return to_original[static_cast<std::size_t>(contiguous)];
}

LabelMap fit_label_map(const std::vector<int>& y_train, int n_classes) {
    std::vector<bool> present(static_cast<std::size_t>(n_classes), false);
    for (int y : y_train) {
        if (y < 0 || y >= n_classes) {
            throw IndexError("fit_label_map: label " + std::to_string(y) + " out of range");
        }
        present[static_cast<std::size_t>(y)] = true;
    }
    LabelMap map;
    map.to_contiguous.assign(static_cast<std::size_t>(n_classes), -1);
    for (int c = 0; c < n_classes; ++c) {
        if (present[static_cast<std::size_t>(c)]) {
            map.to_contiguous[static_cast<std::size_t>(c)] = static_cast<int>(map.to_original.size());
            map.to_original.push_back(c);
        }
    }
    return map;
}

Preprocessed preprocess(const Mat64& x_train, const std::vector<int>& y_train, const Mat64& x_test,
                        int n_classes) {
    if (x_train.rows == 0) throw ConfigError("preprocess: empty training set");
    if (y_train.size() != x_train.rows) throw DimensionError("preprocess: label count mismatch");
    Preprocessed out;
    out.scaler = fit_scaler(x_train);
    out.x_train = apply_scaler(out.scaler, x_train);
    out.x_test = apply_scaler(out.scaler, x_test);
    out.labels = fit_label_map(y_train, n_classes);
    out.y_train.resize(y_train.size());
    for (std::size_t i = 0; i < y_train.size(); ++i) out.y_train[i] = out.labels.remap(y_train[i]);
    return out;
}

}  // namespace pfnbench
