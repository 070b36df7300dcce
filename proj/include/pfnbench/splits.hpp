#pragma once

#include <cstdint>
#include <vector>

#include "pfnbench/dataset.hpp"

namespace pfnbench {

// Data handling for the benchmark protocol: repeated permutations with an
// imbalance guard, 80/20 splitting, nested training fractions, and
// train-fitted standard scaling.

struct SplitPlan {
    std::vector<std::size_t> permutation;  // row order; for fixed-test datasets, train rows only
    double test_fraction = 0.2;
    bool uses_fixed_test = false;
    int guard_min = 2;       // required guard-class rows ...
    int guard_window = 100;  // ... within this prefix of the train rows
    bool guard_applied = false;

    std::size_t n_test(std::size_t n_rows) const;
};

// n_reps independent permutations of the dataset. Guarded datasets redraw a
// permutation until the guard class appears at least guard_min times within
// the first guard_window train rows (<= 1000 attempts per plan).
std::vector<SplitPlan> make_splits(const Dataset& ds, int n_reps, std::uint64_t seed);

// Materialized train/test views of one plan.
struct SplitData {
    Mat64 x_train;
    std::vector<int> y_train;
    Mat64 x_test;
    std::vector<int> y_test;
};
SplitData apply_split(const Dataset& ds, const SplitPlan& plan);

// The benchmark's training-set fraction schedule, smallest first.
std::vector<double> fraction_schedule();

// Rows used for a fraction: ceil(f * n_train) with a floor of
// max(2, n_classes), clamped to n_train. Fractions nest by construction.
std::size_t prefix_rows(double fraction, std::size_t n_train, int n_classes);

// ----------------------------------------------------------- preprocessing

struct ScalerParams {
    std::vector<double> mean;
    std::vector<double> std;  // 1 where the train column is constant
};

ScalerParams fit_scaler(const Mat64& x_train);
Mat64 apply_scaler(const ScalerParams& scaler, const Mat64& x);

// Contiguous label remapping fitted on train labels only.
struct LabelMap {
    std::vector<int> to_contiguous;    // original -> contiguous (-1 if absent from train)
    std::vector<int> to_original;      // contiguous -> original

    int n_active() const { return static_cast<int>(to_original.size()); }
    int remap(int original) const;
    int restore(int contiguous) const;
};
LabelMap fit_label_map(const std::vector<int>& y_train, int n_classes);

struct Preprocessed {
    Mat64 x_train;
    std::vector<int> y_train;  // contiguous labels
    Mat64 x_test;
    ScalerParams scaler;
    LabelMap labels;
};

// Scaler and label map are fitted on train only and applied to both sides.
Preprocessed preprocess(const Mat64& x_train, const std::vector<int>& y_train, const Mat64& x_test,
                        int n_classes);

}  // namespace pfnbench
