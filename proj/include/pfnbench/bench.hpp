#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pfnbench/baselines.hpp"
#include "pfnbench/dataset.hpp"
#include "pfnbench/model.hpp"
#include "pfnbench/splits.hpp"

namespace pfnbench {

// The benchmark executor: every (dataset, split, fraction, method) cell is
// one record, executed with a seed derived from the run seed and the cell
// key, so records are independent and the sweep parallelizes without
// changing results.

enum class MethodKind { pfn, knn, tree };

struct MethodSpec {
    MethodKind kind;
    std::string name;
};

MethodSpec method_from_name(const std::string& name);  // "pfn" | "knn" | "dt"

struct BenchmarkRecord {
    std::string dataset;
    std::string method;
    int split_id = 0;
    double fraction = 1.0;
    std::size_t n_train_used = 0;
    double f1 = 0.0;        // binary F1 (positive class 1) or macro for multi-class
    double macro_f1 = 0.0;
    double accuracy = 0.0;
    double tune_seconds = 0.0;
    double train_seconds = 0.0;  // includes preprocessing, per the protocol
    double infer_seconds = 0.0;
    std::string status = "ok";   // ok | skipped | failed
    std::string reason;
    std::string tuned_params;

    double total_seconds() const { return tune_seconds + train_seconds + infer_seconds; }
};

struct BenchConfig {
    int n_reps = 5;
    std::uint64_t seed = 0;
    int workers = 1;  // 0 = hardware concurrency
    TuneBudget tune_budget;

    void validate() const;
};

std::uint64_t record_seed(std::uint64_t run_seed, const std::string& dataset, int split_id,
                          double fraction, const std::string& method);

// Executes one cell. Exposed so tests can drive the exact code path with
// instrumented inputs (leakage checks, determinism).
BenchmarkRecord execute_record(const Dataset& ds, const SplitData& split, int split_id,
                               double fraction, const MethodSpec& method, const BenchConfig& cfg,
                               const Checkpoint* ckpt);

// Full sweep; records come back sorted by (dataset, method, split,
// fraction). ckpt may be null when no PFN method is requested.
std::vector<BenchmarkRecord> run_benchmark(const std::vector<Dataset>& datasets,
                                           const std::vector<MethodSpec>& methods,
                                           const BenchConfig& cfg, const Checkpoint* ckpt);

// In-context prediction over a preprocessed context; queries are chunked to
// the model's query capacity (queries never attend to each other, so
// chunking is exact). Returns labels in the contiguous space.
std::vector<int> pfn_predict_chunked(const Checkpoint& ckpt, const Mat64& x_train,
                                     const std::vector<int>& y_train, const Mat64& x_query);

}  // namespace pfnbench
