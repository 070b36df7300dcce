#pragma once

#include <string>
#include <vector>

#include "pfnbench/bench.hpp"
#include "pfnbench/efficiency.hpp"
#include "pfnbench/stats.hpp"
#include "pfnbench/trainer.hpp"

namespace pfnbench {

// Report CSV column order (fixed, documented in the README):
//   dataset,method,split,fraction,n_train,f1,macro_f1,accuracy,
//   tune_seconds,train_seconds,infer_seconds,status,reason,tuned_params
void save_report(const std::vector<BenchmarkRecord>& records, const std::string& path);
std::vector<BenchmarkRecord> load_report(const std::string& path);

void save_train_log(const TrainLog& log, const std::string& path);

// ----------------------------------------------------- aggregate analysis

struct StatsOptions {
    double alpha = 0.05;
    double efficiency_threshold = 0.9;
    bool log_time_auc = false;  // AUC over log10 of total time instead of linear
    std::size_t wilcoxon_exact_limit = 12;
};

// Everything the benchmark reports beyond raw records: average ranks with
// significance groups for F1 and total time, the per-dataset data
// efficiency table and the per-dataset Pareto ranks of (F1 AUC, time AUC).
struct StatsSummary {
    std::vector<std::string> methods;
    std::vector<std::string> datasets;
    RankSummary f1_ranks;              // blocks: dataset x split x fraction
    RankSummary time_ranks;            // total seconds, lower is better
    Matrix<double> efficiency;         // datasets x methods, split-averaged eta
    std::vector<double> efficiency_avg;  // per method, averaged over datasets
    Matrix<double> pareto_avg;         // datasets x methods, split-averaged Pareto rank
    int excluded_blocks = 0;           // blocks dropped due to failed/skipped records
    StatsOptions options;
};

StatsSummary compute_stats(const std::vector<BenchmarkRecord>& records,
                           const StatsOptions& options = {});

void save_stats_summary(const StatsSummary& summary, const std::string& json_path);

// Human-readable tables (ranks + groups, efficiency, Pareto).
std::string render_stats_summary(const StatsSummary& summary);

// Mean scores per (dataset, method, fraction) in a plot-ready table.
std::string render_learning_curves(const std::vector<BenchmarkRecord>& records);

}  // namespace pfnbench
