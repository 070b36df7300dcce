#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace pfnbench {

inline constexpr const char* kToolVersion = "pfnbench 0.1.0";

// Exit codes: 0 ok, 2 configuration error, 3 runtime fault, 4 numeric abort.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitRuntime = 3;
inline constexpr int kExitNumeric = 4;

// Options shared by every subcommand; command-specific settings come from
// the JSON config file, with flags taking precedence.
struct CliOptions {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out_dir = "out";
    int workers = 0;  // 0 = hardware concurrency
    double alpha = 0.05;
    double efficiency_threshold = 0.9;
    bool log_time_auc = false;
    bool verbose = false;

    // command-specific flag overrides
    std::optional<int> steps;                  // meta-train
    std::string checkpoint_path;               // bench, predict
    std::vector<std::string> problems;         // gen-data
    std::string report_path;                   // stats, report
    std::string train_csv, train_meta, query_csv;  // predict
};

int cmd_meta_train(const CliOptions& options);
int cmd_gen_data(const CliOptions& options);
int cmd_bench(const CliOptions& options);
int cmd_predict(const CliOptions& options);
int cmd_stats(const CliOptions& options);
int cmd_report(const CliOptions& options);

// Maps an in-flight exception to the documented exit code, printing the
// message to stderr.
int run_command(int (*command)(const CliOptions&), const CliOptions& options);

}  // namespace pfnbench
