#include <CLI11.hpp>

#include "pfnbench/commands.hpp"

using namespace pfnbench;

int main(int argc, char** argv) {
    CLI::App app{"Meta-trained in-context tabular classifier and benchmark harness"};
    app.require_subcommand(1);

    CliOptions options;
    std::uint64_t seed_value = 0;
    bool seed_given = false;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", options.config_path, "JSON config file");
        cmd->add_option("--seed", seed_value, "global seed")->each([&](const std::string&) {
            seed_given = true;
        });
        cmd->add_option("--out", options.out_dir, "output directory");
        cmd->add_option("--workers", options.workers, "worker threads (0 = hardware)");
        cmd->add_option("--alpha", options.alpha, "significance threshold");
        cmd->add_option("--efficiency-threshold", options.efficiency_threshold,
                        "data-efficiency threshold ratio");
        cmd->add_flag("--log-time-auc", options.log_time_auc, "AUC over log10 total time");
        cmd->add_flag("-v,--verbose", options.verbose, "progress output");
    };

    auto* train = app.add_subcommand("meta-train", "train a checkpoint on the synthetic prior");
    add_common(train);
    int steps_value = 0;
    bool steps_given = false;
    train->add_option("--steps", steps_value, "override training steps")
        ->each([&](const std::string&) { steps_given = true; });

    auto* gen = app.add_subcommand("gen-data", "write built-in toy datasets as CSV");
    add_common(gen);
    gen->add_option("--problem", options.problems, "built-in problem name (repeatable)");

    auto* bench = app.add_subcommand("bench", "run the benchmark protocol");
    add_common(bench);
    bench->add_option("--checkpoint", options.checkpoint_path, "PFN checkpoint file");

    auto* predict = app.add_subcommand("predict", "in-context prediction from CSV files");
    add_common(predict);
    predict->add_option("--checkpoint", options.checkpoint_path, "PFN checkpoint file");
    predict->add_option("--train-csv", options.train_csv, "context rows (labeled CSV)");
    predict->add_option("--train-meta", options.train_meta, "dataset metadata JSON");
    predict->add_option("--query-csv", options.query_csv, "rows to classify");

    auto* stats = app.add_subcommand("stats", "recompute statistics from a report CSV");
    add_common(stats);
    stats->add_option("--report", options.report_path, "report.csv from a bench run");

    auto* report = app.add_subcommand("report", "render human-readable tables from a report CSV");
    add_common(report);
    report->add_option("--report", options.report_path, "report.csv from a bench run");

    CLI11_PARSE(app, argc, argv);
    if (seed_given) options.seed = seed_value;
    if (steps_given) options.steps = steps_value;

    if (train->parsed()) return run_command(cmd_meta_train, options);
    if (gen->parsed()) return run_command(cmd_gen_data, options);
    if (bench->parsed()) return run_command(cmd_bench, options);
    if (predict->parsed()) return run_command(cmd_predict, options);
    if (stats->parsed()) return run_command(cmd_stats, options);
    if (report->parsed()) return run_command(cmd_report, options);
    return kExitConfig;
}
