#include "pfnbench/commands.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>

#include <json.hpp>

#include "pfnbench/bench.hpp"
#include "pfnbench/checkpoint_io.hpp"
#include "pfnbench/errors.hpp"
#include "pfnbench/problems.hpp"
#include "pfnbench/report_io.hpp"
#include "pfnbench/trainer.hpp"

namespace pfnbench {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

json load_config(const std::string& path) {
    if (path.empty()) return json::object();
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open config file " + path);
    try {
        json j;
        f >> j;
        return j;
    } catch (const json::exception& e) {
        throw ParseError(path + ": " + e.what());
    }
}

template <typename T>
void maybe_set(const json& j, const char* key, T& target) {
    if (j.contains(key)) target = j.at(key).get<T>();
}

ModelConfig model_from_json(const json& j) {
    ModelConfig cfg;
    maybe_set(j, "d_model", cfg.d_model);
    maybe_set(j, "n_layers", cfg.n_layers);
    maybe_set(j, "n_heads", cfg.n_heads);
    maybe_set(j, "d_ff", cfg.d_ff);
    maybe_set(j, "max_features", cfg.max_features);
    maybe_set(j, "max_classes", cfg.max_classes);
    maybe_set(j, "max_train_tokens", cfg.max_train_tokens);
    maybe_set(j, "max_query_tokens", cfg.max_query_tokens);
    cfg.validate();
    return cfg;
}

json model_to_json(const ModelConfig& cfg) {
    return {{"d_model", cfg.d_model},
            {"n_layers", cfg.n_layers},
            {"n_heads", cfg.n_heads},
            {"d_ff", cfg.d_ff},
            {"max_features", cfg.max_features},
            {"max_classes", cfg.max_classes},
            {"max_train_tokens", cfg.max_train_tokens},
            {"max_query_tokens", cfg.max_query_tokens}};
}

PriorConfig prior_from_json(const json& j) {
    PriorConfig cfg;
    const std::string preset = j.value("preset", "default");
    if (preset == "default") cfg = default_prior();
    else if (preset == "linear") cfg = linear_prior();
    else throw ConfigError("unknown prior preset '" + preset + "' (default | linear)");
    maybe_set(j, "min_features", cfg.min_features);
    maybe_set(j, "max_features", cfg.max_features);
    maybe_set(j, "min_classes", cfg.min_classes);
    maybe_set(j, "max_classes", cfg.max_classes);
    maybe_set(j, "min_rows", cfg.min_rows);
    maybe_set(j, "max_rows", cfg.max_rows);
    maybe_set(j, "min_depth", cfg.min_depth);
    maybe_set(j, "max_depth", cfg.max_depth);
    maybe_set(j, "min_width", cfg.min_width);
    maybe_set(j, "max_width", cfg.max_width);
    maybe_set(j, "min_label_noise", cfg.min_label_noise);
    maybe_set(j, "max_label_noise", cfg.max_label_noise);
    maybe_set(j, "gaussian_weight", cfg.gaussian_weight);
    maybe_set(j, "quantize_prob", cfg.quantize_prob);
    maybe_set(j, "seed", cfg.seed);
    return cfg;
}

json prior_to_json(const PriorConfig& cfg) {
    return {{"min_features", cfg.min_features}, {"max_features", cfg.max_features},
            {"min_classes", cfg.min_classes},   {"max_classes", cfg.max_classes},
            {"min_rows", cfg.min_rows},         {"max_rows", cfg.max_rows},
            {"min_depth", cfg.min_depth},       {"max_depth", cfg.max_depth},
            {"min_width", cfg.min_width},       {"max_width", cfg.max_width},
            {"min_label_noise", cfg.min_label_noise},
            {"max_label_noise", cfg.max_label_noise},
            {"gaussian_weight", cfg.gaussian_weight},
            {"quantize_prob", cfg.quantize_prob},
            {"seed", cfg.seed}};
}

TrainConfig train_from_json(const json& j) {
    TrainConfig cfg;
    maybe_set(j, "steps", cfg.steps);
    maybe_set(j, "batch_tasks", cfg.batch_tasks);
    maybe_set(j, "cut_min", cfg.cut_min);
    maybe_set(j, "cut_max", cfg.cut_max);
    maybe_set(j, "lr", cfg.lr);
    maybe_set(j, "warmup_steps", cfg.warmup_steps);
    maybe_set(j, "checkpoint_interval", cfg.checkpoint_interval);
    maybe_set(j, "log_interval", cfg.log_interval);
    maybe_set(j, "holdout_tasks", cfg.holdout_tasks);
    maybe_set(j, "workers", cfg.workers);
    maybe_set(j, "seed", cfg.seed);
    return cfg;
}

json train_to_json(const TrainConfig& cfg) {
    return {{"steps", cfg.steps},
            {"batch_tasks", cfg.batch_tasks},
            {"cut_min", cfg.cut_min},
            {"cut_max", cfg.cut_max},
            {"lr", cfg.lr},
            {"warmup_steps", cfg.warmup_steps},
            {"checkpoint_interval", cfg.checkpoint_interval},
            {"log_interval", cfg.log_interval},
            {"holdout_tasks", cfg.holdout_tasks},
            {"workers", cfg.workers},
            {"seed", cfg.seed}};
}

void write_manifest(const std::string& out_dir, const std::string& command,
                    const json& resolved_config) {
    json manifest;
    manifest["tool"] = kToolVersion;
    manifest["command"] = command;
    manifest["config"] = resolved_config;
    std::ofstream f(fs::path(out_dir) / "manifest.json", std::ios::trunc);
    if (!f) throw IoError("cannot write manifest in " + out_dir);
    f << manifest.dump(2) << "\n";
}

void ensure_out_dir(const std::string& out_dir) {
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create output directory " + out_dir);
}

Dataset resolve_dataset(const json& entry, std::uint64_t seed) {
    if (entry.is_string()) {
        const std::string name = entry.get<std::string>();
        const auto sizes = builtin_problem_sizes(name);
        return generate_problem(builtin_problem(name), sizes.n_train, sizes.n_test, seed);
    }
    if (entry.is_object() && entry.contains("csv") && entry.contains("meta")) {
        return load_csv_dataset(entry.at("csv").get<std::string>(),
                                entry.at("meta").get<std::string>());
    }
    throw ConfigError("bench dataset entries must be builtin names or {csv, meta} objects");
}

}  // namespace

int cmd_meta_train(const CliOptions& options) {
    const json config = load_config(options.config_path);
    ModelConfig model = model_from_json(config.value("model", json::object()));
    TrainConfig train = train_from_json(config.value("train", json::object()));
    PriorConfig prior = prior_from_json(config.value("prior", json::object()));
    if (options.steps) train.steps = *options.steps;
    if (options.seed) {
        train.seed = *options.seed;
        prior.seed = hash_combine(*options.seed, std::string_view("prior"));
    }
    if (options.workers != 0) train.workers = options.workers;
    if (train.checkpoint_interval == 0) train.checkpoint_interval = std::max(1, train.steps / 4);

    ensure_out_dir(options.out_dir);
    json resolved;
    resolved["model"] = model_to_json(model);
    resolved["train"] = train_to_json(train);
    resolved["prior"] = prior_to_json(prior);
    write_manifest(options.out_dir, "meta-train", resolved);

    TrainResult result = meta_train(model, train, prior, options.out_dir, options.verbose);

    const auto ckpt_path = fs::path(options.out_dir) / "checkpoint.pfn";
    save_checkpoint(result.checkpoint, ckpt_path.string());
    save_train_log(result.log, (fs::path(options.out_dir) / "train_log.csv").string());

    std::cout << "checkpoint: " << ckpt_path.string() << "\n";
    std::cout << "digest: " << std::hex << checkpoint_digest(result.checkpoint) << std::dec << "\n";
    if (!result.log.entries.empty()) {
        const auto& last = result.log.entries.back();
        std::cout << "final loss " << last.loss << ", holdout accuracy " << last.holdout_acc
                  << "\n";
    }
    return kExitOk;
}

int cmd_gen_data(const CliOptions& options) {
    const json config = load_config(options.config_path);
    std::vector<std::string> problems = options.problems;
    if (problems.empty() && config.contains("gen_data")) {
        problems = config["gen_data"].value("problems", std::vector<std::string>{});
    }
    if (problems.empty()) problems = builtin_problem_names();
    const std::uint64_t seed = options.seed.value_or(0);

    ensure_out_dir(options.out_dir);
    json resolved;
    resolved["problems"] = problems;
    resolved["seed"] = seed;
    write_manifest(options.out_dir, "gen-data", resolved);

    for (const auto& name : problems) {
        auto sizes = builtin_problem_sizes(name);
        if (config.contains("gen_data")) {
            const auto& g = config["gen_data"];
            sizes.n_train = g.value("n_train", sizes.n_train);
            sizes.n_test = g.value("n_test", sizes.n_test);
        }
        const Dataset ds = generate_problem(builtin_problem(name), sizes.n_train, sizes.n_test, seed);
        const auto base = fs::path(options.out_dir) / name;
        save_csv_dataset(ds, base.string() + ".csv", base.string() + ".meta.json",
                         base.string() + "_test.csv");
        std::cout << name << ": " << ds.rows() << " train rows, "
                  << (ds.fixed_test ? ds.fixed_test->rows() : 0) << " test rows";
        if (!ds.note.empty()) std::cout << " (" << ds.note << ")";
        std::cout << "\n";
    }
    return kExitOk;
}

int cmd_bench(const CliOptions& options) {
    const json config = load_config(options.config_path);
    const json bench_cfg = config.value("bench", json::object());

    std::vector<std::string> method_names =
        bench_cfg.value("methods", std::vector<std::string>{"pfn", "knn", "dt"});
    std::vector<MethodSpec> methods;
    methods.reserve(method_names.size());
    for (const auto& m : method_names) methods.push_back(method_from_name(m));

    BenchConfig cfg;
    cfg.n_reps = bench_cfg.value("n_reps", 5);
    cfg.seed = options.seed.value_or(bench_cfg.value("seed", 0));
    cfg.workers = options.workers != 0 ? options.workers : bench_cfg.value("workers", 0);
    cfg.tune_budget.folds = bench_cfg.value("folds", 5);
    cfg.tune_budget.max_configs = bench_cfg.value("max_configs", 100);

    // the checkpoint must resolve before any dataset work starts
    std::string ckpt_path = options.checkpoint_path;
    if (ckpt_path.empty()) ckpt_path = bench_cfg.value("checkpoint", "");
    const bool wants_pfn = std::any_of(methods.begin(), methods.end(), [](const MethodSpec& m) {
        return m.kind == MethodKind::pfn;
    });
    std::optional<Checkpoint> ckpt;
    if (wants_pfn) {
        if (ckpt_path.empty()) {
            throw ConfigError("bench: the pfn method needs --checkpoint (or bench.checkpoint)");
        }
        ckpt = load_checkpoint(ckpt_path);
    }

    json dataset_entries = bench_cfg.value("datasets", json::array());
    if (dataset_entries.empty()) {
        for (const auto& name : builtin_problem_names()) dataset_entries.push_back(name);
    }
    std::vector<Dataset> datasets;
    datasets.reserve(dataset_entries.size());
    for (const auto& entry : dataset_entries) datasets.push_back(resolve_dataset(entry, cfg.seed));

    ensure_out_dir(options.out_dir);
    json resolved;
    resolved["methods"] = method_names;
    resolved["datasets"] = dataset_entries;
    resolved["n_reps"] = cfg.n_reps;
    resolved["seed"] = cfg.seed;
    resolved["folds"] = cfg.tune_budget.folds;
    resolved["max_configs"] = cfg.tune_budget.max_configs;
    resolved["checkpoint"] = ckpt_path;
    resolved["alpha"] = options.alpha;
    resolved["efficiency_threshold"] = options.efficiency_threshold;
    resolved["log_time_auc"] = options.log_time_auc;
    write_manifest(options.out_dir, "bench", resolved);

    const auto records =
        run_benchmark(datasets, methods, cfg, ckpt ? &ckpt.value() : nullptr);
    save_report(records, (fs::path(options.out_dir) / "report.csv").string());

    StatsOptions stats_options;
    stats_options.alpha = options.alpha;
    stats_options.efficiency_threshold = options.efficiency_threshold;
    stats_options.log_time_auc = options.log_time_auc;
    const StatsSummary summary = compute_stats(records, stats_options);
    save_stats_summary(summary, (fs::path(options.out_dir) / "stats.json").string());

    const std::string rendered = render_stats_summary(summary);
    std::ofstream txt(fs::path(options.out_dir) / "summary.txt", std::ios::trunc);
    txt << rendered;
    std::ofstream curves(fs::path(options.out_dir) / "learning_curves.csv", std::ios::trunc);
    curves << render_learning_curves(records);

    std::cout << rendered;
    std::cout << "records: " << records.size() << "\n";
    return kExitOk;
}

int cmd_predict(const CliOptions& options) {
    if (options.checkpoint_path.empty() || options.train_csv.empty() ||
        options.train_meta.empty() || options.query_csv.empty()) {
        throw ConfigError("predict needs --checkpoint, --train-csv, --train-meta and --query-csv");
    }
    Checkpoint ckpt = load_checkpoint(options.checkpoint_path);
    Dataset train = load_csv_dataset(options.train_csv, options.train_meta);

    // query CSV: either feature-only or a full dataset file (label ignored)
    Dataset query;
    try {
        query = load_csv_dataset(options.query_csv, options.train_meta);
    } catch (const Error&) {
        throw ConfigError("predict: query CSV must match the train schema (label may be dummy)");
    }

    const Preprocessed prep = preprocess(train.x, train.y, query.x, train.n_classes);
    if (train.features() > static_cast<std::size_t>(ckpt.config().max_features)) {
        throw ConfigError("predict: dataset exceeds model feature capacity");
    }
    if (prep.x_train.rows > static_cast<std::size_t>(ckpt.config().max_train_tokens)) {
        throw ConfigError("predict: train rows exceed model context capacity");
    }

    ensure_out_dir(options.out_dir);
    json resolved;
    resolved["checkpoint"] = options.checkpoint_path;
    resolved["train_csv"] = options.train_csv;
    resolved["query_csv"] = options.query_csv;
    write_manifest(options.out_dir, "predict", resolved);

    ContextBatch batch;
    batch.x_train = prep.x_train.cast<float>();
    batch.y_train = prep.y_train;

    const auto out_path = fs::path(options.out_dir) / "predictions.csv";
    std::ofstream f(out_path, std::ios::trunc);
    if (!f) throw IoError("predict: cannot open " + out_path.string());

    const auto chunk = static_cast<std::size_t>(ckpt.config().max_query_tokens);
    bool header_written = false;
    for (std::size_t begin = 0; begin < prep.x_test.rows; begin += chunk) {
        const std::size_t end = std::min(prep.x_test.rows, begin + chunk);
        batch.x_query = Mat32(end - begin, prep.x_test.cols);
        for (std::size_t i = begin; i < end; ++i) {
            for (std::size_t j = 0; j < prep.x_test.cols; ++j) {
                batch.x_query(i - begin, j) = static_cast<float>(prep.x_test(i, j));
            }
        }
        const ProbaResult res = predict_proba(ckpt, batch);
        if (!header_written) {
            for (std::size_t c = 0; c < res.classes.size(); ++c) {
                f << (c ? "," : "") << "proba_"
                  << prep.labels.restore(res.classes[static_cast<std::size_t>(c)]);
            }
            f << ",predicted\n";
            header_written = true;
        }
        for (std::size_t i = 0; i < res.proba.rows; ++i) {
            char buf[32];
            for (std::size_t c = 0; c < res.proba.cols; ++c) {
                std::snprintf(buf, sizeof(buf), "%.6f", res.proba(i, c));
                f << (c ? "," : "") << buf;
            }
            const auto best = argmax_lowest(res.proba.row(i), res.proba.cols);
            f << ',' << prep.labels.restore(res.classes[best]) << "\n";
        }
    }
    std::cout << "predictions: " << out_path.string() << "\n";
    return kExitOk;
}

namespace {

int stats_like(const CliOptions& options, bool write_json) {
    if (options.report_path.empty()) throw ConfigError("missing --report <report.csv>");
    const auto records = load_report(options.report_path);

    StatsOptions stats_options;
    stats_options.alpha = options.alpha;
    stats_options.efficiency_threshold = options.efficiency_threshold;
    stats_options.log_time_auc = options.log_time_auc;
    const StatsSummary summary = compute_stats(records, stats_options);

    ensure_out_dir(options.out_dir);
    json resolved;
    resolved["report"] = options.report_path;
    resolved["alpha"] = options.alpha;
    resolved["efficiency_threshold"] = options.efficiency_threshold;
    resolved["log_time_auc"] = options.log_time_auc;
    write_manifest(options.out_dir, write_json ? "stats" : "report", resolved);

    if (write_json) {
        save_stats_summary(summary, (fs::path(options.out_dir) / "stats.json").string());
    }
    const std::string rendered = render_stats_summary(summary);
    std::ofstream txt(fs::path(options.out_dir) / "summary.txt", std::ios::trunc);
    txt << rendered;
    std::ofstream curves(fs::path(options.out_dir) / "learning_curves.csv", std::ios::trunc);
    curves << render_learning_curves(records);
    std::cout << rendered;
    return kExitOk;
}

}  // namespace

int cmd_stats(const CliOptions& options) { return stats_like(options, /*write_json=*/true); }

int cmd_report(const CliOptions& options) { return stats_like(options, /*write_json=*/false); }

int run_command(int (*command)(const CliOptions&), const CliOptions& options) {
    try {
        return command(options);
    } catch (const NumericError& e) {
        std::cerr << "numeric abort: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const ParseError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
}

}  // namespace pfnbench
