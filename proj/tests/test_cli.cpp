#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "pfnbench/checkpoint_io.hpp"
#include "pfnbench/commands.hpp"
#include "pfnbench/report_io.hpp"
#include "pfnbench/stats.hpp"

using namespace pfnbench;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string str() const { return path.string(); }
};

// Small model and prior so CLI runs stay fast.
void write_small_config(const std::string& path) {
    nlohmann::json j;
    j["model"] = {{"d_model", 16},       {"n_layers", 1},   {"n_heads", 2},
                  {"d_ff", 32},          {"max_features", 6}, {"max_classes", 3},
                  {"max_train_tokens", 64}, {"max_query_tokens", 64}};
    j["train"] = {{"steps", 6},      {"batch_tasks", 2},   {"lr", 1e-3},
                  {"warmup_steps", 2}, {"log_interval", 3}, {"holdout_tasks", 2}};
    j["prior"] = {{"preset", "linear"}, {"max_features", 4}, {"min_rows", 16}, {"max_rows", 32}};
    std::ofstream f(path);
    f << j.dump(2);
}

std::uint64_t file_hash(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    REQUIRE(f);
    std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    return fnv1a64(bytes.data(), bytes.size());
}

}  // namespace

TEST_CASE("meta-train --steps 0 emits the initialization checkpoint") {
    TempDir dir("pfnbench_cli_train0");
    const std::string config = (dir.path / "config.json").string();
    write_small_config(config);

    CliOptions options;
    options.config_path = config;
    options.out_dir = (dir.path / "out").string();
    options.steps = 0;
    options.seed = 4;
    CHECK(run_command(cmd_meta_train, options) == kExitOk);

    const auto ckpt_path = dir.path / "out" / "checkpoint.pfn";
    REQUIRE(fs::exists(ckpt_path));
    const auto ckpt = load_checkpoint(ckpt_path.string());
    CHECK(ckpt.fingerprint.steps == 0);
    CHECK(fs::exists(dir.path / "out" / "manifest.json"));
    CHECK(fs::exists(dir.path / "out" / "train_log.csv"));
}

TEST_CASE("meta-train is reproducible: same config and seed, same checkpoint bytes") {
    TempDir dir("pfnbench_cli_repro");
    const std::string config = (dir.path / "config.json").string();
    write_small_config(config);

    CliOptions options;
    options.config_path = config;
    options.seed = 9;
    options.workers = 1;

    options.out_dir = (dir.path / "a").string();
    REQUIRE(run_command(cmd_meta_train, options) == kExitOk);
    options.out_dir = (dir.path / "b").string();
    options.workers = 2;
    REQUIRE(run_command(cmd_meta_train, options) == kExitOk);

    CHECK(file_hash((dir.path / "a" / "checkpoint.pfn").string()) ==
          file_hash((dir.path / "b" / "checkpoint.pfn").string()));
}

TEST_CASE("gen-data writes stable files with manifests") {
    TempDir dir("pfnbench_cli_gen");
    CliOptions options;
    options.out_dir = (dir.path / "data").string();
    options.problems = {"rings2d"};
    options.seed = 3;
    REQUIRE(run_command(cmd_gen_data, options) == kExitOk);
    const auto csv = dir.path / "data" / "rings2d.csv";
    REQUIRE(fs::exists(csv));
    REQUIRE(fs::exists(dir.path / "data" / "rings2d.meta.json"));
    REQUIRE(fs::exists(dir.path / "data" / "rings2d_test.csv"));
    const auto first = file_hash(csv.string());

    // regenerate into a fresh directory: identical bytes
    options.out_dir = (dir.path / "data2").string();
    REQUIRE(run_command(cmd_gen_data, options) == kExitOk);
    CHECK(file_hash((dir.path / "data2" / "rings2d.csv").string()) == first);

    // loads back as a valid dataset with its fixed test set
    const auto ds = load_csv_dataset(csv.string(),
                                     (dir.path / "data" / "rings2d.meta.json").string());
    CHECK(ds.rows() == 400);
    REQUIRE(ds.fixed_test);
    CHECK(ds.fixed_test->rows() == 1500);
}

TEST_CASE("bench without a checkpoint fails before any work when pfn is requested") {
    TempDir dir("pfnbench_cli_nockpt");
    CliOptions options;
    options.out_dir = (dir.path / "out").string();
    CHECK(run_command(cmd_bench, options) == kExitConfig);
    // the failure happened before datasets or reports were produced
    CHECK_FALSE(fs::exists(dir.path / "out" / "report.csv"));
}

TEST_CASE("bench on baselines produces the full record grid and stats") {
    TempDir dir("pfnbench_cli_bench");
    const std::string config = (dir.path / "config.json").string();
    {
        nlohmann::json j;
        j["bench"] = {{"methods", {"knn", "dt"}},
                      {"datasets", {"rings2d"}},
                      {"n_reps", 2},
                      {"max_configs", 5}};
        std::ofstream f(config);
        f << j.dump(2);
    }
    CliOptions options;
    options.config_path = config;
    options.out_dir = (dir.path / "out").string();
    options.seed = 2;
    options.workers = 2;
    REQUIRE(run_command(cmd_bench, options) == kExitOk);

    const auto report = load_report((dir.path / "out" / "report.csv").string());
    CHECK(report.size() == 1 * 2 * 2 * 11);
    for (const auto& r : report) CHECK(r.status == "ok");
    CHECK(fs::exists(dir.path / "out" / "stats.json"));
    CHECK(fs::exists(dir.path / "out" / "summary.txt"));
    CHECK(fs::exists(dir.path / "out" / "learning_curves.csv"));
    CHECK(fs::exists(dir.path / "out" / "manifest.json"));
}

TEST_CASE("stats reproduces a hand-computed Wilcoxon p from a written report") {
    TempDir dir("pfnbench_cli_stats");
    // two methods over six blocks; method a beats b everywhere, so the
    // two-sided exact p is 2 / 2^6
    std::vector<BenchmarkRecord> records;
    const std::vector<double> fractions{0.05, 0.10, 0.20, 0.30, 0.40, 0.50};
    for (std::size_t i = 0; i < fractions.size(); ++i) {
        BenchmarkRecord a;
        a.dataset = "hand";
        a.method = "a";
        a.split_id = 0;
        a.fraction = fractions[i];
        a.n_train_used = 10 + 10 * i;
        a.f1 = 0.8 + 0.01 * static_cast<double>(i);
        a.macro_f1 = a.f1;
        a.accuracy = a.f1;
        BenchmarkRecord b = a;
        b.method = "b";
        b.f1 = a.f1 - 0.05 - 0.001 * static_cast<double>(i);
        records.push_back(a);
        records.push_back(b);
    }
    const std::string report_path = (dir.path / "report.csv").string();
    save_report(records, report_path);

    CliOptions options;
    options.report_path = report_path;
    options.out_dir = (dir.path / "out").string();
    REQUIRE(run_command(cmd_stats, options) == kExitOk);

    std::ifstream f(dir.path / "out" / "stats.json");
    nlohmann::json j;
    f >> j;
    const double p = j["f1_ranks"]["p_adjusted"][0][1].get<double>();
    CHECK(p == doctest::Approx(2.0 / 64.0).epsilon(1e-12));
    CHECK(j["f1_ranks"]["avg_ranks"][0].get<double>() == doctest::Approx(1.0));
    CHECK(j["f1_ranks"]["avg_ranks"][1].get<double>() == doctest::Approx(2.0));
}

TEST_CASE("predict: single-class context concentrates all probability mass") {
    TempDir dir("pfnbench_cli_predict");
    // a tiny random checkpoint
    ModelConfig cfg;
    cfg.d_model = 16;
    cfg.n_layers = 1;
    cfg.n_heads = 2;
    cfg.d_ff = 32;
    cfg.max_features = 4;
    cfg.max_classes = 4;
    cfg.max_train_tokens = 64;
    cfg.max_query_tokens = 64;
    Checkpoint ckpt(cfg);
    Rng rng(5);
    ckpt.weights.init(rng);
    const std::string ckpt_path = (dir.path / "model.pfn").string();
    save_checkpoint(ckpt, ckpt_path);

    // train CSV where every row carries class 2 of 4
    {
        std::ofstream f(dir.path / "train.csv");
        f << "x0,x1,label\n";
        for (int i = 0; i < 8; ++i) f << 0.1 * i << "," << 0.2 * i << ",2\n";
    }
    {
        std::ofstream f(dir.path / "train.meta.json");
        f << R"({"name": "single", "n_classes": 4})";
    }
    {
        std::ofstream f(dir.path / "query.csv");
        f << "x0,x1,label\n0.05,0.1,0\n0.5,0.9,0\n";
    }

    CliOptions options;
    options.checkpoint_path = ckpt_path;
    options.train_csv = (dir.path / "train.csv").string();
    options.train_meta = (dir.path / "train.meta.json").string();
    options.query_csv = (dir.path / "query.csv").string();
    options.out_dir = (dir.path / "out").string();
    REQUIRE(run_command(cmd_predict, options) == kExitOk);

    std::ifstream f(dir.path / "out" / "predictions.csv");
    std::string header, row;
    REQUIRE(std::getline(f, header));
    CHECK(header == "proba_2,predicted");
    int rows = 0;
    while (std::getline(f, row)) {
        if (row.empty()) continue;
        CHECK(row == "1.000000,2");
        ++rows;
    }
    CHECK(rows == 2);
}

TEST_CASE("error paths map to the documented exit codes") {
    CliOptions options;
    options.report_path = "/nonexistent/report.csv";
    options.out_dir = (fs::temp_directory_path() / "pfnbench_cli_err").string();
    CHECK(run_command(cmd_stats, options) == kExitRuntime);  // missing file: IO fault

    CliOptions empty;
    empty.out_dir = options.out_dir;
    CHECK(run_command(cmd_stats, empty) == kExitConfig);  // no --report

    CliOptions bad_config;
    bad_config.config_path = "/nonexistent/config.json";
    bad_config.out_dir = options.out_dir;
    CHECK(run_command(cmd_meta_train, bad_config) == kExitConfig);
    fs::remove_all(options.out_dir);
}
