#include "pfnbench/bench.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <thread>
#include <tuple>

#include "pfnbench/errors.hpp"
#include "pfnbench/metrics.hpp"
#include "pfnbench/rng.hpp"

namespace pfnbench {

void BenchConfig::validate() const {
    if (n_reps < 1) throw ConfigError("BenchConfig: n_reps must be >= 1");
    if (tune_budget.folds < 2) throw ConfigError("BenchConfig: folds must be >= 2");
    if (tune_budget.max_configs < 1) throw ConfigError("BenchConfig: max_configs must be >= 1");
}

MethodSpec method_from_name(const std::string& name) {
    if (name == "pfn") return {MethodKind::pfn, name};
    if (name == "knn") return {MethodKind::knn, name};
    if (name == "dt") return {MethodKind::tree, name};
    throw ConfigError("unknown method '" + name + "' (expected pfn, knn or dt)");
}

std::uint64_t record_seed(std::uint64_t run_seed, const std::string& dataset, int split_id,
                          double fraction, const std::string& method) {
    std::uint64_t h = hash_combine(0xCBF29CE484222325ULL, run_seed);
    h = hash_combine(h, std::string_view(dataset));
    h = hash_combine(h, static_cast<std::uint64_t>(split_id));
    h = hash_combine(h, static_cast<std::uint64_t>(fraction * 1e6));
    h = hash_combine(h, std::string_view(method));
    return h;
}

std::vector<int> pfn_predict_chunked(const Checkpoint& ckpt, const Mat64& x_train,
                                     const std::vector<int>& y_train, const Mat64& x_query) {
    const auto chunk = static_cast<std::size_t>(ckpt.config().max_query_tokens);
    ContextBatch batch;
    batch.x_train = x_train.cast<float>();
    batch.y_train = y_train;

    std::vector<int> out;
    out.reserve(x_query.rows);
    for (std::size_t begin = 0; begin < x_query.rows; begin += chunk) {
        const std::size_t end = std::min(x_query.rows, begin + chunk);
        batch.x_query = Mat32(end - begin, x_query.cols);
        for (std::size_t i = begin; i < end; ++i) {
            for (std::size_t j = 0; j < x_query.cols; ++j) {
                batch.x_query(i - begin, j) = static_cast<float>(x_query(i, j));
            }
        }
        const auto labels = predict(ckpt, batch);
        out.insert(out.end(), labels.begin(), labels.end());
    }
    return out;
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Prefix view of the split's training data.
struct TrainSlice {
    Mat64 x;
    std::vector<int> y;
};

TrainSlice train_prefix(const SplitData& split, std::size_t rows) {
    TrainSlice slice;
    slice.x = Mat64(rows, split.x_train.cols);
    std::copy(split.x_train.data.begin(),
              split.x_train.data.begin() + static_cast<std::ptrdiff_t>(rows * split.x_train.cols),
              slice.x.data.begin());
    slice.y.assign(split.y_train.begin(), split.y_train.begin() + static_cast<std::ptrdiff_t>(rows));
    return slice;
}

}  // namespace

BenchmarkRecord execute_record(const Dataset& ds, const SplitData& split, int split_id,
                               double fraction, const MethodSpec& method, const BenchConfig& cfg,
                               const Checkpoint* ckpt) {
    BenchmarkRecord rec;
    rec.dataset = ds.name;
    rec.method = method.name;
    rec.split_id = split_id;
    rec.fraction = fraction;

    const std::size_t prefix = prefix_rows(fraction, split.x_train.rows, ds.n_classes);
    rec.n_train_used = prefix;

    if (method.kind == MethodKind::pfn) {
        if (ckpt == nullptr) {
            rec.status = "failed";
            rec.reason = "no checkpoint provided";
            return rec;
        }
        const auto& mc = ckpt->config();
        if (ds.features() > static_cast<std::size_t>(mc.max_features)) {
            rec.status = "skipped";
            rec.reason = "features exceed model capacity";
            return rec;
        }
        if (prefix > static_cast<std::size_t>(mc.max_train_tokens)) {
            rec.status = "skipped";
            rec.reason = "train rows exceed model context capacity";
            return rec;
        }
        if (ds.n_classes > mc.max_classes) {
            rec.status = "skipped";
            rec.reason = "classes exceed model capacity";
            return rec;
        }
    }

    Rng rng(record_seed(cfg.seed, ds.name, split_id, fraction, method.name));
    try {
        const TrainSlice slice = train_prefix(split, prefix);

        // tuning (baselines only), on training rows only
        TuneResult tuned;
        if (method.kind != MethodKind::pfn) {
            Dataset train_ds;
            train_ds.name = ds.name + "/train";
            train_ds.x = slice.x;
            train_ds.y = slice.y;
            train_ds.n_classes = ds.n_classes;
            const auto t0 = Clock::now();
            TuneBudget budget = cfg.tune_budget;
            budget.seed = rng.next_u64();
            if (slice.y.size() < static_cast<std::size_t>(budget.folds)) {
                budget.folds = 2;  // degenerate prefix; keep the protocol running
            }
            tuned = tune(method.kind == MethodKind::knn ? BaselineFamily::knn
                                                        : BaselineFamily::tree,
                         train_ds, budget, rng);
            rec.tune_seconds = seconds_since(t0);
            if (method.kind == MethodKind::knn) {
                rec.tuned_params = "k=" + std::to_string(tuned.knn.k);
            } else {
                rec.tuned_params = "depth=" + std::to_string(tuned.tree.max_depth) +
                                   ";min_split=" + std::to_string(tuned.tree.min_samples_split) +
                                   ";min_leaf=" + std::to_string(tuned.tree.min_samples_leaf);
            }
            if (tuned.unstratified_fallback) {
                rec.reason = "unstratified folds (class smaller than fold count)";
            }
        }

        // train: preprocessing is charged here, plus model fitting
        const auto t1 = Clock::now();
        const Preprocessed prep = preprocess(slice.x, slice.y, split.x_test, ds.n_classes);
        DecisionTree tree;
        Dataset context_ds;  // scaled training data for knn
        if (method.kind == MethodKind::tree) {
            Dataset fit_ds;
            fit_ds.name = ds.name;
            fit_ds.x = prep.x_train;
            fit_ds.y = prep.y_train;
            fit_ds.n_classes = prep.labels.n_active();
            tree = tree_fit(fit_ds, tuned.tree);
        } else if (method.kind == MethodKind::knn) {
            context_ds.name = ds.name;
            context_ds.x = prep.x_train;
            context_ds.y = prep.y_train;
            context_ds.n_classes = prep.labels.n_active();
        }
        rec.train_seconds = seconds_since(t1);

        // inference on the held-out test rows
        const auto t2 = Clock::now();
        std::vector<int> pred_contiguous;
        switch (method.kind) {
            case MethodKind::pfn:
                pred_contiguous = pfn_predict_chunked(*ckpt, prep.x_train, prep.y_train, prep.x_test);
                break;
            case MethodKind::knn: {
                KnnParams kp = tuned.knn;
                kp.k = std::min<int>(kp.k, static_cast<int>(context_ds.rows()));
                pred_contiguous = knn_predict(context_ds, prep.x_test, kp);
                break;
            }
            case MethodKind::tree:
                pred_contiguous = tree_predict(tree, prep.x_test);
                break;
        }
        rec.infer_seconds = seconds_since(t2);

        std::vector<int> pred(pred_contiguous.size());
        for (std::size_t i = 0; i < pred.size(); ++i) {
            pred[i] = prep.labels.restore(pred_contiguous[i]);
        }

        rec.accuracy = accuracy(split.y_test, pred);
        rec.macro_f1 = f1_macro(split.y_test, pred, ds.n_classes);
        rec.f1 = ds.n_classes == 2 ? f1_binary(binary_confusion(split.y_test, pred, 1))
                                   : rec.macro_f1;
    } catch (const Error& e) {
        rec.status = "failed";
        rec.reason = e.what();
    }
    return rec;
}

std::vector<BenchmarkRecord> run_benchmark(const std::vector<Dataset>& datasets,
                                           const std::vector<MethodSpec>& methods,
                                           const BenchConfig& cfg, const Checkpoint* ckpt) {
    cfg.validate();
    for (const auto& ds : datasets) ds.validate();
    const auto fractions = fraction_schedule();

    struct Cell {
        const Dataset* ds;
        const SplitData* split;
        int split_id;
        double fraction;
        const MethodSpec* method;
    };

    // materialize splits once per dataset
    std::vector<std::vector<SplitData>> split_data(datasets.size());
    for (std::size_t d = 0; d < datasets.size(); ++d) {
        const auto plans = make_splits(datasets[d], cfg.n_reps, cfg.seed);
        split_data[d].reserve(plans.size());
        for (const auto& plan : plans) split_data[d].push_back(apply_split(datasets[d], plan));
    }

    std::vector<Cell> cells;
    for (std::size_t d = 0; d < datasets.size(); ++d) {
        for (const auto& method : methods) {
            for (int rep = 0; rep < cfg.n_reps; ++rep) {
                for (double fraction : fractions) {
                    cells.push_back(
                        {&datasets[d], &split_data[d][static_cast<std::size_t>(rep)], rep,
                         fraction, &method});
                }
            }
        }
    }

    std::vector<BenchmarkRecord> records(cells.size());
    int n_workers = cfg.workers > 0 ? cfg.workers
                                    : static_cast<int>(std::thread::hardware_concurrency());
    n_workers = std::max(1, std::min<int>(n_workers, static_cast<int>(cells.size())));

    auto run_cell = [&](std::size_t i) {
        const Cell& cell = cells[i];
        records[i] = execute_record(*cell.ds, *cell.split, cell.split_id, cell.fraction,
                                    *cell.method, cfg, ckpt);
    };
    if (n_workers == 1) {
        for (std::size_t i = 0; i < cells.size(); ++i) run_cell(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        for (int w = 0; w < n_workers; ++w) {
            pool.emplace_back([&] {
                for (std::size_t i = next.fetch_add(1); i < cells.size(); i = next.fetch_add(1)) {
                    run_cell(i);
                }
            });
        }
        for (auto& th : pool) th.join();
    }

    std::sort(records.begin(), records.end(), [](const BenchmarkRecord& a, const BenchmarkRecord& b) {
        return std::tie(a.dataset, a.method, a.split_id, a.fraction) <
               std::tie(b.dataset, b.method, b.split_id, b.fraction);
    });
    return records;
}

}  // namespace pfnbench
