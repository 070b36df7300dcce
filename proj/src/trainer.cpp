#include "pfnbench/trainer.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <thread>

#include "pfnbench/checkpoint_io.hpp"
#include "pfnbench/errors.hpp"
#include "pfnbench/metrics.hpp"

namespace pfnbench {

void TrainConfig::validate() const {
    if (steps < 0) throw ConfigError("TrainConfig: steps must be >= 0");
    if (batch_tasks < 1) throw ConfigError("TrainConfig: batch_tasks must be >= 1");
    if (!(cut_min > 0.0 && cut_max < 1.0 && cut_min <= cut_max)) {
        throw ConfigError("TrainConfig: cut bounds must satisfy 0 < min <= max < 1");
    }
    if (lr < 0.0) throw ConfigError("TrainConfig: lr must be >= 0");
    if (warmup_steps < 0) throw ConfigError("TrainConfig: warmup_steps must be >= 0");
    if (log_interval < 1) throw ConfigError("TrainConfig: log_interval must be >= 1");
}

double scheduled_lr(const TrainConfig& cfg, int step) {
    if (cfg.warmup_steps > 0 && step <= cfg.warmup_steps) {
        return cfg.lr * static_cast<double>(step) / static_cast<double>(cfg.warmup_steps);
    }
    if (step > cfg.steps) return 0.0;
    // progress hits 1 one step past the end, so the final step still moves
    const double progress = static_cast<double>(step - cfg.warmup_steps - 1) /
                            static_cast<double>(std::max(1, cfg.steps - cfg.warmup_steps));
    return cfg.lr * 0.5 * (1.0 + std::cos(3.141592653589793 * progress));
}

ContextBatch cut_task(const SyntheticTask& task, std::size_t cut) {
    const std::size_t n = task.rows();
    if (cut < 1 || cut >= n) throw ConfigError("cut_task: cut must leave >=1 row on each side");
    const std::size_t d = task.x.cols;
    ContextBatch b;
    b.x_train = Mat32(cut, d);
    b.x_query = Mat32(n - cut, d);
    b.y_train.assign(task.y.begin(), task.y.begin() + static_cast<std::ptrdiff_t>(cut));
    std::copy(task.x.data.begin(), task.x.data.begin() + static_cast<std::ptrdiff_t>(cut * d),
              b.x_train.data.begin());
    std::copy(task.x.data.begin() + static_cast<std::ptrdiff_t>(cut * d), task.x.data.end(),
              b.x_query.data.begin());
    return b;
}

std::pair<std::size_t, std::size_t> cut_bounds(const ModelConfig& model, const TrainConfig& cfg,
                                               std::size_t n_rows) {
    const auto n = static_cast<double>(n_rows);
    auto lo = static_cast<std::size_t>(std::ceil(cfg.cut_min * n));
    auto hi = static_cast<std::size_t>(std::floor(cfg.cut_max * n));
    lo = std::max<std::size_t>(lo, 1);
    hi = std::min<std::size_t>(hi, n_rows - 1);
    // token capacity: cut rows go to the context, the rest become queries
    hi = std::min<std::size_t>(hi, static_cast<std::size_t>(model.max_train_tokens));
    if (n_rows > static_cast<std::size_t>(model.max_query_tokens)) {
        lo = std::max<std::size_t>(lo, n_rows - static_cast<std::size_t>(model.max_query_tokens));
    }
    if (lo > hi) {
        throw ConfigError("cut_bounds: no admissible split for task of " + std::to_string(n_rows) +
                          " rows");
    }
    return {lo, hi};
}

double training_step(PfnWeights<float>& weights, const std::vector<SyntheticTask>& tasks,
                     const std::vector<std::size_t>& cuts, AdamState<float>& opt, double lr,
                     int workers, std::vector<PfnWeights<float>>& grad_slots) {
    if (tasks.size() != cuts.size()) throw DimensionError("training_step: tasks/cuts mismatch");
    const std::size_t batch = tasks.size();
    while (grad_slots.size() < batch) grad_slots.emplace_back(weights.cfg);

    const float inv_batch = 1.0f / static_cast<float>(batch);
    std::vector<double> losses(batch, 0.0);
    std::vector<std::string> faults(batch);

    auto run_task = [&](std::size_t t) {
        try {
            grad_slots[t].zero_grad();
            const ContextBatch b = cut_task(tasks[t], cuts[t]);
            std::vector<int> targets(tasks[t].y.begin() + static_cast<std::ptrdiff_t>(cuts[t]),
                                     tasks[t].y.end());
            ForwardCache<float> cache;
            Mat32 logits = forward(weights, b, &cache);
            Mat32 dlogits;
            losses[t] = cross_entropy(logits, targets,
                                      static_cast<std::size_t>(tasks[t].gen.n_classes), &dlogits);
            scale_inplace(dlogits, inv_batch);
            backward(weights, b, cache, dlogits, grad_slots[t]);
        } catch (const Error& e) {
            faults[t] = e.what();
        }
    };

    int n_workers = workers > 0 ? workers
                                : static_cast<int>(std::thread::hardware_concurrency());
    n_workers = std::max(1, std::min<int>(n_workers, static_cast<int>(batch)));
    if (n_workers == 1) {
        for (std::size_t t = 0; t < batch; ++t) run_task(t);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(n_workers));
        for (int wi = 0; wi < n_workers; ++wi) {
            pool.emplace_back([&] {
                for (std::size_t t = next.fetch_add(1); t < batch; t = next.fetch_add(1)) {
                    run_task(t);
                }
            });
        }
        for (auto& th : pool) th.join();
    }

    for (std::size_t t = 0; t < batch; ++t) {
        if (!faults[t].empty()) {
            throw NumericError("training_step: task seed " + std::to_string(tasks[t].seed) +
                               " failed: " + faults[t]);
        }
    }

    double mean_loss = 0.0;
    for (double l : losses) mean_loss += l;
    mean_loss /= static_cast<double>(batch);
    if (!std::isfinite(mean_loss)) {
        throw NumericError("training_step: non-finite batch loss");
    }

    // fixed reduction order: slot 0, 1, 2, ...
    weights.zero_grad();
    auto dst = weights.params();
    for (std::size_t t = 0; t < batch; ++t) {
        auto src = grad_slots[t].params();
        for (std::size_t p = 0; p < dst.size(); ++p) add_inplace(dst[p]->grad, src[p]->grad);
    }
    opt.lr = lr;
    adam_step(dst, opt);
    return mean_loss;
}

TrainResult meta_train(const ModelConfig& model, const TrainConfig& cfg, const PriorConfig& prior,
                       const std::string& checkpoint_dir, bool verbose) {
    model.validate();
    cfg.validate();
    prior.validate(model);

    TrainResult result;
    result.checkpoint = Checkpoint(model);
    Rng init_rng(hash_combine(hash_combine(0xCBF29CE484222325ULL, cfg.seed),
                              std::string_view("init")));
    result.checkpoint.weights.init(init_rng);
    result.checkpoint.fingerprint = {prior.hash(), cfg.seed, 0};
    if (cfg.steps == 0) return result;

    PfnWeights<float>& weights = result.checkpoint.weights;
    AdamState<float> opt;
    auto params = weights.params();
    opt.init(params);
    opt.lr = cfg.lr;

    TaskStream stream(prior);
    Rng cut_rng(hash_combine(hash_combine(0xCBF29CE484222325ULL, cfg.seed),
                             std::string_view("cuts")));
    std::vector<PfnWeights<float>> grad_slots;

    const auto t0 = std::chrono::steady_clock::now();
    double loss_accum = 0.0;
    int loss_count = 0;

    for (int step = 1; step <= cfg.steps; ++step) {
        std::vector<SyntheticTask> tasks;
        std::vector<std::size_t> cuts;
        tasks.reserve(static_cast<std::size_t>(cfg.batch_tasks));
        for (int b = 0; b < cfg.batch_tasks; ++b) {
            SyntheticTask task = stream.next();
            auto [lo, hi] = cut_bounds(model, cfg, task.rows());
            cuts.push_back(static_cast<std::size_t>(
                cut_rng.uniform_int(static_cast<std::int64_t>(lo), static_cast<std::int64_t>(hi))));
            tasks.push_back(std::move(task));
        }

        double loss;
        try {
            loss = training_step(weights, tasks, cuts, opt, scheduled_lr(cfg, step), cfg.workers,
                                 grad_slots);
        } catch (const NumericError& e) {
            throw NumericError("meta_train: aborted at step " + std::to_string(step) + " (seed " +
                               std::to_string(cfg.seed) + "): " + e.what());
        }
        loss_accum += loss;
        ++loss_count;

        const bool last = step == cfg.steps;
        if (step % cfg.log_interval == 0 || last) {
            result.checkpoint.fingerprint.steps = static_cast<std::uint64_t>(step);
            TrainLogEntry entry;
            entry.step = step;
            entry.loss = loss_accum / std::max(1, loss_count);
            const auto holdout =
                held_out_eval(result.checkpoint, prior, cfg.holdout_tasks, 64, 64,
                              hash_combine(cfg.seed, std::string_view("holdout")));
            entry.holdout_acc = holdout.mean_accuracy;
            entry.seconds =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            result.log.entries.push_back(entry);
            if (verbose) {
                std::fprintf(stderr, "step %6d  loss %.4f  holdout_acc %.3f  %.1fs\n", entry.step,
                             entry.loss, entry.holdout_acc, entry.seconds);
            }
            loss_accum = 0.0;
            loss_count = 0;
        }
        if (!checkpoint_dir.empty() && cfg.checkpoint_interval > 0 &&
            (step % cfg.checkpoint_interval == 0 || last)) {
            result.checkpoint.fingerprint.steps = static_cast<std::uint64_t>(step);
            const auto path = std::filesystem::path(checkpoint_dir) /
                              ("checkpoint_step" + std::to_string(step) + ".pfn");
            save_checkpoint(result.checkpoint, path.string());
        }
    }
    result.checkpoint.fingerprint.steps = static_cast<std::uint64_t>(cfg.steps);
    return result;
}

HoldoutResult held_out_eval(const Checkpoint& ckpt, const PriorConfig& prior, int n_tasks,
                            int context_size, int query_size, std::uint64_t seed) {
    PriorConfig eval_prior = prior;
    eval_prior.min_rows = context_size + query_size;
    eval_prior.max_rows = context_size + query_size;
    eval_prior.validate(ckpt.config());

    TaskStream stream(eval_prior, hash_combine(seed, std::string_view("holdout-stream")));
    HoldoutResult res;
    res.n_tasks = n_tasks;
    std::vector<double> accs;
    accs.reserve(static_cast<std::size_t>(n_tasks));
    double f1_sum = 0.0;
    double oracle_sum = 0.0;
    for (int t = 0; t < n_tasks; ++t) {
        const SyntheticTask task = stream.next();
        const ContextBatch b = cut_task(task, static_cast<std::size_t>(context_size));
        std::vector<int> truth(task.y.begin() + context_size, task.y.end());
        const std::vector<int> pred = predict(ckpt, b);
        accs.push_back(accuracy(truth, pred));
        f1_sum += f1_macro(truth, pred, task.gen.n_classes);
        const std::vector<int> oracle = bayes_oracle(task.gen, b.x_query);
        oracle_sum += accuracy(truth, oracle);
    }
    double mean = 0.0;
    for (double a : accs) mean += a;
    mean /= std::max<std::size_t>(1, accs.size());
    double var = 0.0;
    for (double a : accs) var += (a - mean) * (a - mean);
    var /= std::max<std::size_t>(1, accs.size() > 1 ? accs.size() - 1 : 1);
    res.mean_accuracy = mean;
    res.se_accuracy = std::sqrt(var / std::max<std::size_t>(1, accs.size()));
    res.mean_macro_f1 = f1_sum / std::max(1, n_tasks);
    res.oracle_accuracy = oracle_sum / std::max(1, n_tasks);
    return res;
}

}  // namespace pfnbench
