#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pfnbench/kernels.hpp"
#include "pfnbench/model.hpp"
#include "pfnbench/prior.hpp"

namespace pfnbench {

// The once-only meta-training loop: sample synthetic tasks, cut each into
// context and query rows, score the masked query labels with cross-entropy
// and take one Adam step per batch.

struct TrainConfig {
    int steps = 2000;
    int batch_tasks = 8;
    double cut_min = 0.25;        // split position, fraction of task rows
    double cut_max = 0.75;
    double lr = 3e-4;
    int warmup_steps = 200;       // linear warmup, then cosine decay to 0
    int checkpoint_interval = 0;  // steps between periodic saves; 0 = none
    int log_interval = 100;
    int holdout_tasks = 16;       // per log entry
    int workers = 0;              // parallel tasks per batch; 0 = hardware
    std::uint64_t seed = 0;

    void validate() const;
};

struct TrainLogEntry {
    int step = 0;
    double loss = 0.0;         // mean over the interval
    double holdout_acc = 0.0;  // query accuracy on fresh prior tasks
    double seconds = 0.0;      // wall time since training started
};

struct TrainLog {
    std::vector<TrainLogEntry> entries;
};

struct TrainResult {
    Checkpoint checkpoint;
    TrainLog log;

    TrainResult() : checkpoint(ModelConfig{}) {}
};

double scheduled_lr(const TrainConfig& cfg, int step);

// One optimization step over a batch of tasks. Per-task gradients land in
// grad_slots (one per task, reused across steps) and are reduced in task
// order, so the result is independent of worker count and scheduling.
// Returns the batch mean loss.
double training_step(PfnWeights<float>& weights, const std::vector<SyntheticTask>& tasks,
                     const std::vector<std::size_t>& cuts, AdamState<float>& opt, double lr,
                     int workers, std::vector<PfnWeights<float>>& grad_slots);

// Builds the context/query cut of a task at the given position.
ContextBatch cut_task(const SyntheticTask& task, std::size_t cut);

// Smallest/largest admissible cut for a task of n rows under the model's
// token capacities and the configured cut range.
std::pair<std::size_t, std::size_t> cut_bounds(const ModelConfig& model, const TrainConfig& cfg,
                                               std::size_t n_rows);

// Full run. checkpoint_dir may be empty (no periodic checkpoints); when
// set, periodic and final checkpoints are written there.
TrainResult meta_train(const ModelConfig& model, const TrainConfig& cfg, const PriorConfig& prior,
                       const std::string& checkpoint_dir = "", bool verbose = false);

struct HoldoutResult {
    double mean_accuracy = 0.0;
    double se_accuracy = 0.0;
    double mean_macro_f1 = 0.0;
    double oracle_accuracy = 0.0;  // bayes_oracle scored on the same queries
    int n_tasks = 0;
};

// Mean in-context query accuracy over fresh prior tasks; the eval stream is
// salted so it never overlaps a training stream.
HoldoutResult held_out_eval(const Checkpoint& ckpt, const PriorConfig& prior, int n_tasks,
                            int context_size, int query_size, std::uint64_t seed);

}  // namespace pfnbench
