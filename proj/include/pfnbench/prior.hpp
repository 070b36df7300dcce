#pragma once

#include <cstdint>
#include <vector>

#include "pfnbench/matrix.hpp"
#include "pfnbench/model.hpp"
#include "pfnbench/rng.hpp"

namespace pfnbench {

// Synthetic-task prior for meta-training: each task draws a random tanh-MLP
// scoring function, labels rows by score quantiles, then disguises the
// features with per-column affine jitter and optional quantization.

struct PriorConfig {
    int min_features = 1;
    int max_features = 20;
    int min_classes = 2;
    int max_classes = 4;
    int min_rows = 16;
    int max_rows = 1024;
    int min_depth = 1;          // affine layers in the scoring MLP; 1 = linear score
    int max_depth = 3;
    int min_width = 4;
    int max_width = 32;
    double min_label_noise = 0.0;
    double max_label_noise = 0.1;
    double gaussian_weight = 0.7;   // per-column Gaussian vs uniform input draw
    double quantize_prob = 0.25;    // per-column chance of an integer grid
    std::uint64_t seed = 0;

    void validate(const ModelConfig& model) const;
    std::uint64_t hash() const;
};

// Everything needed to recompute noise-free labels. score() consumes the
// task's stored (already float-rounded) features, so relabeling a task from
// its generator reproduces the original labels exactly.
struct TaskGenerator {
    int n_features = 0;
    int n_classes = 0;
    std::vector<Mat64> mlp_w;                 // layer weights, in x out
    std::vector<std::vector<double>> mlp_b;
    std::vector<double> col_scale;            // x_final = col_scale * x_std + col_shift
    std::vector<double> col_shift;
    std::vector<double> thresholds;           // ascending midpoint score thresholds

    double score(const float* x) const;
    int label_of_score(double s) const;
};

struct SyntheticTask {
    Mat32 x;                 // n x d, post affine disguise
    std::vector<int> y;      // class indices, after label noise
    std::uint64_t seed = 0;  // task seed; regenerates the task bit-exactly
    double label_noise = 0.0;
    TaskGenerator gen;

    std::size_t rows() const { return x.rows; }
};

// Quantile-threshold class assignment at explicit quantile positions.
// Thresholds sit midway between adjacent distinct score values, so labels
// are stable against re-evaluation. Throws GenerationError when the scores
// cannot support the requested class count.
struct ClassAssignment {
    std::vector<int> labels;
    std::vector<double> thresholds;
};
ClassAssignment assign_classes_at(const std::vector<double>& scores,
                                  const std::vector<double>& quantiles);

// Random quantile positions drawn from the rng, then assign_classes_at.
ClassAssignment assign_classes(const std::vector<double>& scores, int n_classes, Rng& rng);

// One prior draw. Deterministic function of (cfg, task_seed); resamples
// internally (up to 100 attempts) until every class has at least two rows.
SyntheticTask sample_task(const PriorConfig& cfg, std::uint64_t task_seed);

// Noise-free labels recomputed from the stored generator.
std::vector<int> bayes_oracle(const TaskGenerator& gen, const Mat32& x_query);

// Deterministic task stream: task i has seed hash(cfg.seed, i), so parallel
// consumers can draw disjoint ranges and reproduce any task independently.
class TaskStream {
public:
    explicit TaskStream(const PriorConfig& cfg, std::uint64_t stream_salt = 0)
        : cfg_(cfg), salt_(stream_salt) {}

    SyntheticTask next() { return sample_task(cfg_, seed_for(index_++)); }
    std::uint64_t seed_for(std::uint64_t index) const;
    const PriorConfig& config() const { return cfg_; }

private:
    PriorConfig cfg_;
    std::uint64_t salt_ = 0;
    std::uint64_t index_ = 0;
};

// Shipped prior presets. The default covers the benchmark regime; the
// linear preset draws depth-1 (pure linear boundary) binary tasks.
PriorConfig default_prior();
PriorConfig linear_prior();

}  // namespace pfnbench
