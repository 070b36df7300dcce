#include "pfnbench/prior.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <string>

#include "pfnbench/errors.hpp"

namespace pfnbench {

void PriorConfig::validate(const ModelConfig& model) const {
    auto range_ok = [](auto lo, auto hi) { return lo <= hi; };
    if (!range_ok(min_features, max_features) || min_features < 1) {
        throw ConfigError("PriorConfig: bad feature range");
    }
    if (!range_ok(min_classes, max_classes) || min_classes < 2) {
        throw ConfigError("PriorConfig: bad class range");
    }
    if (!range_ok(min_rows, max_rows) || min_rows < 4) {
        throw ConfigError("PriorConfig: bad row range (need >= 4 rows)");
    }
    if (!range_ok(min_depth, max_depth) || min_depth < 1) {
        throw ConfigError("PriorConfig: bad depth range");
    }
    if (!range_ok(min_width, max_width) || min_width < 1) {
        throw ConfigError("PriorConfig: bad width range");
    }
    if (!range_ok(min_label_noise, max_label_noise) || min_label_noise < 0.0 ||
        max_label_noise > 0.5) {
        throw ConfigError("PriorConfig: bad label-noise range");
    }
    if (gaussian_weight < 0.0 || gaussian_weight > 1.0 || quantize_prob < 0.0 ||
        quantize_prob > 1.0) {
        throw ConfigError("PriorConfig: mix weights must be probabilities");
    }
    if (max_features > model.max_features) {
        throw ConfigError("PriorConfig: feature range exceeds model capacity " +
                          std::to_string(model.max_features));
    }
    if (max_classes > model.max_classes) {
        throw ConfigError("PriorConfig: class range exceeds model capacity " +
                          std::to_string(model.max_classes));
    }
    if (max_rows > model.max_train_tokens + model.max_query_tokens) {
        throw ConfigError("PriorConfig: row range exceeds model context capacity");
    }
}

std::uint64_t PriorConfig::hash() const {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    h = hash_combine(h, static_cast<std::uint64_t>(min_features));
    h = hash_combine(h, static_cast<std::uint64_t>(max_features));
    h = hash_combine(h, static_cast<std::uint64_t>(min_classes));
    h = hash_combine(h, static_cast<std::uint64_t>(max_classes));
    h = hash_combine(h, static_cast<std::uint64_t>(min_rows));
    h = hash_combine(h, static_cast<std::uint64_t>(max_rows));
    h = hash_combine(h, static_cast<std::uint64_t>(min_depth));
    h = hash_combine(h, static_cast<std::uint64_t>(max_depth));
    h = hash_combine(h, static_cast<std::uint64_t>(min_width));
    h = hash_combine(h, static_cast<std::uint64_t>(max_width));
    auto bits = [](double v) {
        std::uint64_t b;
        static_assert(sizeof(b) == sizeof(v));
        std::memcpy(&b, &v, sizeof(b));
        return b;
    };
    h = hash_combine(h, bits(min_label_noise));
    h = hash_combine(h, bits(max_label_noise));
    h = hash_combine(h, bits(gaussian_weight));
    h = hash_combine(h, bits(quantize_prob));
    h = hash_combine(h, seed);
    return h;
}

double TaskGenerator::score(const float* x) const {
    // Undo the affine disguise, then run the tanh chain. The same code path
    // labeled the task at generation time, so recomputation is bit-stable.
    std::vector<double> h(static_cast<std::size_t>(n_features));
    for (int j = 0; j < n_features; ++j) {
        h[static_cast<std::size_t>(j)] =
            (static_cast<double>(x[j]) - col_shift[static_cast<std::size_t>(j)]) /
            col_scale[static_cast<std::size_t>(j)];
    }
    for (std::size_t layer = 0; layer < mlp_w.size(); ++layer) {
        const Mat64& w = mlp_w[layer];
        const auto& b = mlp_b[layer];
        std::vector<double> out(w.cols);
        for (std::size_t o = 0; o < w.cols; ++o) {
            double acc = b[o];
            for (std::size_t i = 0; i < w.rows; ++i) acc += h[i] * w(i, o);
            out[o] = (layer + 1 < mlp_w.size()) ? std::tanh(acc) : acc;
        }
        h = std::move(out);
    }
    return h[0];
}

int TaskGenerator::label_of_score(double s) const {
    int label = 0;
    for (double t : thresholds) {
        if (s >= t) ++label;
    }
    return label;
}

ClassAssignment assign_classes_at(const std::vector<double>& scores,
                                  const std::vector<double>& quantiles) {
    const std::size_t n = scores.size();
    if (n < quantiles.size() + 1) throw GenerationError("assign_classes: too few scores");
    for (double s : scores) {
        if (!std::isfinite(s)) throw NumericError("assign_classes: non-finite score");
    }
    std::vector<double> sorted = scores;
    std::sort(sorted.begin(), sorted.end());
    if (sorted.front() == sorted.back()) {
        throw GenerationError("assign_classes: all scores equal");
    }

    std::vector<double> qs = quantiles;
    std::sort(qs.begin(), qs.end());
    std::vector<double> thresholds;
    for (double q : qs) {
        auto idx = static_cast<std::size_t>(std::floor(q * static_cast<double>(n)));
        idx = std::clamp<std::size_t>(idx, 1, n - 1);
        const double v = sorted[idx];
        // midpoint below the first occurrence of v keeps every sample score
        // strictly away from the threshold
        const auto first = static_cast<std::size_t>(
            std::lower_bound(sorted.begin(), sorted.end(), v) - sorted.begin());
        if (first == 0) throw GenerationError("assign_classes: quantile collapsed to minimum");
        const double t = 0.5 * (sorted[first - 1] + v);
        if (!thresholds.empty() && t <= thresholds.back()) {
            throw GenerationError("assign_classes: duplicate threshold (empty class)");
        }
        thresholds.push_back(t);
    }

    ClassAssignment out;
    out.thresholds = thresholds;
    out.labels.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        int label = 0;
        for (double t : thresholds) {
            if (scores[i] >= t) ++label;
        }
        out.labels[i] = label;
    }
    return out;
}

ClassAssignment assign_classes(const std::vector<double>& scores, int n_classes, Rng& rng) {
    if (n_classes < 2) throw ConfigError("assign_classes: need at least 2 classes");
    std::vector<double> qs(static_cast<std::size_t>(n_classes - 1));
    for (auto& q : qs) q = rng.uniform(0.05, 0.95);
    return assign_classes_at(scores, qs);
}

namespace {

TaskGenerator draw_generator(Rng& rng, int d, int depth, int width) {
    TaskGenerator gen;
    gen.n_features = d;
    int in_dim = d;
    for (int layer = 0; layer < depth; ++layer) {
        const bool last = layer + 1 == depth;
        const int out_dim = last ? 1 : width;
        Mat64 w(static_cast<std::size_t>(in_dim), static_cast<std::size_t>(out_dim));
        const double std = 1.0 / std::sqrt(static_cast<double>(in_dim));
        for (auto& v : w.data) v = rng.normal() * std;
        std::vector<double> b(static_cast<std::size_t>(out_dim));
        for (auto& v : b) v = rng.normal() * 0.1;
        gen.mlp_w.push_back(std::move(w));
        gen.mlp_b.push_back(std::move(b));
        in_dim = out_dim;
    }
    return gen;
}

}  // namespace

SyntheticTask sample_task(const PriorConfig& cfg, std::uint64_t task_seed) {
    Rng rng(task_seed);
    const int d = static_cast<int>(rng.uniform_int(cfg.min_features, cfg.max_features));
    const int n_classes = static_cast<int>(rng.uniform_int(cfg.min_classes, cfg.max_classes));
    const auto n = static_cast<std::size_t>(rng.uniform_int(cfg.min_rows, cfg.max_rows));
    const double noise = rng.uniform(cfg.min_label_noise, cfg.max_label_noise);

    for (int attempt = 0; attempt < 100; ++attempt) {
        // raw inputs, unit variance per column
        Mat64 raw(n, static_cast<std::size_t>(d));
        std::vector<bool> gaussian(static_cast<std::size_t>(d));
        for (int j = 0; j < d; ++j) gaussian[static_cast<std::size_t>(j)] = rng.bernoulli(cfg.gaussian_weight);
        for (std::size_t i = 0; i < n; ++i) {
            for (int j = 0; j < d; ++j) {
                raw(i, static_cast<std::size_t>(j)) = gaussian[static_cast<std::size_t>(j)]
                                                          ? rng.normal()
                                                          : rng.uniform(-1.7320508075688772, 1.7320508075688772);
            }
        }
        // integer grids on a random column subset
        for (int j = 0; j < d; ++j) {
            if (!rng.bernoulli(cfg.quantize_prob)) continue;
            const auto levels = static_cast<double>(rng.uniform_int(2, 8));
            double lo = raw(0, static_cast<std::size_t>(j)), hi = lo;
            for (std::size_t i = 1; i < n; ++i) {
                lo = std::min(lo, raw(i, static_cast<std::size_t>(j)));
                hi = std::max(hi, raw(i, static_cast<std::size_t>(j)));
            }
            const double span = hi > lo ? hi - lo : 1.0;
            for (std::size_t i = 0; i < n; ++i) {
                auto& v = raw(i, static_cast<std::size_t>(j));
                v = std::round((v - lo) / span * (levels - 1.0));
            }
        }
        // standardize, then re-scale and shift; the generator stores the
        // affine so scoring can undo it
        TaskGenerator gen = draw_generator(
            rng, d, static_cast<int>(rng.uniform_int(cfg.min_depth, cfg.max_depth)),
            static_cast<int>(rng.uniform_int(cfg.min_width, cfg.max_width)));
        gen.n_classes = n_classes;
        gen.col_scale.resize(static_cast<std::size_t>(d));
        gen.col_shift.resize(static_cast<std::size_t>(d));
        Mat32 x(n, static_cast<std::size_t>(d));
        for (int j = 0; j < d; ++j) {
            const auto col = static_cast<std::size_t>(j);
            double mean = 0.0;
            for (std::size_t i = 0; i < n; ++i) mean += raw(i, col);
            mean /= static_cast<double>(n);
            double var = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                const double dv = raw(i, col) - mean;
                var += dv * dv;
            }
            var /= static_cast<double>(n);
            const double std = var > 0.0 ? std::sqrt(var) : 1.0;
            // x_final = scale*z + shift; score() recovers z from the
            // stored affine, so the generator acts on standardized inputs
            const double scale = std::exp(rng.uniform(-1.0, 1.0));
            const double shift = rng.normal();
            gen.col_scale[col] = scale;
            gen.col_shift[col] = shift;
            for (std::size_t i = 0; i < n; ++i) {
                const double z = (raw(i, col) - mean) / std;
                x(i, col) = static_cast<float>(z * scale + shift);
            }
        }

        // score the float-rounded features through the generator itself
        std::vector<double> scores(n);
        for (std::size_t i = 0; i < n; ++i) scores[i] = gen.score(x.row(i));

        ClassAssignment assignment;
        try {
            assignment = assign_classes(scores, n_classes, rng);
        } catch (const GenerationError&) {
            continue;
        }
        gen.thresholds = assignment.thresholds;

        std::vector<int> y = assignment.labels;
        for (auto& label : y) {
            if (noise > 0.0 && rng.bernoulli(noise)) {
                int other = static_cast<int>(rng.uniform_int(0, n_classes - 2));
                if (other >= label) ++other;
                label = other;
            }
        }

        std::vector<int> counts(static_cast<std::size_t>(n_classes), 0);
        for (int label : y) ++counts[static_cast<std::size_t>(label)];
        const bool ok = std::all_of(counts.begin(), counts.end(), [](int c) { return c >= 2; });
        if (!ok) continue;

        SyntheticTask task;
        task.x = std::move(x);
        task.y = std::move(y);
        task.seed = task_seed;
        task.label_noise = noise;
        task.gen = std::move(gen);
        return task;
    }
    throw GenerationError("sample_task: no valid task after 100 attempts (seed " +
                          std::to_string(task_seed) + ")");
}

std::vector<int> bayes_oracle(const TaskGenerator& gen, const Mat32& x_query) {
    if (x_query.cols != static_cast<std::size_t>(gen.n_features)) {
        throw DimensionError("bayes_oracle: feature width mismatch");
    }
    std::vector<int> labels(x_query.rows);
    for (std::size_t i = 0; i < x_query.rows; ++i) {
        labels[i] = gen.label_of_score(gen.score(x_query.row(i)));
    }
    return labels;
}

std::uint64_t TaskStream::seed_for(std::uint64_t index) const {
    std::uint64_t h = hash_combine(0xCBF29CE484222325ULL, cfg_.seed);
    h = hash_combine(h, std::string_view("task"));
    h = hash_combine(h, salt_);
    h = hash_combine(h, index);
    return h;
}

PriorConfig default_prior() {
    PriorConfig cfg;
    cfg.max_features = 8;
    cfg.max_classes = 4;
    cfg.min_rows = 32;
    cfg.max_rows = 192;
    cfg.max_label_noise = 0.05;
    return cfg;
}

PriorConfig linear_prior() {
    PriorConfig cfg;
    cfg.min_features = 2;
    cfg.max_features = 4;
    cfg.min_classes = 2;
    cfg.max_classes = 2;
    cfg.min_rows = 48;
    cfg.max_rows = 160;
    cfg.min_depth = 1;
    cfg.max_depth = 1;
    cfg.min_label_noise = 0.0;
    cfg.max_label_noise = 0.0;
    cfg.quantize_prob = 0.0;
    return cfg;
}

}  // namespace pfnbench
