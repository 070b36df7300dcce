#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "pfnbench/errors.hpp"
#include "pfnbench/kernels.hpp"
#include "pfnbench/matrix.hpp"
#include "pfnbench/rng.hpp"

namespace pfnbench {

// Encoder-only in-context classifier: (feature, label) pairs and unlabeled
// queries enter as tokens, an asymmetric mask restricts attention, the
// output head reads class logits off the query positions in one pass.

struct ModelConfig {
    int d_model = 128;
    int n_layers = 4;
    int n_heads = 4;
    int d_ff = 256;
    int max_features = 20;     // features are zero-padded to this width
    int max_classes = 4;       // logit columns / class embedding rows
    int max_train_tokens = 512;
    int max_query_tokens = 512;

    void validate() const {
        if (d_model <= 0 || n_layers <= 0 || n_heads <= 0 || d_ff <= 0) {
            throw ConfigError("ModelConfig: dimensions must be positive");
        }
        if (d_model % n_heads != 0) {
            throw ConfigError("ModelConfig: d_model must be divisible by n_heads");
        }
        if (max_features < 1) throw ConfigError("ModelConfig: max_features must be >= 1");
        if (max_classes < 2 || max_classes > 10) {
            throw ConfigError("ModelConfig: max_classes must be in [2, 10]");
        }
        if (max_train_tokens < 1 || max_query_tokens < 1) {
            throw ConfigError("ModelConfig: token capacities must be >= 1");
        }
    }

    bool operator==(const ModelConfig&) const = default;
};

// One in-context problem instance: labeled context rows plus query rows.
struct ContextBatch {
    Mat32 x_train;               // n_train x d
    std::vector<int> y_train;    // class indices
    Mat32 x_query;               // n_query x d
};

template <typename T>
struct LayerWeights {
    GradPair<T> wq, bq, wk, bk, wv, bv, wo, bo;
    GradPair<T> ln1_g, ln1_b, ln2_g, ln2_b;
    GradPair<T> ff1_w, ff1_b, ff2_w, ff2_b;
};

template <typename T>
struct PfnWeights {
    ModelConfig cfg;
    GradPair<T> feat_w, feat_b;   // max_features x d_model, 1 x d_model
    GradPair<T> class_emb;        // max_classes x d_model
    GradPair<T> mask_emb;         // 1 x d_model, added to query tokens
    std::vector<LayerWeights<T>> layers;
    GradPair<T> final_ln_g, final_ln_b;
    GradPair<T> head_w, head_b;   // d_model x max_classes, 1 x max_classes

    explicit PfnWeights(const ModelConfig& c = ModelConfig{}) : cfg(c) {
        cfg.validate();
        const auto d = static_cast<std::size_t>(cfg.d_model);
        const auto ff = static_cast<std::size_t>(cfg.d_ff);
        feat_w = GradPair<T>(static_cast<std::size_t>(cfg.max_features), d);
        feat_b = GradPair<T>(1, d);
        class_emb = GradPair<T>(static_cast<std::size_t>(cfg.max_classes), d);
        mask_emb = GradPair<T>(1, d);
        layers.clear();
        for (int l = 0; l < cfg.n_layers; ++l) {
            LayerWeights<T> lw;
            lw.wq = GradPair<T>(d, d);
            lw.bq = GradPair<T>(1, d);
            lw.wk = GradPair<T>(d, d);
            lw.bk = GradPair<T>(1, d);
            lw.wv = GradPair<T>(d, d);
            lw.bv = GradPair<T>(1, d);
            lw.wo = GradPair<T>(d, d);
            lw.bo = GradPair<T>(1, d);
            lw.ln1_g = GradPair<T>(1, d);
            lw.ln1_b = GradPair<T>(1, d);
            lw.ln2_g = GradPair<T>(1, d);
            lw.ln2_b = GradPair<T>(1, d);
            lw.ff1_w = GradPair<T>(d, ff);
            lw.ff1_b = GradPair<T>(1, ff);
            lw.ff2_w = GradPair<T>(ff, d);
            lw.ff2_b = GradPair<T>(1, d);
            layers.push_back(std::move(lw));
        }
        final_ln_g = GradPair<T>(1, d);
        final_ln_b = GradPair<T>(1, d);
        head_w = GradPair<T>(d, static_cast<std::size_t>(cfg.max_classes));
        head_b = GradPair<T>(1, static_cast<std::size_t>(cfg.max_classes));
    }

    // Stable iteration order; serialization, Adam and the gradient checker
    // all rely on it.
    template <typename Fn>
    void for_each(Fn&& fn) {
        visit(*this, fn);
    }
    template <typename Fn>
    void for_each(Fn&& fn) const {
        visit(*this, fn);
    }

    std::vector<GradPair<T>*> params() {
        std::vector<GradPair<T>*> out;
        for_each([&](const std::string&, GradPair<T>& p) { out.push_back(&p); });
        return out;
    }

    void zero_grad() {
        for_each([](const std::string&, GradPair<T>& p) { p.zero_grad(); });
    }

    std::size_t param_count() {
        std::size_t n = 0;
        for_each([&](const std::string&, GradPair<T>& p) { n += p.value.size(); });
        return n;
    }

    // Layer-norm gains start at 1, the output head at exactly zero (so an
    // untrained model emits uniform logits), everything else small normal.
    void init(Rng& rng, double weight_std = 0.02) {
        for_each([&](const std::string& name, GradPair<T>& p) {
            if (name.find("ln1_g") != std::string::npos ||
                name.find("ln2_g") != std::string::npos || name == "final_ln_g") {
                p.value.fill(T(1));
            } else if (name == "head_w" || name == "head_b") {
                p.value.zero();
            } else if (name.find("_b") != std::string::npos && name.find("ln") == std::string::npos) {
                p.value.zero();
            } else {
                for (auto& v : p.value.data) v = static_cast<T>(rng.normal() * weight_std);
            }
        });
    }

    template <typename U>
    PfnWeights<U> cast() {
        PfnWeights<U> out(cfg);
        auto src = params();
        auto dst = out.params();
        for (std::size_t i = 0; i < src.size(); ++i) dst[i]->value = src[i]->value.template cast<U>();
        return out;
    }

private:
    template <typename Self, typename Fn>
    static void visit(Self& self, Fn& fn) {
        fn("feat_w", self.feat_w);
        fn("feat_b", self.feat_b);
        fn("class_emb", self.class_emb);
        fn("mask_emb", self.mask_emb);
        for (std::size_t l = 0; l < self.layers.size(); ++l) {
            const std::string p = "layer" + std::to_string(l) + ".";
            auto& lw = self.layers[l];
            fn(p + "wq", lw.wq);
            fn(p + "bq", lw.bq);
            fn(p + "wk", lw.wk);
            fn(p + "bk", lw.bk);
            fn(p + "wv", lw.wv);
            fn(p + "bv", lw.bv);
            fn(p + "wo", lw.wo);
            fn(p + "bo", lw.bo);
            fn(p + "ln1_g", lw.ln1_g);
            fn(p + "ln1_b", lw.ln1_b);
            fn(p + "ln2_g", lw.ln2_g);
            fn(p + "ln2_b", lw.ln2_b);
            fn(p + "ff1_w", lw.ff1_w);
            fn(p + "ff1_b", lw.ff1_b);
            fn(p + "ff2_w", lw.ff2_w);
            fn(p + "ff2_b", lw.ff2_b);
        }
        fn("final_ln_g", self.final_ln_g);
        fn("final_ln_b", self.final_ln_b);
        fn("head_w", self.head_w);
        fn("head_b", self.head_b);
    }
};

// Training fingerprint baked into the checkpoint.
struct Fingerprint {
    std::uint64_t prior_hash = 0;
    std::uint64_t seed = 0;
    std::uint64_t steps = 0;

    bool operator==(const Fingerprint&) const = default;
};

struct Checkpoint {
    PfnWeights<float> weights;
    Fingerprint fingerprint;

    explicit Checkpoint(const ModelConfig& cfg = ModelConfig{}) : weights(cfg) {}
    const ModelConfig& config() const { return weights.cfg; }
};

// ----------------------------------------------------------------- masking

// Every row (train and query alike) may attend exactly to the train keys:
// train rows see each other, query rows see only train rows and never
// themselves or other queries.
inline BoolMatrix build_attention_mask(std::size_t n_train, std::size_t n_query) {
    if (n_train == 0) throw ConfigError("build_attention_mask: n_train must be >= 1");
    const std::size_t n = n_train + n_query;
    BoolMatrix mask(n, n, false);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n_train; ++j) mask(i, j) = 1;
    }
    return mask;
}

// ------------------------------------------------------------------ tokens

namespace detail {

template <typename T>
Matrix<T> col_slice(const Matrix<T>& m, std::size_t c0, std::size_t c1) {
    Matrix<T> out(m.rows, c1 - c0);
    for (std::size_t i = 0; i < m.rows; ++i) {
        const T* src = m.row(i) + c0;
        std::copy(src, src + (c1 - c0), out.row(i));
    }
    return out;
}

template <typename T>
void col_slice_set(Matrix<T>& dst, std::size_t c0, const Matrix<T>& src) {
    for (std::size_t i = 0; i < src.rows; ++i) {
        std::copy(src.row(i), src.row(i) + src.cols, dst.row(i) + c0);
    }
}

template <typename T>
void validate_batch(const PfnWeights<T>& w, const ContextBatch& batch) {
    const auto& cfg = w.cfg;
    if (batch.x_train.rows == 0) throw ConfigError("ContextBatch: n_train must be >= 1");
    if (batch.y_train.size() != batch.x_train.rows) {
        throw DimensionError("ContextBatch: y_train length != n_train");
    }
    if (batch.x_query.rows > 0 && batch.x_query.cols != batch.x_train.cols) {
        throw DimensionError("ContextBatch: train/query feature widths differ");
    }
    if (batch.x_train.cols > static_cast<std::size_t>(cfg.max_features)) {
        throw CapacityError("ContextBatch: " + std::to_string(batch.x_train.cols) +
                            " features exceed capacity " + std::to_string(cfg.max_features));
    }
    for (int y : batch.y_train) {
        if (y < 0 || y >= cfg.max_classes) {
            throw CapacityError("ContextBatch: class " + std::to_string(y) +
                                " outside [0, " + std::to_string(cfg.max_classes) + ")");
        }
    }
    if (batch.x_train.rows > static_cast<std::size_t>(cfg.max_train_tokens)) {
        throw CapacityError("ContextBatch: " + std::to_string(batch.x_train.rows) +
                            " train rows exceed capacity " + std::to_string(cfg.max_train_tokens));
    }
    if (batch.x_query.rows > static_cast<std::size_t>(cfg.max_query_tokens)) {
        throw CapacityError("ContextBatch: " + std::to_string(batch.x_query.rows) +
                            " query rows exceed capacity " + std::to_string(cfg.max_query_tokens));
    }
    if (!batch.x_train.all_finite() || !batch.x_query.all_finite()) {
        throw NumericError("ContextBatch: non-finite features");
    }
}

}  // namespace detail

// Token per row: zero-padded features through the shared projection, plus
// the label embedding (train rows) or the learned masked-label embedding
// (query rows). No positional encoding.
template <typename T>
Matrix<T> encode_tokens(const PfnWeights<T>& w, const ContextBatch& batch) {
    detail::validate_batch(w, batch);
    const std::size_t n_train = batch.x_train.rows;
    const std::size_t n_query = batch.x_query.rows;
    const std::size_t n = n_train + n_query;
    const auto d_model = static_cast<std::size_t>(w.cfg.d_model);
    const std::size_t d_in = batch.x_train.cols;

    Matrix<T> tokens(n, d_model);
    for (std::size_t i = 0; i < n; ++i) {
        const bool is_train = i < n_train;
        const float* x = is_train ? batch.x_train.row(i) : batch.x_query.row(i - n_train);
        T* tok = tokens.row(i);
        // xpad * feat_w: only the first d_in rows of feat_w contribute,
        // zero padding adds nothing.
        for (std::size_t k = 0; k < d_in; ++k) {
            const T xk = static_cast<T>(x[k]);
            const T* wrow = w.feat_w.value.row(k);
            for (std::size_t j = 0; j < d_model; ++j) tok[j] += xk * wrow[j];
        }
        const T* bias = w.feat_b.value.row(0);
        const T* emb = is_train ? w.class_emb.value.row(static_cast<std::size_t>(batch.y_train[i]))
                                : w.mask_emb.value.row(0);
        for (std::size_t j = 0; j < d_model; ++j) tok[j] += bias[j] + emb[j];
    }
    return tokens;
}

// ----------------------------------------------------------------- forward

template <typename T>
struct LayerCache {
    LayerNormCache<T> ln1, ln2;
    Matrix<T> a;                 // post-ln1 input to q/k/v projections
    Matrix<T> q, k, v;           // full-width projections
    std::vector<AttentionCache<T>> heads;
    Matrix<T> cat;               // concatenated head outputs, input to wo
    Matrix<T> x_mid;             // residual after attention
    Matrix<T> b;                 // post-ln2 input to ffn
    Matrix<T> f1;                // pre-gelu
    Matrix<T> g;                 // post-gelu
};

template <typename T>
struct ForwardCache {
    Matrix<T> tokens;
    std::vector<LayerCache<T>> layers;
    LayerNormCache<T> final_ln;
    Matrix<T> x_final;           // input to final layer norm
    Matrix<T> z_query;           // normalized query rows, input to the head
    std::size_t n_train = 0;
    std::size_t n_query = 0;
};

constexpr double kLayerNormEps = 1e-5;

// Pre-norm transformer stack under the asymmetric mask; the head reads only
// query positions. Returns n_query x max_classes logits.
template <typename T>
Matrix<T> forward(const PfnWeights<T>& w, const ContextBatch& batch, ForwardCache<T>* cache = nullptr) {
    const std::size_t n_train = batch.x_train.rows;
    const std::size_t n_query = batch.x_query.rows;
    const auto d_model = static_cast<std::size_t>(w.cfg.d_model);
    const auto n_heads = static_cast<std::size_t>(w.cfg.n_heads);
    const std::size_t d_head = d_model / n_heads;
    const T eps = static_cast<T>(kLayerNormEps);

    Matrix<T> x = encode_tokens(w, batch);
    const BoolMatrix mask = build_attention_mask(n_train, n_query);

    if (cache) {
        cache->tokens = x;
        cache->layers.assign(w.layers.size(), LayerCache<T>{});
        cache->n_train = n_train;
        cache->n_query = n_query;
    }

    for (std::size_t l = 0; l < w.layers.size(); ++l) {
        auto& lw = w.layers[l];
        LayerCache<T>* lc = cache ? &cache->layers[l] : nullptr;

        Matrix<T> a = layer_norm(x, lw.ln1_g.value.data, lw.ln1_b.value.data, eps,
                                 lc ? &lc->ln1 : nullptr);
        Matrix<T> q = linear(a, lw.wq.value, lw.bq.value);
        Matrix<T> k = linear(a, lw.wk.value, lw.bk.value);
        Matrix<T> v = linear(a, lw.wv.value, lw.bv.value);

        Matrix<T> cat(x.rows, d_model);
        if (lc) lc->heads.assign(n_heads, AttentionCache<T>{});
        for (std::size_t h = 0; h < n_heads; ++h) {
            const std::size_t c0 = h * d_head;
            Matrix<T> qh = detail::col_slice(q, c0, c0 + d_head);
            Matrix<T> kh = detail::col_slice(k, c0, c0 + d_head);
            Matrix<T> vh = detail::col_slice(v, c0, c0 + d_head);
            Matrix<T> oh = masked_attention(qh, kh, vh, mask, lc ? &lc->heads[h] : nullptr);
            detail::col_slice_set(cat, c0, oh);
        }
        Matrix<T> o = linear(cat, lw.wo.value, lw.bo.value);
        Matrix<T> x_mid = x;
        add_inplace(x_mid, o);

        Matrix<T> b = layer_norm(x_mid, lw.ln2_g.value.data, lw.ln2_b.value.data, eps,
                                 lc ? &lc->ln2 : nullptr);
        Matrix<T> f1 = linear(b, lw.ff1_w.value, lw.ff1_b.value);
        Matrix<T> g = gelu(f1);
        Matrix<T> f2 = linear(g, lw.ff2_w.value, lw.ff2_b.value);

        if (lc) {
            lc->a = std::move(a);
            lc->q = std::move(q);
            lc->k = std::move(k);
            lc->v = std::move(v);
            lc->cat = std::move(cat);
            lc->x_mid = x_mid;
            lc->b = std::move(b);
            lc->f1 = std::move(f1);
            lc->g = std::move(g);
        }
        x = std::move(x_mid);
        add_inplace(x, f2);
    }

    if (cache) cache->x_final = x;
    Matrix<T> z = layer_norm(x, w.final_ln_g.value.data, w.final_ln_b.value.data, eps,
                             cache ? &cache->final_ln : nullptr);

    Matrix<T> z_query(n_query, d_model);
    for (std::size_t i = 0; i < n_query; ++i) {
        std::copy(z.row(n_train + i), z.row(n_train + i) + d_model, z_query.row(i));
    }
    if (cache) cache->z_query = z_query;
    return linear(z_query, w.head_w.value, w.head_b.value);
}

// Accumulates parameter gradients for one forward pass into `grads` (which
// may be the weights object itself, or a separate accumulator when several
// tasks run in parallel). dlogits has the shape of forward()'s output.
template <typename T>
void backward(const PfnWeights<T>& w, const ContextBatch& batch, const ForwardCache<T>& cache,
              const Matrix<T>& dlogits, PfnWeights<T>& grads) {
    const std::size_t n_train = cache.n_train;
    const std::size_t n_query = cache.n_query;
    const std::size_t n = n_train + n_query;
    const auto d_model = static_cast<std::size_t>(w.cfg.d_model);
    const auto n_heads = static_cast<std::size_t>(w.cfg.n_heads);
    const std::size_t d_head = d_model / n_heads;

    Matrix<T> dzq =
        linear_backward(cache.z_query, w.head_w.value, dlogits, grads.head_w.grad, grads.head_b.grad);
    Matrix<T> dz(n, d_model);
    for (std::size_t i = 0; i < n_query; ++i) {
        std::copy(dzq.row(i), dzq.row(i) + d_model, dz.row(n_train + i));
    }
    Matrix<T> dx = layer_norm_backward(dz, cache.final_ln, w.final_ln_g.value.data,
                                       grads.final_ln_g.grad.data, grads.final_ln_b.grad.data);

    for (std::size_t li = w.layers.size(); li-- > 0;) {
        const auto& lw = w.layers[li];
        auto& lg = grads.layers[li];
        const auto& lc = cache.layers[li];

        // x_out = x_mid + ff2(gelu(ff1(ln2(x_mid))))
        Matrix<T> dg = linear_backward(lc.g, lw.ff2_w.value, dx, lg.ff2_w.grad, lg.ff2_b.grad);
        Matrix<T> df1 = gelu_backward(lc.f1, dg);
        Matrix<T> db = linear_backward(lc.b, lw.ff1_w.value, df1, lg.ff1_w.grad, lg.ff1_b.grad);
        Matrix<T> dx_mid = layer_norm_backward(db, lc.ln2, lw.ln2_g.value.data, lg.ln2_g.grad.data,
                                               lg.ln2_b.grad.data);
        add_inplace(dx_mid, dx);

        // x_mid = x_in + wo(concat(heads))
        Matrix<T> dcat =
            linear_backward(lc.cat, lw.wo.value, dx_mid, lg.wo.grad, lg.bo.grad);
        Matrix<T> dq(n, d_model), dk(n, d_model), dv(n, d_model);
        for (std::size_t h = 0; h < n_heads; ++h) {
            const std::size_t c0 = h * d_head;
            Matrix<T> qh = detail::col_slice(lc.q, c0, c0 + d_head);
            Matrix<T> kh = detail::col_slice(lc.k, c0, c0 + d_head);
            Matrix<T> vh = detail::col_slice(lc.v, c0, c0 + d_head);
            Matrix<T> doh = detail::col_slice(dcat, c0, c0 + d_head);
            AttentionGrads<T> ag = masked_attention_backward(qh, kh, vh, lc.heads[h], doh);
            detail::col_slice_set(dq, c0, ag.dq);
            detail::col_slice_set(dk, c0, ag.dk);
            detail::col_slice_set(dv, c0, ag.dv);
        }
        Matrix<T> da = linear_backward(lc.a, lw.wq.value, dq, lg.wq.grad, lg.bq.grad);
        add_inplace(da, linear_backward(lc.a, lw.wk.value, dk, lg.wk.grad, lg.bk.grad));
        add_inplace(da, linear_backward(lc.a, lw.wv.value, dv, lg.wv.grad, lg.bv.grad));
        Matrix<T> dx_in = layer_norm_backward(da, lc.ln1, lw.ln1_g.value.data, lg.ln1_g.grad.data,
                                              lg.ln1_b.grad.data);
        add_inplace(dx_in, dx_mid);
        dx = std::move(dx_in);
    }

    // Token construction: xpad*feat_w + feat_b + embedding.
    const std::size_t d_in = batch.x_train.cols;
    for (std::size_t i = 0; i < n; ++i) {
        const bool is_train = i < n_train;
        const float* x = is_train ? batch.x_train.row(i) : batch.x_query.row(i - n_train);
        const T* dtok = dx.row(i);
        for (std::size_t k = 0; k < d_in; ++k) {
            const T xk = static_cast<T>(x[k]);
            T* wrow = grads.feat_w.grad.row(k);
            for (std::size_t j = 0; j < d_model; ++j) wrow[j] += xk * dtok[j];
        }
        T* bgrad = grads.feat_b.grad.row(0);
        T* egrad = is_train ? grads.class_emb.grad.row(static_cast<std::size_t>(batch.y_train[i]))
                            : grads.mask_emb.grad.row(0);
        for (std::size_t j = 0; j < d_model; ++j) {
            bgrad[j] += dtok[j];
            egrad[j] += dtok[j];
        }
    }
}

template <typename T>
void backward(PfnWeights<T>& w, const ContextBatch& batch, const ForwardCache<T>& cache,
              const Matrix<T>& dlogits) {
    backward(w, batch, cache, dlogits, w);
}

// ------------------------------------------------------------- predictions

struct ProbaResult {
    Mat64 proba;               // n_query x n_active, rows sum to 1
    std::vector<int> classes;  // original label per probability column, ascending
};

namespace detail {

// Label permutations ensembled at predict time: every permutation while
// that stays cheap, cyclic rotations beyond.
inline std::vector<std::vector<int>> label_permutations(std::size_t n) {
    std::vector<std::vector<int>> perms;
    if (n <= 3) {
        std::vector<int> p(n);
        for (std::size_t i = 0; i < n; ++i) p[i] = static_cast<int>(i);
        do {
            perms.push_back(p);
        } while (std::next_permutation(p.begin(), p.end()));
    } else {
        for (std::size_t r = 0; r < n; ++r) {
            std::vector<int> p(n);
            for (std::size_t i = 0; i < n; ++i) p[i] = static_cast<int>((i + r) % n);
            perms.push_back(std::move(p));
        }
    }
    return perms;
}

}  // namespace detail

// Remaps the context labels to a contiguous range and softmaxes the logit
// columns of the classes that are actually present. Predictions average
// over label permutations of the context, which makes the probabilities
// equivariant under class relabeling (the class embeddings alone would not
// be). Column i of the result corresponds to classes[i] in the caller's
// space.
inline ProbaResult predict_proba(const Checkpoint& ckpt, const ContextBatch& batch) {
    std::vector<int> present = batch.y_train;
    std::sort(present.begin(), present.end());
    present.erase(std::unique(present.begin(), present.end()), present.end());
    const std::size_t n_active = present.size();

    std::vector<int> contiguous(batch.y_train.size());
    for (std::size_t i = 0; i < batch.y_train.size(); ++i) {
        contiguous[i] = static_cast<int>(
            std::lower_bound(present.begin(), present.end(), batch.y_train[i]) - present.begin());
    }

    const auto perms = detail::label_permutations(n_active);
    ContextBatch remapped = batch;
    ProbaResult res;
    res.proba = Mat64(batch.x_query.rows, n_active);
    res.classes = std::move(present);
    std::vector<double> member(n_active);
    for (const auto& perm : perms) {
        for (std::size_t i = 0; i < contiguous.size(); ++i) {
            remapped.y_train[i] = perm[static_cast<std::size_t>(contiguous[i])];
        }
        const Mat32 logits = forward(ckpt.weights, remapped);
        for (std::size_t i = 0; i < logits.rows; ++i) {
            const float* row = logits.row(i);
            double mx = row[0];
            for (std::size_t c = 1; c < n_active; ++c) mx = std::max(mx, static_cast<double>(row[c]));
            double sum = 0.0;
            for (std::size_t c = 0; c < n_active; ++c) {
                member[c] = std::exp(static_cast<double>(row[c]) - mx);
                sum += member[c];
            }
            // logit column perm[c] carries the class fed as embedding perm[c],
            // i.e. original class column c
            for (std::size_t c = 0; c < n_active; ++c) {
                res.proba(i, c) += member[static_cast<std::size_t>(perm[c])] / sum;
            }
        }
    }
    const double inv = 1.0 / static_cast<double>(perms.size());
    for (auto& v : res.proba.data) v *= inv;
    return res;
}

// Lowest index wins exact ties.
inline std::size_t argmax_lowest(const double* row, std::size_t n) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < n; ++j) {
        if (row[j] > row[best]) best = j;
    }
    return best;
}

// Argmax over predict_proba; ties break to the lowest class index.
inline std::vector<int> predict(const Checkpoint& ckpt, const ContextBatch& batch) {
    const ProbaResult res = predict_proba(ckpt, batch);
    std::vector<int> out(res.proba.rows);
    for (std::size_t i = 0; i < res.proba.rows; ++i) {
        out[i] = res.classes[argmax_lowest(res.proba.row(i), res.proba.cols)];
    }
    return out;
}

}  // namespace pfnbench
