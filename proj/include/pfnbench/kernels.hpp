#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "pfnbench/errors.hpp"
#include "pfnbench/matrix.hpp"

namespace pfnbench {

// Forward and hand-derived backward kernels for the fixed PFN architecture.
// No autodiff tape: each forward caches what its backward needs, callers
// chain them in reverse order.

// Additive mask bias. exp(x - max) underflows to exactly 0 for any allowed
// row maximum, which is what makes masked attention weights exactly zero.
inline constexpr double kMaskNegInf = -1e9;

// ---------------------------------------------------------------- softmax

template <typename T>
Matrix<T> softmax_rows(const Matrix<T>& m) {
    require_finite(m, "softmax_rows");
    Matrix<T> out(m.rows, m.cols);
    for (std::size_t i = 0; i < m.rows; ++i) {
        const T* x = m.row(i);
        T* y = out.row(i);
        T mx = x[0];
        for (std::size_t j = 1; j < m.cols; ++j) mx = std::max(mx, x[j]);
        T sum = T(0);
        for (std::size_t j = 0; j < m.cols; ++j) {
            y[j] = std::exp(x[j] - mx);
            sum += y[j];
        }
        const T inv = T(1) / sum;
        for (std::size_t j = 0; j < m.cols; ++j) y[j] *= inv;
    }
    return out;
}

// dx given y = softmax_rows(x) and upstream dy.
template <typename T>
Matrix<T> softmax_rows_backward(const Matrix<T>& y, const Matrix<T>& dy) {
    if (!y.same_shape(dy)) throw DimensionError("softmax_rows_backward: shape mismatch");
    Matrix<T> dx(y.rows, y.cols);
    for (std::size_t i = 0; i < y.rows; ++i) {
        const T* yr = y.row(i);
        const T* dr = dy.row(i);
        T dot = T(0);
        for (std::size_t j = 0; j < y.cols; ++j) dot += yr[j] * dr[j];
        T* o = dx.row(i);
        for (std::size_t j = 0; j < y.cols; ++j) o[j] = yr[j] * (dr[j] - dot);
    }
    return dx;
}

// -------------------------------------------------------------- layer norm

template <typename T>
struct LayerNormCache {
    Matrix<T> xhat;            // normalized input, pre gain/bias
    std::vector<T> inv_std;    // 1/sqrt(var + eps) per row
};

template <typename T>
Matrix<T> layer_norm(const Matrix<T>& m, const std::vector<T>& gain, const std::vector<T>& bias,
                     T eps, LayerNormCache<T>* cache = nullptr) {
    if (gain.size() != m.cols || bias.size() != m.cols) {
        throw DimensionError("layer_norm: gain/bias length != cols");
    }
    Matrix<T> out(m.rows, m.cols);
    if (cache) {
        cache->xhat = Matrix<T>(m.rows, m.cols);
        cache->inv_std.assign(m.rows, T(0));
    }
    for (std::size_t i = 0; i < m.rows; ++i) {
        const T* x = m.row(i);
        T mean = T(0);
        for (std::size_t j = 0; j < m.cols; ++j) mean += x[j];
        mean /= static_cast<T>(m.cols);
        T var = T(0);
        for (std::size_t j = 0; j < m.cols; ++j) {
            const T d = x[j] - mean;
            var += d * d;
        }
        var /= static_cast<T>(m.cols);
        const T inv_std = T(1) / std::sqrt(var + eps);
        T* y = out.row(i);
        for (std::size_t j = 0; j < m.cols; ++j) {
            const T xh = (x[j] - mean) * inv_std;
            y[j] = gain[j] * xh + bias[j];
            if (cache) cache->xhat(i, j) = xh;
        }
        if (cache) cache->inv_std[i] = inv_std;
    }
    return out;
}

template <typename T>
Matrix<T> layer_norm_backward(const Matrix<T>& dy, const LayerNormCache<T>& cache,
                              const std::vector<T>& gain, std::vector<T>& dgain,
                              std::vector<T>& dbias) {
    const std::size_t n = dy.cols;
    Matrix<T> dx(dy.rows, dy.cols);
    for (std::size_t i = 0; i < dy.rows; ++i) {
        const T* dr = dy.row(i);
        const T* xh = cache.xhat.row(i);
        T sum_dxhat = T(0);
        T sum_dxhat_xhat = T(0);
        for (std::size_t j = 0; j < n; ++j) {
            const T dxhat = dr[j] * gain[j];
            sum_dxhat += dxhat;
            sum_dxhat_xhat += dxhat * xh[j];
            dgain[j] += dr[j] * xh[j];
            dbias[j] += dr[j];
        }
        const T inv_n = T(1) / static_cast<T>(n);
        const T inv_std = cache.inv_std[i];
        T* o = dx.row(i);
        for (std::size_t j = 0; j < n; ++j) {
            const T dxhat = dr[j] * gain[j];
            o[j] = inv_std * (dxhat - sum_dxhat * inv_n - xh[j] * (sum_dxhat_xhat * inv_n));
        }
    }
    return dx;
}

// -------------------------------------------------------------------- gelu

// Tanh approximation: 0.5*x*(1 + tanh(sqrt(2/pi)*(x + 0.044715*x^3))).
// Constants: sqrt(2/pi) = 0.7978845608028654, cubic coefficient 0.044715.
inline constexpr double kGeluScale = 0.7978845608028654;
inline constexpr double kGeluCubic = 0.044715;

template <typename T>
Matrix<T> gelu(const Matrix<T>& m) {
    require_finite(m, "gelu");
    Matrix<T> out(m.rows, m.cols);
    for (std::size_t i = 0; i < m.data.size(); ++i) {
        const T x = m.data[i];
        const T u = static_cast<T>(kGeluScale) * (x + static_cast<T>(kGeluCubic) * x * x * x);
        out.data[i] = T(0.5) * x * (T(1) + std::tanh(u));
    }
    return out;
}

template <typename T>
Matrix<T> gelu_backward(const Matrix<T>& x, const Matrix<T>& dy) {
    if (!x.same_shape(dy)) throw DimensionError("gelu_backward: shape mismatch");
    Matrix<T> dx(x.rows, x.cols);
    for (std::size_t i = 0; i < x.data.size(); ++i) {
        const T v = x.data[i];
        const T u = static_cast<T>(kGeluScale) * (v + static_cast<T>(kGeluCubic) * v * v * v);
        const T t = std::tanh(u);
        const T du = static_cast<T>(kGeluScale) * (T(1) + T(3) * static_cast<T>(kGeluCubic) * v * v);
        const T grad = T(0.5) * (T(1) + t) + T(0.5) * v * (T(1) - t * t) * du;
        dx.data[i] = dy.data[i] * grad;
    }
    return dx;
}

// --------------------------------------------------------- masked attention

template <typename T>
struct AttentionCache {
    Matrix<T> weights;  // post-softmax attention weights, masked entries exactly 0
};

// softmax((q k^T)/sqrt(d) + mask_bias) v. Disallowed keys get additive
// kMaskNegInf before the softmax, which yields exactly zero weight.
template <typename T>
Matrix<T> masked_attention(const Matrix<T>& q, const Matrix<T>& k, const Matrix<T>& v,
                           const BoolMatrix& mask, AttentionCache<T>* cache = nullptr) {
    if (q.cols != k.cols) throw DimensionError("masked_attention: q/k width mismatch");
    if (k.rows != v.rows) throw DimensionError("masked_attention: k/v row mismatch");
    if (mask.rows != q.rows || mask.cols != k.rows) {
        throw DimensionError("masked_attention: mask shape mismatch");
    }
    for (std::size_t i = 0; i < mask.rows; ++i) {
        bool any = false;
        for (std::size_t j = 0; j < mask.cols; ++j) any |= (mask(i, j) != 0);
        if (!any) {
            throw NumericError("masked_attention: row " + std::to_string(i) + " has no allowed key");
        }
    }
    const T scale = T(1) / std::sqrt(static_cast<T>(q.cols));
    Matrix<T> scores = matmul_abt(q, k);
    for (std::size_t i = 0; i < scores.rows; ++i) {
        T* s = scores.row(i);
        for (std::size_t j = 0; j < scores.cols; ++j) {
            s[j] = mask(i, j) ? s[j] * scale : static_cast<T>(kMaskNegInf);
        }
    }
    Matrix<T> weights = softmax_rows(scores);
    Matrix<T> out = matmul(weights, v);
    if (cache) cache->weights = std::move(weights);
    return out;
}

template <typename T>
struct AttentionGrads {
    Matrix<T> dq, dk, dv;
};

template <typename T>
AttentionGrads<T> masked_attention_backward(const Matrix<T>& q, const Matrix<T>& k,
                                            const Matrix<T>& v, const AttentionCache<T>& cache,
                                            const Matrix<T>& dout) {
    const T scale = T(1) / std::sqrt(static_cast<T>(q.cols));
    AttentionGrads<T> g;
    g.dv = matmul_atb(cache.weights, dout);
    Matrix<T> dweights = matmul_abt(dout, v);
    // Masked entries have weight exactly 0, so their score grads vanish too.
    Matrix<T> dscores = softmax_rows_backward(cache.weights, dweights);
    scale_inplace(dscores, scale);
    g.dq = matmul(dscores, k);
    g.dk = matmul_atb(dscores, q);
    return g;
}

// ------------------------------------------------------------ cross entropy

// Mean over rows of -log softmax(logits)[target], restricted to the first
// active_cols columns (0 = all). Targets must index an active column.
template <typename T>
double cross_entropy(const Matrix<T>& logits, const std::vector<int>& targets,
                     std::size_t active_cols = 0, Matrix<T>* dlogits = nullptr) {
    if (targets.size() != logits.rows) throw DimensionError("cross_entropy: target count != rows");
    const std::size_t nc = active_cols == 0 ? logits.cols : active_cols;
    if (nc > logits.cols) throw DimensionError("cross_entropy: active_cols > logits.cols");
    if (dlogits) *dlogits = Matrix<T>(logits.rows, logits.cols);
    double total = 0.0;
    const T inv_rows = T(1) / static_cast<T>(logits.rows);
    for (std::size_t i = 0; i < logits.rows; ++i) {
        const int t = targets[i];
        if (t < 0 || static_cast<std::size_t>(t) >= nc) {
            throw IndexError("cross_entropy: target " + std::to_string(t) + " out of range [0," +
                             std::to_string(nc) + ") at row " + std::to_string(i));
        }
        const T* x = logits.row(i);
        T mx = x[0];
        for (std::size_t j = 1; j < nc; ++j) mx = std::max(mx, x[j]);
        T sum = T(0);
        for (std::size_t j = 0; j < nc; ++j) sum += std::exp(x[j] - mx);
        const T log_z = std::log(sum) + mx;
        total += static_cast<double>(log_z - x[static_cast<std::size_t>(t)]);
        if (dlogits) {
            T* d = dlogits->row(i);
            const T inv_sum = T(1) / sum;
            for (std::size_t j = 0; j < nc; ++j) {
                d[j] = std::exp(x[j] - mx) * inv_sum * inv_rows;
            }
            d[static_cast<std::size_t>(t)] -= inv_rows;
        }
    }
    const double loss = total / static_cast<double>(logits.rows);
    if (!std::isfinite(loss)) throw NumericError("cross_entropy: non-finite loss");
    return loss;
}

// ------------------------------------------------------------ linear layer

// y = x W + b, W is in x out, b is 1 x out.
template <typename T>
Matrix<T> linear(const Matrix<T>& x, const Matrix<T>& w, const Matrix<T>& b) {
    if (b.rows != 1 || b.cols != w.cols) throw DimensionError("linear: bias shape");
    Matrix<T> y = matmul(x, w);
    for (std::size_t i = 0; i < y.rows; ++i) {
        T* r = y.row(i);
        for (std::size_t j = 0; j < y.cols; ++j) r[j] += b.data[j];
    }
    return y;
}

template <typename T>
Matrix<T> linear_backward(const Matrix<T>& x, const Matrix<T>& w, const Matrix<T>& dy,
                          Matrix<T>& dw, Matrix<T>& db) {
    add_inplace(dw, matmul_atb(x, dy));
    for (std::size_t i = 0; i < dy.rows; ++i) {
        const T* r = dy.row(i);
        for (std::size_t j = 0; j < dy.cols; ++j) db.data[j] += r[j];
    }
    return matmul_abt(dy, w);
}

// ---------------------------------------------------------------- GradPair

template <typename T>
struct GradPair {
    Matrix<T> value;
    Matrix<T> grad;

    GradPair() = default;
    explicit GradPair(Matrix<T> v) : value(std::move(v)), grad(value.rows, value.cols) {}
    GradPair(std::size_t r, std::size_t c) : value(r, c), grad(r, c) {}

    void zero_grad() { grad.zero(); }
};

// --------------------------------------------------------------------- Adam

template <typename T>
struct AdamState {
    double lr = 3e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    std::uint64_t step = 0;
    std::vector<Matrix<T>> m;
    std::vector<Matrix<T>> v;

    template <typename Params>
    void init(const Params& params) {
        m.clear();
        v.clear();
        for (const auto* p : params) {
            m.emplace_back(p->value.rows, p->value.cols);
            v.emplace_back(p->value.rows, p->value.cols);
        }
        step = 0;
    }
};

// One bias-corrected Adam update over matching (params, state) lists.
template <typename T>
void adam_step(const std::vector<GradPair<T>*>& params, AdamState<T>& state) {
    if (state.m.size() != params.size() || state.v.size() != params.size()) {
        throw DimensionError("adam_step: state/param count mismatch");
    }
    state.step += 1;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
    for (std::size_t p = 0; p < params.size(); ++p) {
        auto& value = params[p]->value;
        const auto& grad = params[p]->grad;
        auto& m = state.m[p];
        auto& v = state.v[p];
        if (!value.same_shape(grad) || !value.same_shape(m)) {
            throw DimensionError("adam_step: shape mismatch at param " + std::to_string(p));
        }
        for (std::size_t i = 0; i < value.data.size(); ++i) {
            const double g = static_cast<double>(grad.data[i]);
            const double mi = state.beta1 * static_cast<double>(m.data[i]) + (1.0 - state.beta1) * g;
            const double vi =
                state.beta2 * static_cast<double>(v.data[i]) + (1.0 - state.beta2) * g * g;
            m.data[i] = static_cast<T>(mi);
            v.data[i] = static_cast<T>(vi);
            const double mhat = mi / bc1;
            const double vhat = vi / bc2;
            value.data[i] -= static_cast<T>(state.lr * mhat / (std::sqrt(vhat) + state.eps));
        }
    }
}

// --------------------------------------------------------- finite differences

// Central differences (f(x+eps e_i) - f(x-eps e_i)) / 2eps per coordinate.
// Verification oracle; always 64-bit.
inline std::vector<double> finite_diff_grad(const std::function<double(const std::vector<double>&)>& f,
                                            const std::vector<double>& x, double eps) {
    std::vector<double> g(x.size());
    std::vector<double> probe = x;
    for (std::size_t i = 0; i < x.size(); ++i) {
        probe[i] = x[i] + eps;
        const double fp = f(probe);
        probe[i] = x[i] - eps;
        const double fm = f(probe);
        probe[i] = x[i];
        if (!std::isfinite(fp) || !std::isfinite(fm)) {
            throw NumericError("finite_diff_grad: non-finite function value at coordinate " +
                               std::to_string(i));
        }
        g[i] = (fp - fm) / (2.0 * eps);
    }
    return g;
}

}  // namespace pfnbench
