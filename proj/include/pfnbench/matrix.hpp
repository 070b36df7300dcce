#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <string>
#include <vector>

#include "pfnbench/errors.hpp"

namespace pfnbench {

// Dense row-major matrix. The model path instantiates T = float, test
// oracles instantiate T = double. Reductions run in a fixed left-to-right
// order so identical inputs give bit-identical outputs on one platform.
template <typename T>
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<T> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, T fill = T(0)) : rows(r), cols(c), data(r * c, fill) {}
    Matrix(std::size_t r, std::size_t c, std::vector<T> d) : rows(r), cols(c), data(std::move(d)) {
        if (data.size() != rows * cols) {
            throw DimensionError("Matrix: data length " + std::to_string(data.size()) +
                                 " != " + std::to_string(rows) + "x" + std::to_string(cols));
        }
    }

    static Matrix from_rows(std::initializer_list<std::initializer_list<T>> rs) {
        Matrix m(rs.size(), rs.size() ? rs.begin()->size() : 0);
        std::size_t i = 0;
        for (const auto& r : rs) {
            if (r.size() != m.cols) throw DimensionError("Matrix::from_rows: ragged rows");
            std::size_t j = 0;
            for (T v : r) m(i, j++) = v;
            ++i;
        }
        return m;
    }

    T& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    const T& operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

    T* row(std::size_t i) { return data.data() + i * cols; }
    const T* row(std::size_t i) const { return data.data() + i * cols; }

    std::size_t size() const { return data.size(); }

    void fill(T v) { std::fill(data.begin(), data.end(), v); }
    void zero() { fill(T(0)); }

    bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }

    bool all_finite() const {
        for (T v : data) {
            if (!std::isfinite(static_cast<double>(v))) return false;
        }
        return true;
    }

    template <typename U>
    Matrix<U> cast() const {
        Matrix<U> out(rows, cols);
        for (std::size_t i = 0; i < data.size(); ++i) out.data[i] = static_cast<U>(data[i]);
        return out;
    }
};

using Mat32 = Matrix<float>;
using Mat64 = Matrix<double>;

// Row-major boolean mask; 1 = attention allowed.
struct BoolMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<std::uint8_t> data;

    BoolMatrix() = default;
    BoolMatrix(std::size_t r, std::size_t c, bool fill = false)
        : rows(r), cols(c), data(r * c, fill ? 1 : 0) {}

    std::uint8_t& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    const std::uint8_t& operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
};

template <typename T>
void require_finite(const Matrix<T>& m, const char* what) {
    if (!m.all_finite()) throw NumericError(std::string(what) + ": non-finite entries");
}

// c = a * b with ikj loop order: the inner loop walks contiguous rows of b
// and c, and the accumulation order per output element is fixed.
template <typename T>
Matrix<T> matmul(const Matrix<T>& a, const Matrix<T>& b) {
    if (a.cols != b.rows) {
        throw DimensionError("matmul: " + std::to_string(a.rows) + "x" + std::to_string(a.cols) +
                             " * " + std::to_string(b.rows) + "x" + std::to_string(b.cols));
    }
    Matrix<T> c(a.rows, b.cols);
    for (std::size_t i = 0; i < a.rows; ++i) {
        const T* arow = a.row(i);
        T* crow = c.row(i);
        for (std::size_t k = 0; k < a.cols; ++k) {
            const T aik = arow[k];
            const T* brow = b.row(k);
            for (std::size_t j = 0; j < b.cols; ++j) crow[j] += aik * brow[j];
        }
    }
    return c;
}

// Dot product over 16 striped partial sums, combined in a fixed order.
// The striping exists so the loop vectorizes without the compiler having
// to reassociate a serial reduction; the order is still deterministic.
template <typename T>
T dot_striped(const T* a, const T* b, std::size_t n) {
    T acc[16] = {};
    std::size_t k = 0;
    for (; k + 16 <= n; k += 16) {
        for (std::size_t u = 0; u < 16; ++u) acc[u] += a[k + u] * b[k + u];
    }
    for (std::size_t u = 0; k + u < n; ++u) acc[u] += a[k + u] * b[k + u];
    T total = T(0);
    for (std::size_t u = 0; u < 16; ++u) total += acc[u];
    return total;
}

// c = a * b^T; rows of both operands are contiguous.
template <typename T>
Matrix<T> matmul_abt(const Matrix<T>& a, const Matrix<T>& b) {
    if (a.cols != b.cols) throw DimensionError("matmul_abt: inner dimensions differ");
    Matrix<T> c(a.rows, b.rows);
    for (std::size_t i = 0; i < a.rows; ++i) {
        const T* arow = a.row(i);
        for (std::size_t j = 0; j < b.rows; ++j) {
            c(i, j) = dot_striped(arow, b.row(j), a.cols);
        }
    }
    return c;
}

// c = a^T * b without materializing the transpose.
template <typename T>
Matrix<T> matmul_atb(const Matrix<T>& a, const Matrix<T>& b) {
    if (a.rows != b.rows) throw DimensionError("matmul_atb: row counts differ");
    Matrix<T> c(a.cols, b.cols);
    for (std::size_t i = 0; i < a.rows; ++i) {
        const T* arow = a.row(i);
        const T* brow = b.row(i);
        for (std::size_t k = 0; k < a.cols; ++k) {
            const T aik = arow[k];
            T* crow = c.row(k);
            for (std::size_t j = 0; j < b.cols; ++j) crow[j] += aik * brow[j];
        }
    }
    return c;
}

template <typename T>
void add_inplace(Matrix<T>& a, const Matrix<T>& b) {
    if (!a.same_shape(b)) throw DimensionError("add_inplace: shape mismatch");
    for (std::size_t i = 0; i < a.data.size(); ++i) a.data[i] += b.data[i];
}

template <typename T>
void axpy_inplace(Matrix<T>& a, T scale, const Matrix<T>& b) {
    if (!a.same_shape(b)) throw DimensionError("axpy_inplace: shape mismatch");
    for (std::size_t i = 0; i < a.data.size(); ++i) a.data[i] += scale * b.data[i];
}

template <typename T>
void scale_inplace(Matrix<T>& a, T s) {
    for (T& v : a.data) v *= s;
}

template <typename T>
Matrix<T> transpose(const Matrix<T>& a) {
    Matrix<T> t(a.cols, a.rows);
    for (std::size_t i = 0; i < a.rows; ++i)
        for (std::size_t j = 0; j < a.cols; ++j) t(j, i) = a(i, j);
    return t;
}

template <typename T>
T max_abs_diff(const Matrix<T>& a, const Matrix<T>& b) {
    if (!a.same_shape(b)) throw DimensionError("max_abs_diff: shape mismatch");
    T m = T(0);
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        T d = std::abs(a.data[i] - b.data[i]);
        if (d > m) m = d;
    }
    return m;
}

}  // namespace pfnbench
