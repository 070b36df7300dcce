#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "pfnbench/matrix.hpp"
#include "pfnbench/rng.hpp"

namespace pfnbench::testing {

// Gradient comparison: |a - b| <= tol * max(1, |a|, |b|). Entries much
// smaller than 1 are compared absolutely, everything else relatively.
inline bool grads_close(double analytic, double reference, double tol) {
    const double scale = std::max({1.0, std::abs(analytic), std::abs(reference)});
    return std::abs(analytic - reference) <= tol * scale;
}

inline double max_grad_err(const std::vector<double>& analytic,
                           const std::vector<double>& reference) {
    double worst = 0.0;
    for (std::size_t i = 0; i < analytic.size(); ++i) {
        const double scale = std::max({1.0, std::abs(analytic[i]), std::abs(reference[i])});
        worst = std::max(worst, std::abs(analytic[i] - reference[i]) / scale);
    }
    return worst;
}

template <typename T>
Matrix<T> random_matrix(Rng& rng, std::size_t rows, std::size_t cols, double scale = 1.0) {
    Matrix<T> m(rows, cols);
    for (auto& v : m.data) v = static_cast<T>(rng.normal() * scale);
    return m;
}

}  // namespace pfnbench::testing
