#include "pfnbench/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "pfnbench/errors.hpp"

namespace pfnbench {

std::vector<double> rank_scores(const std::vector<double>& scores, bool higher_better) {
    if (scores.size() < 2) throw ConfigError("rank_scores: need at least 2 methods");
    const std::size_t n = scores.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
        return higher_better ? scores[i] > scores[j] : scores[i] < scores[j];
    });
    std::vector<double> ranks(n, 0.0);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
        const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = avg;
        i = j + 1;
    }
    return ranks;
}

// ------------------------------------------------------------- chi-square

namespace {

// Regularized incomplete gamma by series (P) or continued fraction (Q),
// switching at x = a + 1.
double gamma_p_series(double a, double x) {
    double term = 1.0 / a;
    double sum = term;
    double ap = a;
    for (int it = 0; it < 500; ++it) {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if (std::abs(term) < std::abs(sum) * 1e-15) break;
    }
    return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

double gamma_q_contfrac(double a, double x) {
    const double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i <= 500; ++i) {
        const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::abs(delta - 1.0) < 1e-15) break;
    }
    return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

}  // namespace

double chi_square_survival(double x, double df) {
    if (x < 0.0) throw ConfigError("chi_square_survival: x must be >= 0");
    if (df < 1.0) throw ConfigError("chi_square_survival: df must be >= 1");
    if (x == 0.0) return 1.0;
    const double a = df / 2.0;
    const double xx = x / 2.0;
    if (xx < a + 1.0) return 1.0 - gamma_p_series(a, xx);
    return gamma_q_contfrac(a, xx);
}

FriedmanResult friedman_test(const Matrix<double>& rank_matrix) {
    const std::size_t n = rank_matrix.rows;
    const std::size_t k = rank_matrix.cols;
    if (k < 3) {
        throw ConfigError("friedman_test: needs k >= 3 methods (use Wilcoxon directly)");
    }
    if (n < 1) throw ConfigError("friedman_test: needs at least one block");

    FriedmanResult res;
    res.n_blocks = n;
    res.k_methods = k;
    double sum_sq = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
        double mean = 0.0;
        for (std::size_t i = 0; i < n; ++i) mean += rank_matrix(i, j);
        mean /= static_cast<double>(n);
        sum_sq += mean * mean;
    }
    const double nn = static_cast<double>(n);
    const double kk = static_cast<double>(k);
    res.statistic = 12.0 * nn / (kk * (kk + 1.0)) * sum_sq - 3.0 * nn * (kk + 1.0);
    if (res.statistic < 0.0 && res.statistic > -1e-9) res.statistic = 0.0;
    res.p = chi_square_survival(res.statistic, kk - 1.0);
    return res;
}

// --------------------------------------------------------------- Wilcoxon

namespace {

double normal_cdf(double z) { return 0.5 * std::erfc(-z / 1.4142135623730951); }

}  // namespace

WilcoxonResult wilcoxon_signed_rank(const std::vector<double>& a, const std::vector<double>& b,
                                    std::size_t exact_limit) {
    if (a.size() != b.size()) throw DimensionError("wilcoxon_signed_rank: length mismatch");

    std::vector<double> diffs;
    diffs.reserve(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        if (d != 0.0) diffs.push_back(d);
    }
    WilcoxonResult res;
    res.n_effective = diffs.size();
    if (diffs.empty()) {
        res.degenerate = true;
        res.p = 1.0;
        return res;
    }
    if (diffs.size() < 5) {
        throw ConfigError("wilcoxon_signed_rank: need >= 5 nonzero differences, have " +
                          std::to_string(diffs.size()));
    }
    const std::size_t n = diffs.size();

    // average ranks of |d|
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
        return std::abs(diffs[i]) < std::abs(diffs[j]);
    });
    std::vector<double> ranks(n, 0.0);
    std::vector<std::size_t> tie_sizes;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && std::abs(diffs[order[j + 1]]) == std::abs(diffs[order[i]])) ++j;
        const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = avg;
        tie_sizes.push_back(j - i + 1);
        i = j + 1;
    }

    for (std::size_t t = 0; t < n; ++t) {
        if (diffs[t] > 0.0) res.w_plus += ranks[t];
        else res.w_minus += ranks[t];
    }
    res.statistic = std::min(res.w_plus, res.w_minus);
    const double rank_sum = static_cast<double>(n) * static_cast<double>(n + 1) / 2.0;

    if (n <= exact_limit) {
        // full enumeration of sign assignments; count both tails
        res.exact = true;
        const std::uint64_t total = 1ULL << n;
        const double low = res.statistic + 1e-9;
        const double high = rank_sum - res.statistic - 1e-9;
        std::uint64_t count = 0;
        for (std::uint64_t mask = 0; mask < total; ++mask) {
            double t = 0.0;
            for (std::size_t bit = 0; bit < n; ++bit) {
                if (mask & (1ULL << bit)) t += ranks[bit];
            }
            if (t <= low || t >= high) ++count;
        }
        res.p = std::min(1.0, static_cast<double>(count) / static_cast<double>(total));
    } else {
        const double nn = static_cast<double>(n);
        const double mean = nn * (nn + 1.0) / 4.0;
        double var = nn * (nn + 1.0) * (2.0 * nn + 1.0) / 24.0;
        for (std::size_t tie : tie_sizes) {
            const double t = static_cast<double>(tie);
            var -= (t * t * t - t) / 48.0;
        }
        if (var <= 0.0) {
            res.degenerate = true;
            res.p = 1.0;
            return res;
        }
        const double z = (res.statistic - mean + 0.5) / std::sqrt(var);
        res.p = std::min(1.0, 2.0 * normal_cdf(z));
    }
    return res;
}

std::vector<double> holm_adjust(const std::vector<double>& p_values) {
    const std::size_t m = p_values.size();
    for (double p : p_values) {
        if (p < 0.0 || p > 1.0) throw ConfigError("holm_adjust: p outside [0, 1]");
    }
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t i, std::size_t j) { return p_values[i] < p_values[j]; });
    std::vector<double> adjusted(m, 0.0);
    double running_max = 0.0;
    for (std::size_t idx = 0; idx < m; ++idx) {
        const double scaled = static_cast<double>(m - idx) * p_values[order[idx]];
        running_max = std::max(running_max, scaled);
        adjusted[order[idx]] = std::min(1.0, running_max);
    }
    return adjusted;
}

std::vector<std::vector<int>> significance_groups(const std::vector<double>& avg_ranks,
                                                  const Matrix<double>& p_adjusted, double alpha) {
    const std::size_t k = avg_ranks.size();
    if (p_adjusted.rows != k || p_adjusted.cols != k) {
        throw DimensionError("significance_groups: p matrix shape mismatch");
    }
    if (k > 20) throw ConfigError("significance_groups: too many methods for clique enumeration");

    // adjacency: "not significantly different"
    auto connected = [&](std::size_t i, std::size_t j) {
        return i == j || p_adjusted(i, j) >= alpha;
    };

    std::vector<std::uint32_t> cliques;
    const std::uint32_t all = k == 32 ? 0xFFFFFFFFu : ((1u << k) - 1u);
    for (std::uint32_t set = 1; set <= all; ++set) {
        bool is_clique = true;
        for (std::size_t i = 0; i < k && is_clique; ++i) {
            if (!(set & (1u << i))) continue;
            for (std::size_t j = i + 1; j < k && is_clique; ++j) {
                if (!(set & (1u << j))) continue;
                is_clique = connected(i, j);
            }
        }
        if (is_clique) cliques.push_back(set);
    }
    // keep maximal cliques only
    std::vector<std::uint32_t> maximal;
    for (std::uint32_t c : cliques) {
        bool dominated = false;
        for (std::uint32_t o : cliques) {
            if (o != c && (o & c) == c) {
                dominated = true;
                break;
            }
        }
        if (!dominated) maximal.push_back(c);
    }

    std::vector<std::vector<int>> groups;
    for (std::uint32_t set : maximal) {
        std::vector<int> members;
        for (std::size_t i = 0; i < k; ++i) {
            if (set & (1u << i)) members.push_back(static_cast<int>(i));
        }
        std::sort(members.begin(), members.end(),
                  [&](int i, int j) { return avg_ranks[static_cast<std::size_t>(i)] <
                                             avg_ranks[static_cast<std::size_t>(j)]; });
        groups.push_back(std::move(members));
    }
    std::sort(groups.begin(), groups.end(), [&](const auto& g1, const auto& g2) {
        return avg_ranks[static_cast<std::size_t>(g1.front())] <
               avg_ranks[static_cast<std::size_t>(g2.front())];
    });
    return groups;
}

RankSummary rank_analysis(const Matrix<double>& scores, const std::vector<std::string>& methods,
                          bool higher_better, double alpha, std::size_t exact_limit) {
    const std::size_t n = scores.rows;
    const std::size_t k = scores.cols;
    if (methods.size() != k) throw DimensionError("rank_analysis: method name count mismatch");
    if (k < 2) throw ConfigError("rank_analysis: need at least 2 methods");
    if (n < 1) throw ConfigError("rank_analysis: need at least 1 block");

    RankSummary out;
    out.methods = methods;
    out.alpha = alpha;

    Matrix<double> rank_matrix(n, k);
    out.avg_ranks.assign(k, 0.0);
    std::vector<double> row(k);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < k; ++j) row[j] = scores(i, j);
        const auto ranks = rank_scores(row, higher_better);
        for (std::size_t j = 0; j < k; ++j) {
            rank_matrix(i, j) = ranks[j];
            out.avg_ranks[j] += ranks[j];
        }
    }
    for (auto& r : out.avg_ranks) r /= static_cast<double>(n);

    out.friedman_applicable = k >= 3;
    if (out.friedman_applicable) {
        out.friedman = friedman_test(rank_matrix);
        out.pairwise_performed = out.friedman.p < alpha;
    } else {
        out.pairwise_performed = true;  // two methods: Wilcoxon directly
    }

    out.p_raw = Matrix<double>(k, k, 1.0);
    out.p_adjusted = Matrix<double>(k, k, 1.0);
    if (out.pairwise_performed) {
        std::vector<double> flat;
        std::vector<std::pair<std::size_t, std::size_t>> pairs;
        std::vector<double> col_a(n), col_b(n);
        for (std::size_t i = 0; i < k; ++i) {
            for (std::size_t j = i + 1; j < k; ++j) {
                for (std::size_t r = 0; r < n; ++r) {
                    col_a[r] = scores(r, i);
                    col_b[r] = scores(r, j);
                }
                const auto w = wilcoxon_signed_rank(col_a, col_b, exact_limit);
                out.p_raw(i, j) = out.p_raw(j, i) = w.p;
                flat.push_back(w.p);
                pairs.emplace_back(i, j);
            }
        }
        const auto adjusted = holm_adjust(flat);
        for (std::size_t idx = 0; idx < pairs.size(); ++idx) {
            out.p_adjusted(pairs[idx].first, pairs[idx].second) = adjusted[idx];
            out.p_adjusted(pairs[idx].second, pairs[idx].first) = adjusted[idx];
        }
        out.groups = significance_groups(out.avg_ranks, out.p_adjusted, alpha);
    } else {
        // omnibus failed to reject: all methods form one indistinguishable group
        std::vector<int> everyone(k);
        std::iota(everyone.begin(), everyone.end(), 0);
        std::sort(everyone.begin(), everyone.end(), [&](int i, int j) {
            return out.avg_ranks[static_cast<std::size_t>(i)] <
                   out.avg_ranks[static_cast<std::size_t>(j)];
        });
        out.groups.push_back(std::move(everyone));
    }
    return out;
}

}  // namespace pfnbench
