#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pfnbench/matrix.hpp"

namespace pfnbench {

// Nonparametric ranking pipeline: per-block ranks, Friedman omnibus test,
// pairwise exact/approximate Wilcoxon, Holm step-down correction and
// critical-difference-style indistinguishability groups.

// Rank 1 = best; ties share the average rank.
std::vector<double> rank_scores(const std::vector<double>& scores, bool higher_better);

// Regularized upper incomplete gamma Q(df/2, x/2); absolute error <= 1e-8.
double chi_square_survival(double x, double df);

struct FriedmanResult {
    double statistic = 0.0;
    double p = 1.0;
    std::size_t n_blocks = 0;
    std::size_t k_methods = 0;
};

// rank_matrix: one row per block, each row a (tied-average) ranking of the
// k methods. Requires k >= 3 (use Wilcoxon directly for two methods).
FriedmanResult friedman_test(const Matrix<double>& rank_matrix);

struct WilcoxonResult {
    double w_plus = 0.0;
    double w_minus = 0.0;
    double statistic = 0.0;  // min(w_plus, w_minus)
    double p = 1.0;          // two-sided
    bool exact = false;      // full sign enumeration vs normal approximation
    bool degenerate = false; // every difference was zero
    std::size_t n_effective = 0;
};

// Signed-rank test with average ranks for tied |differences|. Exact p by
// full 2^n enumeration when n <= exact_limit, otherwise a tie-corrected
// normal approximation with continuity correction.
WilcoxonResult wilcoxon_signed_rank(const std::vector<double>& a, const std::vector<double>& b,
                                    std::size_t exact_limit = 12);

// Holm step-down adjustment, returned in the input order and clipped at 1.
std::vector<double> holm_adjust(const std::vector<double>& p_values);

// Maximal sets of methods whose every internal pair has adjusted p >= alpha.
// p_adjusted is symmetric; the diagonal is ignored. Groups are ordered by
// their best average rank and deduplicated (non-maximal sets dropped).
std::vector<std::vector<int>> significance_groups(const std::vector<double>& avg_ranks,
                                                  const Matrix<double>& p_adjusted, double alpha);

// -------------------------------------------------------- combined summary

struct RankSummary {
    std::vector<std::string> methods;
    std::vector<double> avg_ranks;
    FriedmanResult friedman;
    bool friedman_applicable = false;  // k >= 3
    bool pairwise_performed = false;   // omnibus rejected (or k == 2)
    Matrix<double> p_raw;              // k x k symmetric; 1 on the diagonal
    Matrix<double> p_adjusted;
    std::vector<std::vector<int>> groups;
    double alpha = 0.05;
};

// scores: n_blocks x k_methods, one paired observation per block. Follows
// the protocol: rank per block, Friedman omnibus, then pairwise Wilcoxon
// with Holm correction only when the omnibus rejects at alpha (pairwise is
// run directly when k == 2).
RankSummary rank_analysis(const Matrix<double>& scores, const std::vector<std::string>& methods,
                          bool higher_better, double alpha = 0.05, std::size_t exact_limit = 12);

}  // namespace pfnbench
