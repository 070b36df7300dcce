#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "pfnbench/efficiency.hpp"
#include "pfnbench/metrics.hpp"
#include "pfnbench/pareto.hpp"
#include "pfnbench/stats.hpp"
#include "test_support.hpp"

using namespace pfnbench;

// ---------------------------------------------------------------- metrics

TEST_CASE("f1_binary closed forms and conventions") {
    CHECK(f1_binary({8, 2, 2, 0}) == doctest::Approx(0.8).epsilon(1e-12));
    CHECK(f1_binary({10, 0, 0, 5}) == 1.0);
    CHECK(f1_binary({0, 0, 0, 12}) == 0.0);  // nothing predicted, nothing present
}

TEST_CASE("f1_binary equals the harmonic mean of precision and recall") {
    Rng rng(1);
    for (int trial = 0; trial < 200; ++trial) {
        ConfusionCounts c;
        c.tp = static_cast<std::int64_t>(rng.index(20));
        c.fp = static_cast<std::int64_t>(rng.index(20));
        c.fn = static_cast<std::int64_t>(rng.index(20));
        c.tn = static_cast<std::int64_t>(rng.index(20));
        if (c.tp + c.fp == 0 || c.tp + c.fn == 0) continue;  // precision/recall undefined
        const double precision = static_cast<double>(c.tp) / (c.tp + c.fp);
        const double recall = static_cast<double>(c.tp) / (c.tp + c.fn);
        if (precision + recall == 0.0) continue;
        const double harmonic = 2.0 * precision * recall / (precision + recall);
        CHECK(f1_binary(c) == doctest::Approx(harmonic).epsilon(1e-12));
    }
}

TEST_CASE("f1_macro oracles") {
    // perfect 4-class prediction
    std::vector<int> truth{0, 1, 2, 3, 0, 1, 2, 3};
    CHECK(f1_macro(truth, truth, 4) == 1.0);

    // binary symmetric case equals the mean of the two class-wise F1s
    std::vector<int> yt{0, 0, 1, 1, 1};
    std::vector<int> yp{0, 1, 1, 1, 0};
    const double f0 = f1_binary(binary_confusion(yt, yp, 0));
    const double f1 = f1_binary(binary_confusion(yt, yp, 1));
    CHECK(f1_macro(yt, yp, 2) == doctest::Approx((f0 + f1) / 2.0).epsilon(1e-12));

    // random instances against the per-class enumeration oracle
    Rng rng(2);
    for (int trial = 0; trial < 100; ++trial) {
        const int n_classes = 4;
        std::vector<int> a(30), b(30);
        for (std::size_t i = 0; i < a.size(); ++i) {
            a[i] = static_cast<int>(rng.index(n_classes));
            b[i] = static_cast<int>(rng.index(n_classes));
        }
        double expect = 0.0;
        for (int c = 0; c < n_classes; ++c) {
            std::int64_t tp = 0, fp = 0, fn = 0;
            for (std::size_t i = 0; i < a.size(); ++i) {
                if (a[i] == c && b[i] == c) ++tp;
                if (a[i] != c && b[i] == c) ++fp;
                if (a[i] == c && b[i] != c) ++fn;
            }
            expect += (2 * tp + fp + fn) == 0
                          ? 0.0
                          : 2.0 * static_cast<double>(tp) / static_cast<double>(2 * tp + fp + fn);
        }
        expect /= n_classes;
        CHECK(f1_macro(a, b, n_classes) == doctest::Approx(expect).epsilon(1e-12));
    }
}

TEST_CASE("accuracy basics") {
    std::vector<int> a{1, 2, 3, 4};
    CHECK(accuracy(a, a) == 1.0);
    CHECK(accuracy(a, {4, 3, 2, 1}) == 0.0);
    CHECK(accuracy(a, {1, 2, 3, 0}) == 0.75);
    CHECK_THROWS_AS(accuracy({}, {}), DimensionError);
    CHECK_THROWS_AS(accuracy({1}, {1, 2}), DimensionError);
}

// ------------------------------------------------------------------ ranks

TEST_CASE("rank_scores conventions and oracle") {
    CHECK(rank_scores({0.9, 0.8, 0.7}, true) == std::vector<double>{1, 2, 3});
    CHECK(rank_scores({0.9, 0.9, 0.7}, true) == std::vector<double>{1.5, 1.5, 3});
    CHECK(rank_scores({5.0, 1.0, 3.0}, false) == std::vector<double>{3, 1, 2});

    Rng rng(3);
    for (int trial = 0; trial < 1000; ++trial) {
        std::vector<double> scores(2 + rng.index(6));
        for (auto& s : scores) s = std::round(rng.uniform() * 10.0) / 10.0;  // force ties
        const auto ranks = rank_scores(scores, true);
        // sort-based oracle: rank = average position among sorted descending
        for (std::size_t i = 0; i < scores.size(); ++i) {
            double below = 0.0, equal = 0.0;
            for (double s : scores) {
                if (s > scores[i]) below += 1.0;
                if (s == scores[i]) equal += 1.0;
            }
            const double expect = below + (equal + 1.0) / 2.0;
            CHECK(ranks[i] == doctest::Approx(expect).epsilon(1e-12));
        }
    }
}

// ------------------------------------------------------------- chi-square

TEST_CASE("chi_square_survival pinned values") {
    CHECK(chi_square_survival(0.0, 3) == 1.0);
    // df=2 closed form: exp(-x/2)
    CHECK(chi_square_survival(2.0, 2) == doctest::Approx(std::exp(-1.0)).epsilon(1e-10));
    // published critical value
    CHECK(std::abs(chi_square_survival(14.067, 7) - 0.050) <= 5e-4);
    CHECK(std::abs(chi_square_survival(5.99, 2) - 0.05) <= 1e-3);
}

TEST_CASE("friedman_test pinned cases") {
    // all blocks tied: ranks (2,2,2), k=3, n=10
    Matrix<double> tied(10, 3, 2.0);
    const auto t = friedman_test(tied);
    CHECK(t.statistic == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(t.p == doctest::Approx(1.0).epsilon(1e-12));

    // identical ordering in every block: statistic 12*10/12*14 - 120 = 20
    Matrix<double> ordered(10, 3);
    for (std::size_t i = 0; i < 10; ++i) {
        ordered(i, 0) = 1;
        ordered(i, 1) = 2;
        ordered(i, 2) = 3;
    }
    const auto o = friedman_test(ordered);
    CHECK(o.statistic == doctest::Approx(20.0).epsilon(1e-9));
    CHECK(o.p < 0.001);

    Matrix<double> two(5, 2, 1.0);
    CHECK_THROWS_AS(friedman_test(two), ConfigError);
}

// --------------------------------------------------------------- Wilcoxon

namespace {

// Independent enumeration oracle (recomputes ranks itself).
double wilcoxon_exact_oracle(const std::vector<double>& a, const std::vector<double>& b) {
    std::vector<double> diffs;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] != b[i]) diffs.push_back(a[i] - b[i]);
    }
    const std::size_t n = diffs.size();
    std::vector<double> ranks(n);
    {
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
            return std::abs(diffs[i]) < std::abs(diffs[j]);
        });
        std::size_t i = 0;
        while (i < n) {
            std::size_t j = i;
            while (j + 1 < n && std::abs(diffs[order[j + 1]]) == std::abs(diffs[order[i]])) ++j;
            for (std::size_t t = i; t <= j; ++t) {
                ranks[order[t]] = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
            }
            i = j + 1;
        }
    }
    double w_plus = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (diffs[i] > 0) w_plus += ranks[i];
    }
    double total_rank = 0.0;
    for (double r : ranks) total_rank += r;
    const double w_low = std::min(w_plus, total_rank - w_plus);

    std::uint64_t extreme = 0;
    const std::uint64_t total = 1ULL << n;
    for (std::uint64_t mask = 0; mask < total; ++mask) {
        double t = 0.0;
        for (std::size_t bit = 0; bit < n; ++bit) {
            if (mask & (1ULL << bit)) t += ranks[bit];
        }
        if (t <= w_low + 1e-9 || t >= total_rank - w_low - 1e-9) ++extreme;
    }
    return std::min(1.0, static_cast<double>(extreme) / static_cast<double>(total));
}

}  // namespace

TEST_CASE("wilcoxon: all-positive differences give the extreme exact p") {
    std::vector<double> a{2, 3, 4, 5, 6, 7};
    std::vector<double> b{1, 1, 1, 1, 1, 1};
    const auto res = wilcoxon_signed_rank(a, b);
    CHECK(res.exact);
    CHECK(res.w_minus == 0.0);
    CHECK(res.p == doctest::Approx(2.0 / 64.0).epsilon(1e-12));
}

TEST_CASE("wilcoxon: p is symmetric under swapping the samples") {
    Rng rng(4);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> a(8), b(8);
        for (std::size_t i = 0; i < a.size(); ++i) {
            a[i] = rng.normal();
            b[i] = rng.normal();
        }
        const auto ab = wilcoxon_signed_rank(a, b);
        const auto ba = wilcoxon_signed_rank(b, a);
        CHECK(ab.p == doctest::Approx(ba.p).epsilon(1e-12));
        CHECK(ab.w_plus == doctest::Approx(ba.w_minus).epsilon(1e-9));
    }
}

TEST_CASE("wilcoxon exact p equals the full enumeration oracle") {
    Rng rng(5);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = 5 + rng.index(6);  // 5..10
        std::vector<double> a(n), b(n);
        for (std::size_t i = 0; i < n; ++i) {
            a[i] = rng.normal();
            // occasional tied |differences|
            b[i] = rng.bernoulli(0.3) ? a[i] - 0.5 : a[i] - rng.normal();
        }
        const auto res = wilcoxon_signed_rank(a, b);
        REQUIRE(res.exact);
        CHECK(res.p == doctest::Approx(wilcoxon_exact_oracle(a, b)).epsilon(1e-12));
    }
}

TEST_CASE("wilcoxon edge cases") {
    std::vector<double> same{1, 2, 3, 4, 5, 6};
    const auto degenerate = wilcoxon_signed_rank(same, same);
    CHECK(degenerate.degenerate);
    CHECK(degenerate.p == 1.0);

    std::vector<double> a{1, 2, 3, 4};
    std::vector<double> b{0, 0, 0, 0};
    CHECK_THROWS_AS(wilcoxon_signed_rank(a, b), ConfigError);  // < 5 nonzero diffs

    // beyond the exact limit: normal approximation, sane output
    Rng rng(6);
    std::vector<double> big_a(30), big_b(30);
    for (std::size_t i = 0; i < 30; ++i) {
        big_a[i] = rng.normal() + 0.8;
        big_b[i] = rng.normal();
    }
    const auto approx = wilcoxon_signed_rank(big_a, big_b);
    CHECK_FALSE(approx.exact);
    CHECK(approx.p >= 0.0);
    CHECK(approx.p <= 1.0);
    CHECK(approx.p < 0.05);  // strong shift must be detected
}

// ------------------------------------------------------------------- Holm

TEST_CASE("holm_adjust pinned and property cases") {
    CHECK(holm_adjust({0.03}) == std::vector<double>{0.03});

    const auto adjusted = holm_adjust({0.01, 0.02, 0.04});
    CHECK(adjusted[0] == doctest::Approx(0.03).epsilon(1e-12));
    CHECK(adjusted[1] == doctest::Approx(0.04).epsilon(1e-12));
    CHECK(adjusted[2] == doctest::Approx(0.04).epsilon(1e-12));

    Rng rng(7);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> p(1 + rng.index(8));
        for (auto& v : p) v = rng.uniform();
        const auto adj = holm_adjust(p);
        // permutation invariance: adjust a shuffled copy, map back
        std::vector<std::size_t> perm(p.size());
        std::iota(perm.begin(), perm.end(), 0);
        rng.shuffle(perm);
        std::vector<double> shuffled(p.size());
        for (std::size_t i = 0; i < p.size(); ++i) shuffled[i] = p[perm[i]];
        const auto adj_shuffled = holm_adjust(shuffled);
        for (std::size_t i = 0; i < p.size(); ++i) {
            CHECK(adj_shuffled[i] == doctest::Approx(adj[perm[i]]).epsilon(1e-12));
        }
        // monotone in raw-p order, and within [raw, 1]
        for (std::size_t i = 0; i < p.size(); ++i) {
            CHECK(adj[i] <= 1.0);
            CHECK(adj[i] >= p[i]);
            for (std::size_t j = 0; j < p.size(); ++j) {
                if (p[i] < p[j]) CHECK(adj[i] <= adj[j] + 1e-12);
            }
        }
    }
    CHECK_THROWS_AS(holm_adjust({1.2}), ConfigError);
}

// ----------------------------------------------------------------- groups

namespace {

// Brute-force maximal-clique oracle over the "not significant" graph.
std::set<std::set<int>> clique_oracle(const Matrix<double>& p, double alpha) {
    const int k = static_cast<int>(p.rows);
    std::set<std::set<int>> cliques;
    for (int set_bits = 1; set_bits < (1 << k); ++set_bits) {
        bool ok = true;
        for (int i = 0; i < k && ok; ++i) {
            if (!(set_bits & (1 << i))) continue;
            for (int j = i + 1; j < k && ok; ++j) {
                if (!(set_bits & (1 << j))) continue;
                ok = p(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) >= alpha;
            }
        }
        if (!ok) continue;
        bool maximal = true;
        for (int extra = 0; extra < k && maximal; ++extra) {
            if (set_bits & (1 << extra)) continue;
            bool extends = true;
            for (int i = 0; i < k && extends; ++i) {
                if (!(set_bits & (1 << i))) continue;
                extends = p(static_cast<std::size_t>(extra), static_cast<std::size_t>(i)) >= alpha;
            }
            if (extends) maximal = false;
        }
        if (!maximal) continue;
        std::set<int> members;
        for (int i = 0; i < k; ++i) {
            if (set_bits & (1 << i)) members.insert(i);
        }
        cliques.insert(members);
    }
    return cliques;
}

}  // namespace

TEST_CASE("significance_groups degenerate and oracle cases") {
    std::vector<double> ranks{1.0, 2.0, 3.0};
    Matrix<double> all_significant(3, 3, 0.001);
    auto groups = significance_groups(ranks, all_significant, 0.05);
    CHECK(groups.size() == 3);
    for (const auto& g : groups) CHECK(g.size() == 1);

    Matrix<double> none_significant(3, 3, 0.8);
    groups = significance_groups(ranks, none_significant, 0.05);
    REQUIRE(groups.size() == 1);
    CHECK(groups[0].size() == 3);

    Rng rng(8);
    for (int trial = 0; trial < 30; ++trial) {
        const std::size_t k = 4 + rng.index(5);  // 4..8 methods
        Matrix<double> p(k, k, 1.0);
        std::vector<double> avg(k);
        for (std::size_t i = 0; i < k; ++i) {
            avg[i] = rng.uniform(1.0, static_cast<double>(k));
            for (std::size_t j = i + 1; j < k; ++j) {
                p(i, j) = p(j, i) = rng.uniform();
            }
        }
        const auto got = significance_groups(avg, p, 0.3);
        std::set<std::set<int>> got_sets;
        for (const auto& g : got) got_sets.insert(std::set<int>(g.begin(), g.end()));
        CHECK(got_sets == clique_oracle(p, 0.3));
    }
}

// --------------------------------------------------------------------- AUC

TEST_CASE("auc_trapezoid pinned and oracle cases") {
    std::vector<double> grid{0.05, 0.10, 0.20, 0.30, 0.40, 0.50, 0.60, 0.70, 0.80, 0.90, 1.00};
    CHECK(auc_trapezoid(grid, std::vector<double>(grid.size(), 0.7)) ==
          doctest::Approx(0.7).epsilon(1e-12));

    // values linear in the fraction: normalized area is exactly 1/2
    std::vector<double> ramp;
    for (double f : grid) ramp.push_back((f - 0.05) / 0.95);
    CHECK(auc_trapezoid(grid, ramp) == doctest::Approx(0.5).epsilon(1e-12));

    Rng rng(9);
    std::vector<double> values(grid.size());
    for (auto& v : values) v = rng.uniform();
    // independent trapezoid implementation on the same grid
    double oracle = 0.0;
    for (std::size_t i = 1; i < grid.size(); ++i) {
        oracle += (grid[i] - grid[i - 1]) * 0.5 * (values[i] + values[i - 1]);
    }
    oracle /= grid.back() - grid.front();
    CHECK(auc_trapezoid(grid, values) == doctest::Approx(oracle).epsilon(1e-12));

    CHECK_THROWS_AS(auc_trapezoid({0.1, 0.1, 0.3}, {1, 2, 3}), ConfigError);
    CHECK_THROWS_AS(auc_trapezoid({0.1, 0.2}, {1.0}), DimensionError);
}

// ------------------------------------------------------------------ Pareto

namespace {

std::vector<int> pareto_oracle(const std::vector<std::pair<double, double>>& pts) {
    const std::size_t n = pts.size();
    // domination matrix + iterative peeling
    std::vector<std::vector<bool>> dom(n, std::vector<bool>(n, false));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            const bool no_worse = pts[i].first >= pts[j].first && pts[i].second <= pts[j].second;
            const bool better = pts[i].first > pts[j].first || pts[i].second < pts[j].second;
            dom[i][j] = no_worse && better;
        }
    }
    std::vector<int> rank(n, 0);
    std::vector<bool> done(n, false);
    int level = 1;
    std::size_t left = n;
    while (left > 0) {
        std::vector<std::size_t> front;
        for (std::size_t i = 0; i < n; ++i) {
            if (done[i]) continue;
            bool dominated = false;
            for (std::size_t j = 0; j < n; ++j) {
                if (!done[j] && dom[j][i]) dominated = true;
            }
            if (!dominated) front.push_back(i);
        }
        for (std::size_t i : front) {
            rank[i] = level;
            done[i] = true;
        }
        left -= front.size();
        ++level;
    }
    return rank;
}

}  // namespace

TEST_CASE("pareto_rank pinned and oracle cases") {
    CHECK(pareto_rank({{1.0, 1.0}}) == std::vector<int>{1});
    CHECK(pareto_rank({{1.0, 1.0}, {2.0, 2.0}}) == std::vector<int>{1, 1});  // mutual non-domination
    CHECK(pareto_rank({{2.0, 1.0}, {1.0, 2.0}, {0.5, 3.0}}) == std::vector<int>{1, 2, 3});

    Rng rng(10);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<std::pair<double, double>> pts(50);
        for (auto& p : pts) p = {rng.uniform(), rng.uniform()};
        CHECK(pareto_rank(pts) == pareto_oracle(pts));
    }
}

// -------------------------------------------------------- data efficiency

TEST_CASE("data_efficiency reproduces the two-method reference scenario") {
    // method A crosses the threshold at 20 points, B at 40, of 100 total
    std::vector<std::size_t> counts{10, 20, 40, 70, 100};
    std::vector<std::vector<double>> curves{
        {0.2, 0.95, 0.96, 0.97, 1.0},   // crosses at 20
        {0.1, 0.50, 0.95, 0.98, 0.99},  // crosses at 40
    };
    const auto eta = data_efficiency(curves, counts, 100);
    CHECK(eta[0].eta == 1.0);
    CHECK(eta[0].n_best == 20);
    CHECK(eta[1].n_m == 40);
    CHECK(eta[1].eta == doctest::Approx(0.75).epsilon(1e-12));
}

TEST_CASE("data_efficiency: never reaching the threshold scores zero") {
    std::vector<std::size_t> counts{10, 50, 100};
    std::vector<std::vector<double>> curves{
        {0.95, 0.97, 1.0},
        {0.1, 0.2, 0.3},  // never reaches 0.9
    };
    const auto eta = data_efficiency(curves, counts, 100);
    CHECK(eta[0].eta == 1.0);
    CHECK(eta[1].eta == 0.0);
    CHECK(eta[1].n_m == 100);
}

TEST_CASE("data_efficiency: direct substitution and edge rules") {
    // eta = (100 - 40) / (100 - 20) = 0.75
    std::vector<std::size_t> counts{20, 40, 100};
    std::vector<std::vector<double>> curves{
        {1.0, 1.0, 1.0},
        {0.0, 1.0, 1.0},
    };
    const auto eta = data_efficiency(curves, counts, 100);
    CHECK(eta[1].eta == doctest::Approx(0.75).epsilon(1e-12));

    // flat-zero curves: all zero, n_best = n_max
    std::vector<std::vector<double>> flat{{0.0, 0.0, 0.0}, {0.0, 0.0, 0.0}};
    const auto zero = data_efficiency(flat, counts, 100);
    for (const auto& e : zero) {
        CHECK(e.eta == 0.0);
        CHECK(e.n_best == 100);
    }

    // crossing only at full data: the "all data -> 0" rule wins
    std::vector<std::vector<double>> late{{0.1, 0.2, 1.0}, {0.0, 0.1, 0.2}};
    const auto all_data = data_efficiency(late, counts, 100);
    CHECK(all_data[0].eta == 0.0);
    CHECK(all_data[1].eta == 0.0);
}

TEST_CASE("data_efficiency is invariant to positive rescaling of all curves") {
    Rng rng(11);
    std::vector<std::size_t> counts{5, 10, 20, 40, 80};
    for (int trial = 0; trial < 30; ++trial) {
        std::vector<std::vector<double>> curves(3, std::vector<double>(5));
        for (auto& c : curves) {
            for (auto& v : c) v = rng.uniform();
        }
        const auto base = data_efficiency(curves, counts, 80);
        const double scale = rng.uniform(0.1, 9.0);
        auto scaled = curves;
        for (auto& c : scaled) {
            for (auto& v : c) v *= scale;
        }
        const auto rescaled = data_efficiency(scaled, counts, 80);
        for (std::size_t m = 0; m < 3; ++m) {
            CHECK(base[m].eta == doctest::Approx(rescaled[m].eta).epsilon(1e-12));
            CHECK(base[m].n_m == rescaled[m].n_m);
        }
    }
}

// ---------------------------------------------------------- rank_analysis

TEST_CASE("rank_analysis end-to-end on separable methods") {
    Rng rng(12);
    const std::size_t blocks = 40;
    Matrix<double> scores(blocks, 3);
    for (std::size_t i = 0; i < blocks; ++i) {
        scores(i, 0) = 0.9 + rng.uniform() * 0.05;  // consistently best
        scores(i, 1) = 0.7 + rng.uniform() * 0.05;
        scores(i, 2) = 0.5 + rng.uniform() * 0.05;
    }
    const auto summary = rank_analysis(scores, {"a", "b", "c"}, true, 0.05);
    CHECK(summary.avg_ranks[0] == doctest::Approx(1.0));
    CHECK(summary.avg_ranks[1] == doctest::Approx(2.0));
    CHECK(summary.avg_ranks[2] == doctest::Approx(3.0));
    CHECK(summary.friedman_applicable);
    CHECK(summary.friedman.p < 0.05);
    CHECK(summary.pairwise_performed);
    CHECK(summary.groups.size() == 3);  // all pairs distinguishable

    // two methods: Wilcoxon runs directly, no Friedman
    Matrix<double> pair_scores(blocks, 2);
    for (std::size_t i = 0; i < blocks; ++i) {
        pair_scores(i, 0) = scores(i, 0);
        pair_scores(i, 1) = scores(i, 1);
    }
    const auto pair_summary = rank_analysis(pair_scores, {"a", "b"}, true, 0.05);
    CHECK_FALSE(pair_summary.friedman_applicable);
    CHECK(pair_summary.pairwise_performed);
    CHECK(pair_summary.p_adjusted(0, 1) < 0.05);
}
