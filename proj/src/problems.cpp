#include "pfnbench/problems.hpp"

#include <cmath>

#include "pfnbench/errors.hpp"

namespace pfnbench {

int problem_label(const ProblemSpec& spec, const double* x) {
    for (const auto& g : spec.constraints) {
        if (g(x) > 0.0) return 0;
    }
    const double f = spec.performance(x);
    if (spec.multi_thresholds.empty()) {
        return f <= spec.f_thresh ? 1 : 0;
    }
    int label = 0;
    for (double t : spec.multi_thresholds) {
        if (f <= t) ++label;
    }
    return label;
}

namespace {

void fill_rows(const ProblemSpec& spec, SamplerState& sampler, std::size_t n, Mat64& x,
               std::vector<int>& y) {
    x = Mat64(n, static_cast<std::size_t>(spec.dims));
    y.resize(n);
    std::vector<double> scaled(static_cast<std::size_t>(spec.dims));
    for (std::size_t i = 0; i < n; ++i) {
        const auto unit = sampler.next();
        for (int j = 0; j < spec.dims; ++j) {
            const auto col = static_cast<std::size_t>(j);
            scaled[col] = spec.lo[col] + unit[col] * (spec.hi[col] - spec.lo[col]);
            x(i, col) = scaled[col];
        }
        y[i] = problem_label(spec, scaled.data());
    }
}

bool all_classes_present(const std::vector<int>& y, int n_classes) {
    std::vector<bool> seen(static_cast<std::size_t>(n_classes), false);
    for (int label : y) seen[static_cast<std::size_t>(label)] = true;
    for (bool s : seen) {
        if (!s) return false;
    }
    return true;
}

}  // namespace

Dataset generate_problem(const ProblemSpec& spec, std::size_t n_train, std::size_t n_test,
                         std::uint64_t seed) {
    if (spec.dims < 1 || spec.lo.size() != static_cast<std::size_t>(spec.dims) ||
        spec.hi.size() != static_cast<std::size_t>(spec.dims)) {
        throw ConfigError("generate_problem: bad domain for '" + spec.name + "'");
    }
    if (n_train < 2 || n_test < 1) throw ConfigError("generate_problem: sizes too small");

    const SamplerKind train_kind =
        spec.dims <= kSobolMaxDims ? spec.train_sampler : SamplerKind::halton;
    // Train and test windows never overlap: the test stream (always Halton)
    // starts far beyond any train window, and retries only move the train
    // window forward.
    const std::uint64_t window = seed % 4096;
    constexpr std::uint64_t kTestBase = 1u << 24;

    Dataset ds;
    ds.name = spec.name;
    ds.n_classes = spec.n_classes();
    ds.imbalance_guard = spec.imbalance_guard;
    ds.guard_class = spec.imbalance_guard ? spec.n_classes() - 1 : 1;
    ds.discrete_cols.assign(static_cast<std::size_t>(spec.dims), false);

    std::string note;
    bool train_ok = false;
    for (std::uint64_t attempt = 0; attempt < 50 && !train_ok; ++attempt) {
        const std::uint64_t start = 1 + (window + attempt) * n_train;
        if (start + n_train >= kTestBase) {
            throw GenerationError("generate_problem: train window exhausted for '" + spec.name +
                                  "'");
        }
        SamplerState sampler(train_kind, spec.dims, start);
        fill_rows(spec, sampler, n_train, ds.x, ds.y);
        train_ok = all_classes_present(ds.y, ds.n_classes);
        if (!train_ok && attempt == 0) {
            note = "train window widened: class missing from initial draw";
        }
    }
    if (!train_ok) {
        throw GenerationError("generate_problem: some class never appeared in train for '" +
                              spec.name + "'");
    }

    auto test = std::make_shared<Dataset>();
    test->name = spec.name + "/test";
    test->n_classes = ds.n_classes;
    SamplerState test_sampler(SamplerKind::halton, spec.dims, kTestBase + window * n_test);
    fill_rows(spec, test_sampler, n_test, test->x, test->y);
    ds.fixed_test = std::move(test);
    ds.note = note;
    ds.validate();
    return ds;
}

// ------------------------------------------------------------- built-ins

ProblemSpec rings2d_spec() {
    // Annulus of feasible designs around (0.5, 0.5); close to a balanced
    // class split, like a well-sampled 2-D exchanger design space.
    ProblemSpec spec;
    spec.name = "rings2d";
    spec.dims = 2;
    spec.lo = {0.0, 0.0};
    spec.hi = {1.0, 1.0};
    spec.performance = [](const double* x) {
        const double dx = x[0] - 0.5;
        const double dy = x[1] - 0.5;
        return std::abs(std::sqrt(dx * dx + dy * dy) - 0.325);
    };
    spec.f_thresh = 0.125;
    return spec;
}

ProblemSpec box6d_spec() {
    // Linear performance with two linear constraints in 6-D, moderately
    // imbalanced (about one third feasible), truss-like.
    ProblemSpec spec;
    spec.name = "box6d";
    spec.dims = 6;
    spec.lo.assign(6, 0.0);
    spec.hi.assign(6, 1.0);
    spec.performance = [](const double* x) {
        return (x[0] + x[1] + x[2] + x[3] + x[4] + x[5]) / 6.0;
    };
    spec.f_thresh = 0.47;
    spec.constraints = {
        [](const double* x) { return x[0] + x[1] - 1.45; },
        [](const double* x) { return x[2] - x[3] - 0.55; },
    };
    return spec;
}

ProblemSpec needle4d_spec() {
    // Small ellipsoid of feasible designs in 4-D, ~2% of the volume, with
    // the welded-beam-style extreme imbalance and the split guard enabled.
    ProblemSpec spec;
    spec.name = "needle4d";
    spec.dims = 4;
    spec.lo.assign(4, 0.0);
    spec.hi.assign(4, 1.0);
    spec.performance = [](const double* x) {
        const double d0 = (x[0] - 0.62) * 1.0;
        const double d1 = (x[1] - 0.44) * 1.2;
        const double d2 = (x[2] - 0.55) * 0.8;
        const double d3 = (x[3] - 0.38) * 1.1;
        return d0 * d0 + d1 * d1 + d2 * d2 + d3 * d3;
    };
    spec.f_thresh = 0.068;
    spec.imbalance_guard = true;
    return spec;
}

const std::vector<std::string>& builtin_problem_names() {
    static const std::vector<std::string> names{"rings2d", "box6d", "needle4d"};
    return names;
}

ProblemSpec builtin_problem(const std::string& name) {
    if (name == "rings2d") return rings2d_spec();
    if (name == "box6d") return box6d_spec();
    if (name == "needle4d") return needle4d_spec();
    throw ConfigError("unknown built-in problem '" + name + "'");
}

ProblemSizes builtin_problem_sizes(const std::string& name) {
    if (name == "rings2d") return {400, 1500};
    if (name == "box6d") return {480, 1500};
    if (name == "needle4d") return {500, 2000};
    throw ConfigError("unknown built-in problem '" + name + "'");
}

}  // namespace pfnbench
