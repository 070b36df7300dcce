#pragma once

#include <functional>
#include <string>
#include <vector>

#include "pfnbench/dataset.hpp"
#include "pfnbench/sampler.hpp"

namespace pfnbench {

// Built-in feasibility problems: a design is labeled by a performance
// function against a threshold plus inequality constraints. Labels are pure
// functions of the coordinates, so saved datasets can always be relabeled.

struct ProblemSpec {
    std::string name;
    int dims = 2;
    std::vector<double> lo;  // box domain, per dimension
    std::vector<double> hi;
    std::function<double(const double*)> performance;       // f(x), lower is better
    double f_thresh = 0.0;
    std::vector<std::function<double(const double*)>> constraints;  // g_i(x) <= 0 feasible
    // Binary rule: label 1 iff f <= f_thresh and all g <= 0. When
    // multi_thresholds is set (descending), the label counts how many
    // thresholds the design beats; constraint violations force class 0.
    std::vector<double> multi_thresholds;
    SamplerKind train_sampler = SamplerKind::sobol;
    bool imbalance_guard = false;

    int n_classes() const {
        return multi_thresholds.empty() ? 2 : static_cast<int>(multi_thresholds.size()) + 1;
    }
};

int problem_label(const ProblemSpec& spec, const double* x);

// Train points come from the spec's train sampler, test points from Halton,
// over disjoint index ranges. If a class is missing from the train set the
// window advances and sampling repeats (the dataset carries a note).
Dataset generate_problem(const ProblemSpec& spec, std::size_t n_train, std::size_t n_test,
                         std::uint64_t seed);

// Shipped specs: a 2-D annulus with roughly balanced classes, a 6-D
// linear-constraint region, and a 4-D needle with ~2% feasible designs.
ProblemSpec rings2d_spec();
ProblemSpec box6d_spec();
ProblemSpec needle4d_spec();

const std::vector<std::string>& builtin_problem_names();
ProblemSpec builtin_problem(const std::string& name);

// Default desk-scale sizes used by gen-data and the benchmark.
struct ProblemSizes {
    std::size_t n_train;
    std::size_t n_test;
};
ProblemSizes builtin_problem_sizes(const std::string& name);

}  // namespace pfnbench
