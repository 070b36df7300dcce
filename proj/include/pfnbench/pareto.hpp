#pragma once

#include <cstddef>
#include <utility>
#include <vector>

namespace pfnbench {

// Trapezoidal area under (fractions, values), normalized by the interval
// length so a constant curve integrates to the constant.
double auc_trapezoid(const std::vector<double>& fractions, const std::vector<double>& values);

// Non-dominated sorting over (score to maximize, cost to minimize) points.
// Rank 1 is the Pareto front; fronts are peeled off iteratively. A point
// dominates another when it is no worse in both objectives and strictly
// better in at least one.
std::vector<int> pareto_rank(const std::vector<std::pair<double, double>>& points);

}  // namespace pfnbench
