#pragma once

#include <vector>

namespace lrtd {

// Regularized incomplete beta function I_x(a, b), accurate to ~1e-10.
double incomplete_beta(double a, double b, double x);

// Two-sided p-value of a paired t test on the elementwise differences a - b.
// Zero-variance differences degenerate cleanly: all-zero -> 1, a constant
// nonzero shift -> effectively 0 (the variance is floored at a tiny epsilon).
double paired_significance(const std::vector<double>& a, const std::vector<double>& b);

// One-sided Mann-Whitney p-value (normal approximation, tie-corrected,
// continuity-corrected) for the alternative "lo ranks below hi".
double rank_sum_p(const std::vector<double>& lo, const std::vector<double>& hi);

}  // namespace lrtd
