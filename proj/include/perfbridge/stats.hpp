#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace perfbridge::stats {

/// A performance sample: execution-time measurements in milliseconds.
using Sample = std::vector<double>;

enum class Magnitude { negligible, small, medium, large };

std::string to_string(Magnitude m);

/// Result of comparing two performance samples (baseline vs. updated).
struct DeviationReport {
    double p_value = 1.0;    ///< two-sided Wilcoxon rank-sum p-value, in (0, 1]
    double delta = 0.0;      ///< Cliff's Delta of (baseline, updated), in [-1, 1]
    Magnitude magnitude = Magnitude::negligible;
    double md_ms = 0.0;      ///< mean(updated) - mean(baseline); positive = slower
    bool significant = false;
};

/// Combined sample count up to which the rank-sum test enumerates the
/// exact permutation distribution (mid-ranks, so ties stay exact).
inline constexpr std::size_t kExactEnumerationLimit = 16;

/// Two-sided Wilcoxon rank-sum test. Exact enumeration when
/// |x| + |y| <= kExactEnumerationLimit, otherwise normal approximation
/// with tie correction and continuity correction. Never returns 0;
/// returns 1.0 when the statistic sits at its null expectation.
double wilcoxon_rank_sum(std::span<const double> x, std::span<const double> y);

/// Cliff's Delta: (#{x_i > y_j} - #{x_i < y_j}) / (|x|*|y|).
/// Computed from exact integer pair counts (sort + binary search).
double cliffs_delta(std::span<const double> x, std::span<const double> y);

/// Classify |delta| against the Romano et al. thresholds:
/// negligible < 0.147 <= small < 0.33 <= medium < 0.474 <= large.
Magnitude magnitude_of(double delta);

/// Full comparison of baseline vs. updated. significant is true iff
/// p <= alpha and the magnitude is not negligible.
DeviationReport compare(std::span<const double> baseline,
                        std::span<const double> updated,
                        double alpha = 0.05);

double mean(std::span<const double> v);

}  // namespace perfbridge::stats
