#include "perfbridge/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>

#include "perfbridge/common.hpp"

namespace perfbridge::stats {

namespace {

void check_sample(std::span<const double> s, const char* name) {
    if (s.empty()) throw InputError(std::string("empty sample: ") + name);
    for (double v : s) {
        if (!std::isfinite(v))
            throw InputError(std::string("non-finite value in sample: ") + name);
    }
}

// Mid-ranks of the pooled values, doubled so they are exact integers
// (a mid-rank is always a multiple of 1/2). Returns one entry per pooled
// value, in the pooled order, plus the tie-correction sum of t^3 - t.
struct RankedPool {
    std::vector<std::int64_t> ranks2;  // 2 * mid-rank
    double tie_sum = 0.0;              // sum over tie groups of t^3 - t
};

RankedPool midranks2(std::span<const double> x, std::span<const double> y) {
    const std::size_t n = x.size() + y.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    auto value = [&](std::size_t i) { return i < x.size() ? x[i] : y[i - x.size()]; };
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return value(a) < value(b); });

    RankedPool pool;
    pool.ranks2.resize(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j < n && value(order[j]) == value(order[i])) ++j;
        // positions i..j-1 tie; mid-rank = (i+1 + j) / 2, doubled below
        const std::int64_t r2 = static_cast<std::int64_t>(i + 1 + j);
        for (std::size_t k = i; k < j; ++k) pool.ranks2[order[k]] = r2;
        const double t = static_cast<double>(j - i);
        pool.tie_sum += t * t * t - t;
        i = j;
    }
    return pool;
}

// Exact two-sided p-value: enumerate all C(n, n1) assignments of the
// pooled ranks to the first sample and count those at least as far from
// the null expectation as observed. Integer arithmetic throughout.
double exact_two_sided_p(const std::vector<std::int64_t>& ranks2, std::size_t n1) {
    const std::size_t n = ranks2.size();
    const std::int64_t w2_obs =
        std::accumulate(ranks2.begin(), ranks2.begin() + static_cast<long>(n1),
                        std::int64_t{0});
    // E[2W] = n1 * (n + 1)
    const std::int64_t mu2 = static_cast<std::int64_t>(n1) * static_cast<std::int64_t>(n + 1);
    const std::int64_t dev_obs = std::llabs(w2_obs - mu2);

    std::vector<std::size_t> pick(n1);
    std::iota(pick.begin(), pick.end(), std::size_t{0});
    std::uint64_t total = 0, extreme = 0;
    while (true) {
        std::int64_t w2 = 0;
        for (std::size_t idx : pick) w2 += ranks2[idx];
        ++total;
        if (std::llabs(w2 - mu2) >= dev_obs) ++extreme;

        // next combination in lexicographic order
        std::size_t k = n1;
        while (k > 0 && pick[k - 1] == n - n1 + (k - 1)) --k;
        if (k == 0) break;
        ++pick[k - 1];
        for (std::size_t j = k; j < n1; ++j) pick[j] = pick[j - 1] + 1;
    }
    return static_cast<double>(extreme) / static_cast<double>(total);
}

double approx_two_sided_p(const RankedPool& pool, std::size_t n1) {
    const double n = static_cast<double>(pool.ranks2.size());
    const double m = static_cast<double>(n1);
    const double k = n - m;
    double w = 0.0;
    for (std::size_t i = 0; i < n1; ++i)
        w += static_cast<double>(pool.ranks2[i]) * 0.5;
    const double mu = m * (n + 1.0) / 2.0;
    const double var = m * k / 12.0 * ((n + 1.0) - pool.tie_sum / (n * (n - 1.0)));
    if (var <= 0.0) return 1.0;  // every pooled value ties
    const double z = std::max(0.0, std::fabs(w - mu) - 0.5) / std::sqrt(var);
    const double p = std::erfc(z * 0.7071067811865475244);
    return std::min(1.0, std::max(p, std::numeric_limits<double>::min()));
}

}  // namespace

std::string to_string(Magnitude m) {
    switch (m) {
        case Magnitude::negligible: return "negligible";
        case Magnitude::small: return "small";
        case Magnitude::medium: return "medium";
        case Magnitude::large: return "large";
    }
    return "?";
}

double mean(std::span<const double> v) {
    check_sample(v, "mean");
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double wilcoxon_rank_sum(std::span<const double> x, std::span<const double> y) {
    check_sample(x, "x");
    check_sample(y, "y");
    const RankedPool pool = midranks2(x, y);
    if (x.size() + y.size() <= kExactEnumerationLimit)
        return exact_two_sided_p(pool.ranks2, x.size());
    return approx_two_sided_p(pool, x.size());
}

double cliffs_delta(std::span<const double> x, std::span<const double> y) {
    check_sample(x, "x");
    check_sample(y, "y");
    std::vector<double> ys(y.begin(), y.end());
    std::sort(ys.begin(), ys.end());
    std::int64_t greater = 0, less = 0;
    for (double v : x) {
        const auto lo = std::lower_bound(ys.begin(), ys.end(), v) - ys.begin();
        const auto hi = std::upper_bound(ys.begin(), ys.end(), v) - ys.begin();
        greater += lo;                                       // y_j < v
        less += static_cast<std::int64_t>(ys.size()) - hi;   // y_j > v
    }
    const auto pairs = static_cast<double>(x.size()) * static_cast<double>(y.size());
    return static_cast<double>(greater - less) / pairs;
}

Magnitude magnitude_of(double delta) {
    if (!std::isfinite(delta) || delta < -1.0 || delta > 1.0)
        throw InputError("cliff's delta out of range [-1, 1]");
    const double d = std::fabs(delta);
    if (d < 0.147) return Magnitude::negligible;
    if (d < 0.33) return Magnitude::small;
    if (d < 0.474) return Magnitude::medium;
    return Magnitude::large;
}

DeviationReport compare(std::span<const double> baseline,
                        std::span<const double> updated,
                        double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0))
        throw InputError("alpha must lie in (0, 1)");
    DeviationReport r;
    r.p_value = wilcoxon_rank_sum(baseline, updated);
    r.delta = cliffs_delta(baseline, updated);
    r.magnitude = magnitude_of(r.delta);
    r.md_ms = mean(updated) - mean(baseline);
    r.significant = r.p_value <= alpha && r.magnitude != Magnitude::negligible;
    return r;
}

}  // namespace perfbridge::stats
