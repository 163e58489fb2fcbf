#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace perfbridge::rng {

/// FNV-1a, used to derive independent stream seeds from textual tags.
/// Stable across platforms, unlike std::hash.
inline std::uint64_t stable_hash(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

/// One stochastic source (arrivals of a class, service at a place, ...).
/// Streams with distinct tags derived from the same seed are independent
/// for practical purposes and fully reproducible.
///
/// Sampling is implemented on top of raw engine output rather than
/// std::*_distribution so that results are identical across standard
/// library implementations.
class Stream {
public:
    Stream(std::uint64_t seed, std::string_view tag)
        : gen_(splitmix64(seed ^ stable_hash(tag))) {}

    explicit Stream(std::uint64_t raw_seed) : gen_(raw_seed) {}

    /// Uniform in [0, 1).
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [lo, hi] inclusive.
    long long uniform_int(long long lo, long long hi) {
        const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
        return lo + static_cast<long long>(gen_() % span);
    }

    /// Exponential with the given mean (> 0).
    double exponential(double mean) { return -mean * std::log1p(-uniform()); }

    /// Standard normal via Box-Muller (no spare caching, keeps the
    /// stream's consumption pattern simple).
    double normal() {
        const double u1 = 1.0 - uniform();  // (0, 1]
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
    }

    /// Lognormal parameterized by mean and coefficient of variation,
    /// i.e. E[X] = mean and sd(X)/E[X] = cv. cv = 0 degenerates to the mean.
    double lognormal_mean_cv(double mean, double cv) {
        if (cv <= 0.0) return mean;
        const double s2 = std::log1p(cv * cv);
        return mean * std::exp(std::sqrt(s2) * normal() - 0.5 * s2);
    }

private:
    std::mt19937_64 gen_;
};

}  // namespace perfbridge::rng
