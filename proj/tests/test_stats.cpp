#include "perfbridge/stats.hpp"

#include <cmath>
#include <vector>

#include "doctest.h"
#include "perfbridge/common.hpp"
#include "perfbridge/rng.hpp"
#include "testutil.hpp"

using namespace perfbridge;
using stats::Magnitude;

TEST_CASE("rank-sum known values") {
    std::vector<double> a{1, 2, 3}, b{4, 5, 6};
    CHECK(stats::wilcoxon_rank_sum(a, b) == 2.0 / 20.0);  // = 0.1

    std::vector<double> same{5, 5, 5};
    CHECK(stats::wilcoxon_rank_sum(same, same) == 1.0);

    std::vector<double> lo{1, 2, 3, 4, 5}, hi{6, 7, 8, 9, 10};
    CHECK(stats::wilcoxon_rank_sum(lo, hi) == 2.0 / 252.0);
}

TEST_CASE("rank-sum rejects bad input") {
    std::vector<double> a{1, 2}, empty;
    CHECK_THROWS_AS(stats::wilcoxon_rank_sum(a, empty), InputError);
    CHECK_THROWS_AS(stats::wilcoxon_rank_sum(empty, a), InputError);
    std::vector<double> nan{1.0, std::nan("")};
    CHECK_THROWS_AS(stats::wilcoxon_rank_sum(a, nan), InputError);
}

TEST_CASE("rank-sum matches exhaustive enumeration on small samples") {
    rng::Stream gen(2024, "stats-test");
    for (int trial = 0; trial < 60; ++trial) {
        const auto n1 = static_cast<std::size_t>(gen.uniform_int(1, 8));
        const auto n2 = static_cast<std::size_t>(gen.uniform_int(1, 8));
        std::vector<double> x(n1), y(n2);
        // small integer values so ties occur often
        for (auto& v : x) v = static_cast<double>(gen.uniform_int(0, 5));
        for (auto& v : y) v = static_cast<double>(gen.uniform_int(0, 5));
        const double expect = testutil::exhaustive_wilcoxon_p(x, y);
        const double got = stats::wilcoxon_rank_sum(x, y);
        CHECK(got == doctest::Approx(expect).epsilon(1e-12));
    }
}

TEST_CASE("rank-sum two-sided symmetry") {
    rng::Stream gen(77, "sym");
    for (int trial = 0; trial < 20; ++trial) {
        // cover both the exact and the approximation branch
        const auto n = static_cast<std::size_t>(trial < 10 ? 5 : 20);
        std::vector<double> x(n), y(n + 3);
        for (auto& v : x) v = gen.uniform() * 10.0;
        for (auto& v : y) v = gen.uniform() * 12.0;
        CHECK(stats::wilcoxon_rank_sum(x, y) == stats::wilcoxon_rank_sum(y, x));
    }
}

TEST_CASE("approximation path behaves sensibly") {
    rng::Stream gen(5, "approx");
    std::vector<double> x(40), y(40);
    for (auto& v : x) v = gen.exponential(1.0);
    for (auto& v : y) v = gen.exponential(1.0) + 3.0;  // clearly shifted
    const double p_shifted = stats::wilcoxon_rank_sum(x, y);
    CHECK(p_shifted < 1e-6);
    CHECK(p_shifted > 0.0);

    // all values identical -> variance 0 -> p = 1
    std::vector<double> flat_a(30, 2.0), flat_b(25, 2.0);
    CHECK(stats::wilcoxon_rank_sum(flat_a, flat_b) == 1.0);
}

TEST_CASE("cliff's delta known values and oracle equivalence") {
    std::vector<double> t1{3, 3}, t2{3, 3};
    CHECK(stats::cliffs_delta(t1, t2) == 0.0);
    std::vector<double> hi{10, 11}, lo{1, 2};
    CHECK(stats::cliffs_delta(hi, lo) == 1.0);
    CHECK(stats::cliffs_delta(lo, hi) == -1.0);
    std::vector<double> a{1, 2}, b{1, 3};
    CHECK(stats::cliffs_delta(a, b) == -0.25);

    rng::Stream gen(99, "delta");
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> x(static_cast<std::size_t>(gen.uniform_int(1, 12)));
        std::vector<double> y(static_cast<std::size_t>(gen.uniform_int(1, 12)));
        for (auto& v : x) v = static_cast<double>(gen.uniform_int(0, 6));
        for (auto& v : y) v = static_cast<double>(gen.uniform_int(0, 6));
        CHECK(stats::cliffs_delta(x, y) == testutil::pairwise_cliffs_delta(x, y));
    }
}

TEST_CASE("cliff's delta antisymmetry") {
    rng::Stream gen(3, "anti");
    for (int trial = 0; trial < 30; ++trial) {
        std::vector<double> x(5 + trial % 7), y(3 + trial % 5);
        for (auto& v : x) v = gen.uniform() * 4.0;
        for (auto& v : y) v = gen.uniform() * 4.0;
        CHECK(stats::cliffs_delta(x, y) == -stats::cliffs_delta(y, x));
    }
}

TEST_CASE("magnitude thresholds") {
    CHECK(stats::magnitude_of(0.10) == Magnitude::negligible);
    CHECK(stats::magnitude_of(-0.20) == Magnitude::small);
    CHECK(stats::magnitude_of(0.60) == Magnitude::large);
    CHECK(stats::magnitude_of(0.0) == Magnitude::negligible);
    // boundaries are inclusive on the upper class
    CHECK(stats::magnitude_of(0.147) == Magnitude::small);
    CHECK(stats::magnitude_of(0.33) == Magnitude::medium);
    CHECK(stats::magnitude_of(0.474) == Magnitude::large);
    CHECK(stats::magnitude_of(-1.0) == Magnitude::large);
    CHECK_THROWS_AS(stats::magnitude_of(1.5), InputError);
    CHECK_THROWS_AS(stats::magnitude_of(-1.01), InputError);
}

TEST_CASE("rank invariance under strictly increasing transforms") {
    rng::Stream gen(11, "rankinv");
    auto transform = [](double v) { return std::exp(v) + v * v * v; };
    for (int trial = 0; trial < 20; ++trial) {
        const auto n1 = static_cast<std::size_t>(gen.uniform_int(2, 20));
        const auto n2 = static_cast<std::size_t>(gen.uniform_int(2, 20));
        std::vector<double> x(n1), y(n2), tx(n1), ty(n2);
        for (std::size_t i = 0; i < n1; ++i) { x[i] = gen.uniform() * 3.0; tx[i] = transform(x[i]); }
        for (std::size_t i = 0; i < n2; ++i) { y[i] = gen.uniform() * 3.0; ty[i] = transform(y[i]); }
        CHECK(stats::wilcoxon_rank_sum(x, y) == stats::wilcoxon_rank_sum(tx, ty));
        CHECK(stats::cliffs_delta(x, y) == stats::cliffs_delta(tx, ty));
    }
}

TEST_CASE("compare assembles the report") {
    std::vector<double> base(30, 1.0);
    SUBCASE("identical samples") {
        auto r = stats::compare(base, base);
        CHECK_FALSE(r.significant);
        CHECK(r.md_ms == 0.0);
        CHECK(r.p_value == 1.0);
    }
    SUBCASE("complete separation") {
        std::vector<double> upd(30, 2.5);
        auto r = stats::compare(base, upd);
        CHECK(r.significant);
        CHECK(r.md_ms == 1.5);
        CHECK(r.delta == -1.0);
        CHECK(r.magnitude == Magnitude::large);
    }
    SUBCASE("separated but insignificant at n=3") {
        std::vector<double> a{1, 2, 3}, b{4, 5, 6};
        auto r = stats::compare(a, b, 0.05);
        CHECK(r.p_value == doctest::Approx(0.1));
        CHECK(r.delta == -1.0);
        CHECK_FALSE(r.significant);
    }
    SUBCASE("alpha validation") {
        CHECK_THROWS_AS(stats::compare(base, base, 0.0), InputError);
        CHECK_THROWS_AS(stats::compare(base, base, 1.0), InputError);
    }
}
