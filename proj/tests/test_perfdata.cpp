#include "perfbridge/perfdata.hpp"

#include <algorithm>
#include <random>
#include <sstream>

#include "doctest.h"
#include "perfbridge/common.hpp"

using namespace perfbridge;
using perfdata::ComponentId;
using perfdata::TraceEvent;

namespace {

perfdata::MeasurementCatalog catalog_from(
    std::initializer_list<std::pair<ComponentId, std::vector<double>>> entries) {
    perfdata::MeasurementCatalog c;
    c.version = "baseline";
    for (const auto& [id, sample] : entries) c.entries[id] = sample;
    return c;
}

}  // namespace

TEST_CASE("measurement loading") {
    SUBCASE("30 iterations for one component") {
        std::ostringstream file;
        file << "subsystem,component,version,iteration,duration_ms\n";
        for (int i = 0; i < 30; ++i)
            file << "Auth,login,baseline," << i << ",1.5\n";
        std::istringstream in(file.str());
        auto cat = perfdata::load_measurements(in, "mem");
        CHECK(cat.version == "baseline");
        REQUIRE(cat.entries.size() == 1);
        CHECK(cat.entries.at({"Auth", "login"}).size() == 30);
    }
    SUBCASE("empty file") {
        std::istringstream in("");
        CHECK_THROWS_WITH_AS(perfdata::load_measurements(in, "mem"),
                             doctest::Contains("no measurements"), InputError);
    }
    SUBCASE("header only") {
        std::istringstream in("subsystem,component,version,iteration,duration_ms\n");
        CHECK_THROWS_WITH_AS(perfdata::load_measurements(in, "mem"),
                             doctest::Contains("no measurements"), InputError);
    }
    SUBCASE("negative duration names the line") {
        std::istringstream in(
            "subsystem,component,version,iteration,duration_ms\n"
            "Auth,login,baseline,0,-1\n");
        CHECK_THROWS_WITH_AS(perfdata::load_measurements(in, "mem"),
                             doctest::Contains("mem:2"), InputError);
    }
    SUBCASE("duplicate iteration") {
        std::istringstream in(
            "subsystem,component,version,iteration,duration_ms\n"
            "Auth,login,baseline,0,1.0\n"
            "Auth,login,baseline,0,2.0\n");
        CHECK_THROWS_WITH_AS(perfdata::load_measurements(in, "mem"),
                             doctest::Contains("duplicate iteration"), InputError);
    }
    SUBCASE("mixed versions rejected") {
        std::istringstream in(
            "subsystem,component,version,iteration,duration_ms\n"
            "Auth,login,baseline,0,1.0\n"
            "Auth,login,updated,1,1.0\n");
        CHECK_THROWS_WITH_AS(perfdata::load_measurements(in, "mem"),
                             doctest::Contains("mixed versions"), InputError);
    }
}

TEST_CASE("trace loading") {
    SUBCASE("ROOT marker") {
        std::istringstream in(
            "t1,ROOT,ROOT,Auth,login,5.0\n"
            "t1,Auth,login,Auth,hash,1.0\n");
        auto traces = perfdata::load_traces(in, "mem");
        REQUIRE(traces.size() == 2);
        CHECK_FALSE(traces[0].caller.has_value());
        CHECK(traces[0].callee == ComponentId{"Auth", "login"});
        CHECK(traces[1].caller == ComponentId{"Auth", "login"});
    }
    SUBCASE("self call rejected") {
        std::istringstream in("t1,Auth,login,Auth,login,5.0\n");
        CHECK_THROWS_AS(perfdata::load_traces(in, "mem"), InputError);
    }
    SUBCASE("field count enforced") {
        std::istringstream in("t1,Auth,login,Auth,hash\n");
        CHECK_THROWS_WITH_AS(perfdata::load_traces(in, "mem"),
                             doctest::Contains("mem:1"), InputError);
    }
}

TEST_CASE("measurement round trip") {
    auto cat = catalog_from({{{"A", "f"}, {1.0, 2.25, 3.5}},
                             {{"B", "g"}, {0.125, 0.5}}});
    std::ostringstream out;
    perfdata::write_measurements(out, cat);
    std::istringstream in(out.str());
    auto back = perfdata::load_measurements(in, "mem");
    CHECK(back.version == cat.version);
    CHECK(back.entries == cat.entries);
}

TEST_CASE("dependency graph construction") {
    const ComponentId a{"S", "a"}, b{"S", "b"}, c{"S", "c"};

    SUBCASE("one call per trace gives multiplicity 1") {
        std::vector<TraceEvent> traces;
        for (int t = 0; t < 10; ++t) {
            const std::string id = "t" + std::to_string(t);
            traces.push_back({id, std::nullopt, a, 3.0});
            traces.push_back({id, a, b, 1.0});
        }
        auto res = perfdata::build_dependency_graph(
            traces, catalog_from({{a, {3.0}}, {b, {1.0}}}));
        CHECK(res.graph.edges().at({a, b}) == 1.0);
        CHECK(res.warnings.empty());
        CHECK(res.graph.node(a).is_top_level);
        CHECK_FALSE(res.graph.node(b).is_top_level);
    }

    SUBCASE("three calls per invocation gives multiplicity 3") {
        std::vector<TraceEvent> traces;
        for (int t = 0; t < 4; ++t) {
            const std::string id = "t" + std::to_string(t);
            traces.push_back({id, std::nullopt, a, 3.0});
            for (int k = 0; k < 3; ++k) traces.push_back({id, a, b, 1.0});
        }
        auto res = perfdata::build_dependency_graph(
            traces, catalog_from({{a, {3.0}}, {b, {1.0}}}));
        CHECK(res.graph.edges().at({a, b}) == 3.0);
    }

    SUBCASE("cycle rejected") {
        std::vector<TraceEvent> traces{
            {"t1", std::nullopt, a, 1.0},
            {"t1", a, b, 1.0},
            {"t1", b, a, 1.0},
        };
        CHECK_THROWS_WITH_AS(
            perfdata::build_dependency_graph(traces, catalog_from({{a, {1.0}}, {b, {1.0}}})),
            doctest::Contains("not a DAG"), InputError);
    }

    SUBCASE("unmeasured component warns, mean 0") {
        std::vector<TraceEvent> traces{
            {"t1", std::nullopt, a, 1.0},
            {"t1", a, c, 1.0},
        };
        auto res = perfdata::build_dependency_graph(traces, catalog_from({{a, {2.0}}}));
        REQUIRE(res.warnings.size() == 1);
        CHECK(res.warnings[0].find("S/c") != std::string::npos);
        CHECK(res.graph.node(c).mean_exec_ms == 0.0);
        CHECK_FALSE(res.graph.node(c).measured);
    }

    SUBCASE("top level is per subsystem") {
        const ComponentId other{"T", "x"};
        std::vector<TraceEvent> traces{
            {"t1", std::nullopt, other, 1.0},
            {"t1", other, a, 1.0},  // cross-subsystem call
            {"t1", a, b, 1.0},
        };
        auto res = perfdata::build_dependency_graph(
            traces, catalog_from({{a, {1.0}}, {b, {1.0}}, {other, {1.0}}}));
        CHECK(res.graph.node(other).is_top_level);
        CHECK(res.graph.node(a).is_top_level);  // only caller is in subsystem T
        CHECK_FALSE(res.graph.node(b).is_top_level);
    }
}

TEST_CASE("graph build is order independent and duplication invariant") {
    const ComponentId a{"S", "a"}, b{"S", "b"}, c{"S", "c"};
    std::vector<TraceEvent> traces;
    for (int t = 0; t < 6; ++t) {
        const std::string id = "t" + std::to_string(t);
        traces.push_back({id, std::nullopt, a, 4.0});
        traces.push_back({id, a, b, 1.0});
        traces.push_back({id, a, b, 1.0});
        traces.push_back({id, b, c, 0.5});
        traces.push_back({id, b, c, 0.5});
        traces.push_back({id, a, c, 0.5});
    }
    auto cat = catalog_from({{a, {4.0}}, {b, {1.0}}, {c, {0.5}}});
    const auto reference = perfdata::build_dependency_graph(traces, cat).graph;

    SUBCASE("shuffled") {
        std::mt19937 gen(7);
        for (int round = 0; round < 5; ++round) {
            std::shuffle(traces.begin(), traces.end(), gen);
            CHECK(perfdata::build_dependency_graph(traces, cat).graph == reference);
        }
    }
    SUBCASE("duplicated traces under fresh ids") {
        auto doubled = traces;
        for (auto ev : traces) {
            ev.trace_id = "dup_" + ev.trace_id;
            doubled.push_back(ev);
        }
        CHECK(perfdata::build_dependency_graph(doubled, cat).graph == reference);
    }
}
