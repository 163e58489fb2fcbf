#include "perfbridge/graph.hpp"

#include <set>

#include "doctest.h"
#include "perfbridge/common.hpp"
#include "perfbridge/rng.hpp"
#include "testutil.hpp"

using namespace perfbridge;
using graph::ComponentId;
using graph::DependencyGraph;
using graph::DeviationMap;

namespace {

DependencyGraph make_graph(
    std::initializer_list<std::pair<std::string, double>> nodes,
    std::initializer_list<std::tuple<std::string, std::string, double>> edges,
    const std::string& subsystem = "B") {
    DependencyGraph g;
    for (const auto& [name, mean] : nodes)
        g.add_node({subsystem, name}, {.mean_exec_ms = mean});
    for (const auto& [from, to, mult] : edges)
        g.add_edge({subsystem, from}, {subsystem, to}, mult);
    g.finalize();
    return g;
}

stats::DeviationReport deviated_with_md(double md) {
    stats::DeviationReport r;
    r.p_value = 0.001;
    r.delta = -1.0;
    r.magnitude = stats::Magnitude::large;
    r.md_ms = md;
    r.significant = true;
    return r;
}

}  // namespace

TEST_CASE("deviation subgraph extraction") {
    // shape of the running example: B1 -> {B3, B4}, B2 -> B4, B1 -> B2? no:
    // two top-level components B1, B2; B1 calls B3 and B4
    auto g = make_graph({{"B1", 120.0}, {"B2", 180.0}, {"B3", 40.0}, {"B4", 20.0}},
                        {{"B1", "B3", 1.0}, {"B1", "B4", 2.0}, {"B2", "B4", 1.0}});

    SUBCASE("no deviations yields the empty graph") {
        auto sub = graph::extract_deviation_subgraph(g, {});
        CHECK(sub.nodes().empty());
        CHECK(sub.edges().empty());
    }

    SUBCASE("deviations on B3 and B4 pull in their ancestors") {
        DeviationMap dev;
        dev[{"B", "B3"}] = deviated_with_md(2.0);
        dev[{"B", "B4"}] = deviated_with_md(1.0);
        auto sub = graph::extract_deviation_subgraph(g, dev);
        std::set<std::string> names;
        for (const auto& [id, info] : sub.nodes()) names.insert(id.component);
        CHECK(names == std::set<std::string>{"B1", "B2", "B3", "B4"});
        CHECK(sub.node({"B", "B3"}).deviated);
        CHECK_FALSE(sub.node({"B", "B1"}).deviated);
        CHECK(sub.edges().count({{"B", "B1"}, {"B", "B3"}}) == 1);
        CHECK(sub.edges().count({{"B", "B1"}, {"B", "B4"}}) == 1);
    }

    SUBCASE("B3 and B4 under B1 alone yield exactly that triangle") {
        auto fig = make_graph({{"B1", 120.0}, {"B2", 180.0}, {"B3", 40.0}, {"B4", 20.0}},
                              {{"B1", "B3", 1.0}, {"B1", "B4", 1.0}});
        DeviationMap dev;
        dev[{"B", "B3"}] = deviated_with_md(2.0);
        dev[{"B", "B4"}] = deviated_with_md(1.0);
        auto sub = graph::extract_deviation_subgraph(fig, dev);
        std::set<std::string> names;
        for (const auto& [id, info] : sub.nodes()) names.insert(id.component);
        CHECK(names == std::set<std::string>{"B1", "B3", "B4"});
        CHECK(sub.edges().size() == 2);
        CHECK(sub.edges().count({{"B", "B1"}, {"B", "B3"}}) == 1);
        CHECK(sub.edges().count({{"B", "B1"}, {"B", "B4"}}) == 1);
    }

    SUBCASE("deviation under one parent keeps the sibling branch out") {
        DeviationMap dev;
        dev[{"B", "B3"}] = deviated_with_md(2.0);
        auto sub = graph::extract_deviation_subgraph(g, dev);
        CHECK(sub.nodes().size() == 2);  // B1 and B3
        CHECK(sub.has_node({"B", "B1"}));
        CHECK(sub.has_node({"B", "B3"}));
        CHECK(sub.edges().size() == 1);
    }

    SUBCASE("top-level-only deviation is a single node") {
        DeviationMap dev;
        dev[{"B", "B2"}] = deviated_with_md(5.0);
        auto sub = graph::extract_deviation_subgraph(g, dev);
        CHECK(sub.nodes().size() == 1);
        CHECK(sub.node({"B", "B2"}).deviated);
    }

    SUBCASE("unknown deviated component") {
        DeviationMap dev;
        dev[{"B", "nope"}] = deviated_with_md(1.0);
        CHECK_THROWS_WITH_AS(graph::extract_deviation_subgraph(g, dev),
                             doctest::Contains("B/nope"), InputError);
    }
}

TEST_CASE("maximum common subgraph mapping") {
    SUBCASE("isomorphic induced subgraph maps fully") {
        auto local = make_graph({{"A", 1}, {"B", 1}}, {{"A", "B", 1.0}});
        auto system = make_graph({{"A", 1}, {"B", 1}, {"C", 1}},
                                 {{"A", "B", 1.0}, {"A", "C", 1.0}});
        auto m = graph::map_to_system_graph(local, system);
        CHECK(m.pairs.size() == 2);
    }

    SUBCASE("no shared labels") {
        auto local = make_graph({{"X", 1}}, {});
        auto system = make_graph({{"Y", 1}}, {});
        CHECK_THROWS_WITH_AS(graph::map_to_system_graph(local, system),
                             doctest::Contains("no common components"), InputError);
    }

    SUBCASE("node missing from system drops only that node") {
        auto local = make_graph({{"A", 1}, {"B", 1}, {"C", 1}},
                                {{"A", "B", 1.0}, {"A", "C", 1.0}});
        auto system = make_graph({{"A", 1}, {"B", 1}}, {{"A", "B", 1.0}});
        auto m = graph::map_to_system_graph(local, system);
        CHECK(m.pairs.size() == 2);
        CHECK(m.pairs.count({"B", "A"}) == 1);
        CHECK(m.pairs.count({"B", "B"}) == 1);
    }

    SUBCASE("local edge missing in system forces a choice") {
        // local has A -> B, system has both nodes but no edge; only one of
        // the two can be kept together with consistency... both can be kept
        // only if the edge exists, so expect the larger side plus C
        auto local = make_graph({{"A", 1}, {"B", 1}}, {{"A", "B", 1.0}});
        auto system = make_graph({{"A", 1}, {"B", 1}}, {});
        auto m = graph::map_to_system_graph(local, system);
        CHECK(m.pairs.size() == 1);
        // tie between {A} and {B}: lexicographically smallest wins
        CHECK(m.pairs.count({"B", "A"}) == 1);
    }

    SUBCASE("deviated nodes win ties") {
        auto local = make_graph({{"A", 1}, {"B", 1}}, {{"A", "B", 1.0}});
        DeviationMap dev;
        dev[{"B", "B"}] = deviated_with_md(1.0);
        auto marked = graph::extract_deviation_subgraph(local, dev);
        auto system = make_graph({{"A", 1}, {"B", 1}}, {});
        auto m = graph::map_to_system_graph(marked, system);
        CHECK(m.pairs.size() == 1);
        CHECK(m.pairs.count({"B", "B"}) == 1);
    }
}

TEST_CASE("mcs matches brute force on random small graphs") {
    rng::Stream gen(41, "mcs");
    const std::vector<std::string> names{"a", "b", "c", "d", "e", "f"};
    for (int trial = 0; trial < 120; ++trial) {
        const int n1 = static_cast<int>(gen.uniform_int(1, 6));
        const int n2 = static_cast<int>(gen.uniform_int(1, 6));

        DependencyGraph local, system;
        testutil::TinyGraph t1, t2;
        for (int i = 0; i < n1; ++i) {
            local.add_node({"S", names[i]}, {});
            t1.labels.push_back(names[i]);
        }
        for (int i = 0; i < n2; ++i) {
            system.add_node({"S", names[i]}, {});
            t2.labels.push_back(names[i]);
        }
        // random forward edges keep both graphs acyclic
        for (int i = 0; i < n1; ++i)
            for (int j = i + 1; j < n1; ++j)
                if (gen.uniform() < 0.4) {
                    local.add_edge({"S", names[i]}, {"S", names[j]}, 1.0);
                    t1.edges.insert({i, j});
                }
        for (int i = 0; i < n2; ++i)
            for (int j = i + 1; j < n2; ++j)
                if (gen.uniform() < 0.4) {
                    system.add_edge({"S", names[i]}, {"S", names[j]}, 1.0);
                    t2.edges.insert({i, j});
                }
        local.finalize();
        system.finalize();

        const auto expected = testutil::brute_force_mcs(t1, t2, {});
        if (expected.empty()) {
            CHECK_THROWS_AS(graph::map_to_system_graph(local, system), InputError);
            continue;
        }
        auto m = graph::map_to_system_graph(local, system);
        std::vector<std::string> got;
        for (const auto& [from, to] : m.pairs) got.push_back(from.component);
        CHECK(got == expected);
    }
}

TEST_CASE("bottom-up propagation") {
    SUBCASE("single edge, multiplicity 1 and 3") {
        auto g = make_graph({{"B1", 100.0}, {"B3", 10.0}}, {{"B1", "B3", 1.0}});
        DeviationMap dev;
        dev[{"B", "B3"}] = deviated_with_md(2.0);
        graph::GraphMapping m;
        m.pairs[{"B", "B3"}] = {"B", "B3"};
        auto adjusted = graph::propagate_bottom_up(g, m, dev);
        CHECK(adjusted.at({"B", "B1"}) == 102.0);

        auto g3 = make_graph({{"B1", 100.0}, {"B3", 10.0}}, {{"B1", "B3", 3.0}});
        CHECK(graph::propagate_bottom_up(g3, m, dev).at({"B", "B1"}) == 106.0);
    }

    SUBCASE("two paths multiply and sum") {
        // t -> a -> d (1 x 2) and t -> b -> d (2 x 1): multiplicity 4
        DependencyGraph g;
        g.add_node({"B", "t"}, {.mean_exec_ms = 50.0});
        g.add_node({"B", "a"}, {.mean_exec_ms = 5.0});
        g.add_node({"B", "b"}, {.mean_exec_ms = 5.0});
        g.add_node({"B", "d"}, {.mean_exec_ms = 1.0});
        g.add_edge({"B", "t"}, {"B", "a"}, 1.0);
        g.add_edge({"B", "a"}, {"B", "d"}, 2.0);
        g.add_edge({"B", "t"}, {"B", "b"}, 2.0);
        g.add_edge({"B", "b"}, {"B", "d"}, 1.0);
        g.finalize();
        CHECK(graph::path_multiplicity(g, {"B", "t"}, {"B", "d"}) == 4.0);

        DeviationMap dev;
        dev[{"B", "d"}] = deviated_with_md(1.0);
        graph::GraphMapping m;
        m.pairs[{"B", "d"}] = {"B", "d"};
        auto adjusted = graph::propagate_bottom_up(g, m, dev);
        CHECK(adjusted.at({"B", "t"}) == 54.0);
    }

    SUBCASE("deviation on the top-level node itself") {
        auto g = make_graph({{"B1", 100.0}}, {});
        DeviationMap dev;
        dev[{"B", "B1"}] = deviated_with_md(7.0);
        graph::GraphMapping m;
        m.pairs[{"B", "B1"}] = {"B", "B1"};
        CHECK(graph::propagate_bottom_up(g, m, dev).at({"B", "B1"}) == 107.0);
    }

    SUBCASE("unmapped deviations warn and are skipped") {
        auto g = make_graph({{"B1", 100.0}}, {});
        DeviationMap dev;
        dev[{"B", "gone"}] = deviated_with_md(5.0);
        std::vector<std::string> warnings;
        auto adjusted = graph::propagate_bottom_up(g, {}, dev, &warnings);
        CHECK(adjusted.at({"B", "B1"}) == 100.0);
        REQUIRE(warnings.size() == 1);
        CHECK(warnings[0].find("B/gone") != std::string::npos);
    }

    SUBCASE("improvements floor at zero") {
        auto g = make_graph({{"B1", 10.0}, {"B3", 9.0}}, {{"B1", "B3", 1.0}});
        DeviationMap dev;
        dev[{"B", "B3"}] = deviated_with_md(-25.0);
        graph::GraphMapping m;
        m.pairs[{"B", "B3"}] = {"B", "B3"};
        CHECK(graph::propagate_bottom_up(g, m, dev).at({"B", "B1"}) == 0.0);
    }

    SUBCASE("linearity over disjoint deviation maps") {
        auto g = make_graph({{"B1", 100.0}, {"B3", 10.0}, {"B4", 5.0}},
                            {{"B1", "B3", 2.0}, {"B1", "B4", 3.0}});
        DeviationMap d3, d4, both;
        d3[{"B", "B3"}] = deviated_with_md(1.5);
        d4[{"B", "B4"}] = deviated_with_md(0.5);
        both = d3;
        both.insert(d4.begin(), d4.end());
        graph::GraphMapping m;
        m.pairs[{"B", "B3"}] = {"B", "B3"};
        m.pairs[{"B", "B4"}] = {"B", "B4"};
        const ComponentId top{"B", "B1"};
        const double base = 100.0;
        const double adj3 = graph::propagate_bottom_up(g, m, d3).at(top) - base;
        const double adj4 = graph::propagate_bottom_up(g, m, d4).at(top) - base;
        const double adj_both = graph::propagate_bottom_up(g, m, both).at(top) - base;
        CHECK(adj_both == adj3 + adj4);
    }

    SUBCASE("empty deviation map is a no-op") {
        auto g = make_graph({{"B1", 100.0}, {"B3", 10.0}}, {{"B1", "B3", 1.0}});
        auto adjusted = graph::propagate_bottom_up(g, {}, {});
        CHECK(adjusted.at({"B", "B1"}) == 100.0);
        CHECK(graph::subsystem_deviation(g, adjusted).empty());
    }
}

TEST_CASE("subsystem deviation") {
    auto g = make_graph({{"B1", 120.0}, {"B2", 180.0}, {"B3", 40.0}},
                        {{"B1", "B3", 1.0}});

    SUBCASE("0.3 s to 0.5 s gives relative delta 2/3") {
        std::map<ComponentId, double> adjusted{
            {{"B", "B1"}, 200.0}, {{"B", "B2"}, 300.0}};
        auto devs = graph::subsystem_deviation(g, adjusted);
        REQUIRE(devs.size() == 1);
        CHECK(devs[0].subsystem == "B");
        CHECK(devs[0].baseline_total_ms == 300.0);
        CHECK(devs[0].adjusted_total_ms == 500.0);
        CHECK(devs[0].relative_delta == 2.0 / 3.0);
    }

    SUBCASE("10 ms to 12 ms gives +0.2") {
        auto g2 = make_graph({{"B1", 10.0}}, {});
        auto devs = graph::subsystem_deviation(g2, {{{"B", "B1"}, 12.0}});
        REQUIRE(devs.size() == 1);
        CHECK(devs[0].relative_delta == doctest::Approx(0.2));
    }

    SUBCASE("unchanged subsystems are omitted") {
        std::map<ComponentId, double> adjusted{
            {{"B", "B1"}, 120.0}, {{"B", "B2"}, 180.0}};
        CHECK(graph::subsystem_deviation(g, adjusted).empty());
    }

    SUBCASE("degenerate timing") {
        auto g2 = make_graph({{"B1", 0.0}}, {});
        CHECK_THROWS_WITH_AS(graph::subsystem_deviation(g2, {{{"B", "B1"}, 3.0}}),
                             doctest::Contains("degenerate"), InputError);
    }

    SUBCASE("missing adjusted entry") {
        CHECK_THROWS_AS(graph::subsystem_deviation(g, {}), InputError);
    }
}
