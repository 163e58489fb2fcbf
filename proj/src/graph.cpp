#include "perfbridge/graph.hpp"

#include <algorithm>
#include <set>

#include "perfbridge/common.hpp"

namespace perfbridge::graph {

DeviationMap make_deviation_map(
    const std::map<ComponentId, stats::DeviationReport>& reports) {
    DeviationMap out;
    for (const auto& [id, report] : reports)
        if (report.significant) out.emplace(id, report);
    return out;
}

DependencyGraph extract_deviation_subgraph(const DependencyGraph& local,
                                           const DeviationMap& deviations) {
    for (const auto& [id, report] : deviations)
        if (!local.has_node(id))
            throw InputError("deviated component not in dependency graph: " + id.str());

    // deviated nodes plus all transitive ancestors
    std::set<ComponentId> keep;
    std::vector<ComponentId> frontier;
    for (const auto& [id, report] : deviations) {
        keep.insert(id);
        frontier.push_back(id);
    }
    while (!frontier.empty()) {
        const ComponentId cur = frontier.back();
        frontier.pop_back();
        for (const auto& parent : local.in_neighbors(cur))
            if (keep.insert(parent).second) frontier.push_back(parent);
    }

    DependencyGraph sub;
    for (const auto& id : keep) {
        perfdata::NodeInfo info = local.node(id);
        info.deviated = deviations.count(id) > 0;
        sub.add_node(id, info);
    }
    for (const auto& [edge, mult] : local.edges())
        if (keep.count(edge.first) && keep.count(edge.second))
            sub.add_edge(edge.first, edge.second, mult);
    sub.finalize();
    return sub;
}

namespace {

// Backtracking search for the largest consistent node subset. Candidates
// are the label-shared nodes; an include/exclude tree is pruned by the
// remaining-count bound. Label anchoring plays the role of the symmetry
// constraint: each node has exactly one possible image.
struct McsSearch {
    struct Candidate {
        ComponentId id;
        bool deviated = false;
        std::vector<std::size_t> conflicts;  // indices it cannot join
    };

    std::vector<Candidate> candidates;
    std::vector<std::size_t> current, best;
    int current_dev = 0, best_dev = -1;

    bool better_than_best(std::size_t size, int dev,
                          const std::vector<std::size_t>& chosen) const {
        if (size != best.size()) return size > best.size();
        if (dev != best_dev) return dev > best_dev;
        // compare sorted id sets; candidates are in id order so indices work
        return chosen < best;
    }

    void run(std::size_t next) {
        if (next == candidates.size()) {
            if (better_than_best(current.size(), current_dev, current))
                best = current, best_dev = current_dev;
            return;
        }
        if (current.size() + (candidates.size() - next) < best.size())
            return;  // cannot even reach the best size

        // include candidates[next] if it conflicts with nothing chosen
        const auto& cand = candidates[next];
        bool ok = true;
        for (std::size_t idx : current)
            if (std::binary_search(cand.conflicts.begin(), cand.conflicts.end(), idx)) {
                ok = false;
                break;
            }
        if (ok) {
            current.push_back(next);
            current_dev += cand.deviated ? 1 : 0;
            run(next + 1);
            current_dev -= cand.deviated ? 1 : 0;
            current.pop_back();
        }
        run(next + 1);
    }
};

}  // namespace

GraphMapping map_to_system_graph(const DependencyGraph& local_sub,
                                 const DependencyGraph& system) {
    std::vector<McsSearch::Candidate> shared;
    std::map<ComponentId, std::size_t> index;
    for (const auto& [id, info] : local_sub.nodes()) {
        if (!system.has_node(id)) continue;
        index[id] = shared.size();
        shared.push_back({id, info.deviated, {}});
    }
    if (shared.empty()) {
        if (local_sub.nodes().empty()) return {};
        throw InputError("no common components between local and system graphs");
    }

    // two shared nodes conflict when a local edge between them has no
    // system counterpart
    for (const auto& [edge, mult] : local_sub.edges()) {
        auto a = index.find(edge.first);
        auto b = index.find(edge.second);
        if (a == index.end() || b == index.end()) continue;
        if (!system.edges().count(edge)) {
            shared[a->second].conflicts.push_back(b->second);
            shared[b->second].conflicts.push_back(a->second);
        }
    }

    // conflict-free nodes belong to every maximum mapping; the branching
    // search only covers the conflicted ones
    GraphMapping mapping;
    McsSearch search;
    std::map<std::size_t, std::size_t> renumber;  // old index -> search index
    for (std::size_t i = 0; i < shared.size(); ++i) {
        if (shared[i].conflicts.empty()) {
            mapping.pairs.emplace(shared[i].id, shared[i].id);
        } else {
            renumber[i] = search.candidates.size();
            search.candidates.push_back(shared[i]);
        }
    }
    for (auto& cand : search.candidates) {
        for (auto& c : cand.conflicts) c = renumber.at(c);
        std::sort(cand.conflicts.begin(), cand.conflicts.end());
    }

    search.run(0);
    for (std::size_t idx : search.best)
        mapping.pairs.emplace(search.candidates[idx].id, search.candidates[idx].id);
    return mapping;
}

double path_multiplicity(const DependencyGraph& g, const ComponentId& source,
                         const ComponentId& target) {
    std::map<ComponentId, double> mult;
    mult[source] = 1.0;
    for (const auto& id : g.topological_order()) {
        auto it = mult.find(id);
        if (it == mult.end()) continue;
        for (const auto& [to, calls] : g.out_edges(id)) mult[to] += it->second * calls;
    }
    auto it = mult.find(target);
    return it == mult.end() ? 0.0 : it->second;
}

std::map<ComponentId, double> propagate_bottom_up(
    const DependencyGraph& system, const GraphMapping& mapping,
    const DeviationMap& deviations, std::vector<std::string>* warnings) {
    std::map<ComponentId, double> mapped_md;
    for (const auto& [id, report] : deviations) {
        if (mapping.pairs.count(id) && system.has_node(id)) {
            mapped_md[id] = report.md_ms;
        } else if (warnings) {
            warnings->push_back("deviated component " + id.str() +
                                " is not part of the system graph; ignored");
        }
    }

    const auto topo = system.topological_order();
    std::map<ComponentId, double> adjusted;
    for (const auto& top : system.top_level_nodes()) {
        // expected invocations of every descendant per invocation of `top`
        std::map<ComponentId, double> mult;
        mult[top] = 1.0;
        for (const auto& id : topo) {
            auto it = mult.find(id);
            if (it == mult.end()) continue;
            for (const auto& [to, calls] : system.out_edges(id))
                mult[to] += it->second * calls;
        }
        double value = system.node(top).mean_exec_ms;
        for (const auto& [id, md] : mapped_md) {
            auto it = mult.find(id);
            if (it != mult.end()) value += md * it->second;
        }
        adjusted[top] = std::max(0.0, value);
    }
    return adjusted;
}

std::vector<SubsystemDeviation> subsystem_deviation(
    const DependencyGraph& system, const std::map<ComponentId, double>& adjusted) {
    std::map<std::string, SubsystemDeviation> per_subsystem;
    for (const auto& top : system.top_level_nodes()) {
        auto it = adjusted.find(top);
        if (it == adjusted.end())
            throw InputError("adjusted mean missing for top-level component " +
                             top.str());
        auto& dev = per_subsystem[top.subsystem];
        dev.subsystem = top.subsystem;
        dev.baseline_total_ms += system.node(top).mean_exec_ms;
        dev.adjusted_total_ms += it->second;
    }

    std::vector<SubsystemDeviation> out;
    for (auto& [name, dev] : per_subsystem) {
        if (dev.adjusted_total_ms == dev.baseline_total_ms) continue;
        if (dev.baseline_total_ms <= 0.0)
            throw InputError("degenerate subsystem timing: " + name +
                             " has zero baseline total");
        dev.relative_delta =
            (dev.adjusted_total_ms - dev.baseline_total_ms) / dev.baseline_total_ms;
        out.push_back(dev);
    }
    return out;
}

}  // namespace perfbridge::graph
