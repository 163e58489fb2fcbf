#pragma once

#include <map>
#include <string>
#include <vector>

#include "perfbridge/perfdata.hpp"
#include "perfbridge/stats.hpp"

namespace perfbridge::graph {

using perfdata::ComponentId;
using perfdata::DependencyGraph;

/// Components whose comparison came back significant with a more than
/// negligible effect. Insert through make_deviation_map to keep the
/// invariant.
using DeviationMap = std::map<ComponentId, stats::DeviationReport>;

/// Filters a full per-component report set down to the significant ones.
DeviationMap make_deviation_map(const std::map<ComponentId, stats::DeviationReport>& reports);

/// Node correspondence between a local graph and the system graph.
/// Matching is label-anchored, so pairs always map an id onto itself;
/// the set of mapped nodes is what the search determines.
struct GraphMapping {
    std::map<ComponentId, ComponentId> pairs;  // local node -> system node
};

struct SubsystemDeviation {
    std::string subsystem;
    double baseline_total_ms = 0.0;
    double adjusted_total_ms = 0.0;
    double relative_delta = 0.0;  // (adjusted - baseline) / baseline

    bool operator==(const SubsystemDeviation&) const = default;
};

/// Induced subgraph holding every deviated node plus all of its ancestors;
/// deviated nodes carry the NodeInfo::deviated marker.
/// Throws if a deviated component is missing from the graph.
DependencyGraph extract_deviation_subgraph(const DependencyGraph& local,
                                           const DeviationMap& deviations);

/// Maximum common subgraph between the extracted local graph and the
/// system graph: largest node set whose ids exist in both and whose local
/// edges are all present in the system graph. Ties prefer mappings with
/// more deviated nodes, then the lexicographically smallest id set.
/// Throws when the graphs share no component at all.
GraphMapping map_to_system_graph(const DependencyGraph& local_sub,
                                 const DependencyGraph& system);

/// Expected invocations of `target` per invocation of `source`: the sum
/// over all DAG paths of the product of calls_per_invocation.
double path_multiplicity(const DependencyGraph& g, const ComponentId& source,
                         const ComponentId& target);

/// Bottom-up propagation: adjusted mean for every top-level node of the
/// system graph. Deviated nodes that did not map into the system graph
/// are skipped (reported through `warnings` when given). Adjusted means
/// are floored at zero.
std::map<ComponentId, double> propagate_bottom_up(
    const DependencyGraph& system, const GraphMapping& mapping,
    const DeviationMap& deviations, std::vector<std::string>* warnings = nullptr);

/// Per-subsystem totals over top-level nodes; subsystems whose adjusted
/// total equals the baseline exactly are omitted.
std::vector<SubsystemDeviation> subsystem_deviation(
    const DependencyGraph& system, const std::map<ComponentId, double>& adjusted);

}  // namespace perfbridge::graph
