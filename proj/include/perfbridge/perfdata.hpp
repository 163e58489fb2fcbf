#pragma once

#include <compare>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "perfbridge/stats.hpp"

namespace perfbridge::perfdata {

/// Identifies one measured component: a function (or class) inside a
/// subsystem (service/module).
struct ComponentId {
    std::string subsystem;
    std::string component;

    auto operator<=>(const ComponentId&) const = default;
    std::string str() const { return subsystem + "/" + component; }
};

/// All measurement samples of one software version, one Sample per component.
struct MeasurementCatalog {
    std::string version;
    std::map<ComponentId, stats::Sample> entries;
};

/// One recorded call. caller is empty for entry-point (ROOT) calls.
struct TraceEvent {
    std::string trace_id;
    std::optional<ComponentId> caller;
    ComponentId callee;
    double duration_ms = 0.0;
};

struct NodeInfo {
    double mean_exec_ms = 0.0;
    bool is_top_level = false;
    bool measured = true;
    bool deviated = false;  ///< marker set by deviation-subgraph extraction

    bool operator==(const NodeInfo&) const = default;
};

/// Labeled call-dependency DAG. Edge attribute is the average number of
/// calls the target receives per invocation of the source.
class DependencyGraph {
public:
    using Edge = std::pair<ComponentId, ComponentId>;

    const std::map<ComponentId, NodeInfo>& nodes() const { return nodes_; }
    const std::map<Edge, double>& edges() const { return edges_; }

    bool has_node(const ComponentId& id) const { return nodes_.count(id) > 0; }
    const NodeInfo& node(const ComponentId& id) const;

    void add_node(const ComponentId& id, NodeInfo info);
    void add_edge(const ComponentId& from, const ComponentId& to,
                  double calls_per_invocation);

    /// Outgoing (callee, multiplicity) pairs, ordered by callee id.
    std::vector<std::pair<ComponentId, double>> out_edges(const ComponentId& id) const;
    std::vector<ComponentId> in_neighbors(const ComponentId& id) const;

    /// Nodes in a deterministic topological order (callers first).
    std::vector<ComponentId> topological_order() const;

    std::vector<ComponentId> top_level_nodes() const;
    std::vector<std::string> subsystems() const;

    /// Verifies acyclicity and recomputes is_top_level (a node is top-level
    /// iff it has no incoming edge from within its own subsystem).
    /// Throws InputError naming one cycle if the graph is not a DAG.
    void finalize();

    bool operator==(const DependencyGraph&) const = default;

private:
    std::map<ComponentId, NodeInfo> nodes_;
    std::map<Edge, double> edges_;
};

struct GraphBuildResult {
    DependencyGraph graph;
    std::vector<std::string> warnings;
};

/// Parse a measurement file: header
///   subsystem,component,version,iteration,duration_ms
/// then one row per iteration. The file must hold exactly one version.
MeasurementCatalog load_measurements(std::istream& in, const std::string& source_name);
MeasurementCatalog load_measurements_file(const std::string& path);

/// Parse a trace file: one record per line,
///   trace_id,caller_subsystem,caller_component,callee_subsystem,callee_component,duration_ms
/// with the literal caller value ROOT marking an entry-point call.
std::vector<TraceEvent> load_traces(std::istream& in, const std::string& source_name);
std::vector<TraceEvent> load_traces_file(const std::string& path);

void write_measurements(std::ostream& out, const MeasurementCatalog& catalog);
void write_traces(std::ostream& out, const std::vector<TraceEvent>& traces);

/// Build the dependency DAG from call traces; node timing (mean_exec_ms)
/// comes from the catalog. Components seen in traces but absent from the
/// catalog get mean 0 and a warning.
GraphBuildResult build_dependency_graph(const std::vector<TraceEvent>& traces,
                                        const MeasurementCatalog& catalog);

}  // namespace perfbridge::perfdata
