#include "perfbridge/perfdata.hpp"

#include <algorithm>
#include <cmath>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include "perfbridge/common.hpp"

namespace perfbridge::perfdata {

namespace {

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    fields.push_back(cur);
    return fields;
}

double parse_duration(const std::string& text, const std::string& where) {
    double v = 0.0;
    const char* begin = text.data();
    const char* end = begin + text.size();
    auto [ptr, ec] = std::from_chars(begin, end, v);
    if (ec != std::errc{} || ptr != end)
        throw InputError(where + ": bad duration '" + text + "'");
    if (!std::isfinite(v) || v < 0.0)
        throw InputError(where + ": duration must be a non-negative number, got '" +
                         text + "'");
    return v;
}

long parse_long(const std::string& text, const std::string& where) {
    long v = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || ptr != text.data() + text.size())
        throw InputError(where + ": bad integer '" + text + "'");
    return v;
}

}  // namespace

const NodeInfo& DependencyGraph::node(const ComponentId& id) const {
    auto it = nodes_.find(id);
    if (it == nodes_.end())
        throw InputError("unknown component in graph: " + id.str());
    return it->second;
}

void DependencyGraph::add_node(const ComponentId& id, NodeInfo info) {
    nodes_[id] = info;
}

void DependencyGraph::add_edge(const ComponentId& from, const ComponentId& to,
                               double calls_per_invocation) {
    if (!has_node(from) || !has_node(to))
        throw InputError("edge endpoint not in graph: " + from.str() + " -> " + to.str());
    if (from == to)
        throw InputError("self-call edge rejected: " + from.str());
    edges_[{from, to}] = calls_per_invocation;
}

std::vector<std::pair<ComponentId, double>> DependencyGraph::out_edges(
    const ComponentId& id) const {
    std::vector<std::pair<ComponentId, double>> out;
    // edges_ is ordered by (from, to), so the range scan is ordered by callee
    for (auto it = edges_.lower_bound({id, ComponentId{}});
         it != edges_.end() && it->first.first == id; ++it)
        out.emplace_back(it->first.second, it->second);
    return out;
}

std::vector<ComponentId> DependencyGraph::in_neighbors(const ComponentId& id) const {
    std::vector<ComponentId> in;
    for (const auto& [edge, mult] : edges_)
        if (edge.second == id) in.push_back(edge.first);
    return in;
}

std::vector<ComponentId> DependencyGraph::topological_order() const {
    std::map<ComponentId, int> indegree;
    for (const auto& [id, info] : nodes_) indegree[id] = 0;
    for (const auto& [edge, mult] : edges_) indegree[edge.second]++;

    // Kahn's algorithm over an ordered ready set: deterministic order.
    std::set<ComponentId> ready;
    for (const auto& [id, deg] : indegree)
        if (deg == 0) ready.insert(id);

    std::vector<ComponentId> order;
    while (!ready.empty()) {
        const ComponentId id = *ready.begin();
        ready.erase(ready.begin());
        order.push_back(id);
        for (const auto& [to, mult] : out_edges(id))
            if (--indegree[to] == 0) ready.insert(to);
    }

    if (order.size() != nodes_.size()) {
        // find one cycle for the error message
        std::map<ComponentId, int> state;  // 0 new, 1 on stack, 2 done
        std::vector<ComponentId> stack;
        std::string cycle;
        auto dfs = [&](auto&& self, const ComponentId& u) -> bool {
            state[u] = 1;
            stack.push_back(u);
            for (const auto& [v, mult] : out_edges(u)) {
                if (state[v] == 1) {
                    auto it = std::find(stack.begin(), stack.end(), v);
                    for (; it != stack.end(); ++it) cycle += it->str() + " -> ";
                    cycle += v.str();
                    return true;
                }
                if (state[v] == 0 && self(self, v)) return true;
            }
            stack.pop_back();
            state[u] = 2;
            return false;
        };
        for (const auto& [id, info] : nodes_)
            if (state[id] == 0 && dfs(dfs, id)) break;
        throw InputError("call structure is not a DAG; cycle: " + cycle);
    }
    return order;
}

std::vector<ComponentId> DependencyGraph::top_level_nodes() const {
    std::vector<ComponentId> out;
    for (const auto& [id, info] : nodes_)
        if (info.is_top_level) out.push_back(id);
    return out;
}

std::vector<std::string> DependencyGraph::subsystems() const {
    std::set<std::string> names;
    for (const auto& [id, info] : nodes_) names.insert(id.subsystem);
    return {names.begin(), names.end()};
}

void DependencyGraph::finalize() {
    topological_order();  // throws on cycles
    std::set<ComponentId> has_internal_caller;
    for (const auto& [edge, mult] : edges_)
        if (edge.first.subsystem == edge.second.subsystem)
            has_internal_caller.insert(edge.second);
    for (auto& [id, info] : nodes_)
        info.is_top_level = has_internal_caller.count(id) == 0;
}

MeasurementCatalog load_measurements(std::istream& in, const std::string& source_name) {
    std::string line;
    if (!std::getline(in, line))
        throw InputError(source_name + ": no measurements (empty file)");
    const auto header = split_csv(line);
    const std::vector<std::string> expected{"subsystem", "component", "version",
                                            "iteration", "duration_ms"};
    if (header != expected)
        throw InputError(source_name +
                         ": bad header, expected subsystem,component,version,"
                         "iteration,duration_ms");

    MeasurementCatalog catalog;
    std::map<std::pair<ComponentId, long>, double> rows;  // keyed for dup check
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const std::string where = source_name + ":" + std::to_string(line_no);
        const auto fields = split_csv(line);
        if (fields.size() != 5)
            throw InputError(where + ": expected 5 fields, got " +
                             std::to_string(fields.size()));
        if (fields[0].empty() || fields[1].empty())
            throw InputError(where + ": empty subsystem or component name");
        const ComponentId id{fields[0], fields[1]};
        if (catalog.version.empty()) {
            catalog.version = fields[2];
        } else if (catalog.version != fields[2]) {
            throw InputError(where + ": mixed versions in one file ('" +
                             catalog.version + "' vs '" + fields[2] + "')");
        }
        const long iteration = parse_long(fields[3], where);
        const double duration = parse_duration(fields[4], where);
        if (!rows.emplace(std::make_pair(id, iteration), duration).second)
            throw InputError(where + ": duplicate iteration " +
                             std::to_string(iteration) + " for " + id.str());
    }
    if (rows.empty())
        throw InputError(source_name + ": no measurements");
    // rows is ordered by (component, iteration): samples come out in
    // iteration order
    for (const auto& [key, duration] : rows)
        catalog.entries[key.first].push_back(duration);
    return catalog;
}

MeasurementCatalog load_measurements_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open measurement file: " + path);
    return load_measurements(in, path);
}

std::vector<TraceEvent> load_traces(std::istream& in, const std::string& source_name) {
    std::vector<TraceEvent> traces;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const std::string where = source_name + ":" + std::to_string(line_no);
        const auto fields = split_csv(line);
        if (fields.size() != 6)
            throw InputError(where + ": expected 6 fields, got " +
                             std::to_string(fields.size()));
        TraceEvent ev;
        ev.trace_id = fields[0];
        if (ev.trace_id.empty()) throw InputError(where + ": empty trace id");
        if (fields[1] != "ROOT") {
            if (fields[1].empty() || fields[2].empty())
                throw InputError(where + ": empty caller name");
            ev.caller = ComponentId{fields[1], fields[2]};
        }
        if (fields[3].empty() || fields[4].empty())
            throw InputError(where + ": empty callee name");
        ev.callee = ComponentId{fields[3], fields[4]};
        if (ev.caller && *ev.caller == ev.callee)
            throw InputError(where + ": callee equals caller: " + ev.callee.str());
        ev.duration_ms = parse_duration(fields[5], where);
        traces.push_back(std::move(ev));
    }
    if (traces.empty())
        throw InputError(source_name + ": no trace events");
    return traces;
}

std::vector<TraceEvent> load_traces_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open trace file: " + path);
    return load_traces(in, path);
}

void write_measurements(std::ostream& out, const MeasurementCatalog& catalog) {
    out << "subsystem,component,version,iteration,duration_ms\n";
    for (const auto& [id, sample] : catalog.entries)
        for (std::size_t i = 0; i < sample.size(); ++i) {
            char buf[64];
            std::snprintf(buf, sizeof(buf), "%.17g", sample[i]);
            out << id.subsystem << ',' << id.component << ',' << catalog.version
                << ',' << i << ',' << buf << '\n';
        }
}

void write_traces(std::ostream& out, const std::vector<TraceEvent>& traces) {
    for (const auto& ev : traces) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%.17g", ev.duration_ms);
        if (ev.caller)
            out << ev.trace_id << ',' << ev.caller->subsystem << ','
                << ev.caller->component;
        else
            out << ev.trace_id << ",ROOT,ROOT";
        out << ',' << ev.callee.subsystem << ',' << ev.callee.component << ','
            << buf << '\n';
    }
}

GraphBuildResult build_dependency_graph(const std::vector<TraceEvent>& traces,
                                        const MeasurementCatalog& catalog) {
    if (traces.empty()) throw InputError("no trace events to build a graph from");

    std::set<ComponentId> ids;
    std::map<ComponentId, long long> invocations;           // times seen as callee
    std::map<DependencyGraph::Edge, long long> call_counts;
    std::map<ComponentId, std::set<std::string>> caller_traces;
    for (const auto& ev : traces) {
        ids.insert(ev.callee);
        invocations[ev.callee]++;
        if (ev.caller) {
            ids.insert(*ev.caller);
            call_counts[{*ev.caller, ev.callee}]++;
            caller_traces[*ev.caller].insert(ev.trace_id);
        }
    }

    GraphBuildResult result;
    for (const auto& id : ids) {
        NodeInfo info;
        auto it = catalog.entries.find(id);
        if (it != catalog.entries.end()) {
            info.mean_exec_ms = stats::mean(it->second);
        } else {
            info.measured = false;
            result.warnings.push_back("component " + id.str() +
                                      " appears in traces but has no measurements");
        }
        result.graph.add_node(id, info);
    }

    for (const auto& [edge, count] : call_counts) {
        long long inv = invocations[edge.first];
        // a caller never recorded as a callee counts one invocation per trace
        if (inv == 0)
            inv = static_cast<long long>(caller_traces[edge.first].size());
        result.graph.add_edge(edge.first, edge.second,
                              static_cast<double>(count) / static_cast<double>(inv));
    }

    result.graph.finalize();
    return result;
}

}  // namespace perfbridge::perfdata
