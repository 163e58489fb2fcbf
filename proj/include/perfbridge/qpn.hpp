#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "perfbridge/graph.hpp"
#include "perfbridge/stats.hpp"

namespace perfbridge::qpn {

enum class Discipline { fcfs, ps };
enum class PlaceKind { ordinary, queueing, sink };

/// A place of the net. Queueing places own a queue/server station plus a
/// depository; tokens become available to transitions only after service.
/// Sink places absorb tokens and complete the carried request.
struct Place {
    std::string name;
    PlaceKind kind = PlaceKind::ordinary;

    // queueing places only
    std::string subsystem;   ///< subsystem whose deviation scales the demands
    std::string resource;    ///< utilization reporting key (defaults to subsystem)
    int servers = 1;
    Discipline discipline = Discipline::fcfs;
    bool deterministic_service = false;  ///< fixed service times instead of exponential
    std::map<std::string, double> service_demand_s;  ///< per token color, seconds

    bool operator==(const Place&) const = default;
};

struct Arc {
    std::string place;
    std::string color;
    int weight = 1;

    bool operator==(const Arc&) const = default;
};

/// One probabilistic outcome of a transition firing.
struct FiringMode {
    double probability = 1.0;
    std::vector<Arc> outputs;

    bool operator==(const FiringMode&) const = default;
};

/// Immediate transition: fires as soon as every input arc is satisfiable,
/// consuming the inputs and emitting the outputs of one sampled mode.
struct Transition {
    std::string name;
    std::vector<Arc> inputs;
    std::vector<FiringMode> modes;

    bool operator==(const Transition&) const = default;
};

struct RequestClass {
    std::string name;
    double arrival_rate_per_s = 0.0;
    double mix_probability = 1.0;
    std::string entry_place;

    bool operator==(const RequestClass&) const = default;
};

struct WorkloadSpec {
    std::vector<RequestClass> classes;

    double total_rate() const;
    bool operator==(const WorkloadSpec&) const = default;
};

struct QpnModel {
    std::vector<Place> places;
    std::vector<Transition> transitions;
    WorkloadSpec workload;
    std::map<std::pair<std::string, std::string>, int> initial_marking;  // (place, color) -> count

    const Place* find_place(const std::string& name) const;
    bool operator==(const QpnModel&) const = default;
};

struct SimConfig {
    double duration_s = 600.0;
    double warmup_s = 60.0;
    int replications = 1;
    std::uint64_t seed = 0;
};

struct PredictionResult {
    std::map<std::string, stats::Sample> response_times_ms;  ///< per request class
    std::map<std::string, double> utilization;               ///< per resource
    long long completed = 0;
    long long arrived = 0;
    long long in_system_at_end = 0;   ///< request tokens still in the net
    double mean_in_system = 0.0;      ///< time-averaged, measurement window
    std::vector<std::string> warnings;

    stats::Sample pooled_response_times_ms() const;
};

/// Offered-load analysis via flow propagation through the transitions.
/// exact is false when the net uses synchronizing transitions or shared
/// input places, where the propagation is only an approximation.
struct LoadAnalysis {
    bool exact = true;
    std::map<std::string, double> rho;  ///< per queueing place
};

/// Validates every model invariant; throws InputError naming the offending
/// element.
void validate(const QpnModel& model);
void validate(const WorkloadSpec& workload);

QpnModel load_model(std::istream& in, const std::string& source_name);
QpnModel load_model_file(const std::string& path);
void write_model(std::ostream& out, const QpnModel& model);

/// Workload section alone (same `class ...` line format as the model file).
WorkloadSpec load_workload_file(const std::string& path);

/// Returns a copy of the model with every matched queueing place's service
/// demands scaled by (1 + relative_delta). Throws when a deviation's
/// subsystem matches no queueing place.
QpnModel apply_deviation(const QpnModel& model,
                         const std::vector<graph::SubsystemDeviation>& deviations);

LoadAnalysis analyze_offered_load(const QpnModel& model);
LoadAnalysis analyze_offered_load(const QpnModel& model, const WorkloadSpec& workload);

/// Discrete-event simulation. Deterministic for a fixed config: replication
/// r uses seed + r, with one independent random stream per stochastic
/// source. Response times pool across replications; utilization averages.
PredictionResult simulate(const QpnModel& model, const SimConfig& config);

}  // namespace perfbridge::qpn
