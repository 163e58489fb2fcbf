#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "perfbridge/detector.hpp"

namespace perfbridge::synth {

using perfdata::ComponentId;

/// Parameters of a generated evaluation scenario. Rates may be given
/// explicitly through `workload`; otherwise they are derived from
/// class_mixes so that the busiest place sits at target_utilization.
struct ScenarioSpec {
    int subsystem_count = 2;
    int min_components = 3;
    int max_components = 4;
    double min_self_ms = 2.0;
    double max_self_ms = 20.0;
    int min_calls = 1;
    int max_calls = 2;
    double noise_cv = 0.05;
    int iterations = 30;
    int local_traces_per_component = 5;
    int system_traces_per_subsystem = 10;
    int servers_per_subsystem = 2;
    double target_utilization = 0.55;
    std::vector<double> class_mixes{0.6, 0.4};
    qpn::WorkloadSpec workload;  ///< optional explicit classes with rates
    std::uint64_t seed = 42;
};

ScenarioSpec spec_from_json(const std::string& text);
std::string spec_to_json(const ScenarioSpec& spec);

/// A fully generated scenario: the ingestion artifacts plus the ground
/// truth the oracle simulates from.
struct Scenario {
    ScenarioSpec spec;
    perfdata::MeasurementCatalog baseline;
    std::vector<perfdata::TraceEvent> local_traces;
    std::vector<perfdata::TraceEvent> system_traces;
    perfdata::DependencyGraph system_graph;
    qpn::QpnModel model;

    // generation truth, never exposed to the detector
    std::map<ComponentId, double> true_self_ms;
    std::map<ComponentId, double> true_inclusive_ms;
    std::map<ComponentId, long long> invocations_per_visit;
    std::map<std::string, std::vector<std::string>> routes;  ///< class -> subsystems
};

/// Deterministic per seed; throws when an explicit workload drives any
/// queueing place to an offered load >= 1.
Scenario generate_scenario(const ScenarioSpec& spec);

struct Injection {
    ComponentId location;
    double intensity = 0.0;  ///< 0.10 / 0.50 / 2.50 in the shipped grids
};

/// Fresh measurement noise for every component; the injected location's
/// mean scales by (1 + intensity), everything else keeps its mean.
perfdata::MeasurementCatalog inject_slowdown(const perfdata::MeasurementCatalog& baseline,
                                             const Injection& injection,
                                             std::uint64_t seed, double noise_cv = 0.05);

/// Ground-truth verdict: simulates the whole system at component
/// granularity (busy-wait extra applied at the injected component),
/// bypassing the QPN entirely, and compares end-to-end response times.
detector::RegressionVerdict oracle_end_to_end(const Scenario& scenario,
                                              const std::optional<Injection>& injection,
                                              const qpn::WorkloadSpec& workload,
                                              const detector::RunSettings& settings);

/// The three workload variants: scaled intensity, permuted class mix,
/// and both combined. The model-checked overload refuses variants that
/// overload any place.
std::vector<qpn::WorkloadSpec> workload_variants(const qpn::WorkloadSpec& base,
                                                 double intensity_factor = 1.5);
std::vector<qpn::WorkloadSpec> workload_variants(const qpn::WorkloadSpec& base,
                                                 const qpn::QpnModel& model,
                                                 double intensity_factor = 1.5);

}  // namespace perfbridge::synth
