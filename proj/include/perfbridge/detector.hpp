#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "perfbridge/graph.hpp"
#include "perfbridge/perfdata.hpp"
#include "perfbridge/qpn.hpp"
#include "perfbridge/stats.hpp"

namespace perfbridge::detector {

using perfdata::ComponentId;

struct RunSettings {
    double alpha = 0.05;
    qpn::SimConfig sim;
};

/// Statistical comparison of one predicted metric distribution.
struct MetricVerdict {
    double mpd_ms = 0.0;  ///< mean(updated) - mean(baseline)
    double p_value = 1.0;
    double delta = 0.0;
    stats::Magnitude magnitude = stats::Magnitude::negligible;
    bool regression = false;
};

struct RegressionVerdict {
    MetricVerdict response_time;                    ///< pooled across classes
    std::map<std::string, double> per_class_mpd_ms;
    std::map<std::string, double> cpu_mpd_percent;  ///< per resource, percentage points
    bool overall_regression = false;
    std::vector<graph::SubsystemDeviation> subsystem_deviations;
    std::map<ComponentId, stats::DeviationReport> component_reports;
    std::vector<std::string> warnings;
    bool simulated = false;  ///< false when the empty deviation map short-circuited
};

enum class Outcome { TP, TN, FP, FN };

std::string to_string(Outcome o);

struct OutcomeLabel {
    Outcome label = Outcome::TN;
    std::map<std::string, double> cpu_abs_delta;  ///< |oracle MPD - predicted MPD|
};

struct PipelineInputs {
    perfdata::MeasurementCatalog baseline;
    perfdata::MeasurementCatalog updated;
    std::vector<perfdata::TraceEvent> local_traces;
    std::vector<perfdata::TraceEvent> system_traces;
    qpn::QpnModel model;
    std::optional<qpn::WorkloadSpec> workload;  ///< overrides the model's workload
};

/// Per-component statistical comparison over the catalog intersection.
std::map<ComponentId, stats::DeviationReport> analyze_local(
    const perfdata::MeasurementCatalog& baseline,
    const perfdata::MeasurementCatalog& updated, double alpha);

/// The full detection pipeline: local comparison, deviation subgraph,
/// system mapping, bottom-up propagation, model update, paired baseline /
/// updated simulation, verdict. Baseline and updated models simulate
/// concurrently under common random numbers.
RegressionVerdict run_pipeline(const PipelineInputs& inputs, const RunSettings& settings);

OutcomeLabel classify_outcome(const RegressionVerdict& predicted,
                              const RegressionVerdict& oracle);

/// Machine-readable rendering of a verdict (JSON text) and a plain-text
/// table with the same content.
std::string verdict_to_json(const RegressionVerdict& verdict,
                            const std::optional<OutcomeLabel>& outcome = std::nullopt);
std::string render_table(const RegressionVerdict& verdict,
                         const std::optional<OutcomeLabel>& outcome = std::nullopt);

/// Shared by the oracle: statistical verdict from two simulation results.
RegressionVerdict assemble_verdict(const qpn::PredictionResult& baseline,
                                   const qpn::PredictionResult& updated, double alpha);

}  // namespace perfbridge::detector
