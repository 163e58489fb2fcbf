#include "perfbridge/detector.hpp"

#include <cmath>
#include <cstdio>
#include <future>
#include <set>
#include <sstream>

#include "json.hpp"
#include "perfbridge/common.hpp"

namespace perfbridge::detector {

namespace {

std::string fmt(const char* format, double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), format, v);
    return buf;
}

template <typename Fn>
auto stage(const std::string& name, Fn&& fn) {
    try {
        return fn();
    } catch (const Error& e) {
        throw InputError("stage " + name + ": " + e.what());
    }
}

}  // namespace

std::string to_string(Outcome o) {
    switch (o) {
        case Outcome::TP: return "TP";
        case Outcome::TN: return "TN";
        case Outcome::FP: return "FP";
        case Outcome::FN: return "FN";
    }
    return "?";
}

std::map<ComponentId, stats::DeviationReport> analyze_local(
    const perfdata::MeasurementCatalog& baseline,
    const perfdata::MeasurementCatalog& updated, double alpha) {
    std::map<ComponentId, stats::DeviationReport> reports;
    for (const auto& [id, base_sample] : baseline.entries) {
        auto it = updated.entries.find(id);
        if (it == updated.entries.end()) continue;
        reports.emplace(id, stats::compare(base_sample, it->second, alpha));
    }
    return reports;
}

RegressionVerdict assemble_verdict(const qpn::PredictionResult& baseline,
                                   const qpn::PredictionResult& updated, double alpha) {
    RegressionVerdict verdict;
    verdict.simulated = true;

    const auto base_pooled = baseline.pooled_response_times_ms();
    const auto upd_pooled = updated.pooled_response_times_ms();
    if (base_pooled.empty() || upd_pooled.empty())
        throw InputError("simulation produced no completed requests to compare");

    const auto report = stats::compare(base_pooled, upd_pooled, alpha);
    verdict.response_time = {report.md_ms, report.p_value, report.delta,
                             report.magnitude, report.significant};

    for (const auto& [cls, base_sample] : baseline.response_times_ms) {
        auto it = updated.response_times_ms.find(cls);
        if (it == updated.response_times_ms.end()) continue;
        if (base_sample.empty() || it->second.empty()) continue;
        verdict.per_class_mpd_ms[cls] = stats::mean(it->second) - stats::mean(base_sample);
    }

    std::set<std::string> resources;
    for (const auto& [r, u] : baseline.utilization) resources.insert(r);
    for (const auto& [r, u] : updated.utilization) resources.insert(r);
    for (const auto& r : resources) {
        const double b = baseline.utilization.count(r) ? baseline.utilization.at(r) : 0.0;
        const double u = updated.utilization.count(r) ? updated.utilization.at(r) : 0.0;
        verdict.cpu_mpd_percent[r] = (u - b) * 100.0;
    }

    verdict.overall_regression = verdict.response_time.regression;
    for (const auto& w : baseline.warnings)
        verdict.warnings.push_back("baseline model: " + w);
    for (const auto& w : updated.warnings)
        verdict.warnings.push_back("updated model: " + w);
    return verdict;
}

RegressionVerdict run_pipeline(const PipelineInputs& inputs, const RunSettings& settings) {
    const auto reports = stage("analyze-local", [&] {
        return analyze_local(inputs.baseline, inputs.updated, settings.alpha);
    });
    const auto deviations = graph::make_deviation_map(reports);

    if (deviations.empty()) {
        // the updated model would be identical; skip the paired simulation
        RegressionVerdict verdict;
        verdict.component_reports = reports;
        for (const auto& place : inputs.model.places)
            if (place.kind == qpn::PlaceKind::queueing)
                verdict.cpu_mpd_percent[place.resource] = 0.0;
        return verdict;
    }

    const auto local = stage("build-local-graph", [&] {
        return perfdata::build_dependency_graph(inputs.local_traces, inputs.baseline);
    });
    const auto system = stage("build-system-graph", [&] {
        return perfdata::build_dependency_graph(inputs.system_traces, inputs.baseline);
    });

    stage("check-model-coverage", [&] {
        std::set<std::string> modeled;
        for (const auto& place : inputs.model.places)
            if (place.kind == qpn::PlaceKind::queueing) modeled.insert(place.subsystem);
        for (const auto& name : system.graph.subsystems())
            if (!modeled.count(name))
                throw InputError("system graph subsystem '" + name +
                                 "' has no queueing place in the model");
        return 0;
    });

    const auto subgraph = stage("extract-subgraph", [&] {
        return graph::extract_deviation_subgraph(local.graph, deviations);
    });
    const auto mapping = stage("map-to-system", [&] {
        return graph::map_to_system_graph(subgraph, system.graph);
    });

    RegressionVerdict verdict;
    verdict.warnings = local.warnings;
    verdict.warnings.insert(verdict.warnings.end(), system.warnings.begin(),
                            system.warnings.end());

    const auto adjusted = stage("propagate", [&] {
        return graph::propagate_bottom_up(system.graph, mapping, deviations,
                                          &verdict.warnings);
    });
    const auto subsystem_devs = stage("subsystem-deviation", [&] {
        return graph::subsystem_deviation(system.graph, adjusted);
    });

    qpn::QpnModel base_model = inputs.model;
    if (inputs.workload) {
        base_model.workload = *inputs.workload;
        qpn::validate(base_model);
    }
    const auto updated_model = stage("apply-deviation", [&] {
        return qpn::apply_deviation(base_model, subsystem_devs);
    });

    // common random numbers: both runs share the seed schedule
    auto [base_result, upd_result] = stage("simulate", [&] {
        auto base_future = std::async(std::launch::async, [&] {
            return qpn::simulate(base_model, settings.sim);
        });
        auto upd = qpn::simulate(updated_model, settings.sim);
        return std::make_pair(base_future.get(), std::move(upd));
    });

    auto warnings = std::move(verdict.warnings);
    verdict = stage("verdict", [&] {
        return assemble_verdict(base_result, upd_result, settings.alpha);
    });
    verdict.warnings.insert(verdict.warnings.begin(), warnings.begin(), warnings.end());
    verdict.component_reports = reports;
    verdict.subsystem_deviations = subsystem_devs;
    return verdict;
}

OutcomeLabel classify_outcome(const RegressionVerdict& predicted,
                              const RegressionVerdict& oracle) {
    OutcomeLabel out;
    const bool actual = oracle.overall_regression;
    const bool found = predicted.overall_regression;
    if (actual && found) out.label = Outcome::TP;
    else if (!actual && !found) out.label = Outcome::TN;
    else if (!actual && found) out.label = Outcome::FP;
    else out.label = Outcome::FN;

    std::set<std::string> resources;
    for (const auto& [r, v] : predicted.cpu_mpd_percent) resources.insert(r);
    for (const auto& [r, v] : oracle.cpu_mpd_percent) resources.insert(r);
    for (const auto& r : resources) {
        const double p = predicted.cpu_mpd_percent.count(r)
                             ? predicted.cpu_mpd_percent.at(r) : 0.0;
        const double o = oracle.cpu_mpd_percent.count(r)
                             ? oracle.cpu_mpd_percent.at(r) : 0.0;
        out.cpu_abs_delta[r] = std::abs(o - p);
    }
    return out;
}

std::string verdict_to_json(const RegressionVerdict& verdict,
                            const std::optional<OutcomeLabel>& outcome) {
    nlohmann::ordered_json doc;
    doc["response_time"] = {
        {"mpd_ms", verdict.response_time.mpd_ms},
        {"p_value", verdict.response_time.p_value},
        {"delta", verdict.response_time.delta},
        {"magnitude", stats::to_string(verdict.response_time.magnitude)},
        {"regression", verdict.response_time.regression},
    };
    doc["per_class_mpd_ms"] = verdict.per_class_mpd_ms;
    doc["cpu_mpd_percent"] = verdict.cpu_mpd_percent;
    doc["overall_regression"] = verdict.overall_regression;
    doc["simulated"] = verdict.simulated;

    auto& subsystems = doc["subsystem_deviations"] = nlohmann::ordered_json::array();
    for (const auto& dev : verdict.subsystem_deviations)
        subsystems.push_back({{"subsystem", dev.subsystem},
                              {"baseline_total_ms", dev.baseline_total_ms},
                              {"adjusted_total_ms", dev.adjusted_total_ms},
                              {"relative_delta", dev.relative_delta}});

    auto& components = doc["components"] = nlohmann::ordered_json::array();
    for (const auto& [id, report] : verdict.component_reports)
        components.push_back({{"subsystem", id.subsystem},
                              {"component", id.component},
                              {"p_value", report.p_value},
                              {"delta", report.delta},
                              {"magnitude", stats::to_string(report.magnitude)},
                              {"md_ms", report.md_ms},
                              {"significant", report.significant}});

    if (outcome) {
        doc["outcome"] = {{"label", to_string(outcome->label)},
                          {"cpu_abs_delta", outcome->cpu_abs_delta}};
    }
    if (!verdict.warnings.empty()) doc["warnings"] = verdict.warnings;
    return doc.dump(2) + "\n";
}

std::string render_table(const RegressionVerdict& verdict,
                         const std::optional<OutcomeLabel>& outcome) {
    std::ostringstream out;
    out << "metric              mpd              effect size  p-value   regression";
    if (outcome) out << "  outcome";
    out << '\n';

    char line[160];
    std::snprintf(line, sizeof(line), "%-20s%-17s%-13s%-10s%-10s", "response_time",
                  (fmt("%+.2f", verdict.response_time.mpd_ms) + " ms").c_str(),
                  stats::to_string(verdict.response_time.magnitude).c_str(),
                  fmt("%.4f", verdict.response_time.p_value).c_str(),
                  verdict.response_time.regression ? "yes" : "no");
    out << line;
    if (outcome) out << to_string(outcome->label);
    out << '\n';

    for (const auto& [resource, mpd] : verdict.cpu_mpd_percent) {
        std::snprintf(line, sizeof(line), "%-20s%-17s%-13s%-10s%-10s",
                      ("cpu " + resource).c_str(), (fmt("%+.2f", mpd) + " pp").c_str(),
                      "-", "-", "-");
        out << line;
        if (outcome)
            out << fmt("|d|=%.2f", outcome->cpu_abs_delta.count(resource)
                                       ? outcome->cpu_abs_delta.at(resource) : 0.0);
        out << '\n';
    }
    out << "overall_regression: " << (verdict.overall_regression ? "true" : "false")
        << '\n';
    return out.str();
}

}  // namespace perfbridge::detector
