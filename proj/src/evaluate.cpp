#include "perfbridge/evaluate.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "json.hpp"
#include "perfbridge/common.hpp"
#include "perfbridge/rng.hpp"

namespace perfbridge::evaluate {

namespace {

constexpr double kIntensities[] = {0.10, 0.50, 2.50};
const char* const kIntensityLabels[] = {"Low", "Medium", "High"};

std::string fmt(const char* format, double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), format, v);
    return buf;
}

// extra busy seconds per wall second, per unit of injection intensity
double impact_score(const synth::Scenario& scenario, const perfdata::ComponentId& id) {
    double visit_rate = 0.0;
    for (const auto& cls : scenario.model.workload.classes) {
        const auto& route = scenario.routes.at(cls.name);
        if (std::find(route.begin(), route.end(), id.subsystem) != route.end())
            visit_rate += cls.arrival_rate_per_s;
    }
    return visit_rate * static_cast<double>(scenario.invocations_per_visit.at(id)) *
           scenario.true_inclusive_ms.at(id) / 1000.0;
}

CellResult run_cell(const synth::Scenario& scenario, const detector::RunSettings& settings,
                    const perfdata::ComponentId& location, double intensity,
                    const qpn::WorkloadSpec& workload) {
    const synth::Injection injection{location, intensity};
    const std::uint64_t inject_seed =
        scenario.spec.seed ^ rng::stable_hash("cell/" + location.str() + "/" +
                                              fmt("%.2f", intensity));
    const auto updated = synth::inject_slowdown(scenario.baseline, injection, inject_seed,
                                                scenario.spec.noise_cv);

    detector::PipelineInputs inputs{scenario.baseline, updated, scenario.local_traces,
                                    scenario.system_traces, scenario.model, workload};
    CellResult cell;
    cell.component = location;
    cell.intensity = intensity;
    cell.predicted = detector::run_pipeline(inputs, settings);
    cell.oracle = synth::oracle_end_to_end(scenario, injection, workload, settings);
    cell.outcome = detector::classify_outcome(cell.predicted, cell.oracle);
    return cell;
}

std::string cpu_cell(const CellResult& cell) {
    const std::string resource = cell.component.subsystem;
    const double o = cell.oracle.cpu_mpd_percent.count(resource)
                         ? cell.oracle.cpu_mpd_percent.at(resource) : 0.0;
    const double p = cell.predicted.cpu_mpd_percent.count(resource)
                         ? cell.predicted.cpu_mpd_percent.at(resource) : 0.0;
    const double d = cell.outcome.cpu_abs_delta.count(resource)
                         ? cell.outcome.cpu_abs_delta.at(resource) : 0.0;
    char buf[96];
    std::snprintf(buf, sizeof(buf), "%9.2f %9.2f %7.2f", o, p, d);
    return buf;
}

void render_rows(std::ostringstream& out, const std::vector<CellResult>& cells,
                 bool with_workload) {
    for (const auto& cell : cells) {
        char buf[256];
        if (with_workload) {
            std::snprintf(buf, sizeof(buf), "%-4s %-8s %-10s", cell.location_label.c_str(),
                          cell.intensity_label.c_str(), cell.workload_label.c_str());
        } else {
            std::snprintf(buf, sizeof(buf), "%-4s %-8s", cell.location_label.c_str(),
                          cell.intensity_label.c_str());
        }
        out << buf;
        std::snprintf(buf, sizeof(buf), " %10.2f %-10s %10.2f %-10s %-7s %s\n",
                      cell.oracle.response_time.mpd_ms,
                      stats::to_string(cell.oracle.response_time.magnitude).c_str(),
                      cell.predicted.response_time.mpd_ms,
                      stats::to_string(cell.predicted.response_time.magnitude).c_str(),
                      detector::to_string(cell.outcome.label).c_str(),
                      cpu_cell(cell).c_str());
        out << buf;
    }
}

nlohmann::ordered_json cell_to_json(const CellResult& cell) {
    const std::string resource = cell.component.subsystem;
    nlohmann::ordered_json doc;
    doc["location"] = cell.location_label;
    doc["component"] = cell.component.str();
    doc["intensity"] = cell.intensity;
    doc["intensity_label"] = cell.intensity_label;
    doc["workload"] = cell.workload_label;
    doc["testing"] = {{"mpd_ms", cell.oracle.response_time.mpd_ms},
                      {"effect_size",
                       stats::to_string(cell.oracle.response_time.magnitude)},
                      {"p_value", cell.oracle.response_time.p_value},
                      {"regression", cell.oracle.overall_regression}};
    doc["prediction"] = {{"mpd_ms", cell.predicted.response_time.mpd_ms},
                         {"effect_size",
                          stats::to_string(cell.predicted.response_time.magnitude)},
                         {"p_value", cell.predicted.response_time.p_value},
                         {"regression", cell.predicted.overall_regression}};
    doc["outcome"] = detector::to_string(cell.outcome.label);
    doc["cpu"] = {{"resource", resource},
                  {"testing_mpd", cell.oracle.cpu_mpd_percent.count(resource)
                                      ? cell.oracle.cpu_mpd_percent.at(resource) : 0.0},
                  {"prediction_mpd",
                   cell.predicted.cpu_mpd_percent.count(resource)
                       ? cell.predicted.cpu_mpd_percent.at(resource) : 0.0},
                  {"abs_delta", cell.outcome.cpu_abs_delta.count(resource)
                                    ? cell.outcome.cpu_abs_delta.at(resource) : 0.0}};
    return doc;
}

}  // namespace

std::vector<perfdata::ComponentId> pick_locations(const synth::Scenario& scenario) {
    std::vector<std::pair<double, perfdata::ComponentId>> scored;
    for (const auto& [id, n] : scenario.invocations_per_visit)
        scored.emplace_back(impact_score(scenario, id), id);
    if (scored.size() < 3)
        throw InputError("scenario too small: need at least 3 components");
    std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });
    return {scored.front().second, scored[scored.size() / 2].second,
            scored.back().second};
}

EvaluationReport run_fixed_grid(const synth::Scenario& scenario,
                                const detector::RunSettings& settings) {
    const auto locations = pick_locations(scenario);
    EvaluationReport report;
    for (std::size_t loc = 0; loc < locations.size(); ++loc) {
        for (std::size_t level = 0; level < 3; ++level) {
            CellResult cell = run_cell(scenario, settings, locations[loc],
                                       kIntensities[level], scenario.model.workload);
            cell.location_label = "L" + std::to_string(loc + 1);
            cell.intensity_label = kIntensityLabels[level];
            cell.workload_label = "Original";
            report.fixed_agreement += cell.agreement() ? 1 : 0;
            report.fixed.push_back(std::move(cell));
        }
    }
    return report;
}

void run_various_grid(const synth::Scenario& scenario,
                      const detector::RunSettings& settings, double intensity_factor,
                      EvaluationReport& report) {
    if (report.fixed.size() != 9)
        throw InputError("various grid requires a completed fixed grid");
    const auto variants =
        synth::workload_variants(scenario.model.workload, scenario.model, intensity_factor);

    for (std::size_t loc = 0; loc < 3; ++loc) {
        // minimum detected intensity at this location, highest when absent
        std::size_t pick = 2;
        for (std::size_t level = 0; level < 3; ++level) {
            const auto& cell = report.fixed[loc * 3 + level];
            if (cell.outcome.label == detector::Outcome::TP) {
                pick = level;
                break;
            }
        }
        const auto& base_cell = report.fixed[loc * 3 + pick];

        for (int w = 0; w < 4; ++w) {
            const qpn::WorkloadSpec& workload =
                w == 0 ? scenario.model.workload : variants[static_cast<std::size_t>(w - 1)];
            CellResult cell = run_cell(scenario, settings, base_cell.component,
                                       base_cell.intensity, workload);
            cell.location_label = base_cell.location_label;
            cell.intensity_label = base_cell.intensity_label;
            cell.workload_label = w == 0 ? "Original" : "Variant " + std::to_string(w);
            report.various_agreement += cell.agreement() ? 1 : 0;
            report.various.push_back(std::move(cell));
        }
    }
}

std::string render_grid_table(const EvaluationReport& report) {
    std::ostringstream out;
    out << "== fixed workload ==\n";
    out << "                   -- response time --------------------------  "
           "-- cpu percentage --------\n";
    out << "loc  intens     test mpd   effect      pred mpd   effect     "
           "outcome  test mpd  pred mpd     |d|\n";
    render_rows(out, report.fixed, false);
    out << "agreement: " << report.fixed_agreement << "/" << report.fixed.size() << "\n";

    if (!report.various.empty()) {
        out << "\n== various workload ==\n";
        out << "                              -- response time ------------------"
               "--------  -- cpu percentage --------\n";
        out << "loc  intens   workload      test mpd   effect      pred mpd   "
               "effect     outcome  test mpd  pred mpd     |d|\n";
        render_rows(out, report.various, true);
        out << "agreement: " << report.various_agreement << "/" << report.various.size()
            << "\n";
    }
    return out.str();
}

std::string report_to_json(const EvaluationReport& report) {
    nlohmann::ordered_json doc;
    auto& fixed = doc["fixed_workload"] = nlohmann::ordered_json::array();
    for (const auto& cell : report.fixed) fixed.push_back(cell_to_json(cell));
    doc["fixed_agreement"] = report.fixed_agreement;
    if (!report.various.empty()) {
        auto& various = doc["various_workload"] = nlohmann::ordered_json::array();
        for (const auto& cell : report.various) various.push_back(cell_to_json(cell));
        doc["various_agreement"] = report.various_agreement;
    }
    return doc.dump(2) + "\n";
}

}  // namespace perfbridge::evaluate
