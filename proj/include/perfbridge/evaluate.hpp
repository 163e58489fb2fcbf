#pragma once

#include <string>
#include <vector>

#include "perfbridge/synth.hpp"

namespace perfbridge::evaluate {

/// One grid cell: an injection evaluated by both the component-granular
/// oracle and the model-based detector.
struct CellResult {
    std::string location_label;   // L1 / L2 / L3
    perfdata::ComponentId component;
    std::string intensity_label;  // Low / Medium / High
    double intensity = 0.0;
    std::string workload_label;   // Original / Variant 1..3
    detector::RegressionVerdict oracle;
    detector::RegressionVerdict predicted;
    detector::OutcomeLabel outcome;

    bool agreement() const {
        return outcome.label == detector::Outcome::TP ||
               outcome.label == detector::Outcome::TN;
    }
};

struct EvaluationReport {
    std::vector<CellResult> fixed;    ///< 3 locations x 3 intensities
    std::vector<CellResult> various;  ///< 3 locations x (original + 3 variants)
    int fixed_agreement = 0;
    int various_agreement = 0;
};

/// The three injection locations, ranked by system impact: L1 the heaviest
/// (inclusive time x invocation rate), L3 the lightest, L2 in between.
std::vector<perfdata::ComponentId> pick_locations(const synth::Scenario& scenario);

EvaluationReport run_fixed_grid(const synth::Scenario& scenario,
                                const detector::RunSettings& settings);

/// Extends a fixed-grid report with the various-workload grid, using each
/// location's minimum detected intensity (highest when none was detected).
void run_various_grid(const synth::Scenario& scenario,
                      const detector::RunSettings& settings,
                      double intensity_factor, EvaluationReport& report);

std::string render_grid_table(const EvaluationReport& report);
std::string report_to_json(const EvaluationReport& report);

}  // namespace perfbridge::evaluate
