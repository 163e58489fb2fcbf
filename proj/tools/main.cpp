// perfbridge: detects system-level performance regressions from
// component-level measurements by propagating local deviations into a
// queueing Petri net model and simulating both versions.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "perfbridge/common.hpp"
#include "perfbridge/detector.hpp"
#include "perfbridge/evaluate.hpp"
#include "perfbridge/synth.hpp"

namespace {

using namespace perfbridge;

struct RunConfig {
    double alpha = 0.05;
    std::uint64_t seed = 42;
    double duration = 300.0;
    double warmup = 30.0;
    int replications = 3;
    double factor = 1.5;  // workload-variant intensity factor
    std::string format = "table";
    std::string out;  // empty: stdout
    bool verbose = false;

    detector::RunSettings settings() const {
        detector::RunSettings s;
        s.alpha = alpha;
        s.sim = qpn::SimConfig{duration, warmup, replications, seed};
        return s;
    }
};

// flags win over the config file, the config file over PERF_BRIDGE_SEED,
// that over defaults
void apply_config_sources(CLI::App& cmd, RunConfig& config,
                          const std::string& config_path) {
    if (!config_path.empty()) {
        std::ifstream in(config_path);
        if (!in) throw InputError("cannot open config file: " + config_path);
        nlohmann::json doc;
        try {
            in >> doc;
        } catch (const nlohmann::json::exception& e) {
            throw InputError("config file " + config_path + ": " + e.what());
        }
        auto take = [&](const char* flag, const char* key, auto& slot) {
            auto* opt = cmd.get_option_no_throw(flag);
            if (doc.contains(key) && (!opt || opt->count() == 0))
                slot = doc.at(key).get<std::decay_t<decltype(slot)>>();
        };
        take("--alpha", "alpha", config.alpha);
        take("--seed", "seed", config.seed);
        take("--duration", "duration", config.duration);
        take("--warmup", "warmup", config.warmup);
        take("--replications", "replications", config.replications);
        take("--factor", "factor", config.factor);
        take("--format", "format", config.format);
    }
    auto* seed_opt = cmd.get_option_no_throw("--seed");
    if (seed_opt && seed_opt->count() == 0) {
        if (const char* env = std::getenv("PERF_BRIDGE_SEED")) {
            char* end = nullptr;
            const auto value = std::strtoull(env, &end, 10);
            if (end && *end == '\0') config.seed = value;
        }
    }
    if (!(config.alpha > 0.0 && config.alpha < 1.0))
        throw InputError("alpha must lie in (0, 1)");
    if (!(config.warmup >= 0.0 && config.warmup < config.duration))
        throw InputError("warmup must satisfy 0 <= warmup < duration");
}

void emit(const RunConfig& config, const std::string& text) {
    if (config.out.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream out(config.out);
    if (!out) throw InputError("cannot write output file: " + config.out);
    out << text;
}

void add_common_flags(CLI::App* cmd, RunConfig& config, std::string& config_path) {
    cmd->add_option("--config", config_path, "JSON config file; flags win");
    cmd->add_option("--alpha", config.alpha, "significance level");
    cmd->add_option("--seed", config.seed, "simulation seed (env PERF_BRIDGE_SEED)");
    cmd->add_option("--duration", config.duration, "simulated seconds per replication");
    cmd->add_option("--warmup", config.warmup, "warm-up seconds excluded from analysis");
    cmd->add_option("--replications", config.replications, "simulation replications");
    cmd->add_option("--out", config.out, "output file (default stdout)");
    cmd->add_option("--format", config.format, "json or table")
        ->check(CLI::IsMember({"json", "table"}));
    cmd->add_flag("-v,--verbose", config.verbose, "print warnings and progress to stderr");
}

std::string reports_to_json(const std::map<perfdata::ComponentId,
                                           stats::DeviationReport>& reports) {
    nlohmann::ordered_json doc = nlohmann::ordered_json::array();
    for (const auto& [id, r] : reports)
        doc.push_back({{"subsystem", id.subsystem},
                       {"component", id.component},
                       {"p_value", r.p_value},
                       {"delta", r.delta},
                       {"magnitude", stats::to_string(r.magnitude)},
                       {"md_ms", r.md_ms},
                       {"significant", r.significant}});
    return doc.dump(2) + "\n";
}

std::string reports_to_table(const std::map<perfdata::ComponentId,
                                            stats::DeviationReport>& reports) {
    std::string out =
        "subsystem    component    p-value   delta     magnitude   md_ms      "
        "significant\n";
    for (const auto& [id, r] : reports) {
        char line[200];
        std::snprintf(line, sizeof(line), "%-13s%-13s%-10.4f%-10.4f%-12s%-11.3f%s\n",
                      id.subsystem.c_str(), id.component.c_str(), r.p_value, r.delta,
                      stats::to_string(r.magnitude).c_str(), r.md_ms,
                      r.significant ? "yes" : "no");
        out += line;
    }
    return out;
}

std::string deviations_to_json(const std::vector<graph::SubsystemDeviation>& devs) {
    nlohmann::ordered_json doc = nlohmann::ordered_json::array();
    for (const auto& d : devs)
        doc.push_back({{"subsystem", d.subsystem},
                       {"baseline_total_ms", d.baseline_total_ms},
                       {"adjusted_total_ms", d.adjusted_total_ms},
                       {"relative_delta", d.relative_delta}});
    return doc.dump(2) + "\n";
}

std::string deviations_to_table(const std::vector<graph::SubsystemDeviation>& devs) {
    std::string out = "subsystem    baseline_ms   adjusted_ms   relative_delta\n";
    for (const auto& d : devs) {
        char line[160];
        std::snprintf(line, sizeof(line), "%-13s%-14.3f%-14.3f%+.4f\n",
                      d.subsystem.c_str(), d.baseline_total_ms, d.adjusted_total_ms,
                      d.relative_delta);
        out += line;
    }
    if (devs.empty()) out += "(no subsystem deviations)\n";
    return out;
}

std::string prediction_to_json(const qpn::PredictionResult& result) {
    nlohmann::ordered_json doc;
    auto& classes = doc["response_time_ms"] = nlohmann::ordered_json::object();
    for (const auto& [cls, sample] : result.response_times_ms) {
        nlohmann::ordered_json entry;
        entry["completions"] = sample.size();
        entry["mean"] = sample.empty() ? 0.0 : stats::mean(sample);
        classes[cls] = entry;
    }
    doc["utilization"] = result.utilization;
    doc["arrived"] = result.arrived;
    doc["completed"] = result.completed;
    doc["mean_in_system"] = result.mean_in_system;
    if (!result.warnings.empty()) doc["warnings"] = result.warnings;
    return doc.dump(2) + "\n";
}

std::string prediction_to_table(const qpn::PredictionResult& result) {
    std::string out = "class        completions   mean response (ms)\n";
    for (const auto& [cls, sample] : result.response_times_ms) {
        char line[160];
        std::snprintf(line, sizeof(line), "%-13s%-14zu%.3f\n", cls.c_str(), sample.size(),
                      sample.empty() ? 0.0 : stats::mean(sample));
        out += line;
    }
    out += "\nresource     utilization\n";
    for (const auto& [resource, util] : result.utilization) {
        char line[160];
        std::snprintf(line, sizeof(line), "%-13s%.4f\n", resource.c_str(), util);
        out += line;
    }
    char tail[160];
    std::snprintf(tail, sizeof(tail), "\narrived %lld, completed %lld\n", result.arrived,
                  result.completed);
    out += tail;
    for (const auto& w : result.warnings) out += "warning: " + w + "\n";
    return out;
}

synth::Injection parse_injection(const std::string& text) {
    const auto first = text.find(':');
    const auto second = text.find(':', first + 1);
    if (first == std::string::npos || second == std::string::npos)
        throw InputError("expected subsystem:component:intensity, got '" + text + "'");
    synth::Injection injection;
    injection.location.subsystem = text.substr(0, first);
    injection.location.component = text.substr(first + 1, second - first - 1);
    try {
        injection.intensity = std::stod(text.substr(second + 1));
    } catch (const std::exception&) {
        throw InputError("bad injection intensity in '" + text + "'");
    }
    return injection;
}

detector::PipelineInputs load_pipeline_inputs(const std::string& baseline,
                                              const std::string& updated,
                                              const std::string& local_traces,
                                              const std::string& system_traces,
                                              const std::string& model,
                                              const std::string& workload) {
    detector::PipelineInputs inputs;
    inputs.baseline = perfdata::load_measurements_file(baseline);
    inputs.updated = perfdata::load_measurements_file(updated);
    inputs.local_traces = perfdata::load_traces_file(local_traces);
    inputs.system_traces = perfdata::load_traces_file(system_traces);
    inputs.model = qpn::load_model_file(model);
    if (!workload.empty()) inputs.workload = qpn::load_workload_file(workload);
    return inputs;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"perfbridge: early performance-regression detection that bridges "
                 "component measurements and a queueing Petri net model"};
    app.require_subcommand(1);

    RunConfig config;
    std::string config_path;
    std::string baseline_path, updated_path, local_traces_path, system_traces_path;
    std::string model_path, workload_path, scenario_path, out_dir = ".";
    std::string inject_text;

    auto* generate = app.add_subcommand(
        "generate", "generate a synthetic scenario's input files");
    generate->add_option("--scenario", scenario_path, "scenario spec (JSON)");
    generate->add_option("--out-dir", out_dir, "directory for the generated files");
    generate->add_option("--inject", inject_text,
                         "also write updated.csv with subsystem:component:intensity");
    add_common_flags(generate, config, config_path);

    auto* analyze = app.add_subcommand(
        "analyze-local", "compare per-component measurements of two versions");
    analyze->add_option("--baseline", baseline_path)->required();
    analyze->add_option("--updated", updated_path)->required();
    add_common_flags(analyze, config, config_path);

    auto* propagate = app.add_subcommand(
        "propagate", "propagate local deviations to subsystem-level deltas");
    propagate->add_option("--baseline", baseline_path)->required();
    propagate->add_option("--updated", updated_path)->required();
    propagate->add_option("--local-traces", local_traces_path)->required();
    propagate->add_option("--system-traces", system_traces_path)->required();
    add_common_flags(propagate, config, config_path);

    auto* predict = app.add_subcommand(
        "predict", "simulate a model and report predicted performance");
    predict->add_option("--model", model_path)->required();
    predict->add_option("--workload", workload_path, "workload override");
    add_common_flags(predict, config, config_path);

    auto* detect = app.add_subcommand(
        "detect", "full pipeline; exit 1 when a regression is detected");
    detect->add_option("--baseline", baseline_path)->required();
    detect->add_option("--updated", updated_path)->required();
    detect->add_option("--local-traces", local_traces_path)->required();
    detect->add_option("--system-traces", system_traces_path)->required();
    detect->add_option("--model", model_path)->required();
    detect->add_option("--workload", workload_path, "workload override");
    add_common_flags(detect, config, config_path);

    auto* evaluate_cmd = app.add_subcommand(
        "evaluate", "run the fixed- and various-workload grids against the oracle");
    evaluate_cmd->add_option("--scenario", scenario_path, "scenario spec (JSON)");
    evaluate_cmd->add_option("--factor", config.factor,
                             "workload-variant intensity factor");
    add_common_flags(evaluate_cmd, config, config_path);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        CLI::App* cmd = app.get_subcommands().front();
        apply_config_sources(*cmd, config, config_path);

        if (cmd == generate) {
            synth::ScenarioSpec spec;
            if (!scenario_path.empty()) {
                std::ifstream in(scenario_path);
                if (!in) throw InputError("cannot open scenario spec: " + scenario_path);
                std::string text((std::istreambuf_iterator<char>(in)),
                                 std::istreambuf_iterator<char>());
                spec = synth::spec_from_json(text);
            }
            if (cmd->get_option("--seed")->count() > 0 || std::getenv("PERF_BRIDGE_SEED"))
                spec.seed = config.seed;
            auto scenario = synth::generate_scenario(spec);

            namespace fs = std::filesystem;
            fs::create_directories(out_dir);
            auto write = [&](const std::string& name, auto&& writer) {
                const auto path = fs::path(out_dir) / name;
                std::ofstream out(path);
                if (!out) throw InputError("cannot write " + path.string());
                writer(out);
                std::cout << path.string() << "\n";
            };
            write("baseline.csv", [&](std::ostream& out) {
                perfdata::write_measurements(out, scenario.baseline);
            });
            write("local_traces.csv", [&](std::ostream& out) {
                perfdata::write_traces(out, scenario.local_traces);
            });
            write("system_traces.csv", [&](std::ostream& out) {
                perfdata::write_traces(out, scenario.system_traces);
            });
            write("model.qpn", [&](std::ostream& out) {
                qpn::write_model(out, scenario.model);
            });
            write("scenario.json", [&](std::ostream& out) {
                out << synth::spec_to_json(scenario.spec);
            });
            if (!inject_text.empty()) {
                const auto injection = parse_injection(inject_text);
                auto updated = synth::inject_slowdown(scenario.baseline, injection,
                                                      spec.seed ^ 0x1f2e3d4c,
                                                      spec.noise_cv);
                write("updated.csv", [&](std::ostream& out) {
                    perfdata::write_measurements(out, updated);
                });
            }
            return 0;
        }

        if (cmd == analyze) {
            const auto baseline = perfdata::load_measurements_file(baseline_path);
            const auto updated = perfdata::load_measurements_file(updated_path);
            const auto reports = detector::analyze_local(baseline, updated, config.alpha);
            emit(config, config.format == "json" ? reports_to_json(reports)
                                                 : reports_to_table(reports));
            return 0;
        }

        if (cmd == propagate) {
            const auto baseline = perfdata::load_measurements_file(baseline_path);
            const auto updated = perfdata::load_measurements_file(updated_path);
            const auto local = perfdata::load_traces_file(local_traces_path);
            const auto system = perfdata::load_traces_file(system_traces_path);

            const auto reports = detector::analyze_local(baseline, updated, config.alpha);
            const auto deviations = graph::make_deviation_map(reports);
            std::vector<graph::SubsystemDeviation> devs;
            if (!deviations.empty()) {
                const auto local_graph = perfdata::build_dependency_graph(local, baseline);
                const auto system_graph = perfdata::build_dependency_graph(system, baseline);
                const auto subgraph =
                    graph::extract_deviation_subgraph(local_graph.graph, deviations);
                const auto mapping = graph::map_to_system_graph(subgraph, system_graph.graph);
                const auto adjusted =
                    graph::propagate_bottom_up(system_graph.graph, mapping, deviations);
                devs = graph::subsystem_deviation(system_graph.graph, adjusted);
            }
            emit(config, config.format == "json" ? deviations_to_json(devs)
                                                 : deviations_to_table(devs));
            return 0;
        }

        if (cmd == predict) {
            auto model = qpn::load_model_file(model_path);
            if (!workload_path.empty()) {
                model.workload = qpn::load_workload_file(workload_path);
                qpn::validate(model);
            }
            const auto result = qpn::simulate(model, config.settings().sim);
            if (config.verbose)
                for (const auto& w : result.warnings) std::cerr << "warning: " << w << "\n";
            emit(config, config.format == "json" ? prediction_to_json(result)
                                                 : prediction_to_table(result));
            return 0;
        }

        if (cmd == detect) {
            const auto inputs =
                load_pipeline_inputs(baseline_path, updated_path, local_traces_path,
                                     system_traces_path, model_path, workload_path);
            const auto verdict = detector::run_pipeline(inputs, config.settings());
            if (config.verbose)
                for (const auto& w : verdict.warnings) std::cerr << "warning: " << w << "\n";
            emit(config, config.format == "json" ? detector::verdict_to_json(verdict)
                                                 : detector::render_table(verdict));
            return verdict.overall_regression ? 1 : 0;
        }

        if (cmd == evaluate_cmd) {
            synth::ScenarioSpec spec;
            if (!scenario_path.empty()) {
                std::ifstream in(scenario_path);
                if (!in) throw InputError("cannot open scenario spec: " + scenario_path);
                std::string text((std::istreambuf_iterator<char>(in)),
                                 std::istreambuf_iterator<char>());
                spec = synth::spec_from_json(text);
            }
            const auto scenario = synth::generate_scenario(spec);
            const auto settings = config.settings();
            auto report = evaluate::run_fixed_grid(scenario, settings);
            evaluate::run_various_grid(scenario, settings, config.factor, report);
            emit(config, config.format == "json" ? evaluate::report_to_json(report)
                                                 : evaluate::render_grid_table(report));
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
