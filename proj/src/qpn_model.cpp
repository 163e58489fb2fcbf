#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <set>
#include <sstream>

#include "perfbridge/common.hpp"
#include "perfbridge/qpn.hpp"

namespace perfbridge::qpn {

namespace {

constexpr double kProbTolerance = 1e-9;

std::vector<std::string> tokenize(const std::string& line) {
    std::vector<std::string> tokens;
    std::istringstream in(line);
    std::string tok;
    while (in >> tok) tokens.push_back(tok);
    return tokens;
}

double parse_double(const std::string& text, const std::string& where) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || ptr != text.data() + text.size() || !std::isfinite(v))
        throw InputError(where + ": bad number '" + text + "'");
    return v;
}

int parse_int(const std::string& text, const std::string& where) {
    int v = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || ptr != text.data() + text.size())
        throw InputError(where + ": bad integer '" + text + "'");
    return v;
}

// key=value token; returns {key, value} or empty key when '=' is absent
std::pair<std::string, std::string> split_kv(const std::string& tok) {
    const auto pos = tok.find('=');
    if (pos == std::string::npos) return {"", tok};
    return {tok.substr(0, pos), tok.substr(pos + 1)};
}

// place:color[:weight]
Arc parse_arc(const std::string& text, const std::string& where) {
    Arc arc;
    const auto first = text.find(':');
    if (first == std::string::npos)
        throw InputError(where + ": arc must be place:color[:weight], got '" + text + "'");
    arc.place = text.substr(0, first);
    const auto second = text.find(':', first + 1);
    if (second == std::string::npos) {
        arc.color = text.substr(first + 1);
    } else {
        arc.color = text.substr(first + 1, second - first - 1);
        arc.weight = parse_int(text.substr(second + 1), where);
    }
    if (arc.place.empty() || arc.color.empty())
        throw InputError(where + ": arc with empty place or color: '" + text + "'");
    return arc;
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

double WorkloadSpec::total_rate() const {
    double total = 0.0;
    for (const auto& c : classes) total += c.arrival_rate_per_s;
    return total;
}

const Place* QpnModel::find_place(const std::string& name) const {
    for (const auto& p : places)
        if (p.name == name) return &p;
    return nullptr;
}

stats::Sample PredictionResult::pooled_response_times_ms() const {
    stats::Sample pooled;
    for (const auto& [cls, sample] : response_times_ms)
        pooled.insert(pooled.end(), sample.begin(), sample.end());
    return pooled;
}

void validate(const WorkloadSpec& workload) {
    if (workload.classes.empty())
        throw InputError("workload: no request classes");
    double mix_sum = 0.0;
    std::set<std::string> names;
    for (const auto& c : workload.classes) {
        if (c.name.empty()) throw InputError("workload: class with empty name");
        if (!names.insert(c.name).second)
            throw InputError("workload: duplicate class " + c.name);
        if (!(c.arrival_rate_per_s > 0.0))
            throw InputError("workload class " + c.name + ": arrival rate must be > 0");
        if (c.mix_probability < 0.0 || c.mix_probability > 1.0)
            throw InputError("workload class " + c.name + ": mix probability outside [0, 1]");
        mix_sum += c.mix_probability;
    }
    if (std::fabs(mix_sum - 1.0) > kProbTolerance)
        throw InputError("workload: class mix probabilities sum to " +
                         fmt(mix_sum) + ", expected 1");
}

void validate(const QpnModel& model) {
    if (model.places.empty()) throw InputError("model has no places");
    std::set<std::string> place_names;
    for (const auto& p : model.places) {
        if (p.name.empty()) throw InputError("place with empty name");
        if (!place_names.insert(p.name).second)
            throw InputError("duplicate place name: " + p.name);
        if (p.kind == PlaceKind::queueing) {
            if (p.subsystem.empty())
                throw InputError("queueing place " + p.name + ": missing subsystem");
            if (p.servers < 1)
                throw InputError("queueing place " + p.name + ": servers must be >= 1");
            if (p.service_demand_s.empty())
                throw InputError("queueing place " + p.name + ": no service demands");
            for (const auto& [color, demand] : p.service_demand_s)
                if (!(demand > 0.0) || !std::isfinite(demand))
                    throw InputError("queueing place " + p.name + ": service demand for '" +
                                     color + "' must be > 0");
        }
    }

    std::set<std::string> transition_names;
    for (const auto& t : model.transitions) {
        const std::string where = "transition " + t.name;
        if (t.name.empty()) throw InputError("transition with empty name");
        if (!transition_names.insert(t.name).second)
            throw InputError("duplicate transition name: " + t.name);
        if (t.inputs.empty()) throw InputError(where + ": no input arcs");
        if (t.modes.empty()) throw InputError(where + ": no firing modes");
        double prob_sum = 0.0;
        for (const auto& mode : t.modes) {
            if (!(mode.probability > 0.0))
                throw InputError(where + ": mode probability must be > 0");
            prob_sum += mode.probability;
            for (const auto& arc : mode.outputs) {
                if (!place_names.count(arc.place))
                    throw InputError(where + ": output arc to unknown place '" +
                                     arc.place + "'");
                if (arc.weight < 1) throw InputError(where + ": arc weight must be >= 1");
            }
        }
        if (std::fabs(prob_sum - 1.0) > kProbTolerance)
            throw InputError(where + ": mode probabilities sum to " + fmt(prob_sum) +
                             ", expected 1");
        for (const auto& arc : t.inputs) {
            const Place* p = model.find_place(arc.place);
            if (!p) throw InputError(where + ": input arc from unknown place '" +
                                     arc.place + "'");
            if (p->kind == PlaceKind::sink)
                throw InputError(where + ": input from sink place '" + arc.place + "'");
            if (arc.weight < 1) throw InputError(where + ": arc weight must be >= 1");
        }
    }

    validate(model.workload);
    for (const auto& c : model.workload.classes) {
        if (!place_names.count(c.entry_place))
            throw InputError("workload class " + c.name + ": unknown entry place '" +
                             c.entry_place + "'");
    }

    for (const auto& [key, count] : model.initial_marking) {
        if (!place_names.count(key.first))
            throw InputError("initial marking references unknown place '" + key.first + "'");
        if (count < 1)
            throw InputError("initial marking at " + key.first + ": count must be >= 1");
    }
}

QpnModel load_model(std::istream& in, const std::string& source_name) {
    QpnModel model;
    std::string section;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string where = source_name + ":" + std::to_string(line_no);
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const auto tokens = tokenize(line);
        if (tokens.empty()) continue;

        if (tokens[0].front() == '[') {
            if (tokens[0] == "[places]" || tokens[0] == "[transitions]" ||
                tokens[0] == "[workload]" || tokens[0] == "[marking]") {
                section = tokens[0];
                continue;
            }
            throw InputError(where + ": unknown section " + tokens[0]);
        }

        if (section == "[places]") {
            if (tokens[0] != "place" || tokens.size() < 3)
                throw InputError(where + ": expected 'place <name> <kind> ...'");
            Place p;
            p.name = tokens[1];
            const std::string& kind = tokens[2];
            if (kind == "ordinary") p.kind = PlaceKind::ordinary;
            else if (kind == "queueing") p.kind = PlaceKind::queueing;
            else if (kind == "sink") p.kind = PlaceKind::sink;
            else throw InputError(where + ": unknown place kind '" + kind + "'");
            for (std::size_t i = 3; i < tokens.size(); ++i) {
                const auto [key, value] = split_kv(tokens[i]);
                if (key == "subsystem") p.subsystem = value;
                else if (key == "resource") p.resource = value;
                else if (key == "servers") p.servers = parse_int(value, where);
                else if (key == "discipline") {
                    if (value == "fcfs") p.discipline = Discipline::fcfs;
                    else if (value == "ps") p.discipline = Discipline::ps;
                    else throw InputError(where + ": unknown discipline '" + value + "'");
                } else if (key == "service") {
                    if (value == "exp") p.deterministic_service = false;
                    else if (value == "det") p.deterministic_service = true;
                    else throw InputError(where + ": unknown service kind '" + value + "'");
                } else if (key.rfind("demand.", 0) == 0) {
                    p.service_demand_s[key.substr(7)] = parse_double(value, where);
                } else {
                    throw InputError(where + ": unknown attribute '" + tokens[i] + "'");
                }
            }
            if (p.kind == PlaceKind::queueing && p.resource.empty())
                p.resource = p.subsystem;
            model.places.push_back(std::move(p));
        } else if (section == "[transitions]") {
            if (tokens[0] != "transition" || tokens.size() < 2)
                throw InputError(where + ": expected 'transition <name> ...'");
            Transition t;
            t.name = tokens[1];
            bool explicit_modes = false;
            for (std::size_t i = 2; i < tokens.size(); ++i) {
                if (tokens[i] == "mode") {
                    if (i + 1 >= tokens.size())
                        throw InputError(where + ": 'mode' without probability");
                    const auto [pk, pv] = split_kv(tokens[++i]);
                    if (pk != "p")
                        throw InputError(where + ": expected p=<prob> after 'mode'");
                    if (!explicit_modes) {
                        if (!t.modes.empty())
                            throw InputError(where +
                                             ": mix of bare out= arcs and explicit modes");
                        explicit_modes = true;
                    }
                    t.modes.push_back({parse_double(pv, where), {}});
                    continue;
                }
                const auto [key, value] = split_kv(tokens[i]);
                if (key == "in") {
                    t.inputs.push_back(parse_arc(value, where));
                } else if (key == "out") {
                    if (t.modes.empty()) {
                        if (explicit_modes)
                            throw InputError(where + ": out= before any mode");
                        t.modes.push_back({1.0, {}});
                    }
                    t.modes.back().outputs.push_back(parse_arc(value, where));
                } else {
                    throw InputError(where + ": unknown token '" + tokens[i] + "'");
                }
            }
            model.transitions.push_back(std::move(t));
        } else if (section == "[workload]") {
            if (tokens[0] != "class" || tokens.size() < 2)
                throw InputError(where + ": expected 'class <name> ...'");
            RequestClass c;
            c.name = tokens[1];
            for (std::size_t i = 2; i < tokens.size(); ++i) {
                const auto [key, value] = split_kv(tokens[i]);
                if (key == "rate") c.arrival_rate_per_s = parse_double(value, where);
                else if (key == "mix") c.mix_probability = parse_double(value, where);
                else if (key == "entry") c.entry_place = value;
                else throw InputError(where + ": unknown attribute '" + tokens[i] + "'");
            }
            model.workload.classes.push_back(std::move(c));
        } else if (section == "[marking]") {
            if (tokens[0] != "token" || tokens.size() != 2)
                throw InputError(where + ": expected 'token <place>:<color>:<count>'");
            const Arc arc = parse_arc(tokens[1], where);
            model.initial_marking[{arc.place, arc.color}] += arc.weight;
        } else {
            throw InputError(where + ": content before any section header");
        }
    }
    validate(model);
    return model;
}

QpnModel load_model_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open model file: " + path);
    return load_model(in, path);
}

WorkloadSpec load_workload_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open workload file: " + path);
    WorkloadSpec spec;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string where = path + ":" + std::to_string(line_no);
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const auto tokens = tokenize(line);
        if (tokens.empty() || tokens[0] == "[workload]") continue;
        if (tokens[0] != "class")
            throw InputError(where + ": expected 'class <name> ...'");
        RequestClass c;
        c.name = tokens.size() > 1 ? tokens[1] : "";
        for (std::size_t i = 2; i < tokens.size(); ++i) {
            const auto [key, value] = split_kv(tokens[i]);
            if (key == "rate") c.arrival_rate_per_s = parse_double(value, where);
            else if (key == "mix") c.mix_probability = parse_double(value, where);
            else if (key == "entry") c.entry_place = value;
            else throw InputError(where + ": unknown attribute '" + tokens[i] + "'");
        }
        spec.classes.push_back(std::move(c));
    }
    validate(spec);
    return spec;
}

void write_model(std::ostream& out, const QpnModel& model) {
    out << "[places]\n";
    for (const auto& p : model.places) {
        out << "place " << p.name << ' ';
        switch (p.kind) {
            case PlaceKind::ordinary: out << "ordinary"; break;
            case PlaceKind::sink: out << "sink"; break;
            case PlaceKind::queueing: {
                out << "queueing subsystem=" << p.subsystem;
                if (p.resource != p.subsystem) out << " resource=" << p.resource;
                out << " servers=" << p.servers << " discipline="
                    << (p.discipline == Discipline::fcfs ? "fcfs" : "ps")
                    << " service=" << (p.deterministic_service ? "det" : "exp");
                for (const auto& [color, demand] : p.service_demand_s)
                    out << " demand." << color << '=' << fmt(demand);
                break;
            }
        }
        out << '\n';
    }
    out << "\n[transitions]\n";
    for (const auto& t : model.transitions) {
        out << "transition " << t.name;
        for (const auto& arc : t.inputs)
            out << " in=" << arc.place << ':' << arc.color << ':' << arc.weight;
        const bool single = t.modes.size() == 1;
        for (const auto& mode : t.modes) {
            if (!single) out << " mode p=" << fmt(mode.probability);
            for (const auto& arc : mode.outputs)
                out << " out=" << arc.place << ':' << arc.color << ':' << arc.weight;
        }
        out << '\n';
    }
    out << "\n[workload]\n";
    for (const auto& c : model.workload.classes)
        out << "class " << c.name << " rate=" << fmt(c.arrival_rate_per_s)
            << " mix=" << fmt(c.mix_probability) << " entry=" << c.entry_place << '\n';
    if (!model.initial_marking.empty()) {
        out << "\n[marking]\n";
        for (const auto& [key, count] : model.initial_marking)
            out << "token " << key.first << ':' << key.second << ':' << count << '\n';
    }
}

QpnModel apply_deviation(const QpnModel& model,
                         const std::vector<graph::SubsystemDeviation>& deviations) {
    QpnModel updated = model;
    for (const auto& dev : deviations) {
        if (!(dev.relative_delta > -1.0))
            throw InputError("subsystem " + dev.subsystem +
                             ": relative delta must be > -1");
        bool matched = false;
        for (auto& p : updated.places) {
            if (p.kind != PlaceKind::queueing || p.subsystem != dev.subsystem) continue;
            matched = true;
            for (auto& [color, demand] : p.service_demand_s)
                demand = demand + demand * dev.relative_delta;
        }
        if (!matched)
            throw InputError("deviation for subsystem '" + dev.subsystem +
                             "' matches no queueing place");
    }
    return updated;
}

LoadAnalysis analyze_offered_load(const QpnModel& model) {
    return analyze_offered_load(model, model.workload);
}

LoadAnalysis analyze_offered_load(const QpnModel& model, const WorkloadSpec& workload) {
    LoadAnalysis analysis;

    // sync transitions and competing consumers make flow propagation
    // approximate
    std::set<std::pair<std::string, std::string>> consumed;
    for (const auto& t : model.transitions) {
        if (t.inputs.size() > 1) analysis.exact = false;
        for (const auto& arc : t.inputs)
            if (!consumed.insert({arc.place, arc.color}).second) analysis.exact = false;
    }

    // token in-flow rate per (place, color), relaxed to a fixpoint;
    // feed-forward nets converge in one pass per pipeline stage
    std::map<std::pair<std::string, std::string>, double> flow;
    for (const auto& c : workload.classes)
        flow[{c.entry_place, c.name}] += c.arrival_rate_per_s;

    for (int round = 0; round < 200; ++round) {
        double max_change = 0.0;
        std::map<std::pair<std::string, std::string>, double> next = flow;
        for (const auto& c : workload.classes)
            next[{c.entry_place, c.name}] = c.arrival_rate_per_s;
        // recompute transition throughput from scratch each round
        std::map<std::pair<std::string, std::string>, double> produced;
        for (const auto& t : model.transitions) {
            double rate = std::numeric_limits<double>::infinity();
            for (const auto& arc : t.inputs) {
                auto it = flow.find({arc.place, arc.color});
                const double f = it == flow.end() ? 0.0 : it->second;
                rate = std::min(rate, f / arc.weight);
            }
            if (!std::isfinite(rate)) rate = 0.0;
            for (const auto& mode : t.modes)
                for (const auto& arc : mode.outputs)
                    produced[{arc.place, arc.color}] +=
                        rate * mode.probability * arc.weight;
        }
        for (const auto& c : workload.classes)
            produced[{c.entry_place, c.name}] += c.arrival_rate_per_s;
        for (const auto& [key, value] : produced)
            max_change = std::max(max_change, std::fabs(value - flow[key]));
        for (auto& [key, value] : flow)
            if (!produced.count(key)) produced[key] = 0.0;
        flow = std::move(produced);
        if (max_change < 1e-12) break;
        if (round == 199) analysis.exact = false;
    }

    for (const auto& p : model.places) {
        if (p.kind != PlaceKind::queueing) continue;
        double load = 0.0;
        for (const auto& [color, demand] : p.service_demand_s) {
            auto it = flow.find({p.name, color});
            if (it != flow.end()) load += it->second * demand;
        }
        analysis.rho[p.name] = load / static_cast<double>(p.servers);
    }
    return analysis;
}

}  // namespace perfbridge::qpn
