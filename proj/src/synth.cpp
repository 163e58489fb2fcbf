#include "perfbridge/synth.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <set>

#include "json.hpp"
#include "perfbridge/common.hpp"
#include "perfbridge/rng.hpp"

namespace perfbridge::synth {

namespace {

void validate_spec(const ScenarioSpec& spec) {
    if (spec.subsystem_count < 1) throw InputError("spec: subsystem_count must be >= 1");
    if (spec.min_components < 1 || spec.max_components < spec.min_components)
        throw InputError("spec: bad component count range");
    if (!(spec.min_self_ms > 0.0) || spec.max_self_ms < spec.min_self_ms)
        throw InputError("spec: bad self-time range");
    if (spec.min_calls < 1 || spec.max_calls < spec.min_calls)
        throw InputError("spec: bad call-multiplicity range");
    if (spec.noise_cv < 0.0) throw InputError("spec: noise_cv must be >= 0");
    if (spec.iterations < 1) throw InputError("spec: iterations must be >= 1");
    if (spec.servers_per_subsystem < 1) throw InputError("spec: servers must be >= 1");
    if (spec.workload.classes.empty()) {
        if (spec.class_mixes.empty()) throw InputError("spec: no classes configured");
        double sum = 0.0;
        for (double m : spec.class_mixes) {
            if (!(m > 0.0)) throw InputError("spec: class mixes must be > 0");
            sum += m;
        }
        if (std::fabs(sum - 1.0) > 1e-9)
            throw InputError("spec: class mixes must sum to 1");
        if (!(spec.target_utilization > 0.0 && spec.target_utilization < 1.0))
            throw InputError("spec: target_utilization must lie in (0, 1)");
    }
}

std::string subsystem_name(int index) {
    if (index < 26) return std::string("ms_") + static_cast<char>('a' + index);
    return "ms_" + std::to_string(index + 1);
}

std::string class_name(std::size_t index) {
    if (index < 26) return std::string("req_") + static_cast<char>('a' + index);
    return "req_" + std::to_string(index + 1);
}

struct SubsystemStructure {
    std::string name;
    int component_count = 0;
    std::vector<ComponentId> components;              // index order
    std::map<int, std::map<int, int>> calls;          // u -> v -> multiplicity
    std::vector<int> roots;
    std::vector<double> self_ms, inclusive_ms;
    std::vector<long long> per_visit;                 // invocations per visit
};

}  // namespace

ScenarioSpec spec_from_json(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("scenario spec: ") + e.what());
    }
    ScenarioSpec spec;
    try {
        spec.subsystem_count = doc.value("subsystem_count", spec.subsystem_count);
        spec.min_components = doc.value("min_components", spec.min_components);
        spec.max_components = doc.value("max_components", spec.max_components);
        spec.min_self_ms = doc.value("min_self_ms", spec.min_self_ms);
        spec.max_self_ms = doc.value("max_self_ms", spec.max_self_ms);
        spec.min_calls = doc.value("min_calls", spec.min_calls);
        spec.max_calls = doc.value("max_calls", spec.max_calls);
        spec.noise_cv = doc.value("noise_cv", spec.noise_cv);
        spec.iterations = doc.value("iterations", spec.iterations);
        spec.local_traces_per_component =
            doc.value("local_traces_per_component", spec.local_traces_per_component);
        spec.system_traces_per_subsystem =
            doc.value("system_traces_per_subsystem", spec.system_traces_per_subsystem);
        spec.servers_per_subsystem =
            doc.value("servers_per_subsystem", spec.servers_per_subsystem);
        spec.target_utilization = doc.value("target_utilization", spec.target_utilization);
        if (doc.contains("class_mixes"))
            spec.class_mixes = doc.at("class_mixes").get<std::vector<double>>();
        spec.seed = doc.value("seed", spec.seed);
        if (doc.contains("workload")) {
            spec.workload.classes.clear();
            for (const auto& entry : doc.at("workload")) {
                qpn::RequestClass cls;
                cls.name = entry.at("name").get<std::string>();
                cls.arrival_rate_per_s = entry.at("rate").get<double>();
                cls.mix_probability = entry.at("mix").get<double>();
                spec.workload.classes.push_back(std::move(cls));
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("scenario spec: ") + e.what());
    }
    validate_spec(spec);
    return spec;
}

std::string spec_to_json(const ScenarioSpec& spec) {
    nlohmann::ordered_json doc;
    doc["subsystem_count"] = spec.subsystem_count;
    doc["min_components"] = spec.min_components;
    doc["max_components"] = spec.max_components;
    doc["min_self_ms"] = spec.min_self_ms;
    doc["max_self_ms"] = spec.max_self_ms;
    doc["min_calls"] = spec.min_calls;
    doc["max_calls"] = spec.max_calls;
    doc["noise_cv"] = spec.noise_cv;
    doc["iterations"] = spec.iterations;
    doc["local_traces_per_component"] = spec.local_traces_per_component;
    doc["system_traces_per_subsystem"] = spec.system_traces_per_subsystem;
    doc["servers_per_subsystem"] = spec.servers_per_subsystem;
    doc["target_utilization"] = spec.target_utilization;
    doc["class_mixes"] = spec.class_mixes;
    doc["seed"] = spec.seed;
    if (!spec.workload.classes.empty()) {
        auto& classes = doc["workload"] = nlohmann::ordered_json::array();
        for (const auto& cls : spec.workload.classes)
            classes.push_back({{"name", cls.name},
                               {"rate", cls.arrival_rate_per_s},
                               {"mix", cls.mix_probability}});
    }
    return doc.dump(2) + "\n";
}

Scenario generate_scenario(const ScenarioSpec& spec) {
    validate_spec(spec);
    rng::Stream structure(spec.seed, "structure");
    rng::Stream timing(spec.seed, "timing");
    rng::Stream route_stream(spec.seed, "routes");
    rng::Stream measure(spec.seed, "measurements");
    rng::Stream trace_noise(spec.seed, "trace-durations");

    Scenario scenario;
    scenario.spec = spec;

    // per-subsystem call DAGs with integer multiplicities
    std::vector<SubsystemStructure> subs;
    for (int s = 0; s < spec.subsystem_count; ++s) {
        SubsystemStructure sub;
        sub.name = subsystem_name(s);
        sub.component_count = static_cast<int>(
            structure.uniform_int(spec.min_components, spec.max_components));
        const int k = sub.component_count;
        for (int i = 0; i < k; ++i)
            sub.components.push_back({sub.name, "f" + std::to_string(i + 1)});

        std::vector<bool> has_parent(static_cast<std::size_t>(k), false);
        for (int j = 1; j < k; ++j) {
            if (structure.uniform() >= 0.75) continue;  // stays a root
            int parents = 1 + ((j >= 2 && structure.uniform() < 0.35) ? 1 : 0);
            std::set<int> chosen;
            while (static_cast<int>(chosen.size()) < parents)
                chosen.insert(static_cast<int>(structure.uniform_int(0, j - 1)));
            for (int parent : chosen) {
                sub.calls[parent][j] = static_cast<int>(
                    structure.uniform_int(spec.min_calls, spec.max_calls));
                has_parent[static_cast<std::size_t>(j)] = true;
            }
        }
        for (int i = 0; i < k; ++i)
            if (!has_parent[static_cast<std::size_t>(i)]) sub.roots.push_back(i);

        sub.self_ms.resize(static_cast<std::size_t>(k));
        for (int i = 0; i < k; ++i)
            sub.self_ms[static_cast<std::size_t>(i)] =
                spec.min_self_ms + timing.uniform() * (spec.max_self_ms - spec.min_self_ms);

        sub.inclusive_ms.assign(static_cast<std::size_t>(k), 0.0);
        for (int i = k - 1; i >= 0; --i) {
            double total = sub.self_ms[static_cast<std::size_t>(i)];
            auto it = sub.calls.find(i);
            if (it != sub.calls.end())
                for (const auto& [to, mult] : it->second)
                    total += mult * sub.inclusive_ms[static_cast<std::size_t>(to)];
            sub.inclusive_ms[static_cast<std::size_t>(i)] = total;
        }

        sub.per_visit.assign(static_cast<std::size_t>(k), 0);
        for (int root : sub.roots) sub.per_visit[static_cast<std::size_t>(root)] = 1;
        for (int i = 0; i < k; ++i) {
            auto it = sub.calls.find(i);
            if (it == sub.calls.end()) continue;
            for (const auto& [to, mult] : it->second)
                sub.per_visit[static_cast<std::size_t>(to)] +=
                    sub.per_visit[static_cast<std::size_t>(i)] * mult;
        }
        subs.push_back(std::move(sub));
    }

    for (const auto& sub : subs)
        for (int i = 0; i < sub.component_count; ++i) {
            const auto& id = sub.components[static_cast<std::size_t>(i)];
            scenario.true_self_ms[id] = sub.self_ms[static_cast<std::size_t>(i)];
            scenario.true_inclusive_ms[id] = sub.inclusive_ms[static_cast<std::size_t>(i)];
            scenario.invocations_per_visit[id] = sub.per_visit[static_cast<std::size_t>(i)];
        }

    // baseline measurements: lognormal noise around the true inclusive time
    scenario.baseline.version = "baseline";
    for (const auto& sub : subs)
        for (int i = 0; i < sub.component_count; ++i) {
            stats::Sample sample;
            sample.reserve(static_cast<std::size_t>(spec.iterations));
            for (int it = 0; it < spec.iterations; ++it)
                sample.push_back(measure.lognormal_mean_cv(
                    sub.inclusive_ms[static_cast<std::size_t>(i)], spec.noise_cv));
            scenario.baseline.entries[sub.components[static_cast<std::size_t>(i)]] =
                std::move(sample);
        }

    // request classes and their subsystem routes; the first class exercises
    // everything so that no subsystem is left uncovered
    std::vector<std::string> class_names;
    if (!spec.workload.classes.empty()) {
        for (const auto& cls : spec.workload.classes) class_names.push_back(cls.name);
    } else {
        for (std::size_t i = 0; i < spec.class_mixes.size(); ++i)
            class_names.push_back(class_name(i));
    }
    for (std::size_t c = 0; c < class_names.size(); ++c) {
        std::vector<std::string> route;
        if (c == 0) {
            for (const auto& sub : subs) route.push_back(sub.name);
        } else {
            for (const auto& sub : subs)
                if (route_stream.uniform() < 0.6) route.push_back(sub.name);
            if (route.empty())
                route.push_back(
                    subs[static_cast<std::size_t>(route_stream.uniform_int(
                            0, spec.subsystem_count - 1))].name);
        }
        scenario.routes[class_names[c]] = std::move(route);
    }

    // traces: system provenance covers each subsystem's full DAG per trace
    auto emit_trace = [&](std::vector<perfdata::TraceEvent>& out, const std::string& id,
                          const SubsystemStructure& sub, int start) {
        std::vector<long long> count(static_cast<std::size_t>(sub.component_count), 0);
        if (start < 0) {
            for (int root : sub.roots) {
                count[static_cast<std::size_t>(root)] = 1;
                out.push_back({id, std::nullopt, sub.components[static_cast<std::size_t>(root)],
                               trace_noise.lognormal_mean_cv(
                                   sub.inclusive_ms[static_cast<std::size_t>(root)],
                                   spec.noise_cv)});
            }
        } else {
            count[static_cast<std::size_t>(start)] = 1;
            out.push_back({id, std::nullopt, sub.components[static_cast<std::size_t>(start)],
                           trace_noise.lognormal_mean_cv(
                               sub.inclusive_ms[static_cast<std::size_t>(start)],
                               spec.noise_cv)});
        }
        for (int u = 0; u < sub.component_count; ++u) {
            if (count[static_cast<std::size_t>(u)] == 0) continue;
            auto it = sub.calls.find(u);
            if (it == sub.calls.end()) continue;
            for (const auto& [v, mult] : it->second) {
                const long long calls = count[static_cast<std::size_t>(u)] * mult;
                count[static_cast<std::size_t>(v)] += calls;
                for (long long n = 0; n < calls; ++n)
                    out.push_back({id, sub.components[static_cast<std::size_t>(u)],
                                   sub.components[static_cast<std::size_t>(v)],
                                   trace_noise.lognormal_mean_cv(
                                       sub.inclusive_ms[static_cast<std::size_t>(v)],
                                       spec.noise_cv)});
            }
        }
    };

    for (const auto& sub : subs)
        for (int t = 0; t < spec.system_traces_per_subsystem; ++t)
            emit_trace(scenario.system_traces,
                       "sys_" + sub.name + "_t" + std::to_string(t), sub, -1);
    for (const auto& sub : subs)
        for (int i = 0; i < sub.component_count; ++i)
            for (int t = 0; t < spec.local_traces_per_component; ++t)
                emit_trace(scenario.local_traces,
                           "loc_" + sub.components[static_cast<std::size_t>(i)].component +
                               "_" + sub.name + "_t" + std::to_string(t),
                           sub, i);

    scenario.system_graph =
        perfdata::build_dependency_graph(scenario.system_traces, scenario.baseline).graph;

    // model demands: per-subsystem top-level timing sums from the graph the
    // detector will see
    std::map<std::string, double> demand_s;
    for (const auto& top : scenario.system_graph.top_level_nodes())
        demand_s[top.subsystem] += scenario.system_graph.node(top).mean_exec_ms / 1000.0;

    // arrival rates: explicit, or scaled so the busiest place hits the target
    qpn::WorkloadSpec workload = spec.workload;
    if (workload.classes.empty()) {
        std::map<std::string, double> visit_weight;
        for (std::size_t c = 0; c < class_names.size(); ++c)
            for (const auto& sub : scenario.routes[class_names[c]])
                visit_weight[sub] += spec.class_mixes[c];
        double worst = 0.0;
        for (const auto& [sub, weight] : visit_weight)
            worst = std::max(worst, weight * demand_s[sub] / spec.servers_per_subsystem);
        const double total_rate = spec.target_utilization / worst;
        for (std::size_t c = 0; c < class_names.size(); ++c) {
            qpn::RequestClass cls;
            cls.name = class_names[c];
            cls.mix_probability = spec.class_mixes[c];
            cls.arrival_rate_per_s = total_rate * spec.class_mixes[c];
            workload.classes.push_back(std::move(cls));
        }
    }
    for (auto& cls : workload.classes) cls.entry_place = "clients";

    // the QPN: one queueing place per subsystem, chained per class route
    qpn::QpnModel model;
    qpn::Place clients;
    clients.name = "clients";
    model.places.push_back(std::move(clients));
    for (const auto& sub : subs) {
        qpn::Place place;
        place.name = "q_" + sub.name;
        place.kind = qpn::PlaceKind::queueing;
        place.subsystem = sub.name;
        place.resource = sub.name;
        place.servers = spec.servers_per_subsystem;
        for (const auto& [cls_name, route] : scenario.routes)
            if (std::find(route.begin(), route.end(), sub.name) != route.end())
                place.service_demand_s[cls_name] = demand_s[sub.name];
        model.places.push_back(std::move(place));
    }
    qpn::Place done_place;
    done_place.name = "done";
    done_place.kind = qpn::PlaceKind::sink;
    model.places.push_back(std::move(done_place));

    for (const auto& cls_name : class_names) {
        const auto& route = scenario.routes[cls_name];
        std::string from = "clients";
        for (std::size_t hop = 0; hop < route.size(); ++hop) {
            qpn::Transition t;
            t.name = "t_" + cls_name + "_" + std::to_string(hop);
            t.inputs.push_back({from, cls_name, 1});
            t.modes.push_back({1.0, {{"q_" + route[hop], cls_name, 1}}});
            model.transitions.push_back(std::move(t));
            from = "q_" + route[hop];
        }
        qpn::Transition done;
        done.name = "t_" + cls_name + "_done";
        done.inputs.push_back({from, cls_name, 1});
        done.modes.push_back({1.0, {{"done", cls_name, 1}}});
        model.transitions.push_back(std::move(done));
    }
    model.workload = workload;
    qpn::validate(model);

    const auto load = qpn::analyze_offered_load(model);
    for (const auto& [place, rho] : load.rho)
        if (rho >= 1.0)
            throw InputError("scenario workload is unstable: place " + place +
                             " has offered load " + std::to_string(rho));

    scenario.model = std::move(model);
    return scenario;
}

perfdata::MeasurementCatalog inject_slowdown(const perfdata::MeasurementCatalog& baseline,
                                             const Injection& injection,
                                             std::uint64_t seed, double noise_cv) {
    if (!baseline.entries.count(injection.location))
        throw InputError("injection location not in catalog: " +
                         injection.location.str());
    if (!(injection.intensity >= 0.0))
        throw InputError("injection intensity must be >= 0");

    perfdata::MeasurementCatalog updated;
    updated.version = "updated";
    for (const auto& [id, sample] : baseline.entries) {
        double target = stats::mean(sample);
        if (id == injection.location) target *= 1.0 + injection.intensity;
        rng::Stream noise(seed, "inject/" + id.str());
        stats::Sample fresh;
        fresh.reserve(sample.size());
        for (std::size_t i = 0; i < sample.size(); ++i)
            fresh.push_back(noise.lognormal_mean_cv(target, noise_cv));
        updated.entries[id] = std::move(fresh);
    }
    return updated;
}

namespace {

// Independent reference simulator: multi-station FCFS network at component
// granularity. Routes are subsystem sequences; a station visit executes the
// subsystem's whole component DAG, drawing one exponential per component
// invocation. Shares nothing with the QPN engine.
class ComponentSim {
public:
    ComponentSim(const Scenario& scenario, std::optional<Injection> injection,
                 const qpn::WorkloadSpec& workload)
        : scenario_(scenario), injection_(std::move(injection)), workload_(workload) {
        for (const auto& [cls, route] : scenario.routes) station_names_.insert(route.begin(), route.end());
        for (const auto& name : station_names_) {
            Station st;
            st.name = name;
            stations_.push_back(std::move(st));
        }
        for (std::size_t i = 0; i < stations_.size(); ++i)
            station_index_[stations_[i].name] = static_cast<int>(i);
        for (const auto& [id, n] : scenario.invocations_per_visit)
            members_[id.subsystem].push_back(id);
    }

    qpn::PredictionResult run(const qpn::SimConfig& config) {
        qpn::PredictionResult result;
        for (int rep = 0; rep < config.replications; ++rep)
            run_single(config, config.seed + static_cast<std::uint64_t>(rep), result);
        for (auto& [name, value] : busy_) {
            result.utilization[name] =
                value.first > 0.0 ? value.second / value.first : 0.0;
        }
        return result;
    }

private:
    struct Station {
        std::string name;
        int busy = 0;
        std::deque<long long> waiting;
        double busy_area = 0.0;
        double last_change = 0.0;
    };
    struct Request {
        int cls = 0;
        std::size_t hop = 0;
        double arrived = 0.0;
    };
    struct Ev {
        double time;
        int kind;  // 0 arrival, 1 departure
        std::uint64_t seq;
        long long request;
        int station;
        bool operator>(const Ev& o) const {
            if (time != o.time) return time > o.time;
            if (kind != o.kind) return kind > o.kind;
            return seq > o.seq;
        }
    };

    void run_single(const qpn::SimConfig& config, std::uint64_t seed,
                    qpn::PredictionResult& result) {
        duration_ = config.duration_s;
        warmup_ = config.warmup_s;
        now_ = 0.0;
        fel_ = {};
        requests_.clear();
        seq_ = 0;
        for (auto& st : stations_) {
            Station fresh;
            fresh.name = st.name;
            st = std::move(fresh);
        }

        arrival_streams_.clear();
        service_streams_.clear();
        for (const auto& cls : workload_.classes)
            arrival_streams_.emplace_back(seed, "oracle-arrival/" + cls.name);
        for (const auto& st : stations_)
            service_streams_.emplace_back(seed, "oracle-service/" + st.name);

        std::vector<double> next_arrival(workload_.classes.size(), 0.0);
        for (std::size_t c = 0; c < workload_.classes.size(); ++c) {
            next_arrival[c] = arrival_streams_[c].exponential(
                1.0 / workload_.classes[c].arrival_rate_per_s);
            fel_.push({next_arrival[c], 0, seq_++, static_cast<long long>(c), -1});
        }

        while (!fel_.empty() && fel_.top().time <= duration_) {
            const Ev ev = fel_.top();
            fel_.pop();
            now_ = ev.time;
            if (ev.kind == 0) {
                const auto c = static_cast<std::size_t>(ev.request);
                const long long id = static_cast<long long>(requests_.size());
                requests_.push_back({static_cast<int>(c), 0, now_});
                ++result.arrived;
                enter_station(id);
                next_arrival[c] += arrival_streams_[c].exponential(
                    1.0 / workload_.classes[c].arrival_rate_per_s);
                fel_.push({next_arrival[c], 0, seq_++, static_cast<long long>(c), -1});
            } else {
                depart(ev.request, ev.station, result);
            }
        }

        now_ = duration_;
        const double window = duration_ - warmup_;
        for (auto& st : stations_) {
            touch(st);
            auto& acc = busy_[st.name];
            acc.first += window;
            acc.second += st.busy_area /
                          static_cast<double>(scenario_.spec.servers_per_subsystem);
        }
    }

    void touch(Station& st) {
        const double lo = std::max(st.last_change, warmup_);
        const double hi = std::min(now_, duration_);
        if (hi > lo) st.busy_area += st.busy * (hi - lo);
        st.last_change = now_;
    }

    const std::vector<std::string>& route_of(int cls) const {
        return scenario_.routes.at(workload_.classes[static_cast<std::size_t>(cls)].name);
    }

    void enter_station(long long id) {
        Request& req = requests_[static_cast<std::size_t>(id)];
        const auto& route = route_of(req.cls);
        if (req.hop >= route.size()) return;
        Station& st = stations_[static_cast<std::size_t>(station_index_.at(route[req.hop]))];
        if (st.busy < scenario_.spec.servers_per_subsystem) {
            touch(st);
            ++st.busy;
            begin_service(id, st);
        } else {
            st.waiting.push_back(id);
        }
    }

    void begin_service(long long id, Station& st) {
        const double service = sample_visit_s(st);
        fel_.push({now_ + service, 1, seq_++, id, station_index_.at(st.name)});
    }

    // one station visit: every component invocation of the subsystem's DAG
    double sample_visit_s(Station& st) {
        auto& stream = service_streams_[static_cast<std::size_t>(station_index_.at(st.name))];
        double total_ms = 0.0;
        for (const auto& id : members_.at(st.name)) {
            const long long n = scenario_.invocations_per_visit.at(id);
            const double self = scenario_.true_self_ms.at(id);
            for (long long i = 0; i < n; ++i) total_ms += stream.exponential(self);
        }
        if (injection_ && injection_->location.subsystem == st.name) {
            // the busy wait adds a fixed share of the component's time
            total_ms += static_cast<double>(
                            scenario_.invocations_per_visit.at(injection_->location)) *
                        injection_->intensity *
                        scenario_.true_inclusive_ms.at(injection_->location);
        }
        return total_ms / 1000.0;
    }

    void depart(long long id, int station, qpn::PredictionResult& result) {
        Station& st = stations_[static_cast<std::size_t>(station)];
        touch(st);
        --st.busy;
        if (!st.waiting.empty()) {
            const long long next = st.waiting.front();
            st.waiting.pop_front();
            ++st.busy;
            begin_service(next, st);
        }

        Request& req = requests_[static_cast<std::size_t>(id)];
        ++req.hop;
        if (req.hop < route_of(req.cls).size()) {
            enter_station(id);
            return;
        }
        ++result.completed;
        if (now_ >= warmup_ && now_ <= duration_) {
            const auto& cls_name = workload_.classes[static_cast<std::size_t>(req.cls)].name;
            result.response_times_ms[cls_name].push_back((now_ - req.arrived) * 1000.0);
        }
    }

    const Scenario& scenario_;
    std::optional<Injection> injection_;
    const qpn::WorkloadSpec& workload_;

    std::set<std::string> station_names_;
    std::vector<Station> stations_;
    std::map<std::string, int> station_index_;
    std::map<std::string, std::vector<ComponentId>> members_;
    std::map<std::string, std::pair<double, double>> busy_;  // window, scaled area

    std::priority_queue<Ev, std::vector<Ev>, std::greater<Ev>> fel_;
    std::vector<Request> requests_;
    std::vector<rng::Stream> arrival_streams_, service_streams_;
    std::uint64_t seq_ = 0;
    double now_ = 0.0, duration_ = 0.0, warmup_ = 0.0;
};

}  // namespace

detector::RegressionVerdict oracle_end_to_end(const Scenario& scenario,
                                              const std::optional<Injection>& injection,
                                              const qpn::WorkloadSpec& workload,
                                              const detector::RunSettings& settings) {
    qpn::validate(workload);
    if (injection && !scenario.invocations_per_visit.count(injection->location))
        throw InputError("injection location not in scenario: " +
                         injection->location.str());
    for (const auto& cls : workload.classes)
        if (!scenario.routes.count(cls.name))
            throw InputError("workload class " + cls.name + " has no route in scenario");

    ComponentSim base_sim(scenario, std::nullopt, workload);
    ComponentSim upd_sim(scenario, injection, workload);
    const auto base = base_sim.run(settings.sim);
    const auto upd = upd_sim.run(settings.sim);
    return detector::assemble_verdict(base, upd, settings.alpha);
}

std::vector<qpn::WorkloadSpec> workload_variants(const qpn::WorkloadSpec& base,
                                                 double intensity_factor) {
    qpn::validate(base);
    if (!(intensity_factor > 0.0))
        throw InputError("workload variant: intensity factor must be > 0");
    const double total = base.total_rate();
    const std::size_t n = base.classes.size();

    qpn::WorkloadSpec scaled = base;
    for (auto& cls : scaled.classes) cls.arrival_rate_per_s *= intensity_factor;

    qpn::WorkloadSpec remixed = base;
    for (std::size_t i = 0; i < n; ++i) {
        remixed.classes[i].mix_probability = base.classes[(i + 1) % n].mix_probability;
        remixed.classes[i].arrival_rate_per_s = total * remixed.classes[i].mix_probability;
    }

    qpn::WorkloadSpec both = remixed;
    for (auto& cls : both.classes) cls.arrival_rate_per_s *= intensity_factor;

    return {scaled, remixed, both};
}

std::vector<qpn::WorkloadSpec> workload_variants(const qpn::WorkloadSpec& base,
                                                 const qpn::QpnModel& model,
                                                 double intensity_factor) {
    auto variants = workload_variants(base, intensity_factor);
    for (std::size_t v = 0; v < variants.size(); ++v) {
        const auto load = qpn::analyze_offered_load(model, variants[v]);
        for (const auto& [place, rho] : load.rho)
            if (rho >= 1.0)
                throw InputError("workload variant " + std::to_string(v + 1) +
                                 " drives place " + place + " to offered load " +
                                 std::to_string(rho) +
                                 "; use a smaller intensity factor");
    }
    return variants;
}

}  // namespace perfbridge::synth
