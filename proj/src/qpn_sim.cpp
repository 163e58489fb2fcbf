#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <limits>
#include <queue>
#include <set>
#include <vector>

#include "perfbridge/common.hpp"
#include "perfbridge/qpn.hpp"
#include "perfbridge/rng.hpp"

namespace perfbridge::qpn {

namespace {

struct Token {
    int color = 0;
    long long request = -1;  // -1: control token, no request attached
};

// Compiled model: names resolved to dense indices, demands flattened.
struct Compiled {
    std::vector<std::string> colors;
    std::map<std::string, int> color_index;

    struct CPlace {
        const Place* def = nullptr;
        std::vector<double> demand;  // by color, -1 when undefined
    };
    std::vector<CPlace> places;
    std::map<std::string, int> place_index;

    struct CArc {
        int place = 0;
        int color = 0;
        int weight = 1;
    };
    struct CMode {
        double probability = 1.0;
        std::vector<CArc> outputs;
    };
    struct CTransition {
        const Transition* def = nullptr;
        std::vector<CArc> inputs;
        std::vector<CMode> modes;
    };
    std::vector<CTransition> transitions;

    struct CClass {
        const RequestClass* def = nullptr;
        int entry_place = 0;
        int color = 0;
    };
    std::vector<CClass> classes;
};

Compiled compile(const QpnModel& model) {
    Compiled c;
    std::set<std::string> color_names;
    for (const auto& p : model.places)
        for (const auto& [color, demand] : p.service_demand_s) color_names.insert(color);
    for (const auto& t : model.transitions) {
        for (const auto& arc : t.inputs) color_names.insert(arc.color);
        for (const auto& mode : t.modes)
            for (const auto& arc : mode.outputs) color_names.insert(arc.color);
    }
    for (const auto& cls : model.workload.classes) color_names.insert(cls.name);
    for (const auto& [key, count] : model.initial_marking) color_names.insert(key.second);

    for (const auto& name : color_names) {
        c.color_index[name] = static_cast<int>(c.colors.size());
        c.colors.push_back(name);
    }
    for (const auto& p : model.places) {
        c.place_index[p.name] = static_cast<int>(c.places.size());
        Compiled::CPlace cp;
        cp.def = &p;
        cp.demand.assign(c.colors.size(), -1.0);
        for (const auto& [color, demand] : p.service_demand_s)
            cp.demand[static_cast<std::size_t>(c.color_index.at(color))] = demand;
        c.places.push_back(std::move(cp));
    }
    auto compile_arc = [&](const Arc& arc) {
        return Compiled::CArc{c.place_index.at(arc.place), c.color_index.at(arc.color),
                              arc.weight};
    };
    for (const auto& t : model.transitions) {
        Compiled::CTransition ct;
        ct.def = &t;
        for (const auto& arc : t.inputs) ct.inputs.push_back(compile_arc(arc));
        for (const auto& mode : t.modes) {
            Compiled::CMode cm;
            cm.probability = mode.probability;
            for (const auto& arc : mode.outputs) cm.outputs.push_back(compile_arc(arc));
            ct.modes.push_back(std::move(cm));
        }
        c.transitions.push_back(std::move(ct));
    }
    for (const auto& cls : model.workload.classes)
        c.classes.push_back({&cls, c.place_index.at(cls.entry_place),
                             c.color_index.at(cls.name)});
    return c;
}

enum EventKind : int { kArrival = 0, kServiceDone = 1 };

struct Event {
    double time = 0.0;
    int kind = kArrival;
    std::uint64_t seq = 0;  // tie-break within a timestamp
    int a = 0;              // arrival: class index; service: place index
    std::uint64_t b = 0;    // service: job id / PS generation

    bool operator>(const Event& other) const {
        if (time != other.time) return time > other.time;
        if (kind != other.kind) return kind > other.kind;
        return seq > other.seq;
    }
};

struct Job {
    Token token;
    double remaining = 0.0;  // PS only
    std::uint64_t id = 0;
};

// One replication of the net. Owns all state; nothing shared.
class Run {
public:
    Run(const QpnModel& model, const Compiled& compiled, const SimConfig& config,
        std::uint64_t seed)
        : model_(model), c_(compiled), duration_(config.duration_s),
          warmup_(config.warmup_s) {
        for (const auto& cls : c_.classes)
            arrival_streams_.emplace_back(seed, "arrival/" + cls.def->name);
        for (const auto& place : c_.places)
            service_streams_.emplace_back(seed, "service/" + place.def->name);
        for (const auto& t : c_.transitions)
            choice_streams_.emplace_back(seed, "choice/" + t.def->name);
        places_.resize(c_.places.size());
        for (auto& st : places_) st.buffer.resize(c_.colors.size());
    }

    void execute(PredictionResult& out) {
        for (const auto& [key, count] : model_.initial_marking) {
            const int place = c_.place_index.at(key.first);
            const Token token{c_.color_index.at(key.second), -1};
            for (int i = 0; i < count; ++i) deposit(place, token);
        }
        fire_enabled();

        for (std::size_t cls = 0; cls < c_.classes.size(); ++cls)
            schedule_arrival(static_cast<int>(cls));

        while (!fel_.empty() && fel_.top().time <= duration_) {
            const Event ev = fel_.top();
            fel_.pop();
            advance_clock(ev.time);
            if (ev.kind == kArrival) {
                handle_arrival(ev.a);
            } else {
                handle_service_done(ev.a, ev.b);
            }
            fire_enabled();
        }
        advance_clock(duration_);

        collect(out);
    }

private:
    struct PlaceState {
        // available tokens: ordinary buffer or queueing depository, FIFO per color
        std::vector<std::deque<long long>> buffer;
        // queueing part
        std::deque<Job> waiting;
        std::map<std::uint64_t, Token> in_service;  // FCFS, keyed by job id
        std::vector<Job> ps_jobs;
        double ps_last_update = 0.0;
        std::uint64_t ps_generation = 0;
        double busy_area = 0.0;
        double last_change = 0.0;
    };

    double window_overlap(double from, double to) const {
        const double lo = std::max(from, warmup_);
        const double hi = std::min(to, duration_);
        return std::max(0.0, hi - lo);
    }

    int busy_servers(const PlaceState& st, const Place& def) const {
        const auto in_service = st.in_service.size() + st.ps_jobs.size();
        return static_cast<int>(std::min<std::size_t>(
            in_service, static_cast<std::size_t>(def.servers)));
    }

    void advance_clock(double now) {
        live_area_ += static_cast<double>(live_) * window_overlap(now_, now);
        now_ = now;
    }

    void touch(int place) {
        auto& st = places_[static_cast<std::size_t>(place)];
        const Place& def = *c_.places[static_cast<std::size_t>(place)].def;
        st.busy_area += busy_servers(st, def) * window_overlap(st.last_change, now_);
        st.last_change = now_;
    }

    double sample_service(int place, int color) {
        const auto& cp = c_.places[static_cast<std::size_t>(place)];
        const double demand = cp.demand[static_cast<std::size_t>(color)];
        if (demand <= 0.0)
            throw InputError("place " + cp.def->name + ": no service demand for color '" +
                             c_.colors[static_cast<std::size_t>(color)] + "'");
        if (cp.def->deterministic_service) return demand;
        return service_streams_[static_cast<std::size_t>(place)].exponential(demand);
    }

    void schedule_arrival(int cls) {
        auto& stream = arrival_streams_[static_cast<std::size_t>(cls)];
        const double rate = c_.classes[static_cast<std::size_t>(cls)].def->arrival_rate_per_s;
        next_arrival_[cls] = (next_arrival_.count(cls) ? next_arrival_[cls] : 0.0) +
                             stream.exponential(1.0 / rate);
        fel_.push({next_arrival_[cls], kArrival, event_seq_++, cls, 0});
    }

    void handle_arrival(int cls) {
        const auto& cc = c_.classes[static_cast<std::size_t>(cls)];
        const long long request = next_request_++;
        arrival_time_[request] = now_;
        request_class_[request] = cls;
        ++arrived_;
        ++live_;
        deposit(cc.entry_place, Token{cc.color, request});
        schedule_arrival(cls);
    }

    void deposit(int place, Token token) {
        auto& st = places_[static_cast<std::size_t>(place)];
        const Place& def = *c_.places[static_cast<std::size_t>(place)].def;
        switch (def.kind) {
            case PlaceKind::ordinary:
                st.buffer[static_cast<std::size_t>(token.color)].push_back(token.request);
                break;
            case PlaceKind::sink:
                complete(token);
                break;
            case PlaceKind::queueing:
                enqueue_job(place, token);
                break;
        }
    }

    void complete(const Token& token) {
        if (token.request < 0) return;  // control tokens vanish silently
        ++completed_;
        --live_;
        const double started = arrival_time_.at(token.request);
        if (now_ >= warmup_ && now_ <= duration_) {
            const int cls = request_class_.at(token.request);
            response_ms_[static_cast<std::size_t>(cls)].push_back((now_ - started) * 1000.0);
        }
        arrival_time_.erase(token.request);
        request_class_.erase(token.request);
    }

    void enqueue_job(int place, Token token) {
        touch(place);
        auto& st = places_[static_cast<std::size_t>(place)];
        const Place& def = *c_.places[static_cast<std::size_t>(place)].def;
        if (def.discipline == Discipline::fcfs) {
            if (static_cast<int>(st.in_service.size()) < def.servers) {
                start_service(place, token);
            } else {
                st.waiting.push_back({token, 0.0, job_seq_++});
            }
        } else {
            ps_advance(place);
            st.ps_jobs.push_back({token, sample_service(place, token.color), job_seq_++});
            ps_reschedule(place);
        }
    }

    void start_service(int place, Token token) {
        auto& st = places_[static_cast<std::size_t>(place)];
        const std::uint64_t id = job_seq_++;
        st.in_service.emplace(id, token);
        fel_.push({now_ + sample_service(place, token.color), kServiceDone, event_seq_++,
                   place, id});
    }

    void handle_service_done(int place, std::uint64_t id) {
        auto& st = places_[static_cast<std::size_t>(place)];
        const Place& def = *c_.places[static_cast<std::size_t>(place)].def;
        if (def.discipline == Discipline::fcfs) {
            auto it = st.in_service.find(id);
            if (it == st.in_service.end()) return;  // should not happen
            touch(place);
            const Token token = it->second;
            st.in_service.erase(it);
            st.buffer[static_cast<std::size_t>(token.color)].push_back(token.request);
            if (!st.waiting.empty()) {
                const Job next = st.waiting.front();
                st.waiting.pop_front();
                start_service(place, next.token);
            }
        } else {
            if (id != st.ps_generation) return;  // superseded schedule
            touch(place);
            ps_advance(place);
            // the job with the least remaining work finishes now
            std::size_t best = 0;
            for (std::size_t i = 1; i < st.ps_jobs.size(); ++i) {
                const auto& a = st.ps_jobs[i];
                const auto& b = st.ps_jobs[best];
                if (a.remaining < b.remaining ||
                    (a.remaining == b.remaining && a.id < b.id))
                    best = i;
            }
            const Token token = st.ps_jobs[static_cast<std::size_t>(best)].token;
            st.ps_jobs.erase(st.ps_jobs.begin() + static_cast<long>(best));
            st.buffer[static_cast<std::size_t>(token.color)].push_back(token.request);
            ps_reschedule(place);
        }
    }

    // processor sharing: n jobs share the servers; each advances at rate
    // min(1, servers/n)
    double ps_rate(const PlaceState& st, const Place& def) const {
        if (st.ps_jobs.empty()) return 0.0;
        return std::min(1.0, static_cast<double>(def.servers) /
                                 static_cast<double>(st.ps_jobs.size()));
    }

    void ps_advance(int place) {
        auto& st = places_[static_cast<std::size_t>(place)];
        const Place& def = *c_.places[static_cast<std::size_t>(place)].def;
        const double rate = ps_rate(st, def);
        const double dt = now_ - st.ps_last_update;
        if (dt > 0.0 && rate > 0.0)
            for (auto& job : st.ps_jobs) job.remaining -= dt * rate;
        st.ps_last_update = now_;
    }

    void ps_reschedule(int place) {
        auto& st = places_[static_cast<std::size_t>(place)];
        const Place& def = *c_.places[static_cast<std::size_t>(place)].def;
        st.ps_generation = job_seq_++;
        if (st.ps_jobs.empty()) return;
        double least = std::numeric_limits<double>::infinity();
        for (const auto& job : st.ps_jobs) least = std::min(least, job.remaining);
        const double eta = std::max(0.0, least) / ps_rate(st, def);
        fel_.push({now_ + eta, kServiceDone, event_seq_++, place, st.ps_generation});
    }

    bool transition_enabled(const Compiled::CTransition& t) const {
        for (const auto& arc : t.inputs) {
            const auto& st = places_[static_cast<std::size_t>(arc.place)];
            if (st.buffer[static_cast<std::size_t>(arc.color)].size() <
                static_cast<std::size_t>(arc.weight))
                return false;
        }
        return true;
    }

    void fire(std::size_t index) {
        auto& t = c_.transitions[index];
        // consume inputs, pooling any attached requests in consumption order
        std::deque<long long> requests;
        for (const auto& arc : t.inputs) {
            auto& queue =
                places_[static_cast<std::size_t>(arc.place)].buffer[static_cast<std::size_t>(arc.color)];
            for (int k = 0; k < arc.weight; ++k) {
                if (queue.front() >= 0) requests.push_back(queue.front());
                queue.pop_front();
            }
        }
        // pick a firing mode; single-mode transitions consume no randomness
        std::size_t mode_idx = 0;
        if (t.modes.size() > 1) {
            const double u = choice_streams_[index].uniform();
            double acc = 0.0;
            for (std::size_t m = 0; m < t.modes.size(); ++m) {
                acc += t.modes[m].probability;
                if (u < acc || m + 1 == t.modes.size()) {
                    mode_idx = m;
                    break;
                }
            }
        }
        // emit outputs; produced tokens inherit pooled requests FIFO
        for (const auto& arc : t.modes[mode_idx].outputs) {
            for (int k = 0; k < arc.weight; ++k) {
                Token token{arc.color, -1};
                if (!requests.empty()) {
                    token.request = requests.front();
                    requests.pop_front();
                }
                deposit(arc.place, token);
            }
        }
        // requests whose tokens were all consumed without re-emission are done
        while (!requests.empty()) {
            complete(Token{0, requests.front()});
            requests.pop_front();
        }
    }

    void fire_enabled() {
        long guard = 0;
        bool progress = true;
        while (progress) {
            progress = false;
            for (std::size_t i = 0; i < c_.transitions.size(); ++i) {
                while (transition_enabled(c_.transitions[i])) {
                    fire(i);
                    progress = true;
                    if (++guard > 10'000'000)
                        throw Error("immediate-transition livelock at " +
                                    c_.transitions[i].def->name);
                }
            }
        }
    }

    void collect(PredictionResult& out) {
        for (std::size_t p = 0; p < places_.size(); ++p) touch(static_cast<int>(p));

        for (std::size_t cls = 0; cls < c_.classes.size(); ++cls) {
            auto& sink = out.response_times_ms[c_.classes[cls].def->name];
            auto it = response_ms_.find(cls);
            if (it != response_ms_.end())
                sink.insert(sink.end(), it->second.begin(), it->second.end());
        }

        out.arrived += arrived_;
        out.completed += completed_;

        // walk the final state instead of trusting a counter
        long long still_here = 0;
        for (const auto& st : places_) {
            for (const auto& queue : st.buffer)
                for (long long req : queue) still_here += req >= 0 ? 1 : 0;
            for (const auto& job : st.waiting) still_here += job.token.request >= 0 ? 1 : 0;
            for (const auto& [id, token] : st.in_service) still_here += token.request >= 0 ? 1 : 0;
            for (const auto& job : st.ps_jobs) still_here += job.token.request >= 0 ? 1 : 0;
        }
        out.in_system_at_end += still_here;

        const double window = duration_ - warmup_;
        run_mean_in_system_ = live_area_ / window;
        for (std::size_t p = 0; p < places_.size(); ++p) {
            const Place& def = *c_.places[p].def;
            if (def.kind != PlaceKind::queueing) continue;
            run_busy_[def.resource].first += places_[p].busy_area;
            run_busy_[def.resource].second += def.servers * window;
        }
    }

public:
    double run_mean_in_system_ = 0.0;
    std::map<std::string, std::pair<double, double>> run_busy_;  // resource -> (busy, capacity)

private:
    const QpnModel& model_;
    const Compiled& c_;
    double duration_;
    double warmup_;

    std::vector<rng::Stream> arrival_streams_, service_streams_, choice_streams_;
    std::priority_queue<Event, std::vector<Event>, std::greater<Event>> fel_;
    std::vector<PlaceState> places_;
    std::map<int, double> next_arrival_;
    std::map<long long, double> arrival_time_;
    std::map<long long, int> request_class_;
    std::map<std::size_t, stats::Sample> response_ms_;

    double now_ = 0.0;
    double live_area_ = 0.0;
    long long live_ = 0;
    long long arrived_ = 0, completed_ = 0;
    long long next_request_ = 0;
    std::uint64_t event_seq_ = 0, job_seq_ = 1;
};

}  // namespace

PredictionResult simulate(const QpnModel& model, const SimConfig& config) {
    validate(model);
    if (!(config.warmup_s >= 0.0) || !(config.warmup_s < config.duration_s))
        throw InputError("sim config: warmup must satisfy 0 <= warmup < duration");
    if (config.replications < 1)
        throw InputError("sim config: replications must be >= 1");

    const Compiled compiled = compile(model);
    PredictionResult result;

    const LoadAnalysis load = analyze_offered_load(model);
    for (const auto& [place, rho] : load.rho) {
        if (rho >= 1.0) {
            char buf[160];
            std::snprintf(buf, sizeof(buf),
                          "unstable configuration: place %s has offered load %.3f >= 1",
                          place.c_str(), rho);
            result.warnings.push_back(buf);
        }
    }

    std::map<std::string, std::pair<double, double>> busy;
    double mean_in_system = 0.0;
    for (int rep = 0; rep < config.replications; ++rep) {
        Run run(model, compiled, config, config.seed + static_cast<std::uint64_t>(rep));
        run.execute(result);
        mean_in_system += run.run_mean_in_system_;
        for (const auto& [resource, pair] : run.run_busy_) {
            busy[resource].first += pair.first;
            busy[resource].second += pair.second;
        }
    }
    result.mean_in_system = mean_in_system / config.replications;
    for (const auto& [resource, pair] : busy)
        result.utilization[resource] = pair.second > 0.0 ? pair.first / pair.second : 0.0;
    return result;
}

}  // namespace perfbridge::qpn
