#pragma once

// Ties the pipeline together: one run = init, per-tick observe/act/step with
// evaluation, trace recording and manifest production. Replay re-simulates
// from the manifest feeding recorded actions and must reproduce the trace
// bytes exactly.

#include <chrono>
#include <ctime>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "cornersim/agent_process.hpp"
#include "cornersim/catalog.hpp"
#include "cornersim/evaluation.hpp"
#include "cornersim/perception.hpp"
#include "cornersim/policy.hpp"
#include "cornersim/trace.hpp"
#include "cornersim/validate.hpp"
#include "cornersim/world.hpp"

namespace cornersim {

// ---------------------------------------------------------------------------
// Overrides <-> JSON (manifest form)
// ---------------------------------------------------------------------------

inline nlohmann::json overrides_to_json(const Overrides& o) {
    nlohmann::json j = nlohmann::json::object();
    if (o.weather) j["weather"] = *o.weather;
    if (o.traffic_density) j["density"] = to_token(*o.traffic_density);
    if (o.ego_initial_speed) j["ego_initial_speed"] = *o.ego_initial_speed;
    if (!o.trigger_shifts.empty()) {
        nlohmann::json shifts = nlohmann::json::array();
        for (const auto& s : o.trigger_shifts) {
            shifts.push_back({{"trigger", s.trigger_id}, {"delta", s.delta_seconds}});
        }
        j["trigger_shifts"] = std::move(shifts);
    }
    return j;
}

inline Overrides overrides_from_json(const nlohmann::json& j) {
    Overrides o;
    if (j.contains("weather")) o.weather = j["weather"].get<std::string>();
    if (j.contains("density")) {
        const auto d = density_from_token(j["density"].get<std::string>());
        if (!d) throw OverrideError("unknown density in overrides");
        o.traffic_density = d;
    }
    if (j.contains("ego_initial_speed")) {
        o.ego_initial_speed = j["ego_initial_speed"].get<double>();
    }
    if (j.contains("trigger_shifts")) {
        for (const auto& s : j["trigger_shifts"]) {
            o.trigger_shifts.push_back(
                {s.at("trigger").get<std::string>(), s.at("delta").get<double>()});
        }
    }
    return o;
}

// ---------------------------------------------------------------------------
// Action sources
// ---------------------------------------------------------------------------

struct ActionExchange {
    EgoAction action;
    bool substituted = false;
    bool process_dead = false;
    bool replay_fault = false;  // trace playback reached a policy_fault record
};

class ActionSource {
public:
    virtual ~ActionSource() = default;
    virtual ActionExchange act(const Observation& obs) = 0;
    virtual void finish(long tick, const std::string& reason) { (void)tick; (void)reason; }
};

class BuiltinSource final : public ActionSource {
public:
    explicit BuiltinSource(std::string name) : name_(std::move(name)) {}
    ActionExchange act(const Observation& obs) override {
        return {builtin_act(name_, obs), false, false, false};
    }

private:
    std::string name_;
};

class ExternalSource final : public ActionSource {
public:
    ExternalSource(const std::string& command, double handshake_timeout_s, int tick_timeout_ms)
        : agent_(command, handshake_timeout_s, tick_timeout_ms) {}

    ActionExchange act(const Observation& obs) override {
        const auto ex = agent_.exchange(obs);
        return {ex.action, ex.substituted, ex.process_dead, false};
    }

    void finish(long tick, const std::string& reason) override {
        agent_.send_end(tick, reason);
        agent_.shutdown();
    }

private:
    AgentProcess agent_;
};

/// Feeds the actions previously recorded in a trace.
class TraceSource final : public ActionSource {
public:
    explicit TraceSource(const Trace& trace) : trace_(trace) {}

    ActionExchange act(const Observation& obs) override {
        (void)obs;
        if (next_ >= trace_.records().size()) {
            // Past the recorded run; treated as a dead policy so the replay
            // terminates and the divergence is reported by the caller.
            return {EgoAction::of(DiscreteAction::Stop), false, true, false};
        }
        const TickRecord& r = trace_.records()[next_++];
        ActionExchange ex;
        ex.action = r.action.action;
        ex.substituted = r.action.substituted;
        ex.replay_fault = r.terminal && *r.terminal == "policy_fault" &&
                          next_ == trace_.records().size();
        return ex;
    }

private:
    const Trace& trace_;
    size_t next_ = 0;
};

// ---------------------------------------------------------------------------
// Run loop
// ---------------------------------------------------------------------------

struct RunConfig {
    ScenarioSpec spec;  // overrides already applied
    std::uint64_t seed = 0;
    nlohmann::json overrides = nlohmann::json::object();
    std::string policy_descriptor = "builtin:passive";
    RecordChannels channels;
    bool render_rasters = false;  // collect per-tick rasters for export
};

struct RunOutput {
    Trace trace;
    RunResult result;
    RunManifest manifest;
    std::vector<OccupancyRaster> rasters;
};

inline std::string wall_clock_iso8601() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::tm tm_utc{};
    gmtime_r(&t, &tm_utc);
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
    return buf;
}

inline RunOutput run_simulation(const RunConfig& config, ActionSource& source) {
    const ScenarioSpec& spec = config.spec;
    const WeatherPreset* weather = find_weather(spec.weather);
    if (weather == nullptr) throw InitError("unknown weather preset '" + spec.weather + "'");

    WorldState world = init_world(spec, config.seed);
    EvaluationTracker tracker(spec);
    RouteProgress route(spec);

    TraceHeader header;
    header.scenario_id = spec.id;
    header.seed = config.seed;
    header.overrides = config.overrides;
    header.policy = config.policy_descriptor;
    header.channels = config.channels;
    RunOutput out;
    out.trace = Trace(header);

    RunMetrics metrics;
    int consecutive_substitutions = 0;
    bool policy_fault = false;
    std::optional<TerminalReason> terminal;

    const long max_ticks =
        static_cast<long>(std::llround((spec.tn - spec.t0) / kTickSeconds)) + 8;

    for (long guard = 0; guard <= max_ticks; ++guard) {
        const Observation obs = make_observation(world, spec, *weather, world.sensor_stream);
        if (config.render_rasters) {
            out.rasters.push_back(render_occupancy(world, *weather, spec.map));
        }

        // Metrics from the observed state.
        for (const auto& rt : world.actors) {
            const auto& st = world.actor_states.at(rt.spec.id);
            if (!st.active) continue;
            const Vec2 rel = st.pose.position() - world.ego.pose.position();
            const double dist = rel.norm();
            metrics.min_distance_to_any_actor = std::min(metrics.min_distance_to_any_actor, dist);
            const double eh = world.ego.pose.heading;
            const double ah = st.pose.heading;
            const Vec2 ego_v{world.ego.speed * std::cos(eh), world.ego.speed * std::sin(eh)};
            const Vec2 actor_v{st.speed * std::cos(ah), st.speed * std::sin(ah)};
            const double closing = dist > 1e-9 ? -(actor_v - ego_v).dot(rel) / dist : 0.0;
            if (closing > 0.05) {
                const double ttc = dist / closing;
                if (!metrics.min_time_to_collision || ttc < *metrics.min_time_to_collision) {
                    metrics.min_time_to_collision = ttc;
                }
            }
        }

        const ActionExchange ex = source.act(obs);
        if (!ex.substituted) consecutive_substitutions = 0;

        TickRecord record;
        record.tick = world.tick;
        record.ego = world.ego;
        for (const auto& [id, st] : world.actor_states) record.actor_states.emplace_back(id, st);
        record.observation = obs;
        record.action.action = ex.action;
        record.action.substituted = ex.substituted;

        // Resolve the control even on fault ticks so records stay uniform.
        ContinuousControl control;
        if (ex.action.discrete) {
            const MappedControl mapped = map_discrete(*ex.action.discrete, world.ego, spec.map);
            control = mapped.control;
            record.action.turn_fallback = mapped.turn_fallback;
        } else if (ex.action.continuous) {
            control = ex.action.continuous->clamped();
        }
        record.control = control;

        if (ex.substituted) ++consecutive_substitutions;
        const bool fault_now =
            ex.process_dead || ex.replay_fault || consecutive_substitutions >= 3;
        if (fault_now) {
            policy_fault = true;
            record.terminal = "policy_fault";
            metrics.ticks_elapsed = record.tick + 1;
            out.trace.record_tick(std::move(record));
            break;
        }

        const std::vector<WorldEvent> events = step(world, control, spec, *weather);
        record.events = events;
        terminal = tracker.update(world, events);
        if (terminal) record.terminal = to_token(*terminal);
        metrics.ticks_elapsed = world.tick;
        out.trace.record_tick(std::move(record));
        if (terminal) break;
    }

    metrics.route_completion = route.completion(world.ego.pose.position());
    out.result = score_run(world.event_log, spec.constraints, terminal, policy_fault, metrics);

    source.finish(world.tick, policy_fault ? "policy_fault"
                                           : (terminal ? to_token(*terminal) : "aborted"));

    out.manifest.scenario_id = spec.id;
    out.manifest.seed = config.seed;
    out.manifest.overrides = config.overrides;
    out.manifest.policy = config.policy_descriptor;
    out.manifest.engine_version = kEngineVersion;
    out.manifest.trace_hash_hex = trace_hash(out.trace);
    out.manifest.result_summary = result_to_json(out.result);
    out.manifest.created_at = wall_clock_iso8601();
    return out;
}

inline std::unique_ptr<ActionSource> make_action_source(const PolicyBinding& binding) {
    if (binding.kind == PolicyBinding::Kind::Builtin) {
        return std::make_unique<BuiltinSource>(binding.builtin_name);
    }
    return std::make_unique<ExternalSource>(binding.command, binding.handshake_timeout_s,
                                            binding.tick_timeout_ms);
}

// ---------------------------------------------------------------------------
// Replay
// ---------------------------------------------------------------------------

struct ReplayOutcome {
    bool hash_matches = false;
    bool result_matches = false;
    std::optional<long> first_divergent_tick;
    RunResult result;
    std::string replay_hash;
};

struct IntegrityError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct VersionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Re-simulates from (scenario, seed, overrides) feeding recorded actions.
/// The stored trace must already hash to the manifest value (integrity gate);
/// divergence afterwards indicates a determinism bug and is reported with the
/// first divergent tick.
inline ReplayOutcome replay(const RunManifest& manifest, const Trace& recorded,
                            const ScenarioSpec& base_spec) {
    if (manifest.engine_version != kEngineVersion) {
        throw VersionError("manifest engine version " + manifest.engine_version +
                           " does not match engine " + kEngineVersion);
    }
    if (trace_hash(recorded) != manifest.trace_hash_hex) {
        throw IntegrityError("trace bytes do not match the manifest hash");
    }

    Overrides overrides = overrides_from_json(manifest.overrides);
    overrides.seed = manifest.seed;
    const ScenarioSpec spec = apply_overrides(base_spec, overrides);

    RunConfig config;
    config.spec = spec;
    config.seed = manifest.seed;
    config.overrides = manifest.overrides;
    config.policy_descriptor = manifest.policy;
    config.channels = recorded.header().channels;

    TraceSource source(recorded);
    const RunOutput rerun = run_simulation(config, source);

    ReplayOutcome outcome;
    outcome.result = rerun.result;
    outcome.replay_hash = trace_hash(rerun.trace);
    outcome.hash_matches = outcome.replay_hash == manifest.trace_hash_hex;
    outcome.result_matches =
        result_to_json(rerun.result) == manifest.result_summary;
    if (!outcome.hash_matches) {
        // Locate the first divergent line.
        std::istringstream a(recorded.canonical_bytes());
        std::istringstream b(rerun.trace.canonical_bytes());
        std::string la;
        std::string lb;
        long line_no = -1;  // header line first
        while (true) {
            const bool ra = static_cast<bool>(std::getline(a, la));
            const bool rb = static_cast<bool>(std::getline(b, lb));
            if (!ra && !rb) break;
            if (!ra || !rb || la != lb) {
                outcome.first_divergent_tick = std::max(0L, line_no);
                break;
            }
            ++line_no;
        }
        if (!outcome.first_divergent_tick) outcome.first_divergent_tick = 0;
    }
    return outcome;
}

}  // namespace cornersim
