#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "cornersim/types.hpp"

namespace cornersim {

struct Violation {
    std::string code;     // machine-readable, stable
    std::string message;  // human-readable
};

struct ValidationReport {
    std::vector<Violation> violations;

    bool ok() const { return violations.empty(); }
    bool has(const std::string& code) const {
        return std::any_of(violations.begin(), violations.end(),
                           [&](const Violation& v) { return v.code == code; });
    }
    void add(std::string code, std::string message) {
        violations.push_back({std::move(code), std::move(message)});
    }
};

namespace detail {

inline bool is_kebab_case(const std::string& s) {
    if (s.empty() || s.front() == '-' || s.back() == '-') return false;
    for (char c : s) {
        if (!((c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '-')) return false;
    }
    return true;
}

// Actors whose state a trigger action can change.
inline std::vector<std::string> condition_actor_ids(const TriggerSpec& t) {
    std::vector<std::string> ids;
    for (const auto& c : t.conditions) {
        if (const auto* aw = std::get_if<ActorWithin>(&c)) ids.push_back(aw->actor_id);
    }
    return ids;
}

}  // namespace detail

/// Checks every declared invariant; violations are data, not errors.
inline ValidationReport validate_scenario(const ScenarioSpec& spec) {
    ValidationReport report;

    if (spec.id.empty() || !detail::is_kebab_case(spec.id)) {
        report.add("BAD_SCENARIO_ID", "scenario id must be non-empty kebab-case: '" + spec.id + "'");
    }
    if (spec.name.empty()) {
        report.add("MISSING_NAME", "scenario name must not be empty");
    }
    if (spec.t0 < 0.0) {
        report.add("NEGATIVE_T0", "t0 must be >= 0");
    }
    if (!(spec.tn > spec.t0)) {
        report.add("WINDOW_EMPTY", "run window requires tn > t0");
    }
    if (!(spec.stationary_timeout > 0.0)) {
        report.add("BAD_STATIONARY_TIMEOUT", "stationary_timeout must be > 0");
    }
    if (find_weather(spec.weather) == nullptr) {
        report.add("UNKNOWN_WEATHER", "unknown weather preset '" + spec.weather + "'");
    }

    // Map well-formedness.
    if (spec.map.drivable.empty()) {
        report.add("NO_DRIVABLE_AREA", "map must declare at least one drivable polygon");
    }
    for (const auto& poly : spec.map.drivable) {
        if (poly.size() < 3) {
            report.add("DEGENERATE_POLYGON", "drivable polygon needs at least 3 vertices");
        }
    }
    std::set<std::string> lane_ids;
    for (const auto& lane : spec.map.lanes) {
        if (!lane_ids.insert(lane.id).second) {
            report.add("DUPLICATE_LANE_ID", "lane id '" + lane.id + "' repeats");
        }
        if (lane.centerline.size() < 2) {
            report.add("SHORT_LANE", "lane '" + lane.id + "' needs at least 2 points");
        }
        if (lane.speed_limit <= 0.0) {
            report.add("BAD_SPEED_LIMIT", "lane '" + lane.id + "' speed limit must be > 0");
        }
        for (const auto& p : lane.centerline) {
            if (!spec.map.drivable.empty() && !spec.map.on_drivable(p)) {
                std::ostringstream oss;
                oss << "lane '" << lane.id << "' point (" << p.x << ", " << p.y
                    << ") lies outside the drivable area";
                report.add("LANE_OFF_ROAD", oss.str());
                break;
            }
        }
    }
    std::set<std::string> anchor_names;
    for (const auto& a : spec.map.anchors) {
        if (!anchor_names.insert(a.name).second) {
            report.add("DUPLICATE_ANCHOR", "spawn anchor '" + a.name + "' repeats");
        }
    }

    if (!spec.map.drivable.empty() && !spec.map.on_drivable(spec.ego.spawn.position())) {
        report.add("EGO_OFF_ROAD", "ego spawn lies outside the drivable area");
    }
    if (!spec.goal_region.valid()) {
        report.add("BAD_GOAL_REGION", "goal region must have positive extent");
    } else if (!spec.map.drivable.empty() && !spec.map.on_drivable(spec.goal_region.center())) {
        report.add("GOAL_OFF_ROAD", "goal region lies outside the drivable area");
    }
    if (spec.ego.initial_speed < 0.0 || spec.ego.initial_speed > kMaxSpeed) {
        report.add("BAD_EGO_SPEED", "ego initial speed must be within [0, 30] m/s");
    }

    // Actors.
    std::set<std::string> actor_ids;
    for (const auto& actor : spec.actors) {
        if (actor.id.empty()) {
            report.add("BAD_ACTOR_ID", "actor id must not be empty");
            continue;
        }
        if (actor.id == "ego" || actor.id.rfind("traffic-", 0) == 0) {
            report.add("RESERVED_ACTOR_ID", "actor id '" + actor.id + "' is reserved");
        }
        if (!actor_ids.insert(actor.id).second) {
            report.add("DUPLICATE_ACTOR_ID", "actor id '" + actor.id + "' repeats");
        }
        if (actor.length <= 0.0 || actor.width <= 0.0) {
            report.add("BAD_DIMENSIONS", "actor '" + actor.id + "' dimensions must be positive");
        }
        if (actor.apparent_class != actor.true_class && !may_masquerade(actor.true_class)) {
            report.add("BAD_APPARENT_CLASS",
                       "actor '" + actor.id + "' of class " + to_token(actor.true_class) +
                           " may not present a different apparent class");
        }
        const auto& b = actor.behavior;
        if (b.kind == BehaviorKind::WaypointFollow && b.waypoints.size() < 2) {
            report.add("BAD_WAYPOINTS",
                       "actor '" + actor.id + "': waypoint_follow needs at least 2 waypoints");
        }
        if (b.kind == BehaviorKind::Ballistic) {
            if (b.param("height", -1.0) < 0.0) {
                report.add("BAD_BALLISTIC",
                           "actor '" + actor.id + "': ballistic needs release height >= 0");
            }
            if (b.params.find("vx") == b.params.end() && b.params.find("vy") == b.params.end() &&
                b.params.find("vz") == b.params.end()) {
                report.add("BAD_BALLISTIC",
                           "actor '" + actor.id + "': ballistic needs an initial velocity");
            }
        }
    }

    // Triggers.
    std::set<std::string> trigger_ids;
    for (const auto& trig : spec.triggers) {
        if (trig.id.empty()) {
            report.add("BAD_TRIGGER_ID", "trigger id must not be empty");
            continue;
        }
        if (!trigger_ids.insert(trig.id).second) {
            report.add("DUPLICATE_TRIGGER_ID", "trigger id '" + trig.id + "' repeats");
        }
        if (trig.conditions.empty() || trig.conditions.size() > 3) {
            report.add("BAD_CONDITION_COUNT",
                       "trigger '" + trig.id + "' must have 1 to 3 conditions");
        }
        if (!trig.one_shot) {
            report.add("BAD_ONE_SHOT", "trigger '" + trig.id + "' must be one_shot in v1");
        }
        for (const auto& cond : trig.conditions) {
            if (const auto* aw = std::get_if<ActorWithin>(&cond)) {
                if (actor_ids.find(aw->actor_id) == actor_ids.end()) {
                    report.add("DANGLING_ACTOR_REF", "trigger '" + trig.id +
                                                         "' condition references unknown actor '" +
                                                         aw->actor_id + "'");
                }
                if (aw->radius <= 0.0) {
                    report.add("BAD_RADIUS", "trigger '" + trig.id + "' radius must be > 0");
                }
            } else if (const auto* ew = std::get_if<EgoWithin>(&cond)) {
                if (ew->radius <= 0.0) {
                    report.add("BAD_RADIUS", "trigger '" + trig.id + "' radius must be > 0");
                }
            } else if (const auto* ta = std::get_if<TimeAtLeast>(&cond)) {
                if (ta->t < 0.0) {
                    report.add("BAD_TRIGGER_TIME", "trigger '" + trig.id + "' time must be >= 0");
                }
            } else if (const auto* sa = std::get_if<EgoSpeedAbove>(&cond)) {
                if (sa->speed < 0.0) {
                    report.add("BAD_TRIGGER_SPEED", "trigger '" + trig.id + "' speed must be >= 0");
                }
            }
        }
        const std::string& target = action_actor_id(trig.action);
        if (actor_ids.find(target) == actor_ids.end()) {
            report.add("DANGLING_ACTOR_REF",
                       "trigger '" + trig.id + "' action targets unknown actor '" + target + "'");
        }
    }

    // Trigger cycles: an edge T1 -> T2 exists when T1's action touches an
    // actor that T2's conditions watch. A cycle would let a firing chain
    // re-enable its own cause.
    {
        std::map<std::string, std::vector<std::string>> edges;
        for (const auto& t1 : spec.triggers) {
            const std::string& touched = action_actor_id(t1.action);
            for (const auto& t2 : spec.triggers) {
                for (const auto& watched : detail::condition_actor_ids(t2)) {
                    if (watched == touched) edges[t1.id].push_back(t2.id);
                }
            }
        }
        std::set<std::string> done;
        for (const auto& t : spec.triggers) {
            if (done.count(t.id)) continue;
            std::set<std::string> path;
            std::vector<std::string> stack = {t.id};
            std::vector<std::pair<std::string, size_t>> dfs = {{t.id, 0}};
            path.insert(t.id);
            bool cycle = false;
            while (!dfs.empty() && !cycle) {
                auto& [node, idx] = dfs.back();
                const auto& out = edges[node];
                if (idx >= out.size()) {
                    path.erase(node);
                    done.insert(node);
                    dfs.pop_back();
                    continue;
                }
                const std::string& next = out[idx++];
                if (path.count(next)) {
                    report.add("TRIGGER_CYCLE",
                               "trigger '" + next + "' can be re-enabled by its own firing chain");
                    cycle = true;
                } else if (!done.count(next)) {
                    path.insert(next);
                    dfs.push_back({next, 0});
                }
            }
        }
    }

    // Weight table must cover every class and respect the severity hierarchy.
    if (spec.constraints.mode == EvaluationMode::Weighted || !spec.constraints.weight_table.empty()) {
        const auto& table = spec.constraints.weight_table;
        for (ActorClass c : kAllActorClasses) {
            auto it = table.find(c);
            if (it == table.end()) {
                report.add("MISSING_WEIGHT",
                           std::string("weight table misses class ") + to_token(c));
            } else if (it->second < 0.0) {
                report.add("NEGATIVE_WEIGHT",
                           std::string("weight for ") + to_token(c) + " must be >= 0");
            }
        }
        auto weight_of = [&](ActorClass c) {
            auto it = table.find(c);
            return it == table.end() ? 0.0 : it->second;
        };
        const double human_min =
            std::min(weight_of(ActorClass::Pedestrian), weight_of(ActorClass::ChildPedestrian));
        const double vehicle_max =
            std::max(weight_of(ActorClass::Car), weight_of(ActorClass::EmergencyVehicle));
        const double vehicle_min =
            std::min(weight_of(ActorClass::Car), weight_of(ActorClass::EmergencyVehicle));
        const double sign_max = std::max({weight_of(ActorClass::Billboard),
                                          weight_of(ActorClass::StopSign),
                                          weight_of(ActorClass::YieldSign),
                                          weight_of(ActorClass::TrafficLight),
                                          weight_of(ActorClass::ParkingSign),
                                          weight_of(ActorClass::TurnSign)});
        if (!(human_min > vehicle_max) || !(vehicle_min > sign_max)) {
            report.add("WEIGHT_HIERARCHY",
                       "weights must order humans > vehicles > signs/billboards");
        }
    }
    if (spec.constraints.failure_threshold < 0.0) {
        report.add("BAD_FAILURE_THRESHOLD", "failure_threshold must be >= 0");
    }

    return report;
}

// ---------------------------------------------------------------------------
// Overrides
// ---------------------------------------------------------------------------

struct TriggerShift {
    std::string trigger_id;  // "*" shifts every TimeAtLeast trigger
    double delta_seconds = 0.0;
};

struct Overrides {
    std::optional<std::string> weather;
    std::optional<TrafficDensity> traffic_density;
    std::optional<std::uint64_t> seed;  // replaces default_seed
    std::vector<TriggerShift> trigger_shifts;
    std::optional<double> ego_initial_speed;

    bool empty() const {
        return !weather && !traffic_density && !seed && trigger_shifts.empty() &&
               !ego_initial_speed;
    }
};

struct OverrideError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Returns a new spec differing only in the overridden fields; the input is
/// untouched and the result re-validates cleanly.
inline ScenarioSpec apply_overrides(const ScenarioSpec& spec, const Overrides& overrides) {
    ScenarioSpec out = spec;
    if (overrides.weather) {
        if (find_weather(*overrides.weather) == nullptr) {
            throw OverrideError("unknown weather preset '" + *overrides.weather + "'");
        }
        out.weather = *overrides.weather;
    }
    if (overrides.traffic_density) {
        out.traffic_density = *overrides.traffic_density;
    }
    if (overrides.seed) {
        out.default_seed = *overrides.seed;
    }
    if (overrides.ego_initial_speed) {
        out.ego.initial_speed = *overrides.ego_initial_speed;
    }
    for (const auto& shift : overrides.trigger_shifts) {
        bool matched = false;
        for (auto& trig : out.triggers) {
            if (shift.trigger_id != "*" && trig.id != shift.trigger_id) continue;
            for (auto& cond : trig.conditions) {
                if (auto* ta = std::get_if<TimeAtLeast>(&cond)) {
                    ta->t += shift.delta_seconds;
                    matched = true;
                }
            }
            if (shift.trigger_id != "*" && !matched) {
                throw OverrideError("trigger '" + shift.trigger_id + "' has no time condition");
            }
        }
        if (shift.trigger_id != "*" && !matched) {
            throw OverrideError("unknown trigger '" + shift.trigger_id + "'");
        }
    }
    const ValidationReport report = validate_scenario(out);
    if (!report.ok()) {
        throw OverrideError("override produces invalid scenario: " +
                            report.violations.front().code);
    }
    return out;
}

}  // namespace cornersim
