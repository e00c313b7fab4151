#pragma once

// Deterministic fixed-timestep world: ego bicycle model, scripted actor
// behaviors, trigger evaluation and ego collision detection. One instance is
// strictly single-threaded; instances share nothing.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "cornersim/rng.hpp"
#include "cornersim/types.hpp"
#include "cornersim/validate.hpp"

namespace cornersim {

struct ContinuousControl {
    double throttle = 0.0;  // [0, 1]
    double brake = 0.0;     // [0, 1]
    double steer = 0.0;     // [-1, 1], scaled by kMaxSteer

    ContinuousControl clamped() const {
        return {std::clamp(throttle, 0.0, 1.0), std::clamp(brake, 0.0, 1.0),
                std::clamp(steer, -1.0, 1.0)};
    }
    bool operator==(const ContinuousControl&) const = default;
};

struct KinematicState {
    Pose2D pose;
    double speed = 0.0;        // m/s along heading (signed)
    double steer_angle = 0.0;  // rad, ego only
    double height = 0.0;       // m above ground, ballistic props
    double vertical_speed = 0.0;
    bool active = true;

    bool operator==(const KinematicState&) const = default;
};

struct CollisionEvent {
    long tick = 0;
    std::string actor_id;
    ActorClass actor_true_class = ActorClass::Car;
    double relative_speed = 0.0;    // |ego velocity - actor velocity| at contact
    double penetration_depth = 0.0; // m

    bool operator==(const CollisionEvent&) const = default;
};

enum class WorldEventKind { TriggerFired, Collision, ActorActivated, ActorDespawned, GoalReached };

inline const char* to_token(WorldEventKind k) {
    switch (k) {
        case WorldEventKind::TriggerFired: return "trigger_fired";
        case WorldEventKind::Collision: return "collision";
        case WorldEventKind::ActorActivated: return "actor_activated";
        case WorldEventKind::ActorDespawned: return "actor_despawned";
        case WorldEventKind::GoalReached: return "goal_reached";
    }
    return "?";
}

struct WorldEvent {
    long tick = 0;
    WorldEventKind kind = WorldEventKind::TriggerFired;
    std::string subject;  // trigger id or actor id
    std::optional<CollisionEvent> collision;

    bool operator==(const WorldEvent&) const = default;
};

/// Runtime actor: spec plus mutable behavior (triggers may replace scripts).
struct ActorRuntime {
    ActorSpec spec;
    BehaviorScript behavior;    // current script
    double path_progress = 0;   // arc length along waypoints
    bool impulse_override = false;  // free-sliding after ApplyImpulse
    std::string detection_handle;   // opaque id shown to perception
};

struct WorldState {
    long tick = 0;
    double sim_time = 0.0;  // = t0 + tick * dt
    KinematicState ego;
    std::map<std::string, KinematicState> actor_states;
    std::set<std::string> fired_triggers;
    std::vector<WorldEvent> event_log;  // append-only
    std::set<std::string> colliding;    // (ego, actor) overlaps currently persisting
    RandomStream traffic_stream;
    RandomStream sensor_stream;
    std::vector<ActorRuntime> actors;   // scenario actors + background traffic
    std::uint64_t seed = 0;

    const ActorRuntime* find_actor(const std::string& id) const {
        for (const auto& a : actors) {
            if (a.spec.id == id) return &a;
        }
        return nullptr;
    }
    ActorRuntime* find_actor(const std::string& id) {
        for (auto& a : actors) {
            if (a.spec.id == id) return &a;
        }
        return nullptr;
    }
};

struct InitError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Helpers
// ---------------------------------------------------------------------------

inline Obb ego_obb(const KinematicState& ego) {
    return {ego.pose.position(), kEgoLength / 2.0, kEgoWidth / 2.0, ego.pose.heading};
}

inline Obb actor_obb(const ActorSpec& spec, const KinematicState& st) {
    return {st.pose.position(), spec.length / 2.0, spec.width / 2.0, st.pose.heading};
}

/// Airborne props above the ego roof line neither collide nor occlude.
inline bool occupies_ground_plane(const KinematicState& st) {
    return st.height <= kEgoRoofHeight;
}

/// Ground deceleration once a prop slides or rolls, by class. Behavior
/// params may override via "decel".
inline double ground_decel(ActorClass c) {
    switch (c) {
        case ActorClass::Ball: return 0.3;
        case ActorClass::ShoppingCart: return 0.25;
        case ActorClass::Luggage: return 2.5;
        case ActorClass::Barrel: return 1.2;
        default: return 3.0;
    }
}

namespace engine_detail {

// Exact constant-curvature move: when the steering angle is held for a tick
// the path is a circular arc, so integrating position along arc length is
// exact for any within-tick speed profile.
inline void advance_arc(Pose2D& pose, double distance, double curvature) {
    if (std::abs(curvature) < 1e-12) {
        pose.x += distance * std::cos(pose.heading);
        pose.y += distance * std::sin(pose.heading);
        return;
    }
    const double h0 = pose.heading;
    const double h1 = h0 + curvature * distance;
    pose.x += (std::sin(h1) - std::sin(h0)) / curvature;
    pose.y -= (std::cos(h1) - std::cos(h0)) / curvature;
    pose.heading = wrap_angle(h1);
}

/// Distance covered in dt under constant accel with speed clamped to
/// [0, vmax]; returns new speed through `speed`.
inline double clamped_advance(double& speed, double accel, double dt, double vmax) {
    const double v0 = speed;
    double v1 = v0 + accel * dt;
    double dist;
    if (v1 < 0.0) {
        const double t_stop = accel < 0.0 ? -v0 / accel : 0.0;
        dist = v0 * t_stop + 0.5 * accel * t_stop * t_stop;
        v1 = 0.0;
    } else if (v1 > vmax) {
        const double t_cap = accel > 0.0 ? (vmax - v0) / accel : 0.0;
        dist = v0 * t_cap + 0.5 * accel * t_cap * t_cap + vmax * (dt - t_cap);
        v1 = vmax;
    } else {
        dist = 0.5 * (v0 + v1) * dt;
    }
    speed = v1;
    return dist;
}

inline void integrate_ego(KinematicState& ego, const ContinuousControl& control, double mu,
                          double dt) {
    const ContinuousControl c = control.clamped();
    ego.steer_angle = c.steer * kMaxSteer;
    const double accel = (c.throttle - c.brake) * mu * kGravity;
    const double curvature = std::tan(ego.steer_angle) / kWheelbase;
    const double dist = clamped_advance(ego.speed, accel, dt, kMaxSpeed);
    advance_arc(ego.pose, dist, curvature);
}

inline void integrate_waypoints(ActorRuntime& actor, KinematicState& st, double dt) {
    const auto& wps = actor.behavior.waypoints;
    if (wps.size() < 2) return;

    // Cumulative arc lengths.
    double remaining = dt;
    while (remaining > 1e-9) {
        double s = 0.0;
        size_t seg = wps.size();  // segment the current progress falls in
        double seg_start = 0.0;
        for (size_t i = 0; i + 1 < wps.size(); ++i) {
            const Vec2 a{wps[i].x, wps[i].y};
            const Vec2 b{wps[i + 1].x, wps[i + 1].y};
            const double len = (b - a).norm();
            if (actor.path_progress <= s + len + 1e-12) {
                seg = i;
                seg_start = s;
                break;
            }
            s += len;
        }
        if (seg >= wps.size()) {  // past the last waypoint: hold position
            st.speed = 0.0;
            return;
        }
        const Vec2 a{wps[seg].x, wps[seg].y};
        const Vec2 b{wps[seg + 1].x, wps[seg + 1].y};
        const Vec2 dir = b - a;
        const double len = dir.norm();
        if (len < 1e-9) {
            actor.path_progress = seg_start + len;
            if (seg + 2 >= wps.size()) {
                st.speed = 0.0;
                return;
            }
            continue;
        }

        // Speed tracks the segment target with a fixed accel limit.
        const double target = wps[seg].speed;
        const double accel_limit = 3.0;
        double v = st.speed;
        if (v < target) {
            v = std::min(target, v + accel_limit * remaining);
        } else if (v > target) {
            v = std::max(target, v - accel_limit * remaining);
        }
        const double step_v = 0.5 * (st.speed + v);
        st.speed = v;
        double step_dist = step_v * remaining;
        const double seg_left = seg_start + len - actor.path_progress;
        st.pose.heading = std::atan2(dir.y, dir.x);
        if (step_dist < seg_left || seg + 2 >= wps.size()) {
            actor.path_progress += step_dist;
            remaining = 0.0;
        } else {
            // Cross into the next segment within this tick.
            actor.path_progress = seg_start + len + 1e-9;
            remaining *= step_dist > 1e-12 ? std::max(0.0, 1.0 - seg_left / step_dist) : 0.0;
        }
        const double t = std::clamp((actor.path_progress - seg_start) / len, 0.0, 1.0);
        st.pose.x = a.x + dir.x * t;
        st.pose.y = a.y + dir.y * t;
        if (st.speed <= 1e-9 && std::abs(target) <= 1e-9) return;  // parked at a 0-speed waypoint
    }
}

inline void integrate_ground_roll(ActorRuntime& actor, KinematicState& st, double dt) {
    // Free planar slide/roll along the heading with a constant deceleration
    // (or acceleration for rolling-downhill scripts), optionally capped.
    double accel;
    if (actor.behavior.kind == BehaviorKind::Rolling && !actor.impulse_override) {
        accel = actor.behavior.param("accel", -ground_decel(actor.spec.true_class));
    } else {
        accel = -actor.behavior.param("decel", ground_decel(actor.spec.true_class));
    }
    const double vmax = actor.behavior.param("max_speed", kMaxSpeed);
    const double dist = clamped_advance(st.speed, accel, dt, vmax);
    st.pose.x += dist * std::cos(st.pose.heading);
    st.pose.y += dist * std::sin(st.pose.heading);
}

inline void integrate_vertical(KinematicState& st, double dt) {
    if (st.height <= 0.0 && st.vertical_speed <= 0.0) {
        st.height = 0.0;
        st.vertical_speed = 0.0;
        return;
    }
    st.height += st.vertical_speed * dt;
    st.vertical_speed -= kGravity * dt;
    if (st.height <= 0.0) {
        st.height = 0.0;
        st.vertical_speed = 0.0;
    }
}

inline void integrate_door_swing(const ActorRuntime& actor, KinematicState& st, double dt) {
    const double rate = actor.behavior.param("rate", 1.2);
    const double max_angle = actor.behavior.param("max_angle", 1.2);
    const Vec2 hinge{actor.behavior.param("hinge_x", actor.spec.spawn.x),
                     actor.behavior.param("hinge_y", actor.spec.spawn.y)};
    const double swung = wrap_angle(st.pose.heading - actor.spec.spawn.heading);
    const double step = std::min(rate * dt, std::max(0.0, max_angle - swung));
    if (step <= 0.0) return;
    const double c = std::cos(step);
    const double s = std::sin(step);
    const Vec2 rel = st.pose.position() - hinge;
    st.pose.x = hinge.x + c * rel.x - s * rel.y;
    st.pose.y = hinge.y + s * rel.x + c * rel.y;
    st.pose.heading = wrap_angle(st.pose.heading + step);
}

inline void integrate_pursuit(const WorldState& world, ActorRuntime& actor, KinematicState& st,
                              double dt) {
    // Chase the nearest active vehicle-class actor; falls back to holding
    // course when no target exists.
    const double speed = actor.behavior.param("speed", 15.0);
    const double turn_rate = actor.behavior.param("turn_rate", 1.5);
    const Vec2 self = st.pose.position();
    const ActorRuntime* target = nullptr;
    double best = std::numeric_limits<double>::infinity();
    for (const auto& other : world.actors) {
        if (other.spec.id == actor.spec.id) continue;
        const auto it = world.actor_states.find(other.spec.id);
        if (it == world.actor_states.end() || !it->second.active) continue;
        if (other.spec.true_class != ActorClass::Car &&
            other.spec.true_class != ActorClass::EmergencyVehicle) {
            continue;
        }
        const double d = (it->second.pose.position() - self).norm_sq();
        if (d < best) {
            best = d;
            target = &other;
        }
    }
    if (target != nullptr) {
        const Vec2 tp = world.actor_states.at(target->spec.id).pose.position();
        const double want = std::atan2(tp.y - self.y, tp.x - self.x);
        const double err = wrap_angle(want - st.pose.heading);
        const double step = std::clamp(err, -turn_rate * dt, turn_rate * dt);
        st.pose.heading = wrap_angle(st.pose.heading + step);
    }
    st.speed = std::min(speed, st.speed + 4.0 * dt);
    st.pose.x += st.speed * dt * std::cos(st.pose.heading);
    st.pose.y += st.speed * dt * std::sin(st.pose.heading);
}

inline void integrate_actor(const WorldState& world, ActorRuntime& actor, KinematicState& st,
                            double dt) {
    if (!st.active) return;
    const bool airborne = st.height > 0.0 || st.vertical_speed > 0.0;
    if (actor.impulse_override || actor.behavior.kind == BehaviorKind::Ballistic) {
        if (airborne) {
            // Constant planar velocity while in the air.
            st.pose.x += st.speed * dt * std::cos(st.pose.heading);
            st.pose.y += st.speed * dt * std::sin(st.pose.heading);
        } else {
            integrate_ground_roll(actor, st, dt);
        }
        integrate_vertical(st, dt);
        return;
    }
    switch (actor.behavior.kind) {
        case BehaviorKind::Static:
            break;
        case BehaviorKind::WaypointFollow:
            integrate_waypoints(actor, st, dt);
            break;
        case BehaviorKind::Rolling:
            integrate_ground_roll(actor, st, dt);
            break;
        case BehaviorKind::ScriptedDoorSwing:
            integrate_door_swing(actor, st, dt);
            break;
        case BehaviorKind::Pursuit:
            integrate_pursuit(world, actor, st, dt);
            break;
        case BehaviorKind::Ballistic:
            break;  // handled above
    }
}

inline bool condition_holds(const WorldState& world, const ScenarioSpec& spec,
                            const TriggerCondition& cond, double eval_time) {
    (void)spec;
    if (const auto* t = std::get_if<TimeAtLeast>(&cond)) {
        return eval_time >= t->t - 1e-9;
    }
    if (const auto* e = std::get_if<EgoWithin>(&cond)) {
        return (world.ego.pose.position() - e->point).norm() <= e->radius;
    }
    if (const auto* a = std::get_if<ActorWithin>(&cond)) {
        const auto it = world.actor_states.find(a->actor_id);
        if (it == world.actor_states.end() || !it->second.active) return false;
        return (it->second.pose.position() - a->point).norm() <= a->radius;
    }
    if (const auto* s = std::get_if<EgoSpeedAbove>(&cond)) {
        return world.ego.speed > s->speed;
    }
    return false;
}

inline void apply_action(WorldState& world, const TriggerAction& action, long event_tick,
                         std::vector<WorldEvent>& events) {
    const std::string& id = action_actor_id(action);
    ActorRuntime* actor = world.find_actor(id);
    auto st = world.actor_states.find(id);
    if (actor == nullptr || st == world.actor_states.end()) return;
    if (const auto* act = std::get_if<ActivateActor>(&action)) {
        (void)act;
        if (!st->second.active) {
            st->second.active = true;
            if (actor->behavior.kind == BehaviorKind::Ballistic) {
                st->second.height = actor->behavior.param("height", 0.0);
                st->second.vertical_speed = actor->behavior.param("vz", 0.0);
                const double vx = actor->behavior.param("vx", 0.0);
                const double vy = actor->behavior.param("vy", 0.0);
                st->second.speed = std::hypot(vx, vy);
                if (st->second.speed > 1e-9) st->second.pose.heading = std::atan2(vy, vx);
            }
            events.push_back({event_tick, WorldEventKind::ActorActivated, id, std::nullopt});
        }
    } else if (const auto* sb = std::get_if<SetBehavior>(&action)) {
        actor->behavior = sb->behavior;
        actor->path_progress = 0.0;
        actor->impulse_override = false;
        if (sb->behavior.kind == BehaviorKind::Ballistic) {
            st->second.height = sb->behavior.param("height", st->second.height);
            st->second.vertical_speed = sb->behavior.param("vz", 0.0);
            const double vx = sb->behavior.param("vx", 0.0);
            const double vy = sb->behavior.param("vy", 0.0);
            if (std::hypot(vx, vy) > 1e-9) {
                st->second.speed = std::hypot(vx, vy);
                st->second.pose.heading = std::atan2(vy, vx);
            }
        }
    } else if (const auto* ai = std::get_if<ApplyImpulse>(&action)) {
        if (st->second.active) {  // a shove on an inactive body is a no-op
            st->second.speed = ai->velocity.norm();
            if (st->second.speed > 1e-9) {
                st->second.pose.heading = std::atan2(ai->velocity.y, ai->velocity.x);
            }
            actor->impulse_override = true;
        }
    } else if (const auto* d = std::get_if<Despawn>(&action)) {
        (void)d;
        if (st->second.active) {
            st->second.active = false;
            events.push_back({event_tick, WorldEventKind::ActorDespawned, id, std::nullopt});
        }
    }
}

}  // namespace engine_detail

// ---------------------------------------------------------------------------
// Trigger evaluation
// ---------------------------------------------------------------------------

/// Unfired triggers whose conditions all hold right now. Marks them fired;
/// the caller applies actions in the returned (id-sorted) order.
inline std::vector<const TriggerSpec*> evaluate_triggers(WorldState& world,
                                                         const ScenarioSpec& spec,
                                                         double eval_time) {
    std::vector<const TriggerSpec*> due;
    for (const auto& trig : spec.triggers) {
        if (world.fired_triggers.count(trig.id)) continue;
        bool all = !trig.conditions.empty();
        for (const auto& cond : trig.conditions) {
            if (!engine_detail::condition_holds(world, spec, cond, eval_time)) {
                all = false;
                break;
            }
        }
        if (all) due.push_back(&trig);
    }
    std::sort(due.begin(), due.end(),
              [](const TriggerSpec* a, const TriggerSpec* b) { return a->id < b->id; });
    for (const TriggerSpec* t : due) world.fired_triggers.insert(t->id);
    return due;
}

// ---------------------------------------------------------------------------
// Ballistic integration (exposed for tests)
// ---------------------------------------------------------------------------

inline KinematicState integrate_ballistic(KinematicState st, double dt) {
    if (st.height > 0.0 || st.vertical_speed > 0.0) {
        st.pose.x += st.speed * dt * std::cos(st.pose.heading);
        st.pose.y += st.speed * dt * std::sin(st.pose.heading);
    }
    engine_detail::integrate_vertical(st, dt);
    return st;
}

// ---------------------------------------------------------------------------
// init_world
// ---------------------------------------------------------------------------

/// Background traffic poses for a given map/density/seed; exposed so tests
/// can recompute the assignment independently of init_world.
inline std::vector<Pose2D> traffic_spawn_poses(const RoadMap& map, TrafficDensity density,
                                               std::uint64_t seed) {
    const int want = background_vehicle_count(density);
    std::vector<Pose2D> out;
    if (want == 0 || map.anchors.empty()) return out;
    RandomStream stream = stream_for(seed, "traffic");
    std::vector<size_t> order(map.anchors.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    // Fisher-Yates with the named stream.
    for (size_t i = order.size(); i > 1; --i) {
        const size_t j = static_cast<size_t>(stream.next_below(i));
        std::swap(order[i - 1], order[j]);
    }
    for (int k = 0; k < want; ++k) {
        const SpawnAnchor& anchor = map.anchors[order[k % order.size()]];
        Pose2D pose = anchor.pose;
        // Anchor reuse walks backwards along the anchor heading.
        const int round = k / static_cast<int>(order.size());
        if (round > 0) {
            pose.x -= 8.0 * round * std::cos(pose.heading);
            pose.y -= 8.0 * round * std::sin(pose.heading);
        }
        out.push_back(pose);
    }
    return out;
}

namespace engine_detail {

inline const Lane* nearest_lane(const RoadMap& map, const Vec2& p, double heading,
                                bool direction_matters) {
    const Lane* best = nullptr;
    double best_score = std::numeric_limits<double>::infinity();
    for (const auto& lane : map.lanes) {
        if (lane.centerline.size() < 2) continue;
        for (size_t i = 0; i + 1 < lane.centerline.size(); ++i) {
            const Vec2& a = lane.centerline[i];
            const Vec2& b = lane.centerline[i + 1];
            double d = point_segment_distance(p, a, b);
            if (direction_matters) {
                const double seg_heading = std::atan2(b.y - a.y, b.x - a.x);
                if (std::abs(wrap_angle(seg_heading - heading)) > 1.3) d += 1e6;
            }
            if (d < best_score) {
                best_score = d;
                best = &lane;
            }
        }
    }
    return best;
}

/// Waypoints along `lane` starting at the point nearest to `from`.
inline std::vector<Waypoint> lane_route_from(const Lane& lane, const Vec2& from) {
    std::vector<Waypoint> wps;
    size_t start = 0;
    double best = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i + 1 < lane.centerline.size(); ++i) {
        const double d = point_segment_distance(from, lane.centerline[i], lane.centerline[i + 1]);
        if (d < best) {
            best = d;
            start = i;
        }
    }
    wps.push_back({from.x, from.y, lane.speed_limit});
    for (size_t i = start + 1; i < lane.centerline.size(); ++i) {
        wps.push_back({lane.centerline[i].x, lane.centerline[i].y, lane.speed_limit});
    }
    if (wps.size() < 2 && !lane.centerline.empty()) {
        wps.push_back({lane.centerline.back().x, lane.centerline.back().y, 0.0});
    }
    wps.back().speed = 0.0;  // stop at the end of the lane
    return wps;
}

}  // namespace engine_detail

/// Deterministic initial state: ego plus scenario actors plus background
/// traffic derived from (seed, "traffic"). Throws InitError when two active
/// actors overlap at t0.
inline WorldState init_world(const ScenarioSpec& spec, std::uint64_t seed) {
    WorldState world;
    world.seed = seed;
    world.tick = 0;
    world.sim_time = spec.t0;
    world.traffic_stream = stream_for(seed, "traffic");
    world.sensor_stream = stream_for(seed, "sensor");

    world.ego.pose = spec.ego.spawn;
    world.ego.speed = spec.ego.initial_speed;
    world.ego.active = true;

    int handle = 0;
    auto next_handle = [&handle]() {
        char buf[8];
        std::snprintf(buf, sizeof(buf), "a%02d", handle++);
        return std::string(buf);
    };

    for (const auto& actor : spec.actors) {
        ActorRuntime rt;
        rt.spec = actor;
        rt.behavior = actor.behavior;
        rt.detection_handle = next_handle();
        KinematicState st;
        st.pose = actor.spawn;
        st.active = actor.initially_active;
        if (actor.behavior.kind == BehaviorKind::Ballistic && actor.initially_active) {
            st.height = actor.behavior.param("height", 0.0);
            st.vertical_speed = actor.behavior.param("vz", 0.0);
            const double vx = actor.behavior.param("vx", 0.0);
            const double vy = actor.behavior.param("vy", 0.0);
            st.speed = std::hypot(vx, vy);
            if (st.speed > 1e-9) st.pose.heading = std::atan2(vy, vx);
        }
        if (actor.behavior.kind == BehaviorKind::WaypointFollow &&
            !actor.behavior.waypoints.empty()) {
            st.speed = 0.0;
        }
        world.actors.push_back(rt);
        world.actor_states[actor.id] = st;
    }

    // Background traffic: waypoint followers along the lane nearest to each
    // anchor, at the lane speed limit.
    const auto poses = traffic_spawn_poses(spec.map, spec.traffic_density, seed);
    for (size_t i = 0; i < poses.size(); ++i) {
        ActorRuntime rt;
        char name[24];
        std::snprintf(name, sizeof(name), "traffic-%02d", static_cast<int>(i));
        rt.spec.id = name;
        rt.spec.true_class = ActorClass::Car;
        rt.spec.apparent_class = ActorClass::Car;
        rt.spec.spawn = poses[i];
        rt.spec.length = 4.6;
        rt.spec.width = 1.8;
        rt.spec.initially_active = true;
        rt.detection_handle = next_handle();
        rt.behavior.kind = BehaviorKind::WaypointFollow;
        const Lane* lane =
            engine_detail::nearest_lane(spec.map, poses[i].position(), poses[i].heading, true);
        if (lane == nullptr) {
            lane = engine_detail::nearest_lane(spec.map, poses[i].position(), poses[i].heading,
                                               false);
        }
        if (lane != nullptr) {
            rt.behavior.waypoints = engine_detail::lane_route_from(*lane, poses[i].position());
        } else {
            rt.behavior.kind = BehaviorKind::Static;
        }
        KinematicState st;
        st.pose = poses[i];
        st.active = true;
        world.actors.push_back(rt);
        world.actor_states[rt.spec.id] = st;
    }

    // Spawn overlap check over active bodies (ego included).
    std::vector<std::pair<std::string, Obb>> boxes;
    boxes.emplace_back("ego", ego_obb(world.ego));
    for (const auto& rt : world.actors) {
        const auto& st = world.actor_states.at(rt.spec.id);
        if (!st.active) continue;
        boxes.emplace_back(rt.spec.id, actor_obb(rt.spec, st));
    }
    for (size_t i = 0; i < boxes.size(); ++i) {
        for (size_t j = i + 1; j < boxes.size(); ++j) {
            if (obb_overlap(boxes[i].second, boxes[j].second)) {
                throw InitError("actors '" + boxes[i].first + "' and '" + boxes[j].first +
                                "' overlap at t0");
            }
        }
    }
    return world;
}

// ---------------------------------------------------------------------------
// step
// ---------------------------------------------------------------------------

/// One fixed tick: (1) ego integration, (2) scripted actors, (3) triggers on
/// the post-integration state, (4) ego collision detection, (5) events
/// appended, tick advanced. Deterministic given identical inputs.
inline std::vector<WorldEvent> step(WorldState& world, const ContinuousControl& ego_control,
                                    const ScenarioSpec& spec, const WeatherPreset& weather) {
    std::vector<WorldEvent> events;
    const double dt = kTickSeconds;
    const long next_tick = world.tick + 1;
    const double next_time = spec.t0 + static_cast<double>(next_tick) * dt;

    engine_detail::integrate_ego(world.ego, ego_control, weather.friction_mu, dt);

    for (auto& rt : world.actors) {
        auto& st = world.actor_states.at(rt.spec.id);
        engine_detail::integrate_actor(world, rt, st, dt);
    }

    for (const TriggerSpec* trig : evaluate_triggers(world, spec, next_time)) {
        events.push_back({next_tick, WorldEventKind::TriggerFired, trig->id, std::nullopt});
        engine_detail::apply_action(world, trig->action, next_tick, events);
    }

    // Ego collisions; first overlapping tick per pair, deduplicated while
    // the overlap persists.
    const Obb ego_box = ego_obb(world.ego);
    std::set<std::string> overlapping;
    for (const auto& rt : world.actors) {
        const auto& st = world.actor_states.at(rt.spec.id);
        if (!st.active || !occupies_ground_plane(st)) continue;
        const Obb box = actor_obb(rt.spec, st);
        const double gap = obb_separation(ego_box, box);
        if (gap > 0.0) continue;
        overlapping.insert(rt.spec.id);
        if (world.colliding.count(rt.spec.id)) continue;
        CollisionEvent ce;
        ce.tick = next_tick;
        ce.actor_id = rt.spec.id;
        ce.actor_true_class = rt.spec.true_class;
        const double ego_h = world.ego.pose.heading;
        const double actor_h = st.pose.heading;
        const Vec2 ego_v{world.ego.speed * std::cos(ego_h), world.ego.speed * std::sin(ego_h)};
        const Vec2 actor_v{st.speed * std::cos(actor_h), st.speed * std::sin(actor_h)};
        ce.relative_speed = (ego_v - actor_v).norm();
        ce.penetration_depth = -gap;
        events.push_back({next_tick, WorldEventKind::Collision, rt.spec.id, ce});
    }
    world.colliding = std::move(overlapping);

    if (spec.goal_region.contains(world.ego.pose.position())) {
        events.push_back({next_tick, WorldEventKind::GoalReached, "ego", std::nullopt});
    }

    world.tick = next_tick;
    world.sim_time = next_time;
    for (const auto& e : events) world.event_log.push_back(e);
    return events;
}

}  // namespace cornersim
