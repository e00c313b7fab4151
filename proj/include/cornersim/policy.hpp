#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "cornersim/perception.hpp"
#include "cornersim/types.hpp"
#include "cornersim/world.hpp"

namespace cornersim {

enum class DiscreteAction { Straight, TurnLeft, TurnRight, Stop };

inline const char* to_token(DiscreteAction a) {
    switch (a) {
        case DiscreteAction::Straight: return "straight";
        case DiscreteAction::TurnLeft: return "turn_left";
        case DiscreteAction::TurnRight: return "turn_right";
        case DiscreteAction::Stop: return "stop";
    }
    return "?";
}

inline std::optional<DiscreteAction> discrete_from_token(const std::string& s) {
    if (s == "straight") return DiscreteAction::Straight;
    if (s == "turn_left") return DiscreteAction::TurnLeft;
    if (s == "turn_right") return DiscreteAction::TurnRight;
    if (s == "stop") return DiscreteAction::Stop;
    return std::nullopt;
}

/// Exactly one variant is present; continuous fields are clamped on ingestion.
struct EgoAction {
    std::optional<DiscreteAction> discrete;
    std::optional<ContinuousControl> continuous;

    static EgoAction of(DiscreteAction a) { return {a, std::nullopt}; }
    static EgoAction of(const ContinuousControl& c) { return {std::nullopt, c.clamped()}; }
    bool operator==(const EgoAction&) const = default;
};

struct PolicyBinding {
    enum class Kind { Builtin, External };
    Kind kind = Kind::Builtin;
    std::string builtin_name = "passive";
    std::string command;               // external: run through /bin/sh -c
    double handshake_timeout_s = 5.0;  // external
    int tick_timeout_ms = 50;          // external

    /// Parses "builtin:<name>" or "exec:<command...>".
    static std::optional<PolicyBinding> parse(const std::string& text) {
        PolicyBinding b;
        if (text.rfind("builtin:", 0) == 0) {
            b.kind = Kind::Builtin;
            b.builtin_name = text.substr(8);
            const char* names[] = {"passive", "constant_speed", "emergency_brake",
                                   "waypoint_follower"};
            for (const char* n : names) {
                if (b.builtin_name == n) return b;
            }
            return std::nullopt;
        }
        if (text.rfind("exec:", 0) == 0) {
            b.kind = Kind::External;
            b.command = text.substr(5);
            return b.command.empty() ? std::nullopt : std::optional<PolicyBinding>(b);
        }
        return std::nullopt;
    }

    std::string descriptor() const {
        return kind == Kind::Builtin ? "builtin:" + builtin_name : "exec:" + command;
    }
};

// ---------------------------------------------------------------------------
// Discrete -> continuous mapping
// ---------------------------------------------------------------------------

struct MappedControl {
    ContinuousControl control;
    bool turn_fallback = false;  // requested turn had no lane on that side
};

namespace policy_detail {

inline double pure_pursuit_steer(const KinematicState& ego, const Vec2& target_world) {
    const Vec2 local = to_frame(ego.pose, target_world);
    const double dist_sq = local.norm_sq();
    if (dist_sq < 1e-6) return 0.0;
    const double curvature = 2.0 * local.y / dist_sq;
    const double steer_angle = std::atan(curvature * kWheelbase);
    return std::clamp(steer_angle / kMaxSteer, -1.0, 1.0);
}

inline double speed_tracking_throttle(double speed, double target, ContinuousControl& out) {
    const double err = target - speed;
    const double gain = 0.6;
    if (err >= 0.0) {
        out.throttle = std::clamp(err * gain, 0.0, 1.0);
        out.brake = 0.0;
    } else {
        out.throttle = 0.0;
        out.brake = std::clamp(-err * gain, 0.0, 1.0);
    }
    return err;
}

/// Point `lookahead` metres further along the lane from the projection of p.
inline Vec2 lane_lookahead(const Lane& lane, const Vec2& p, double lookahead) {
    const auto& line = lane.centerline;
    double best = std::numeric_limits<double>::infinity();
    size_t best_seg = 0;
    double best_t = 0.0;
    for (size_t i = 0; i + 1 < line.size(); ++i) {
        const Vec2 a = line[i];
        const Vec2 ab = line[i + 1] - a;
        const double len_sq = ab.norm_sq();
        const double t = len_sq > 1e-12 ? std::clamp((p - a).dot(ab) / len_sq, 0.0, 1.0) : 0.0;
        const Vec2 q = a + ab * t;
        const double d = (p - q).norm_sq();
        if (d < best) {
            best = d;
            best_seg = i;
            best_t = t;
        }
    }
    double to_go = lookahead;
    size_t i = best_seg;
    Vec2 pos = line[i] + (line[i + 1] - line[i]) * best_t;
    while (true) {
        const Vec2 seg_end = line[i + 1];
        const double seg_left = (seg_end - pos).norm();
        if (to_go <= seg_left || i + 2 >= line.size()) {
            const Vec2 d = seg_end - pos;
            const double n = d.norm();
            if (n < 1e-9) return seg_end;
            const double step = std::min(to_go, seg_left + lookahead);
            return pos + d * (step / n);
        }
        to_go -= seg_left;
        pos = seg_end;
        ++i;
    }
}

/// Lane whose nearest point lies on the requested side of the ego.
inline const Lane* adjacent_lane(const RoadMap& map, const Pose2D& ego_pose, bool left,
                                 const Lane* current) {
    const Lane* best = nullptr;
    double best_dist = std::numeric_limits<double>::infinity();
    for (const auto& lane : map.lanes) {
        if (&lane == current || lane.centerline.size() < 2) continue;
        double dist = std::numeric_limits<double>::infinity();
        Vec2 nearest;
        for (size_t i = 0; i + 1 < lane.centerline.size(); ++i) {
            const Vec2 a = lane.centerline[i];
            const Vec2 ab = lane.centerline[i + 1] - a;
            const double len_sq = ab.norm_sq();
            const double t =
                len_sq > 1e-12 ? std::clamp((ego_pose.position() - a).dot(ab) / len_sq, 0.0, 1.0)
                               : 0.0;
            const Vec2 q = a + ab * t;
            const double d = (ego_pose.position() - q).norm();
            if (d < dist) {
                dist = d;
                nearest = q;
            }
        }
        if (dist > 12.0) continue;  // not adjacent
        const Vec2 local = to_frame(ego_pose, nearest);
        if (left && local.y < 0.5) continue;
        if (!left && local.y > -0.5) continue;
        if (dist < best_dist) {
            best_dist = dist;
            best = &lane;
        }
    }
    return best;
}

}  // namespace policy_detail

/// Resolve a discrete action against the map. Stop is a full brake; Straight
/// cruises the current lane at its limit; turns steer to the adjacent lane or
/// branch on that side and degrade to Straight (flagged) when none exists.
inline MappedControl map_discrete(DiscreteAction action, const KinematicState& ego,
                                  const RoadMap& map) {
    MappedControl out;
    if (action == DiscreteAction::Stop) {
        out.control = {0.0, 1.0, 0.0};
        return out;
    }
    const Lane* current =
        engine_detail::nearest_lane(map, ego.pose.position(), ego.pose.heading, true);
    if (current == nullptr) {
        current = engine_detail::nearest_lane(map, ego.pose.position(), ego.pose.heading, false);
    }

    const Lane* track = current;
    if (action == DiscreteAction::TurnLeft || action == DiscreteAction::TurnRight) {
        const Lane* side = policy_detail::adjacent_lane(
            map, ego.pose, action == DiscreteAction::TurnLeft, current);
        if (side == nullptr) {
            out.turn_fallback = true;  // degrade to Straight
        } else {
            track = side;
        }
    }

    if (track == nullptr) {
        // No lanes at all: hold heading at modest speed.
        policy_detail::speed_tracking_throttle(ego.speed, 5.0, out.control);
        out.control.steer = 0.0;
        return out;
    }
    const double lookahead = std::max(4.0, ego.speed * 0.8);
    const Vec2 target = policy_detail::lane_lookahead(*track, ego.pose.position(), lookahead);
    out.control.steer = policy_detail::pure_pursuit_steer(ego, target);
    policy_detail::speed_tracking_throttle(ego.speed, track->speed_limit, out.control);
    out.control = out.control.clamped();
    return out;
}

// ---------------------------------------------------------------------------
// Builtin policies
// ---------------------------------------------------------------------------

/// Braking distance the emergency_brake baseline assumes. The policy does
/// not know the true weather, so friction is pinned at 0.7.
inline double assumed_braking_distance(double speed) {
    const double mu_hat = 0.7;
    return speed * speed / (2.0 * mu_hat * kGravity) + 2.0;
}

/// Deterministic baseline policies.
///   passive          - Stop, always
///   constant_speed   - Straight, always
///   emergency_brake  - Stop when anything is inside the assumed braking
///                      distance (detections or non-sentinel lidar), else
///                      Straight
///   waypoint_follower- steer toward the goal region
inline EgoAction builtin_act(const std::string& name, const Observation& obs) {
    if (name == "passive") {
        return EgoAction::of(DiscreteAction::Stop);
    }
    if (name == "constant_speed") {
        return EgoAction::of(DiscreteAction::Straight);
    }
    if (name == "emergency_brake") {
        const double threshold = assumed_braking_distance(obs.ego_speed);
        const WeatherPreset* preset = find_weather(obs.weather_id);
        const double cap =
            std::min(kLidarMaxRange, preset ? preset->visibility_range : kLidarMaxRange);
        for (const auto& d : obs.detections) {
            if (d.distance <= threshold) return EgoAction::of(DiscreteAction::Stop);
        }
        for (const double r : obs.lidar) {
            if (r < cap && r <= threshold) return EgoAction::of(DiscreteAction::Stop);
        }
        return EgoAction::of(DiscreteAction::Straight);
    }
    if (name == "waypoint_follower") {
        if (std::abs(obs.goal_bearing) > 0.35 && obs.goal_distance > 3.0) {
            return EgoAction::of(obs.goal_bearing > 0.0 ? DiscreteAction::TurnLeft
                                                        : DiscreteAction::TurnRight);
        }
        return EgoAction::of(DiscreteAction::Straight);
    }
    return EgoAction::of(DiscreteAction::Stop);
}

}  // namespace cornersim
