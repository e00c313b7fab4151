#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "cornersim/geometry.hpp"

namespace cornersim {

// ---------------------------------------------------------------------------
// Closed enumerations
// ---------------------------------------------------------------------------

enum class CornerCaseCategory { StateAnomaly, BehaviorAnomaly, EvidenceBasedAnomaly };

enum class ActorClass {
    Car,
    EmergencyVehicle,
    Cyclist,
    Pedestrian,
    ChildPedestrian,
    Animal,
    Ball,
    Luggage,
    ShoppingCart,
    Barrel,
    CarDoor,
    Billboard,
    StopSign,
    YieldSign,
    TrafficLight,
    ParkingSign,
    TurnSign,
    StaticObstacle,
};

inline constexpr std::array<ActorClass, 18> kAllActorClasses = {
    ActorClass::Car,          ActorClass::EmergencyVehicle, ActorClass::Cyclist,
    ActorClass::Pedestrian,   ActorClass::ChildPedestrian,  ActorClass::Animal,
    ActorClass::Ball,         ActorClass::Luggage,          ActorClass::ShoppingCart,
    ActorClass::Barrel,       ActorClass::CarDoor,          ActorClass::Billboard,
    ActorClass::StopSign,     ActorClass::YieldSign,        ActorClass::TrafficLight,
    ActorClass::ParkingSign,  ActorClass::TurnSign,         ActorClass::StaticObstacle,
};

enum class TrafficDensity { None, Low, Medium, High };

inline int background_vehicle_count(TrafficDensity d) {
    switch (d) {
        case TrafficDensity::None: return 0;
        case TrafficDensity::Low: return 2;
        case TrafficDensity::Medium: return 5;
        case TrafficDensity::High: return 10;
    }
    return 0;
}

// ---------------------------------------------------------------------------
// Enum <-> token tables (shared by the file format, the wire protocol and
// the CLI; tokens are part of the external schema, do not rename casually)
// ---------------------------------------------------------------------------

inline const char* to_token(CornerCaseCategory c) {
    switch (c) {
        case CornerCaseCategory::StateAnomaly: return "state_anomaly";
        case CornerCaseCategory::BehaviorAnomaly: return "behavior_anomaly";
        case CornerCaseCategory::EvidenceBasedAnomaly: return "evidence_based_anomaly";
    }
    return "?";
}

inline std::optional<CornerCaseCategory> category_from_token(const std::string& s) {
    if (s == "state_anomaly" || s == "state") return CornerCaseCategory::StateAnomaly;
    if (s == "behavior_anomaly" || s == "behavior") return CornerCaseCategory::BehaviorAnomaly;
    if (s == "evidence_based_anomaly" || s == "evidence")
        return CornerCaseCategory::EvidenceBasedAnomaly;
    return std::nullopt;
}

inline const char* to_token(ActorClass c) {
    switch (c) {
        case ActorClass::Car: return "car";
        case ActorClass::EmergencyVehicle: return "emergency_vehicle";
        case ActorClass::Cyclist: return "cyclist";
        case ActorClass::Pedestrian: return "pedestrian";
        case ActorClass::ChildPedestrian: return "child_pedestrian";
        case ActorClass::Animal: return "animal";
        case ActorClass::Ball: return "ball";
        case ActorClass::Luggage: return "luggage";
        case ActorClass::ShoppingCart: return "shopping_cart";
        case ActorClass::Barrel: return "barrel";
        case ActorClass::CarDoor: return "car_door";
        case ActorClass::Billboard: return "billboard";
        case ActorClass::StopSign: return "stop_sign";
        case ActorClass::YieldSign: return "yield_sign";
        case ActorClass::TrafficLight: return "traffic_light";
        case ActorClass::ParkingSign: return "parking_sign";
        case ActorClass::TurnSign: return "turn_sign";
        case ActorClass::StaticObstacle: return "static_obstacle";
    }
    return "?";
}

inline std::optional<ActorClass> actor_class_from_token(const std::string& s) {
    for (ActorClass c : kAllActorClasses) {
        if (s == to_token(c)) return c;
    }
    return std::nullopt;
}

inline const char* to_token(TrafficDensity d) {
    switch (d) {
        case TrafficDensity::None: return "none";
        case TrafficDensity::Low: return "low";
        case TrafficDensity::Medium: return "medium";
        case TrafficDensity::High: return "high";
    }
    return "?";
}

inline std::optional<TrafficDensity> density_from_token(const std::string& s) {
    if (s == "none") return TrafficDensity::None;
    if (s == "low") return TrafficDensity::Low;
    if (s == "medium") return TrafficDensity::Medium;
    if (s == "high") return TrafficDensity::High;
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Weather
// ---------------------------------------------------------------------------

struct WeatherPreset {
    std::string id;
    double friction_mu = 0.9;      // dimensionless, (0, 1]
    double visibility_range = 120; // m
    double lidar_noise_sigma = 0;  // m
};

/// The nine presets. Friction, visibility and sensor noise per preset are
/// engine defaults; only the count of nine is fixed by the catalog contract.
inline const std::vector<WeatherPreset>& weather_presets() {
    static const std::vector<WeatherPreset> presets = {
        {"clear-noon", 0.90, 120.0, 0.02},
        {"cloudy-noon", 0.85, 100.0, 0.02},
        {"wet-noon", 0.60, 80.0, 0.04},
        {"hard-rain-noon", 0.45, 40.0, 0.08},
        {"clear-sunset", 0.90, 90.0, 0.03},
        {"wet-sunset", 0.60, 60.0, 0.05},
        {"hard-rain-sunset", 0.45, 35.0, 0.09},
        {"clear-night", 0.85, 50.0, 0.04},
        {"fog-morning", 0.70, 20.0, 0.10},
    };
    return presets;
}

inline const WeatherPreset* find_weather(const std::string& id) {
    for (const auto& p : weather_presets()) {
        if (p.id == id) return &p;
    }
    return nullptr;
}

// ---------------------------------------------------------------------------
// Behavior scripts
// ---------------------------------------------------------------------------

enum class BehaviorKind { Static, WaypointFollow, Ballistic, Rolling, ScriptedDoorSwing, Pursuit };

inline const char* to_token(BehaviorKind k) {
    switch (k) {
        case BehaviorKind::Static: return "static";
        case BehaviorKind::WaypointFollow: return "waypoint_follow";
        case BehaviorKind::Ballistic: return "ballistic";
        case BehaviorKind::Rolling: return "rolling";
        case BehaviorKind::ScriptedDoorSwing: return "scripted_door_swing";
        case BehaviorKind::Pursuit: return "pursuit";
    }
    return "?";
}

inline std::optional<BehaviorKind> behavior_kind_from_token(const std::string& s) {
    if (s == "static") return BehaviorKind::Static;
    if (s == "waypoint_follow") return BehaviorKind::WaypointFollow;
    if (s == "ballistic") return BehaviorKind::Ballistic;
    if (s == "rolling") return BehaviorKind::Rolling;
    if (s == "scripted_door_swing") return BehaviorKind::ScriptedDoorSwing;
    if (s == "pursuit") return BehaviorKind::Pursuit;
    return std::nullopt;
}

struct Waypoint {
    double x = 0.0;
    double y = 0.0;
    double speed = 0.0;  // target speed from this waypoint on, m/s
    bool operator==(const Waypoint&) const = default;
};

/// Kind-specific parameters live in `params` (scalar map). Recognized keys:
///   ballistic:  height (release height m), vz (vertical speed m/s),
///               vx, vy (planar velocity m/s)
///   rolling:    vx, vy (initial velocity), accel (signed, along motion),
///               max_speed
///   scripted_door_swing: hinge_x, hinge_y (world), rate (rad/s), max_angle
///   pursuit:    speed (chase speed m/s), turn_rate (rad/s)
struct BehaviorScript {
    BehaviorKind kind = BehaviorKind::Static;
    std::vector<Waypoint> waypoints;
    std::map<std::string, double> params;

    double param(const std::string& key, double fallback) const {
        auto it = params.find(key);
        return it == params.end() ? fallback : it->second;
    }
    bool operator==(const BehaviorScript&) const = default;
};

// ---------------------------------------------------------------------------
// Actors
// ---------------------------------------------------------------------------

struct ActorSpec {
    std::string id;
    ActorClass true_class = ActorClass::Car;
    ActorClass apparent_class = ActorClass::Car;  // what perception reports
    Pose2D spawn;
    double length = 1.0;
    double width = 1.0;
    BehaviorScript behavior;
    bool initially_active = true;

    bool operator==(const ActorSpec&) const = default;
};

/// true_class values allowed to present a different apparent_class.
inline bool may_masquerade(ActorClass c) {
    switch (c) {
        case ActorClass::Billboard:
        case ActorClass::StopSign:
        case ActorClass::YieldSign:
        case ActorClass::TrafficLight:
        case ActorClass::ParkingSign:
        case ActorClass::TurnSign:
        case ActorClass::Ball:
        case ActorClass::Luggage:
        case ActorClass::ShoppingCart:
        case ActorClass::Barrel:
        case ActorClass::CarDoor:
        case ActorClass::StaticObstacle:
        case ActorClass::Pedestrian:
            return true;
        default:
            return false;
    }
}

// ---------------------------------------------------------------------------
// Triggers
// ---------------------------------------------------------------------------

struct TimeAtLeast {
    double t = 0.0;  // sim seconds
    bool operator==(const TimeAtLeast&) const = default;
};
struct EgoWithin {
    Vec2 point;
    double radius = 0.0;
    bool operator==(const EgoWithin&) const = default;
};
struct ActorWithin {
    std::string actor_id;
    Vec2 point;
    double radius = 0.0;
    bool operator==(const ActorWithin&) const = default;
};
struct EgoSpeedAbove {
    double speed = 0.0;
    bool operator==(const EgoSpeedAbove&) const = default;
};

using TriggerCondition = std::variant<TimeAtLeast, EgoWithin, ActorWithin, EgoSpeedAbove>;

struct ActivateActor {
    std::string actor_id;
    bool operator==(const ActivateActor&) const = default;
};
struct SetBehavior {
    std::string actor_id;
    BehaviorScript behavior;
    bool operator==(const SetBehavior&) const = default;
};
struct ApplyImpulse {
    std::string actor_id;
    Vec2 velocity;
    bool operator==(const ApplyImpulse&) const = default;
};
struct Despawn {
    std::string actor_id;
    bool operator==(const Despawn&) const = default;
};

using TriggerAction = std::variant<ActivateActor, SetBehavior, ApplyImpulse, Despawn>;

inline const std::string& action_actor_id(const TriggerAction& a) {
    return std::visit([](const auto& act) -> const std::string& { return act.actor_id; }, a);
}

struct TriggerSpec {
    std::string id;
    std::vector<TriggerCondition> conditions;  // conjunction, 1..3
    TriggerAction action;
    bool one_shot = true;  // always true in v1

    bool operator==(const TriggerSpec&) const = default;
};

// ---------------------------------------------------------------------------
// Evaluation constraints
// ---------------------------------------------------------------------------

enum class EvaluationMode { Binary, Weighted };

inline const char* to_token(EvaluationMode m) {
    return m == EvaluationMode::Binary ? "binary" : "weighted";
}

inline std::optional<EvaluationMode> evaluation_mode_from_token(const std::string& s) {
    if (s == "binary") return EvaluationMode::Binary;
    if (s == "weighted") return EvaluationMode::Weighted;
    return std::nullopt;
}

/// Collision severity per collided class. Humans outrank vehicles, vehicles
/// outrank signage; the numbers themselves are engine defaults.
inline const std::map<ActorClass, double>& default_weight_table() {
    static const std::map<ActorClass, double> table = {
        {ActorClass::ChildPedestrian, 10.0}, {ActorClass::Pedestrian, 10.0},
        {ActorClass::Cyclist, 8.0},          {ActorClass::Animal, 6.0},
        {ActorClass::Car, 5.0},              {ActorClass::EmergencyVehicle, 5.0},
        {ActorClass::CarDoor, 3.0},          {ActorClass::Ball, 2.0},
        {ActorClass::Luggage, 2.0},          {ActorClass::ShoppingCart, 2.0},
        {ActorClass::Barrel, 2.0},           {ActorClass::StaticObstacle, 2.0},
        {ActorClass::Billboard, 0.5},        {ActorClass::StopSign, 0.5},
        {ActorClass::YieldSign, 0.5},        {ActorClass::TrafficLight, 0.5},
        {ActorClass::ParkingSign, 0.5},      {ActorClass::TurnSign, 0.5},
    };
    return table;
}

struct EvaluationConstraints {
    EvaluationMode mode = EvaluationMode::Binary;
    std::map<ActorClass, double> weight_table = default_weight_table();
    double failure_threshold = 0.0;  // weighted mode
    bool end_on_collision = true;

    bool operator==(const EvaluationConstraints&) const = default;
};

// ---------------------------------------------------------------------------
// Road map
// ---------------------------------------------------------------------------

struct Lane {
    std::string id;
    std::vector<Vec2> centerline;  // ordered along the direction of travel
    double speed_limit = 8.33;     // m/s
    bool one_way = false;

    bool operator==(const Lane&) const = default;
};

struct SpawnAnchor {
    std::string name;
    Pose2D pose;
    bool operator==(const SpawnAnchor&) const = default;
};

struct RoadMap {
    std::vector<std::vector<Vec2>> drivable;  // polygons
    std::vector<Lane> lanes;
    std::vector<SpawnAnchor> anchors;

    bool on_drivable(const Vec2& p) const {
        for (const auto& poly : drivable) {
            if (point_in_polygon(p, poly)) return true;
        }
        return false;
    }

    bool operator==(const RoadMap&) const = default;
};

// ---------------------------------------------------------------------------
// Scenario
// ---------------------------------------------------------------------------

struct EgoSetup {
    Pose2D spawn;
    double initial_speed = 0.0;  // m/s
    bool operator==(const EgoSetup&) const = default;
};

struct ScenarioSpec {
    std::string id;  // unique, kebab-case
    std::string name;
    CornerCaseCategory category = CornerCaseCategory::StateAnomaly;
    bool variant = false;  // catalog entry not named in the source taxonomy
    std::string description;
    RoadMap map;
    EgoSetup ego;
    Rect goal_region;
    std::vector<ActorSpec> actors;
    std::vector<TriggerSpec> triggers;
    std::string weather = "clear-noon";
    TrafficDensity traffic_density = TrafficDensity::None;
    double t0 = 0.0;
    double tn = 60.0;
    double stationary_timeout = 10.0;
    EvaluationConstraints constraints;
    std::uint64_t default_seed = 1;

    const ActorSpec* find_actor(const std::string& actor_id) const {
        for (const auto& a : actors) {
            if (a.id == actor_id) return &a;
        }
        return nullptr;
    }

    bool operator==(const ScenarioSpec&) const = default;
};

// Engine-wide constants.
inline constexpr double kTickSeconds = 0.05;   // 20 Hz fixed step
inline constexpr double kGravity = 9.81;       // m/s^2
inline constexpr double kWheelbase = 2.7;      // m
inline constexpr double kMaxSteer = 0.6;       // rad
inline constexpr double kMaxSpeed = 30.0;      // m/s
inline constexpr double kEgoLength = 4.6;      // m
inline constexpr double kEgoWidth = 1.8;       // m
inline constexpr double kEgoRoofHeight = 1.6;  // m; airborne props above this pass over
inline constexpr double kStationarySpeed = 0.1;  // m/s, stillness threshold

}  // namespace cornersim
