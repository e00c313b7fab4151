#pragma once

// Shared fixtures: a minimal straight-road scenario and paths wired in by
// the build (source tree, CLI binary).

#include <filesystem>
#include <string>

#include "cornersim/types.hpp"

namespace testutil {

inline std::filesystem::path source_dir() { return CORNERSIM_SOURCE_DIR; }
inline std::filesystem::path catalog_dir() { return source_dir() / "catalog"; }
inline std::string cli_binary() { return CORNERSIM_BINARY; }

/// 200 m straight two-lane road, ego eastbound at 8.33 m/s, goal at x=150.
inline cornersim::ScenarioSpec straight_road_scenario() {
    using namespace cornersim;
    ScenarioSpec spec;
    spec.id = "test-straight";
    spec.name = "Test straight road";
    spec.category = CornerCaseCategory::BehaviorAnomaly;
    spec.description = "fixture";
    spec.map.drivable = {{{-25.0, -5.25}, {225.0, -5.25}, {225.0, 5.25}, {-25.0, 5.25}}};
    Lane east;
    east.id = "east";
    east.centerline = {{-20.0, -1.75}, {220.0, -1.75}};
    east.speed_limit = 8.33;
    Lane west;
    west.id = "west";
    west.centerline = {{220.0, 1.75}, {-20.0, 1.75}};
    west.speed_limit = 8.33;
    spec.map.lanes = {east, west};
    for (int i = 0; i < 6; ++i) {
        SpawnAnchor a;
        a.name = "east-" + std::to_string(i);
        a.pose = {25.0 + 30.0 * i, -1.75, 0.0};
        spec.map.anchors.push_back(a);
        SpawnAnchor b;
        b.name = "west-" + std::to_string(i);
        b.pose = {30.0 + 30.0 * i, 1.75, 3.14159265358979};
        spec.map.anchors.push_back(b);
    }
    spec.ego.spawn = {0.0, -1.75, 0.0};
    spec.ego.initial_speed = 8.33;
    spec.goal_region = {145.0, -5.25, 155.0, 0.0};
    spec.weather = "clear-noon";
    spec.traffic_density = cornersim::TrafficDensity::None;
    spec.t0 = 0.0;
    spec.tn = 60.0;
    spec.stationary_timeout = 10.0;
    spec.default_seed = 11;
    return spec;
}

/// The straight road with one static obstacle parked in the ego lane.
inline cornersim::ScenarioSpec blocked_road_scenario(double obstacle_x = 40.0) {
    using namespace cornersim;
    ScenarioSpec spec = straight_road_scenario();
    spec.id = "test-blocked";
    ActorSpec wall;
    wall.id = "wall";
    wall.true_class = ActorClass::StaticObstacle;
    wall.apparent_class = ActorClass::StaticObstacle;
    wall.spawn = {obstacle_x, -1.75, 0.0};
    wall.length = 1.0;
    wall.width = 3.0;
    wall.behavior.kind = BehaviorKind::Static;
    wall.initially_active = true;
    spec.actors.push_back(wall);
    return spec;
}

}  // namespace testutil
