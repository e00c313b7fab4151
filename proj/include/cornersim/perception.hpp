#pragma once

// Ego-view sensing: planar lidar, apparent-class detections with hard
// line-of-sight occlusion, and a top-down occupancy raster for dataset
// export. Everything here is a pure function of (world, weather[, stream]);
// detections and rasters expose only apparent classes.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "cornersim/rng.hpp"
#include "cornersim/types.hpp"
#include "cornersim/world.hpp"

namespace cornersim {

inline constexpr int kLidarRayCount = 72;
inline constexpr double kLidarMaxRange = 50.0;  // m
inline constexpr int kRasterSize = 128;
inline constexpr double kRasterCell = 0.5;  // m per cell

struct Detection {
    std::string handle;  // opaque, stable within one run
    ActorClass apparent_class = ActorClass::Car;
    Vec2 relative_position;  // ego frame: x forward, y left
    double relative_heading = 0.0;
    double length = 0.0;
    double width = 0.0;
    double relative_speed = 0.0;  // range rate, positive = receding
    double distance = 0.0;

    bool operator==(const Detection&) const = default;
};

struct Observation {
    long tick = 0;
    Pose2D ego_pose;
    double ego_speed = 0.0;
    double ego_steer = 0.0;
    std::vector<double> lidar;  // kLidarRayCount ranges, CCW from heading
    std::vector<Detection> detections;
    std::string weather_id;
    double goal_bearing = 0.0;  // rad, ego frame
    double goal_distance = 0.0;

    bool operator==(const Observation&) const = default;
};

/// Cell codes of the occupancy raster (one byte per cell).
enum class RasterCell : std::uint8_t {
    Free = 0,
    Road = 1,
    Vehicle = 2,     // car, emergency vehicle (by apparent class)
    Vulnerable = 3,  // pedestrians, cyclist, animal
    ObstacleProp = 4,
    Signage = 5,
    Unknown = 6,  // beyond visibility
};

inline RasterCell raster_group(ActorClass apparent) {
    switch (apparent) {
        case ActorClass::Car:
        case ActorClass::EmergencyVehicle:
            return RasterCell::Vehicle;
        case ActorClass::Pedestrian:
        case ActorClass::ChildPedestrian:
        case ActorClass::Cyclist:
        case ActorClass::Animal:
            return RasterCell::Vulnerable;
        case ActorClass::Billboard:
        case ActorClass::StopSign:
        case ActorClass::YieldSign:
        case ActorClass::TrafficLight:
        case ActorClass::ParkingSign:
        case ActorClass::TurnSign:
            return RasterCell::Signage;
        default:
            return RasterCell::ObstacleProp;
    }
}

struct OccupancyRaster {
    std::vector<std::uint8_t> cells;  // row-major, kRasterSize^2

    std::uint8_t at(int row, int col) const {
        return cells[static_cast<size_t>(row) * kRasterSize + static_cast<size_t>(col)];
    }
    bool operator==(const OccupancyRaster&) const = default;
};

namespace perception_detail {

struct VisibleActor {
    const ActorRuntime* runtime;
    const KinematicState* state;
    Obb box;
    double distance;
};

/// Actors that take part in sensing at all: active and on the ground plane.
inline std::vector<VisibleActor> sensable_actors(const WorldState& world) {
    std::vector<VisibleActor> out;
    const Vec2 ego = world.ego.pose.position();
    for (const auto& rt : world.actors) {
        const auto& st = world.actor_states.at(rt.spec.id);
        if (!st.active || !occupies_ground_plane(st)) continue;
        VisibleActor v;
        v.runtime = &rt;
        v.state = &st;
        v.box = actor_obb(rt.spec, st);
        v.distance = (st.pose.position() - ego).norm();
        out.push_back(v);
    }
    return out;
}

/// Hard occlusion: the ego-center to actor-center segment must not cross any
/// other sensable actor's box.
inline bool line_of_sight(const std::vector<VisibleActor>& actors, const Vec2& ego,
                          size_t target) {
    const Vec2 goal = actors[target].state->pose.position();
    for (size_t i = 0; i < actors.size(); ++i) {
        if (i == target) continue;
        if (segment_intersects_obb(ego, goal, actors[i].box)) return false;
    }
    return true;
}

}  // namespace perception_detail

/// Lidar scan. Ray i leaves at ego heading + i * 2*pi/72 (counterclockwise).
/// Hits are capped at min(50 m, visibility); rays that reach the cap return
/// it exactly, with no noise; real returns carry Gaussian noise from the
/// named sensor stream, clamped positive.
inline std::vector<double> sense_lidar(const WorldState& world, const WeatherPreset& weather,
                                       RandomStream& stream) {
    const double cap = std::min(kLidarMaxRange, weather.visibility_range);
    const auto actors = perception_detail::sensable_actors(world);
    const Vec2 origin = world.ego.pose.position();
    std::vector<double> ranges(kLidarRayCount, cap);
    for (int i = 0; i < kLidarRayCount; ++i) {
        const double angle =
            world.ego.pose.heading + 2.0 * std::numbers::pi * static_cast<double>(i) /
                                         static_cast<double>(kLidarRayCount);
        double nearest = cap;
        for (const auto& a : actors) {
            const double d = ray_obb_distance(origin, angle, a.box);
            if (d >= 0.0 && d < nearest) nearest = d;
        }
        double value = nearest;
        if (weather.lidar_noise_sigma > 0.0) {
            const double noise = stream.next_normal() * weather.lidar_noise_sigma;
            if (value < cap) {
                value = std::clamp(value + noise, 1e-3, cap);
            }
            // Sentinel rays stay exact; the draw above keeps the stream
            // position a pure function of ray index.
        }
        ranges[i] = value;
    }
    return ranges;
}

/// Detected actors: within visibility, line-of-sight clear, active. Classes
/// reported are apparent; ordering is distance ascending, then handle.
inline std::vector<Detection> detect_entities(const WorldState& world,
                                              const WeatherPreset& weather) {
    const auto actors = perception_detail::sensable_actors(world);
    const Vec2 ego = world.ego.pose.position();
    std::vector<Detection> out;
    for (size_t i = 0; i < actors.size(); ++i) {
        const auto& a = actors[i];
        if (a.distance > weather.visibility_range) continue;
        if (!perception_detail::line_of_sight(actors, ego, i)) continue;
        Detection d;
        d.handle = a.runtime->detection_handle;
        d.apparent_class = a.runtime->spec.apparent_class;
        d.relative_position = to_frame(world.ego.pose, a.state->pose.position());
        d.relative_heading = wrap_angle(a.state->pose.heading - world.ego.pose.heading);
        d.length = a.runtime->spec.length;
        d.width = a.runtime->spec.width;
        d.distance = a.distance;
        // Range rate: positive when the pair separates.
        const Vec2 rel = a.state->pose.position() - ego;
        const double eh = world.ego.pose.heading;
        const double ah = a.state->pose.heading;
        const Vec2 ego_v{world.ego.speed * std::cos(eh), world.ego.speed * std::sin(eh)};
        const Vec2 actor_v{a.state->speed * std::cos(ah), a.state->speed * std::sin(ah)};
        const double norm = rel.norm();
        d.relative_speed = norm > 1e-9 ? (actor_v - ego_v).dot(rel) * (1.0 / norm) : 0.0;
        out.push_back(std::move(d));
    }
    std::sort(out.begin(), out.end(), [](const Detection& a, const Detection& b) {
        if (a.distance != b.distance) return a.distance < b.distance;
        return a.handle < b.handle;
    });
    return out;
}

/// Ego-centered, ego-aligned top-down grid. Cell (row, col) covers the ego
/// frame point x = (col - 64) * 0.5, y = (row - 64) * 0.5; the ego sits at
/// the grid center. Cells beyond visibility are Unknown; occluded actors are
/// not rasterized, consistent with detect_entities.
inline OccupancyRaster render_occupancy(const WorldState& world, const WeatherPreset& weather,
                                        const RoadMap& map) {
    OccupancyRaster raster;
    raster.cells.assign(static_cast<size_t>(kRasterSize) * kRasterSize,
                        static_cast<std::uint8_t>(RasterCell::Free));
    const double vis_sq = weather.visibility_range * weather.visibility_range;
    const int half = kRasterSize / 2;
    for (int row = 0; row < kRasterSize; ++row) {
        for (int col = 0; col < kRasterSize; ++col) {
            const Vec2 local{(col - half) * kRasterCell, (row - half) * kRasterCell};
            std::uint8_t& cell = raster.cells[static_cast<size_t>(row) * kRasterSize + col];
            if (local.norm_sq() > vis_sq) {
                cell = static_cast<std::uint8_t>(RasterCell::Unknown);
                continue;
            }
            const Vec2 world_p = from_frame(world.ego.pose, local);
            if (map.on_drivable(world_p)) {
                cell = static_cast<std::uint8_t>(RasterCell::Road);
            }
        }
    }

    const auto actors = perception_detail::sensable_actors(world);
    const Vec2 ego = world.ego.pose.position();
    for (size_t i = 0; i < actors.size(); ++i) {
        const auto& a = actors[i];
        if (a.distance > weather.visibility_range) continue;
        if (!perception_detail::line_of_sight(actors, ego, i)) continue;
        const std::uint8_t code = static_cast<std::uint8_t>(
            raster_group(a.runtime->spec.apparent_class));
        // Only sweep the cells under the actor's bounding circle.
        const Vec2 center_local = to_frame(world.ego.pose, a.state->pose.position());
        const double radius = std::hypot(a.runtime->spec.length, a.runtime->spec.width) * 0.5;
        const int r0 = std::max(0, static_cast<int>((center_local.y - radius) / kRasterCell) + half);
        const int r1 = std::min(kRasterSize - 1,
                                static_cast<int>((center_local.y + radius) / kRasterCell) + half);
        const int c0 = std::max(0, static_cast<int>((center_local.x - radius) / kRasterCell) + half);
        const int c1 = std::min(kRasterSize - 1,
                                static_cast<int>((center_local.x + radius) / kRasterCell) + half);
        for (int row = r0; row <= r1; ++row) {
            for (int col = c0; col <= c1; ++col) {
                const Vec2 local{(col - half) * kRasterCell, (row - half) * kRasterCell};
                if (local.norm_sq() > vis_sq) continue;
                const Vec2 world_p = from_frame(world.ego.pose, local);
                if (a.box.contains(world_p)) {
                    raster.cells[static_cast<size_t>(row) * kRasterSize + col] = code;
                }
            }
        }
    }
    return raster;
}

/// Full per-tick observation as handed to policies. Contains apparent
/// classes only; true classes never cross this boundary.
inline Observation make_observation(const WorldState& world, const ScenarioSpec& spec,
                                    const WeatherPreset& weather, RandomStream& sensor_stream) {
    Observation obs;
    obs.tick = world.tick;
    obs.ego_pose = world.ego.pose;
    obs.ego_speed = world.ego.speed;
    obs.ego_steer = world.ego.steer_angle;
    obs.lidar = sense_lidar(world, weather, sensor_stream);
    obs.detections = detect_entities(world, weather);
    obs.weather_id = weather.id;
    const Vec2 goal = spec.goal_region.center();
    const Vec2 local = to_frame(world.ego.pose, goal);
    obs.goal_bearing = std::atan2(local.y, local.x);
    obs.goal_distance = local.norm();
    return obs;
}

}  // namespace cornersim
