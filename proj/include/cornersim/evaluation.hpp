#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "cornersim/types.hpp"
#include "cornersim/world.hpp"

namespace cornersim {

enum class Outcome { Success, CollisionFailure, Stalled, Timeout, PolicyFault };

inline const char* to_token(Outcome o) {
    switch (o) {
        case Outcome::Success: return "success";
        case Outcome::CollisionFailure: return "collision_failure";
        case Outcome::Stalled: return "stalled";
        case Outcome::Timeout: return "timeout";
        case Outcome::PolicyFault: return "policy_fault";
    }
    return "?";
}

inline std::optional<Outcome> outcome_from_token(const std::string& s) {
    if (s == "success") return Outcome::Success;
    if (s == "collision_failure") return Outcome::CollisionFailure;
    if (s == "stalled") return Outcome::Stalled;
    if (s == "timeout") return Outcome::Timeout;
    if (s == "policy_fault") return Outcome::PolicyFault;
    return std::nullopt;
}

enum class TerminalReason { Collision, Goal, Stalled, Timeout };

inline const char* to_token(TerminalReason r) {
    switch (r) {
        case TerminalReason::Collision: return "collision";
        case TerminalReason::Goal: return "goal";
        case TerminalReason::Stalled: return "stalled";
        case TerminalReason::Timeout: return "timeout";
    }
    return "?";
}

struct RunMetrics {
    double route_completion = 0.0;  // [0, 1]
    double min_distance_to_any_actor = std::numeric_limits<double>::infinity();
    long ticks_elapsed = 0;
    std::optional<double> min_time_to_collision;  // s

    bool operator==(const RunMetrics&) const = default;
};

struct RunResult {
    Outcome outcome = Outcome::Timeout;
    double severity_score = 0.0;
    std::vector<CollisionEvent> collisions;
    RunMetrics metrics;
    std::optional<TerminalReason> terminal_reason;

    bool operator==(const RunResult&) const = default;
};

/// Pure severity lookup; classes absent from a custom table were already
/// rejected at validation time.
inline double severity(ActorClass cls, const std::map<ActorClass, double>& table) {
    const auto it = table.find(cls);
    return it == table.end() ? 0.0 : it->second;
}

/// Tracks per-tick termination conditions across a run.
class EvaluationTracker {
public:
    explicit EvaluationTracker(const ScenarioSpec& spec)
        : spec_(spec),
          stall_ticks_needed_(static_cast<long>(
              std::llround(spec.stationary_timeout / kTickSeconds))) {}

    /// Decide Continue vs Terminal for the world state after a step.
    /// Precedence within one tick: collision > goal > stalled > timeout.
    std::optional<TerminalReason> update(const WorldState& world,
                                         const std::vector<WorldEvent>& events) {
        bool collided = false;
        bool goal = false;
        for (const auto& e : events) {
            if (e.kind == WorldEventKind::Collision) collided = true;
            if (e.kind == WorldEventKind::GoalReached) goal = true;
        }
        const bool in_goal = spec_.goal_region.contains(world.ego.pose.position());
        if (std::abs(world.ego.speed) < kStationarySpeed && !in_goal) {
            ++still_ticks_;
        } else {
            still_ticks_ = 0;
        }
        if (collided && spec_.constraints.end_on_collision) return TerminalReason::Collision;
        if (goal || in_goal) return TerminalReason::Goal;
        if (still_ticks_ >= stall_ticks_needed_) return TerminalReason::Stalled;
        if (world.sim_time >= spec_.tn - 1e-9) return TerminalReason::Timeout;
        return std::nullopt;
    }

    long still_ticks() const { return still_ticks_; }

private:
    const ScenarioSpec& spec_;
    long stall_ticks_needed_;
    long still_ticks_ = 0;
};

/// Severity score and outcome. The score is computed in both modes; binary
/// success needs a clean goal run, weighted success tolerates collisions up
/// to the failure threshold.
inline RunResult score_run(const std::vector<WorldEvent>& event_log,
                           const EvaluationConstraints& constraints,
                           std::optional<TerminalReason> terminal, bool policy_fault,
                           RunMetrics metrics) {
    RunResult result;
    result.metrics = metrics;
    result.terminal_reason = terminal;
    for (const auto& e : event_log) {
        if (e.kind == WorldEventKind::Collision && e.collision) {
            result.collisions.push_back(*e.collision);
            result.severity_score +=
                severity(e.collision->actor_true_class, constraints.weight_table);
        }
    }
    if (policy_fault) {
        result.outcome = Outcome::PolicyFault;
        return result;
    }
    const bool goal_reached = terminal == TerminalReason::Goal;
    const bool clean = constraints.mode == EvaluationMode::Binary
                           ? result.collisions.empty()
                           : result.severity_score <= constraints.failure_threshold;
    if (goal_reached && clean) {
        result.outcome = Outcome::Success;
    } else if (terminal == TerminalReason::Collision || !result.collisions.empty()) {
        result.outcome = Outcome::CollisionFailure;
    } else if (terminal == TerminalReason::Stalled) {
        result.outcome = Outcome::Stalled;
    } else {
        result.outcome = Outcome::Timeout;
    }
    return result;
}

// ---------------------------------------------------------------------------
// Route completion helper
// ---------------------------------------------------------------------------

/// Arc-length progress along the ego's initial lane from spawn toward the
/// goal region, clamped to [0, 1].
class RouteProgress {
public:
    RouteProgress(const ScenarioSpec& spec) {
        const Lane* lane = engine_detail::nearest_lane(spec.map, spec.ego.spawn.position(),
                                                       spec.ego.spawn.heading, true);
        if (lane == nullptr) {
            lane = engine_detail::nearest_lane(spec.map, spec.ego.spawn.position(),
                                               spec.ego.spawn.heading, false);
        }
        if (lane != nullptr) {
            line_ = lane->centerline;
            start_s_ = project(spec.ego.spawn.position());
            goal_s_ = project(spec.goal_region.center());
        }
    }

    double completion(const Vec2& ego) const {
        if (line_.size() < 2 || std::abs(goal_s_ - start_s_) < 1e-9) return 0.0;
        const double s = project(ego);
        return std::clamp((s - start_s_) / (goal_s_ - start_s_), 0.0, 1.0);
    }

private:
    double project(const Vec2& p) const {
        double best = std::numeric_limits<double>::infinity();
        double best_s = 0.0;
        double s = 0.0;
        for (size_t i = 0; i + 1 < line_.size(); ++i) {
            const Vec2 a = line_[i];
            const Vec2 ab = line_[i + 1] - a;
            const double len = ab.norm();
            const double len_sq = len * len;
            const double t =
                len_sq > 1e-12 ? std::clamp((p - a).dot(ab) / len_sq, 0.0, 1.0) : 0.0;
            const Vec2 q = a + ab * t;
            const double d = (p - q).norm_sq();
            if (d < best) {
                best = d;
                best_s = s + t * len;
            }
            s += len;
        }
        return best_s;
    }

    std::vector<Vec2> line_;
    double start_s_ = 0.0;
    double goal_s_ = 0.0;
};

}  // namespace cornersim
