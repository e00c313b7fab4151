#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

namespace cornersim {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double s) const { return {x * s, y * s}; }
    double dot(const Vec2& o) const { return x * o.x + y * o.y; }
    double cross(const Vec2& o) const { return x * o.y - y * o.x; }
    double norm() const { return std::hypot(x, y); }
    double norm_sq() const { return x * x + y * y; }

    bool operator==(const Vec2& o) const = default;
};

struct Pose2D {
    double x = 0.0;
    double y = 0.0;
    double heading = 0.0;  // rad, CCW from +x

    Vec2 position() const { return {x, y}; }
    bool operator==(const Pose2D& o) const = default;
};

inline double wrap_angle(double a) {
    while (a > std::numbers::pi) a -= 2.0 * std::numbers::pi;
    while (a < -std::numbers::pi) a += 2.0 * std::numbers::pi;
    return a;
}

/// Transform a world point into the frame of `pose` (x forward, y left).
inline Vec2 to_frame(const Pose2D& pose, const Vec2& p) {
    const double c = std::cos(pose.heading);
    const double s = std::sin(pose.heading);
    const double dx = p.x - pose.x;
    const double dy = p.y - pose.y;
    return {c * dx + s * dy, -s * dx + c * dy};
}

inline Vec2 from_frame(const Pose2D& pose, const Vec2& local) {
    const double c = std::cos(pose.heading);
    const double s = std::sin(pose.heading);
    return {pose.x + c * local.x - s * local.y, pose.y + s * local.x + c * local.y};
}

/// Oriented bounding box: center, half extents along its local axes, heading.
struct Obb {
    Vec2 center;
    double half_length = 0.0;  // along heading
    double half_width = 0.0;   // perpendicular
    double heading = 0.0;

    Vec2 axis_long() const { return {std::cos(heading), std::sin(heading)}; }
    Vec2 axis_lat() const { return {-std::sin(heading), std::cos(heading)}; }

    std::array<Vec2, 4> corners() const {
        const Vec2 u = axis_long() * half_length;
        const Vec2 v = axis_lat() * half_width;
        return {center + u + v, center + u - v, center - u - v, center - u + v};
    }

    bool contains(const Vec2& p) const {
        const Vec2 d = p - center;
        return std::abs(d.dot(axis_long())) <= half_length &&
               std::abs(d.dot(axis_lat())) <= half_width;
    }
};

namespace detail {
// Signed gap between the projections of a and b on `axis` (unit).
// Negative means the projected intervals overlap by |gap|.
inline double projected_gap(const Obb& a, const Obb& b, const Vec2& axis) {
    const double ra = a.half_length * std::abs(axis.dot(a.axis_long())) +
                      a.half_width * std::abs(axis.dot(a.axis_lat()));
    const double rb = b.half_length * std::abs(axis.dot(b.axis_long())) +
                      b.half_width * std::abs(axis.dot(b.axis_lat()));
    const double dist = std::abs((b.center - a.center).dot(axis));
    return dist - (ra + rb);
}
}  // namespace detail

/// Largest projected gap over the four candidate separating axes.
/// Positive: boxes are separated by at least that much along some axis.
/// Zero or negative: boxes touch or overlap.
inline double obb_separation(const Obb& a, const Obb& b) {
    double gap = -std::numeric_limits<double>::infinity();
    const Vec2 axes[4] = {a.axis_long(), a.axis_lat(), b.axis_long(), b.axis_lat()};
    for (const Vec2& axis : axes) {
        gap = std::max(gap, detail::projected_gap(a, b, axis));
    }
    return gap;
}

/// Separating-axis overlap test. Boundary contact (gap exactly zero) counts.
inline bool obb_overlap(const Obb& a, const Obb& b) {
    return obb_separation(a, b) <= 0.0;
}

/// Ray-vs-OBB intersection (slab method in the box frame).
/// Returns the distance to the nearest hit at or beyond the origin,
/// or a negative value when the ray misses.
inline double ray_obb_distance(const Vec2& origin, double angle, const Obb& box) {
    const double c = std::cos(box.heading);
    const double s = std::sin(box.heading);
    const Vec2 rel = {origin.x - box.center.x, origin.y - box.center.y};
    const Vec2 o = {c * rel.x + s * rel.y, -s * rel.x + c * rel.y};
    const double da = angle - box.heading;
    const Vec2 d = {std::cos(da), std::sin(da)};

    double tmin = 0.0;
    double tmax = std::numeric_limits<double>::infinity();
    const double half[2] = {box.half_length, box.half_width};
    const double od[2] = {o.x, o.y};
    const double dd[2] = {d.x, d.y};
    for (int i = 0; i < 2; ++i) {
        if (std::abs(dd[i]) < 1e-12) {
            if (std::abs(od[i]) > half[i]) return -1.0;
            continue;
        }
        double t0 = (-half[i] - od[i]) / dd[i];
        double t1 = (half[i] - od[i]) / dd[i];
        if (t0 > t1) std::swap(t0, t1);
        tmin = std::max(tmin, t0);
        tmax = std::min(tmax, t1);
        if (tmin > tmax) return -1.0;
    }
    return tmin;
}

/// Does the open segment p0->p1 cross the box? Endpoints inside count as crossing.
inline bool segment_intersects_obb(const Vec2& p0, const Vec2& p1, const Obb& box) {
    const Vec2 d = p1 - p0;
    const double len = d.norm();
    if (len < 1e-12) return box.contains(p0);
    const double angle = std::atan2(d.y, d.x);
    const double t = ray_obb_distance(p0, angle, box);
    return t >= 0.0 && t <= len;
}

/// Even-odd point-in-polygon test; points on an edge may land either way.
inline bool point_in_polygon(const Vec2& p, const std::vector<Vec2>& poly) {
    bool inside = false;
    const size_t n = poly.size();
    for (size_t i = 0, j = n - 1; i < n; j = i++) {
        const Vec2& a = poly[i];
        const Vec2& b = poly[j];
        if ((a.y > p.y) != (b.y > p.y)) {
            const double x_cross = (b.x - a.x) * (p.y - a.y) / (b.y - a.y) + a.x;
            if (p.x < x_cross) inside = !inside;
        }
    }
    return inside;
}

struct Rect {
    double min_x = 0.0, min_y = 0.0, max_x = 0.0, max_y = 0.0;

    bool contains(const Vec2& p) const {
        return p.x >= min_x && p.x <= max_x && p.y >= min_y && p.y <= max_y;
    }
    bool valid() const { return max_x > min_x && max_y > min_y; }
    Vec2 center() const { return {0.5 * (min_x + max_x), 0.5 * (min_y + max_y)}; }
    bool operator==(const Rect& o) const = default;
};

/// Distance from p to the closest point of segment ab.
inline double point_segment_distance(const Vec2& p, const Vec2& a, const Vec2& b) {
    const Vec2 ab = b - a;
    const double len_sq = ab.norm_sq();
    if (len_sq < 1e-18) return (p - a).norm();
    const double t = std::clamp((p - a).dot(ab) / len_sq, 0.0, 1.0);
    return (p - (a + ab * t)).norm();
}

}  // namespace cornersim
