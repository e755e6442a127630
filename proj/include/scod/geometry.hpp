#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <cmath>
#include <optional>
#include <vector>

namespace scod {

using Vec2 = Eigen::Vector2d;
using Box2 = Eigen::AlignedBox2d;

/// Convex polygon, counter-clockwise vertex order.
using Polygon = std::vector<Vec2>;

inline constexpr double kPi = 3.14159265358979323846;

/// Wraps an angle into [-pi, pi).
double normalize_angle(double angle);

struct Pose {
  Vec2 position = Vec2::Zero();
  double heading = 0.0;

  friend bool operator==(const Pose& a, const Pose& b) {
    return a.position == b.position && a.heading == b.heading;
  }
};

inline Vec2 direction(double angle) { return {std::cos(angle), std::sin(angle)}; }

inline Vec2 rotate(const Vec2& v, double angle) {
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  return {c * v.x() - s * v.y(), s * v.x() + c * v.y()};
}

/// 2D cross product (z component).
inline double cross(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

double signed_area(const Polygon& poly);

/// True when the polygon is strictly convex with nonzero area (either winding).
bool is_convex(const Polygon& poly);

/// Validates convexity and returns the polygon in CCW order.
/// Throws Error(InvalidArgument) for fewer than 3 vertices, zero area or a reflex corner.
Polygon make_convex(Polygon poly);

Polygon transform(const Polygon& local, const Pose& pose);
Polygon translate(const Polygon& poly, const Vec2& offset);
Vec2 centroid(const Polygon& poly);
Box2 bounding_box(const Polygon& poly);

/// Point-in-convex-polygon (boundary counts as inside).
bool contains(const Polygon& poly, const Vec2& p);

Vec2 closest_point_on_segment(const Vec2& a, const Vec2& b, const Vec2& p);

struct Contact {
  Vec2 normal;   ///< unit vector pointing out of the polygon, toward the other body
  double depth;  ///< penetration depth, > 0
};

/// Disc/convex-polygon overlap. Returns a contact iff the disc overlaps the
/// polygon interior by a positive depth. A center lying exactly on an edge
/// reports depth == radius along that edge's outward normal.
std::optional<Contact> collide_disc_polygon(const Vec2& center, double radius, const Polygon& poly);

/// Separating-axis test between two convex polygons. The returned normal
/// points from `a` toward `b`; translating `b` by normal * depth separates them.
std::optional<Contact> collide_polygons(const Polygon& a, const Polygon& b);

/// Smallest t > 0 at which origin + t * dir enters the polygon boundary.
std::optional<double> ray_polygon_entry(const Vec2& origin, const Vec2& dir, const Polygon& poly);

}  // namespace scod
