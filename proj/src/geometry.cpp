#include "scod/geometry.hpp"

#include "scod/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace scod {

double normalize_angle(double angle) {
  constexpr double two_pi = 2.0 * kPi;
  double a = angle - two_pi * std::floor((angle + kPi) / two_pi);
  if (a >= kPi) a -= two_pi;
  if (a < -kPi) a += two_pi;
  return a;
}

double signed_area(const Polygon& poly) {
  double area = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    area += cross(poly[i], poly[(i + 1) % poly.size()]);
  }
  return 0.5 * area;
}

bool is_convex(const Polygon& poly) {
  if (poly.size() < 3) return false;
  const double area = signed_area(poly);
  if (std::abs(area) < 1e-12) return false;
  const double sign = area > 0 ? 1.0 : -1.0;
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& a = poly[i];
    const Vec2& b = poly[(i + 1) % n];
    const Vec2& c = poly[(i + 2) % n];
    if (sign * cross(b - a, c - b) <= 0.0) return false;
  }
  return true;
}

Polygon make_convex(Polygon poly) {
  if (poly.size() < 3) throw Error(ErrorKind::InvalidArgument, "polygon needs at least 3 vertices");
  if (!is_convex(poly)) throw Error(ErrorKind::InvalidArgument, "polygon is not strictly convex");
  if (signed_area(poly) < 0) std::reverse(poly.begin(), poly.end());
  return poly;
}

Polygon transform(const Polygon& local, const Pose& pose) {
  Polygon out;
  out.reserve(local.size());
  const double c = std::cos(pose.heading);
  const double s = std::sin(pose.heading);
  for (const Vec2& v : local) {
    out.emplace_back(pose.position.x() + c * v.x() - s * v.y(), pose.position.y() + s * v.x() + c * v.y());
  }
  return out;
}

Polygon translate(const Polygon& poly, const Vec2& offset) {
  Polygon out;
  out.reserve(poly.size());
  for (const Vec2& v : poly) out.push_back(v + offset);
  return out;
}

Vec2 centroid(const Polygon& poly) {
  const double area = signed_area(poly);
  Vec2 c = Vec2::Zero();
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Vec2& a = poly[i];
    const Vec2& b = poly[(i + 1) % poly.size()];
    c += (a + b) * cross(a, b);
  }
  return c / (6.0 * area);
}

Box2 bounding_box(const Polygon& poly) {
  Box2 box;
  for (const Vec2& v : poly) box.extend(v);
  return box;
}

bool contains(const Polygon& poly, const Vec2& p) {
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (cross(poly[(i + 1) % n] - poly[i], p - poly[i]) < 0.0) return false;
  }
  return true;
}

Vec2 closest_point_on_segment(const Vec2& a, const Vec2& b, const Vec2& p) {
  const Vec2 ab = b - a;
  const double len2 = ab.squaredNorm();
  if (len2 == 0.0) return a;
  const double t = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
  return a + t * ab;
}

namespace {

Vec2 outward_normal(const Vec2& a, const Vec2& b) {
  const Vec2 e = (b - a).normalized();
  return {e.y(), -e.x()};
}

}  // namespace

std::optional<Contact> collide_disc_polygon(const Vec2& center, double radius, const Polygon& poly) {
  const std::size_t n = poly.size();

  // Signed distance to each edge line; all <= 0 means the center is inside.
  double max_sd = -std::numeric_limits<double>::infinity();
  std::size_t max_edge = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 nrm = outward_normal(poly[i], poly[(i + 1) % n]);
    const double sd = nrm.dot(center - poly[i]);
    if (sd > max_sd) {
      max_sd = sd;
      max_edge = i;
    }
  }

  if (max_sd <= 0.0) {
    return Contact{outward_normal(poly[max_edge], poly[(max_edge + 1) % n]), radius - max_sd};
  }

  double best = std::numeric_limits<double>::infinity();
  Vec2 closest = poly[0];
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 q = closest_point_on_segment(poly[i], poly[(i + 1) % n], center);
    const double d = (center - q).squaredNorm();
    if (d < best) {
      best = d;
      closest = q;
    }
  }
  const double dist = std::sqrt(best);
  if (dist >= radius) return std::nullopt;
  return Contact{(center - closest) / dist, radius - dist};
}

namespace {

void project(const Polygon& poly, const Vec2& axis, double& lo, double& hi) {
  lo = std::numeric_limits<double>::infinity();
  hi = -lo;
  for (const Vec2& v : poly) {
    const double p = axis.dot(v);
    lo = std::min(lo, p);
    hi = std::max(hi, p);
  }
}

}  // namespace

std::optional<Contact> collide_polygons(const Polygon& a, const Polygon& b) {
  double best_depth = std::numeric_limits<double>::infinity();
  Vec2 best_axis = Vec2::UnitX();
  for (const Polygon* poly : {&a, &b}) {
    const std::size_t n = poly->size();
    for (std::size_t i = 0; i < n; ++i) {
      const Vec2 axis = outward_normal((*poly)[i], (*poly)[(i + 1) % n]);
      double alo, ahi, blo, bhi;
      project(a, axis, alo, ahi);
      project(b, axis, blo, bhi);
      const double overlap = std::min(ahi, bhi) - std::max(alo, blo);
      if (overlap <= 0.0) return std::nullopt;
      if (overlap < best_depth) {
        best_depth = overlap;
        best_axis = axis;
      }
    }
  }
  if (best_axis.dot(centroid(b) - centroid(a)) < 0.0) best_axis = -best_axis;
  return Contact{best_axis, best_depth};
}

std::optional<double> ray_polygon_entry(const Vec2& origin, const Vec2& dir, const Polygon& poly) {
  std::optional<double> best;
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& a = poly[i];
    const Vec2 e = poly[(i + 1) % n] - a;
    const double denom = cross(dir, e);
    if (denom == 0.0) continue;
    const Vec2 ao = a - origin;
    const double t = cross(ao, e) / denom;
    const double u = cross(ao, dir) / denom;
    if (t > 1e-12 && u >= 0.0 && u <= 1.0) {
      if (!best || t < *best) best = t;
    }
  }
  return best;
}

}  // namespace scod
