#include "scod/render.hpp"

#include "scod/error.hpp"

#include <algorithm>
#include <cmath>

namespace scod {

void CameraParams::validate() const {
  if (!(fov_deg > 10.0 && fov_deg < 170.0)) throw Error(ErrorKind::InvalidArgument, "fov must lie in (10, 170) degrees");
  if (width < 8 || height < 8) throw Error(ErrorKind::InvalidArgument, "image must be at least 8x8");
  if (!(eye_height_fraction > 0.0 && eye_height_fraction < 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "eye height fraction must lie in (0, 1)");
  }
  if (!(far_clip > 0.0)) throw Error(ErrorKind::InvalidArgument, "far clip must be positive");
}

double eye_yaw(const AgentConfig& agent) {
  return agent.base.heading + (agent.joints.empty() ? 0.0 : agent.joints[0]);
}

double distance_shade(double distance) { return std::clamp(1.0 / (1.0 + 0.3 * distance), 0.2, 1.0); }

namespace {

struct Surface {
  Polygon shape;
  Rgb color;
  double height;
  std::int32_t id;
};

struct Hit {
  double depth;
  std::size_t surface;
};

}  // namespace

Observation render(const WorldState& state, const WorldSpec& spec, const CameraParams& cam) {
  cam.validate();
  const int W = cam.width;
  const int H = cam.height;

  std::vector<Surface> surfaces;
  surfaces.reserve(spec.immovable.size() + spec.movables.size());
  for (const ImmovableObject& obj : spec.immovable) surfaces.push_back({obj.shape, obj.color, obj.height, 0});
  for (const MovableObject& m : spec.movables) {
    surfaces.push_back({transform(m.shape, state.movable_poses.at(m.id)), m.color, m.height, m.id});
  }

  Observation obs{RgbImage(W, H), IdImage::Zero(H, W)};
  for (int r = 0; r < H; ++r) {
    for (int c = 0; c < W; ++c) {
      for (int ch = 0; ch < 3; ++ch) obs.rgb(r, c, ch) = kBackgroundColor[ch];
    }
  }

  const Vec2 eye = state.agent.base.position;
  const double yaw = eye_yaw(state.agent);
  const Vec2 forward = direction(yaw);
  const Vec2 left = direction(yaw + 0.5 * kPi);
  const double focal = 0.5 * W / std::tan(0.5 * cam.fov_deg * kPi / 180.0);
  const double eye_z = cam.eye_height_fraction * kReferenceHeight;
  const double horizon = 0.5 * H;

  std::vector<Hit> hits;
  for (int c = 0; c < W; ++c) {
    const double x = (c + 0.5 - 0.5 * W) / focal;
    const Vec2 dir = forward - x * left;  // forward component is 1, so t is depth
    const double dir_norm = dir.norm();

    hits.clear();
    for (std::size_t i = 0; i < surfaces.size(); ++i) {
      if (auto t = ray_polygon_entry(eye, dir, surfaces[i].shape); t && *t * dir_norm <= cam.far_clip) {
        hits.push_back({*t, i});
      }
    }
    std::sort(hits.begin(), hits.end(), [](const Hit& a, const Hit& b) {
      return a.depth != b.depth ? a.depth > b.depth : a.surface > b.surface;
    });

    for (const Hit& hit : hits) {
      const Surface& s = surfaces[hit.surface];
      const double top = horizon - focal * (s.height - eye_z) / hit.depth;
      const double bottom = horizon + focal * eye_z / hit.depth;
      const int r0 = std::max(0, static_cast<int>(std::ceil(top - 0.5)));
      const int r1 = std::min(H, static_cast<int>(std::ceil(bottom - 0.5)));
      if (r0 >= r1) continue;
      const double shade = distance_shade(hit.depth * dir_norm);
      std::uint8_t px[3];
      for (int ch = 0; ch < 3; ++ch) px[ch] = static_cast<std::uint8_t>(std::lround(s.color[ch] * shade));
      for (int r = r0; r < r1; ++r) {
        for (int ch = 0; ch < 3; ++ch) obs.rgb(r, c, ch) = px[ch];
        obs.ids(r, c) = s.id;
      }
    }
  }
  return obs;
}

std::pair<Mask, Mask> gt_masks(const IdImage& ids1, const IdImage& ids2, const std::set<int>& moved) {
  if (ids1.rows() != ids2.rows() || ids1.cols() != ids2.cols()) {
    throw Error(ErrorKind::DimensionMismatch, "id buffers differ in size");
  }
  auto indicator = [&](const IdImage& ids) {
    return ids.unaryExpr([&](std::int32_t id) -> std::uint8_t { return moved.count(id) ? 1 : 0; }).eval();
  };
  return {indicator(ids1), indicator(ids2)};
}

double pixel_difference_fraction(const RgbImage& a, const RgbImage& b) {
  if (a.width() != b.width() || a.height() != b.height()) {
    throw Error(ErrorKind::DimensionMismatch, "images differ in size");
  }
  long differing = 0;
  for (int r = 0; r < a.height(); ++r) {
    for (int c = 0; c < a.width(); ++c) {
      if (a(r, c, 0) != b(r, c, 0) || a(r, c, 1) != b(r, c, 1) || a(r, c, 2) != b(r, c, 2)) ++differing;
    }
  }
  return static_cast<double>(differing) / (static_cast<double>(a.width()) * a.height());
}

}  // namespace scod
