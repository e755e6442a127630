#pragma once

#include "scod/binio.hpp"
#include "scod/world.hpp"

#include <string>
#include <string_view>

namespace scod {

// World files are sectioned key-value text. Angles are radians, lengths meters.
//
//   layout = studio
//   bounds = x0 y0 x1 y1
//
//   [agent]
//   pose = x y heading
//   joints = j0 j1 ...
//   link_lengths = l0 l1 ...
//   base_radius = r
//   link_radius = r
//   joint_limits = lo0 hi0, lo1 hi1, ...
//   max_rotation_speed = rad/s       (optional)
//   max_translation_speed = m/s      (optional)
//   max_joint_speed = rad/s          (optional)
//
//   [immovable]                      (repeatable)
//   vertices = x y, x y, x y, ...    (world frame, convex)
//   color = r g b
//   height = h                       (optional, default 1.0)
//
//   [movable <id>]                   (repeatable, id > 0)
//   vertices = x y, ...              (object frame, convex)
//   pose = x y heading
//   color = r g b
//   height = h                       (optional, default 0.3)
//
//   [region <name>]                  (repeatable)
//   rect = x0 y0 x1 y1
//   heading = a                      (optional, default 0)
//
// Unknown sections and keys are rejected.

WorldSpec parse_world_spec(std::string_view text);
WorldSpec load_world_spec(const std::string& path);
std::string format_world_spec(const WorldSpec& spec);

void encode_spec(ByteWriter& w, const WorldSpec& spec);
void encode_state(ByteWriter& w, const WorldState& state);
WorldState decode_state(ByteReader& r);

/// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

}  // namespace scod
