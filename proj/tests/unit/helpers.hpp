#pragma once

#include "scod/world.hpp"
#include "scod/world_io.hpp"

#include <filesystem>
#include <string>

namespace testing_support {

inline std::string layout_path(const std::string& name) {
  return std::string(SCOD_SOURCE_DIR) + "/data/layouts/" + name + ".world";
}

inline std::string config_path() { return std::string(SCOD_SOURCE_DIR) + "/configs/default.cfg"; }

/// Fresh scratch directory under the build tree, removed on construction.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto p = std::filesystem::path(SCOD_TEST_SCRATCH) / name;
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

/// 4 x 4 m room, agent at the center facing +x with a 0.3 + 0.2 m arm and a
/// 0.1 m base. `extra` is appended verbatim (more sections).
inline scod::WorldSpec small_room(const std::string& extra = "", const std::string& pose = "2 2 0") {
  const std::string text = "layout = small\nbounds = 0 0 4 4\n\n[agent]\npose = " + pose +
                           "\njoints = 0 0\nlink_lengths = 0.3 0.2\nbase_radius = 0.1\nlink_radius = 0.02\n"
                           "joint_limits = -6.2832 6.2832, -2.5 2.5\n\n"
                           "[immovable]\nvertices = 0 0, 4 0, 4 0.1, 0 0.1\ncolor = 200 200 200\n\n"
                           "[immovable]\nvertices = 0 3.9, 4 3.9, 4 4, 0 4\ncolor = 200 180 180\n\n"
                           "[immovable]\nvertices = 0 0.1, 0.1 0.1, 0.1 3.9, 0 3.9\ncolor = 180 200 180\n\n"
                           "[immovable]\nvertices = 3.9 0.1, 4 0.1, 4 3.9, 3.9 3.9\ncolor = 180 180 200\n\n" +
                           extra;
  return scod::parse_world_spec(text);
}

/// No walls at all: a large empty plane, plus `extra` sections.
inline scod::WorldSpec empty_plane(const std::string& extra = "") {
  return scod::parse_world_spec(
      "layout = empty\nbounds = -50 -50 50 50\n\n[agent]\npose = 0 0 0\njoints = 0 0\n"
      "link_lengths = 0.3 0.2\nbase_radius = 0.1\nlink_radius = 0.02\n"
      "joint_limits = -6.2832 6.2832, -2.5 2.5\n\n" +
      extra);
}

}  // namespace testing_support
