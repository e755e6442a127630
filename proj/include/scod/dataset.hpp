#pragma once

#include "scod/render.hpp"
#include "scod/rng.hpp"
#include "scod/world.hpp"

#include <cstdint>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace scod {

enum class Scenario : std::uint8_t { NoDifference = 0, CompletelyDifferent = 1, MovedObjects = 2 };

std::string_view to_string(Scenario s);

/// One training example: two observations and the two target masks.
struct MaskTuple {
  Scenario scenario = Scenario::NoDifference;
  RgbImage obs1;
  RgbImage obs2;
  Mask mask1;
  Mask mask2;

  friend bool operator==(const MaskTuple& a, const MaskTuple& b) {
    return a.scenario == b.scenario && a.obs1 == b.obs1 && a.obs2 == b.obs2 && (a.mask1 == b.mask1).all() &&
           (a.mask2 == b.mask2).all();
  }
};

/// Generator output; ids and states are kept for debugging and oracles only.
struct GeneratedTuple {
  MaskTuple tuple;
  IdImage ids1;
  IdImage ids2;
  std::set<int> moved;
  WorldState state1;
  WorldState state2;
};

struct GeneratorConfig {
  CameraParams cam;
  int max_attempts = 500;
  double min_pixel_difference = 0.25;
  /// Probability that a "completely different" pair keeps the position and
  /// only turns the view; otherwise the agent is placed anywhere.
  double turn_in_place_probability = 0.5;
  double turn_min = 0.05;  ///< rad
  double turn_max = 1.2;   ///< rad
  double min_translation = 0.02;
  double max_translation = 0.20;
  double max_rotation = 45.0 * kPi / 180.0;
  double min_view_distance = 0.25;
  double max_view_distance = 1.2;
};

/// Uniform collision-free agent placement anywhere inside the bounds.
WorldState random_placement(const WorldSpec& spec, Rng& rng, int max_attempts);

GeneratedTuple gen_no_difference(const WorldSpec& spec, Rng& rng, const GeneratorConfig& cfg);
GeneratedTuple gen_completely_different(const WorldSpec& spec, Rng& rng, const GeneratorConfig& cfg);
GeneratedTuple gen_moved_objects(const WorldSpec& spec, Rng& rng, int k_max, const GeneratorConfig& cfg);

struct ScenarioCounts {
  int no_difference = 0;
  int completely_different = 0;
  int moved_objects = 0;

  int total() const { return no_difference + completely_different + moved_objects; }
  friend bool operator==(const ScenarioCounts&, const ScenarioCounts&) = default;
};

/// Scenario assigned to each index: round-robin over the scenarios that still
/// have quota, so classes interleave and counts match exactly.
std::vector<Scenario> scenario_schedule(const ScenarioCounts& counts);

/// The tuple at `index` of a dataset, generated from its own derived stream.
GeneratedTuple generate_tuple(const WorldSpec& spec, Scenario scenario, std::uint64_t seed, std::uint64_t index,
                              int k_max, const GeneratorConfig& cfg);

struct Dataset {
  CameraParams cam;
  std::vector<MaskTuple> tuples;
};

// Dataset file: "SCDS", version byte, camera (f64 fov, u32 W, u32 H, f64 eye
// height fraction, f64 far clip), u32 tuple count, then per tuple a scenario
// byte and four u32-length-prefixed blobs: PPM obs1, PPM obs2, PGM mask1,
// PGM mask2. All integers little-endian.
inline constexpr std::uint8_t kDatasetVersion = 1;

std::vector<std::uint8_t> encode_dataset(const Dataset& ds);
Dataset decode_dataset(std::span<const std::uint8_t> bytes);
Dataset read_dataset(const std::string& path);

struct DatasetManifest {
  ScenarioCounts counts;
  std::uint64_t seed = 0;
  std::uint64_t spec_fingerprint = 0;
  std::string layout;
  CameraParams cam;
  int k_max = 2;
  int tuple_count = 0;

  std::string to_text() const;
  static DatasetManifest parse(std::string_view text);
};

struct BuildOptions {
  int k_max = 2;
  GeneratorConfig generator;
  bool write_debug_ids = false;  ///< also write <out>.ids with raw id buffers
};

/// Writes the dataset to `out_path` and the manifest to `out_path + ".manifest"`.
DatasetManifest build_dataset(const WorldSpec& spec, const ScenarioCounts& counts, std::uint64_t seed,
                              const std::string& out_path, const BuildOptions& opts = {});

}  // namespace scod
