#pragma once

#include "scod/world.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <set>
#include <utility>

namespace scod {

template <typename T>
using Image = Eigen::Array<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Binary H x W grid with values in {0, 1}.
using Mask = Image<std::uint8_t>;
/// Per-pixel object id, 0 for background and immovable geometry.
using IdImage = Image<std::int32_t>;

/// Interleaved 8-bit RGB, stored as an H x 3W array.
struct RgbImage {
  Image<std::uint8_t> data;

  RgbImage() = default;
  RgbImage(int width, int height) : data(Image<std::uint8_t>::Zero(height, 3 * width)) {}

  int width() const { return static_cast<int>(data.cols() / 3); }
  int height() const { return static_cast<int>(data.rows()); }
  std::uint8_t& operator()(int row, int col, int ch) { return data(row, 3 * col + ch); }
  std::uint8_t operator()(int row, int col, int ch) const { return data(row, 3 * col + ch); }

  friend bool operator==(const RgbImage& a, const RgbImage& b) {
    return a.data.rows() == b.data.rows() && a.data.cols() == b.data.cols() && (a.data == b.data).all();
  }
};

struct CameraParams {
  double fov_deg = 45.0;
  int width = 64;
  int height = 64;
  /// Eye height as a fraction of the reference wall height (1 m).
  double eye_height_fraction = 0.2;
  double far_clip = 12.0;

  /// Throws Error(InvalidArgument) outside fov in (10, 170) or W, H < 8.
  void validate() const;
  friend bool operator==(const CameraParams&, const CameraParams&) = default;
};

struct Observation {
  RgbImage rgb;
  IdImage ids;
};

inline constexpr Rgb kBackgroundColor{28, 30, 36};
inline constexpr double kReferenceHeight = 1.0;

/// Yaw of the camera: base heading plus the first joint (the camera rides on
/// the shoulder link).
double eye_yaw(const AgentConfig& agent);

/// One ray per column from the eye; every polygon the ray enters within the
/// far clip is drawn far-to-near as a vertical slab whose screen extent scales
/// with 1 / depth. Colors are multiplied by clamp(1 / (1 + 0.3 d), 0.2, 1).
Observation render(const WorldState& state, const WorldSpec& spec, const CameraParams& cam);

double distance_shade(double distance);

/// mask_k[p] = 1 iff ids_k[p] is in `moved`. Throws DimensionMismatch.
std::pair<Mask, Mask> gt_masks(const IdImage& ids1, const IdImage& ids2, const std::set<int>& moved);

/// Fraction of pixels where any channel differs.
double pixel_difference_fraction(const RgbImage& a, const RgbImage& b);

}  // namespace scod
