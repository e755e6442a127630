#pragma once

#include "scod/maskpred.hpp"
#include "scod/scexp.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace scod {

struct OutcomeThresholds {
  double low = 0.02;
  double high = 0.60;

  /// Throws InvalidArgument unless 0 < low < high < 1.
  void validate() const;
};

/// Fraction of pixels with value > binarize_at.
double positive_fraction(const ProbImage& prob, double binarize_at = 0.5);
Mask binarize(const ProbImage& prob, double binarize_at = 0.5);

/// Both fractions below `low` -> Identical, both above `high` -> Different,
/// anything else -> MovedObject with an empty id set (ids are not observable).
SCOutcome classify(const ProbImage& prob1, const ProbImage& prob2, const OutcomeThresholds& thr,
                   double binarize_at = 0.5);
SCOutcome classify_fractions(double f1, double f2, const OutcomeThresholds& thr);

/// One 8-connected component as flat row-major pixel indices, ascending.
struct Component {
  std::vector<int> pixels;

  int area() const { return static_cast<int>(pixels.size()); }
  Mask to_mask(int height, int width) const;
};

/// Components sorted by area, largest first; ties keep scan order.
std::vector<Component> extract_detection(const Mask& mask);

/// The largest component as a mask, or an empty mask.
Mask largest_component(const Mask& mask);

struct MaskPrediction {
  ProbImage prob1;
  ProbImage prob2;
};

/// Anything that maps an experiment's two observations to mask probabilities.
/// The oracle reads the hidden id buffers and ground truth; every other
/// predictor must only look at the rgb images.
using Predictor = std::function<MaskPrediction(const SCRecord&)>;

/// All zeros for Identical, all ones for Different, gt_masks of the moved
/// ids for MovedObject. Needs records with id buffers.
Predictor oracle_predictor();
Predictor learned_predictor(nn::Params<float> params);
Predictor naive_predictor(int threshold = 0);
Predictor zeros_predictor();

struct ScodResult {
  SCOutcome predicted;
  MaskPrediction masks;
  SCRecord record;  ///< carries the simulator label in record.gt
};

/// Samples a sequence from `seed`, runs the SC-experiment from `start`, and
/// classifies the predicted masks.
ScodResult run_scod(const WorldSpec& spec, const WorldState& start, const Predictor& predictor,
                    const SequenceConfig& seq_cfg, const CameraParams& cam, std::uint64_t seed,
                    const OutcomeThresholds& thr = {});

struct GridConfig {
  Vec2 origin{0.0, 0.0};
  double resolution = 0.25;  ///< meters per cell
  int nx = 32;
  int ny = 24;
  double heading = 0.0;      ///< canonical agent heading for every trial

  /// Grid covering the spec bounds at `resolution`.
  static GridConfig covering(const Box2& bounds, double resolution);
  Vec2 center(int ix, int iy) const;
};

struct CommutationCell {
  int trials = 0;
  int different = 0;

  bool empty() const { return trials == 0; }
  double p_different() const { return trials > 0 ? static_cast<double>(different) / trials : 0.0; }
  /// The probability that the experiment commutes, 1 - p_different.
  double p_commute() const { return 1.0 - p_different(); }
};

struct CommutationMap {
  GridConfig grid;
  std::vector<CommutationCell> cells;  ///< row-major, iy * nx + ix

  const CommutationCell& cell(int ix, int iy) const {
    return cells[static_cast<std::size_t>(iy * grid.nx + ix)];
  }
};

/// For each cell whose center admits a collision-free agent (canonical
/// heading, initial joints), runs `trials_per_cell` experiments with fresh
/// sequences and records how often the predictor says Different. Cells are
/// seeded by (seed, cell index) so results do not depend on visiting order.
CommutationMap commutation_map(const WorldSpec& spec, const GridConfig& grid, int trials_per_cell,
                               const SequenceConfig& seq_cfg, const Predictor& predictor, const CameraParams& cam,
                               std::uint64_t seed, const OutcomeThresholds& thr = {});

/// Heatmap with one pixel per cell, north up: 255 * (1 - p_different), empty
/// cells 0. Binary P5.
std::vector<std::uint8_t> encode_map_pgm(const CommutationMap& map);
/// CSV `cell_x,cell_y,trials,p_different`; empty cells have trials 0.
std::string format_map_csv(const CommutationMap& map);

/// Mean p_different over non-empty cells whose centers lie in `rect`; NaN if
/// there is none.
double mean_p_different(const CommutationMap& map, const Box2& rect);
/// Mean heatmap intensity over the same cells.
double mean_intensity(const CommutationMap& map, const Box2& rect);

}  // namespace scod
