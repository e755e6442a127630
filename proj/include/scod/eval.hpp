#pragma once

#include "scod/scod.hpp"

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace scod {

/// |pred & gt| / |pred | gt|, 1 when both are empty. Throws DimensionMismatch.
double iou(const Mask& pred, const Mask& gt);

/// Per-class sizes of a test set, in OutcomeKind order.
struct ClassCounts {
  int identical = 0;
  int different = 0;
  int moved_object = 0;

  int total() const { return identical + different + moved_object; }
  /// n split into thirds; the remainder goes to the first classes.
  static ClassCounts thirds(int n);
};

struct TestSetConfig {
  std::string name;
  CameraParams cam;
  ClassCounts counts;
  SequenceConfig seq;
  OutcomeThresholds thresholds;
  /// Different tuples must differ in at least this pixel fraction, so the
  /// label is decidable from the two images alone.
  double min_different_pixels = 0.25;
  double object_distance_min = 0.25;
  double object_distance_max = 0.6;
  int max_attempts = 20000;
};

/// Simulator-labeled SC-experiments with id buffers kept for scoring.
struct TestSet {
  std::string name;
  WorldSpec spec;
  CameraParams cam;
  std::uint64_t seed = 0;
  std::vector<SCRecord> records;
  int rejected_marginal = 0;     ///< candidates whose gt masks straddle the thresholds
  int rejected_out_of_view = 0;  ///< moved object absent from one observation

  std::uint64_t fingerprint() const;
};

/// Identical tuples start in the "free" region, Different ones in the "wall"
/// region, MovedObject ones next to a movable. A candidate is kept only if the
/// simulator agrees with the intended class, exactly one object moved, it is
/// visible in both observations (as in generated training tuples), each of its
/// gt masks is a single component, and the gt masks classify to
/// the simulator label under the thresholds (otherwise it is counted as
/// marginal). Throws PlacementFailure when a class cannot be filled.
TestSet build_test_set(const WorldSpec& spec, const TestSetConfig& cfg, std::uint64_t seed);

/// 50 tuples from the training layout at fov 45 and 150 from the
/// generalization layout at fov 90, balanced across outcomes.
std::pair<TestSet, TestSet> build_test_sets(const WorldSpec& train_spec, const WorldSpec& gen_spec,
                                            std::uint64_t seed, const CameraParams& base_cam = {});

/// Throws InvalidArgument if the two specs share a movable shape template.
void check_disjoint_shapes(const WorldSpec& a, const WorldSpec& b);

struct ClassScore {
  int count = 0;
  int correct = 0;

  double accuracy() const;  ///< NaN when count is 0
};

struct EvalReport {
  std::string set_name;
  std::string predictor;
  std::array<ClassScore, 3> classes{};  ///< indexed by OutcomeKind
  double mean_iou = 0.0;                ///< over MovedObject tuples
  int iou_count = 0;
  std::uint64_t fingerprint = 0;        ///< test set and thresholds

  const ClassScore& score(OutcomeKind k) const { return classes[static_cast<std::size_t>(k)]; }
  int total() const { return classes[0].count + classes[1].count + classes[2].count; }
};

/// Outcome accuracy per class, and on MovedObject tuples the IoU of the
/// largest predicted component against the gt object mask, averaged over
/// both masks.
EvalReport evaluate(const Predictor& predictor, const TestSet& set, const OutcomeThresholds& thr,
                    const std::string& predictor_name);

std::string format_report_csv(std::span<const EvalReport> reports);
/// Text table with the movable / immovable / free-space columns.
std::string format_report_table(std::span<const EvalReport> reports);

}  // namespace scod
