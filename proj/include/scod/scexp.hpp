#pragma once

#include "scod/render.hpp"
#include "scod/world.hpp"

#include <cstdint>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace scod {

struct ActionSequence {
  std::vector<Action> actions;
  double dt = 0.1;
};

enum class OutcomeKind : std::uint8_t { Identical = 0, Different = 1, MovedObject = 2 };

std::string_view to_string(OutcomeKind kind);

/// Result of comparing the two rollouts of an SC-experiment.
struct SCOutcome {
  OutcomeKind kind = OutcomeKind::Identical;
  std::set<int> moved;  ///< only meaningful for MovedObject

  static SCOutcome identical() { return {OutcomeKind::Identical, {}}; }
  static SCOutcome different() { return {OutcomeKind::Different, {}}; }
  static SCOutcome moved_object(std::set<int> ids) { return {OutcomeKind::MovedObject, std::move(ids)}; }

  friend bool operator==(const SCOutcome&, const SCOutcome&) = default;
};

/// Thresholds for label_outcome.
inline constexpr double kAgentPositionTolerance = 1e-4;
inline constexpr double kAgentAngleTolerance = 1e-4;
inline constexpr double kObjectPositionTolerance = 1e-3;
inline constexpr double kObjectAngleTolerance = 1e-3;

enum class OrderKind { Reverse, Custom };

struct SequenceConfig {
  int length = 20;
  double dt = 0.1;
  std::vector<int> dof_set{kFirstJointDof};
  double amp_min = 0.5;  ///< velocity magnitude range, rad/s or m/s
  double amp_max = 2.5;
  OrderKind order = OrderKind::Reverse;
  std::vector<int> permutation;  ///< used when order == Custom

  /// The second-rollout permutation for this config.
  std::vector<int> order2() const;
};

struct SCRecord {
  WorldState start;
  ActionSequence seq;
  std::vector<int> order2;
  Observation obs1;
  Observation obs2;
  std::pair<WorldState, WorldState> finals;
  SCOutcome gt;
};

std::vector<int> reversal_permutation(int length);

/// Each action picks a DOF uniformly from dof_set, a sign uniformly, and a
/// velocity magnitude uniformly in [amp_min, amp_max].
ActionSequence sample_sequence(std::uint64_t seed, std::span<const int> dof_set, int length, double amp_min,
                               double amp_max, double dt);
ActionSequence sample_sequence(std::uint64_t seed, const SequenceConfig& cfg);

/// Plays a sequence from `start`, returning the final state. Contact flags
/// are cleared at the start of the rollout.
WorldState rollout(const WorldSpec& spec, const WorldState& start, const ActionSequence& seq,
                   std::span<const int> order);

/// Rollout 1 plays `seq` in its own order, rollout 2 plays it permuted by
/// `order2`; both start from copies of `start`.
SCRecord run_experiment(const WorldSpec& spec, const WorldState& start, const ActionSequence& seq,
                        const std::vector<int>& order2, const CameraParams& cam);

/// Same experiment driven through a live world, which is restored to its
/// pre-experiment state afterwards.
SCRecord run_experiment(World& world, const ActionSequence& seq, const std::vector<int>& order2,
                        const CameraParams& cam);

/// Different if the agents differ beyond tolerance, else MovedObject if any
/// movable pose differs beyond tolerance, else Identical.
SCOutcome label_outcome(const WorldState& final1, const WorldState& final2);

// SC record batch container: "SCRC", version byte, u32 record count, then one
// u32-length-prefixed chunk per record holding start state, sequence, second
// order, both final states, both observations as PPM blobs and the label.
// Id buffers are not stored; decoded observations carry empty ids.
inline constexpr std::uint8_t kRecordBatchVersion = 1;

std::vector<std::uint8_t> encode_record_batch(std::span<const SCRecord> records);
std::vector<SCRecord> decode_record_batch(std::span<const std::uint8_t> bytes);
void write_record_batch(const std::string& path, std::span<const SCRecord> records);
std::vector<SCRecord> read_record_batch(const std::string& path);

}  // namespace scod
