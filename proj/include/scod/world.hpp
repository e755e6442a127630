#pragma once

#include "scod/geometry.hpp"

#include <array>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace scod {

using Rgb = std::array<std::uint8_t, 3>;

/// Tolerances shared by the integrator and the outcome labeler.
inline constexpr double kPositionTolerance = 1e-6;
inline constexpr double kAngleTolerance = 1e-9;

/// Degree-of-freedom indices. Arm joint k (0-based) is kFirstJointDof + k.
enum Dof : int {
  kBaseRotation = 0,
  kBaseTranslation = 1,
  kFirstJointDof = 2,
};

struct JointLimit {
  double lo;
  double hi;
  friend bool operator==(const JointLimit&, const JointLimit&) = default;
};

struct AgentConfig {
  Pose base;
  std::vector<double> joints;
  std::vector<double> link_lengths;
  double base_radius = 0.12;
  double link_radius = 0.02;
  std::vector<JointLimit> joint_limits;

  int dof_count() const { return kFirstJointDof + static_cast<int>(joints.size()); }
  /// Distance from the base center to the farthest agent point at full extension.
  double reach() const;

  friend bool operator==(const AgentConfig& a, const AgentConfig& b) {
    return a.base == b.base && a.joints == b.joints && a.link_lengths == b.link_lengths &&
           a.base_radius == b.base_radius && a.link_radius == b.link_radius &&
           a.joint_limits == b.joint_limits;
  }
};

struct ImmovableObject {
  Polygon shape;  ///< world coordinates
  Rgb color{};
  double height = 1.0;
};

struct MovableObject {
  int id = 0;
  Polygon shape;  ///< local coordinates around the object origin
  Pose pose;
  Rgb color{};
  double height = 0.3;
};

/// Named axis-aligned start region with a canonical heading.
struct Region {
  std::string name;
  Box2 rect;
  double heading = 0.0;
};

struct VelocityLimits {
  double base_rotation = 3.0;     ///< rad/s
  double base_translation = 0.5;  ///< m/s
  double joint = 3.0;             ///< rad/s
};

struct WorldSpec {
  std::string layout;
  Box2 bounds;
  std::vector<ImmovableObject> immovable;
  std::vector<MovableObject> movables;
  AgentConfig initial_agent;
  VelocityLimits max_velocity;
  std::vector<Region> regions;

  /// Content hash over every field; identifies the spec a WorldState belongs to.
  std::uint64_t fingerprint() const;
  const MovableObject& movable(int id) const;
  const Region* find_region(const std::string& name) const;
};

struct ContactFlags {
  bool immovable_contact = false;
  bool movable_contact = false;
  friend bool operator==(const ContactFlags&, const ContactFlags&) = default;
};

struct WorldState {
  std::uint64_t spec_fingerprint = 0;
  AgentConfig agent;
  std::map<int, Pose> movable_poses;
  ContactFlags flags;  ///< accumulated since the last clear_flags()

  friend bool operator==(const WorldState& a, const WorldState& b) {
    return a.spec_fingerprint == b.spec_fingerprint && a.agent == b.agent &&
           a.movable_poses == b.movable_poses && a.flags == b.flags;
  }
};

struct Action {
  int dof_index = kFirstJointDof;
  double velocity = 0.0;
};

struct ContactReport {
  bool clamped = false;  ///< agent motion stopped short of the commanded displacement
  std::set<int> moved_ids;
  bool empty() const { return !clamped && moved_ids.empty(); }
};

struct Segment {
  Vec2 a;
  Vec2 b;
};

struct Disc {
  Vec2 center;
  double radius;
};

/// Arm segments in world coordinates. Joint 0 rotates about the base center;
/// the first link starts on the base perimeter.
std::vector<Segment> fk(const AgentConfig& agent);

/// Collision discs covering the base and the arm links.
std::vector<Disc> agent_discs(const AgentConfig& agent);

/// Initial state for a spec (agent and movables as authored).
WorldState initial_state(const WorldSpec& spec);

/// Throws Error(InvalidArgument) when the spec violates its invariants
/// (convexity, unique nonzero ids, containment, initial interpenetration).
void validate(const WorldSpec& spec);

/// True when the agent configuration overlaps no immovable, movable, or boundary.
bool agent_placement_free(const WorldSpec& spec, const WorldState& state, const AgentConfig& agent);

/// World-space polygon of a movable at the pose stored in `state`.
Polygon movable_polygon(const WorldSpec& spec, const WorldState& state, int id);

/// Largest penetration depth among agent/immovable, movable/immovable,
/// movable/movable and agent/movable pairs, plus bound violations. 0 when clear.
double max_penetration(const WorldSpec& spec, const WorldState& state);

struct StepResult {
  WorldState state;
  ContactReport report;
};

/// Quasi-static integration of one action over dt seconds.
StepResult step(const WorldState& state, const WorldSpec& spec, const Action& action, double dt,
                int substep_multiplier = 1);

/// Number of integration substeps used for an action.
int substep_count(const AgentConfig& agent, const Action& action, double dt);

inline WorldState snapshot(const WorldState& state) { return state; }

/// Returns the snapshot, checking that it was taken against `spec`.
WorldState restore(const WorldSpec& spec, const WorldState& snap);

/// Owns a spec and the live state; the unit the SC-experiment engine resets.
class World {
 public:
  explicit World(WorldSpec spec);
  World(WorldSpec spec, WorldState state);

  const WorldSpec& spec() const { return spec_; }
  const WorldState& state() const { return state_; }

  ContactReport step(const Action& action, double dt);
  WorldState snapshot() const { return state_; }
  void restore(const WorldState& snap);
  void clear_flags() { state_.flags = {}; }

 private:
  WorldSpec spec_;
  WorldState state_;
};

}  // namespace scod
