#include "scod/world.hpp"

#include "scod/binio.hpp"
#include "scod/error.hpp"
#include "scod/world_io.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

namespace scod {

namespace {

constexpr double kContactSlop = 1e-7;
constexpr double kSubstepDisplacement = 0.01;
constexpr int kMinSubsteps = 10;
constexpr int kPushIterations = 16;
constexpr int kBisectionIterations = 48;
constexpr int kContactRefinement = 16;

bool disc_in_bounds(const Box2& bounds, const Disc& d) {
  return d.center.x() - d.radius >= bounds.min().x() - kContactSlop &&
         d.center.x() + d.radius <= bounds.max().x() + kContactSlop &&
         d.center.y() - d.radius >= bounds.min().y() - kContactSlop &&
         d.center.y() + d.radius <= bounds.max().y() + kContactSlop;
}

double bound_violation(const Box2& bounds, const Vec2& p) {
  double v = 0.0;
  v = std::max(v, bounds.min().x() - p.x());
  v = std::max(v, p.x() - bounds.max().x());
  v = std::max(v, bounds.min().y() - p.y());
  v = std::max(v, p.y() - bounds.max().y());
  return v;
}

bool polygon_in_bounds(const Box2& bounds, const Polygon& poly) {
  return std::all_of(poly.begin(), poly.end(),
                     [&](const Vec2& v) { return bound_violation(bounds, v) <= kContactSlop; });
}

AgentConfig apply_motion(const AgentConfig& start, const Action& action, double amount) {
  AgentConfig out = start;
  switch (action.dof_index) {
    case kBaseRotation:
      out.base.heading = normalize_angle(start.base.heading + amount);
      break;
    case kBaseTranslation:
      out.base.position = start.base.position + amount * direction(start.base.heading);
      break;
    default:
      out.joints[action.dof_index - kFirstJointDof] += amount;
      break;
  }
  return out;
}

Box2 discs_box(const std::vector<Disc>& discs) {
  Box2 box;
  for (const Disc& d : discs) {
    box.extend(d.center - Vec2::Constant(d.radius));
    box.extend(d.center + Vec2::Constant(d.radius));
  }
  return box;
}

bool boxes_touch(const Box2& a, const Box2& b) {
  return a.min().x() <= b.max().x() && b.min().x() <= a.max().x() && a.min().y() <= b.max().y() &&
         b.min().y() <= a.max().y();
}

bool agent_clear_of_static(const WorldSpec& spec, const AgentConfig& agent, const std::vector<Disc>& discs) {
  for (std::size_t k = 0; k < agent.joints.size(); ++k) {
    if (agent.joints[k] < agent.joint_limits[k].lo || agent.joints[k] > agent.joint_limits[k].hi) return false;
  }
  for (const Disc& d : discs) {
    if (!disc_in_bounds(spec.bounds, d)) return false;
  }
  const Box2 agent_box = discs_box(discs);
  for (const ImmovableObject& obj : spec.immovable) {
    if (!boxes_touch(agent_box, bounding_box(obj.shape))) continue;
    for (const Disc& d : discs) {
      auto c = collide_disc_polygon(d.center, d.radius, obj.shape);
      if (c && c->depth > kContactSlop) return false;
    }
  }
  return true;
}

/// Quasi-static push resolution. Movables overlapped by an agent disc are
/// translated along the contact normal by the penetration depth; pushed
/// movables in turn displace movables they overlap. Returns nullopt when the
/// configuration cannot be resolved (a movable pinned against static geometry).
std::optional<std::map<int, Pose>> resolve_pushes(const WorldSpec& spec, const std::vector<Disc>& discs,
                                                  const std::map<int, Pose>& poses) {
  const std::size_t n = spec.movables.size();
  std::vector<Pose> pose(n);
  std::vector<Polygon> poly(n);
  std::vector<bool> active(n, false);
  for (std::size_t i = 0; i < n; ++i) {
    pose[i] = poses.at(spec.movables[i].id);
    poly[i] = transform(spec.movables[i].shape, pose[i]);
  }
  auto shift = [&](std::size_t i, const Vec2& offset) {
    pose[i].position += offset;
    poly[i] = translate(poly[i], offset);
    active[i] = true;
  };

  const Box2 agent_box = discs_box(discs);
  for (int iter = 0; iter < kPushIterations; ++iter) {
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      if (!boxes_touch(agent_box, bounding_box(poly[i]))) continue;
      for (const Disc& d : discs) {
        auto c = collide_disc_polygon(d.center, d.radius, poly[i]);
        if (c && c->depth > kContactSlop) {
          shift(i, -c->depth * c->normal);
          changed = true;
        }
      }
    }
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        if (!active[i] && !active[j]) continue;
        auto c = collide_polygons(poly[i], poly[j]);
        if (!c || c->depth <= kContactSlop) continue;
        if (active[j] && !active[i]) {
          shift(i, -c->depth * c->normal);
        } else {
          shift(j, c->depth * c->normal);
        }
        changed = true;
      }
    }
    if (!changed) break;
  }

  // Only displaced movables can have acquired new overlaps.
  for (std::size_t i = 0; i < n; ++i) {
    if (!active[i]) continue;
    const Box2 box = bounding_box(poly[i]);
    if (!polygon_in_bounds(spec.bounds, poly[i])) return std::nullopt;
    for (const ImmovableObject& obj : spec.immovable) {
      if (!boxes_touch(box, bounding_box(obj.shape))) continue;
      auto c = collide_polygons(obj.shape, poly[i]);
      if (c && c->depth > kContactSlop) return std::nullopt;
    }
    for (const Disc& d : discs) {
      auto c = collide_disc_polygon(d.center, d.radius, poly[i]);
      if (c && c->depth > kContactSlop) return std::nullopt;
    }
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      auto c = collide_polygons(poly[i], poly[j]);
      if (c && c->depth > kContactSlop) return std::nullopt;
    }
  }

  std::map<int, Pose> out;
  for (std::size_t i = 0; i < n; ++i) out.emplace(spec.movables[i].id, pose[i]);
  return out;
}

std::optional<std::map<int, Pose>> feasible(const WorldSpec& spec, const AgentConfig& agent,
                                            const std::map<int, Pose>& poses) {
  const auto discs = agent_discs(agent);
  if (!agent_clear_of_static(spec, agent, discs)) return std::nullopt;
  return resolve_pushes(spec, discs, poses);
}

void check_action(const WorldSpec& spec, const AgentConfig& agent, const Action& action) {
  if (action.dof_index < 0 || action.dof_index >= agent.dof_count()) {
    throw Error(ErrorKind::InvalidDof, "dof index " + std::to_string(action.dof_index) + " out of range");
  }
  if (!std::isfinite(action.velocity)) throw Error(ErrorKind::InvalidAction, "non-finite velocity");
  const double limit = action.dof_index == kBaseRotation      ? spec.max_velocity.base_rotation
                       : action.dof_index == kBaseTranslation ? spec.max_velocity.base_translation
                                                              : spec.max_velocity.joint;
  if (std::abs(action.velocity) > limit) {
    throw Error(ErrorKind::InvalidAction, "velocity exceeds configured maximum");
  }
}

}  // namespace

double AgentConfig::reach() const {
  double r = base_radius + link_radius;
  for (double l : link_lengths) r += l;
  return r;
}

std::vector<Segment> fk(const AgentConfig& agent) {
  std::vector<Segment> segments;
  segments.reserve(agent.link_lengths.size());
  double angle = agent.base.heading;
  Vec2 start = agent.base.position;
  for (std::size_t k = 0; k < agent.link_lengths.size(); ++k) {
    angle += k < agent.joints.size() ? agent.joints[k] : 0.0;
    const Vec2 dir = direction(angle);
    if (k == 0) start = agent.base.position + agent.base_radius * dir;
    const Vec2 end = start + agent.link_lengths[k] * dir;
    segments.push_back({start, end});
    start = end;
  }
  return segments;
}

std::vector<Disc> agent_discs(const AgentConfig& agent) {
  std::vector<Disc> discs;
  discs.push_back({agent.base.position, agent.base_radius});
  for (const Segment& s : fk(agent)) {
    const double len = (s.b - s.a).norm();
    const int count = std::max(1, static_cast<int>(std::ceil(len / agent.link_radius)));
    for (int i = 0; i <= count; ++i) {
      const double t = static_cast<double>(i) / count;
      discs.push_back({s.a + t * (s.b - s.a), agent.link_radius});
    }
  }
  return discs;
}

const MovableObject& WorldSpec::movable(int id) const {
  for (const MovableObject& m : movables) {
    if (m.id == id) return m;
  }
  throw Error(ErrorKind::InvalidArgument, "unknown movable id " + std::to_string(id));
}

const Region* WorldSpec::find_region(const std::string& name) const {
  for (const Region& r : regions) {
    if (r.name == name) return &r;
  }
  return nullptr;
}

std::uint64_t WorldSpec::fingerprint() const {
  ByteWriter w;
  encode_spec(w, *this);
  return fnv1a64(w.bytes());
}

WorldState initial_state(const WorldSpec& spec) {
  WorldState s;
  s.spec_fingerprint = spec.fingerprint();
  s.agent = spec.initial_agent;
  for (const MovableObject& m : spec.movables) s.movable_poses.emplace(m.id, m.pose);
  return s;
}

Polygon movable_polygon(const WorldSpec& spec, const WorldState& state, int id) {
  return transform(spec.movable(id).shape, state.movable_poses.at(id));
}

bool agent_placement_free(const WorldSpec& spec, const WorldState& state, const AgentConfig& agent) {
  const auto discs = agent_discs(agent);
  if (!agent_clear_of_static(spec, agent, discs)) return false;
  for (const MovableObject& m : spec.movables) {
    const Polygon poly = movable_polygon(spec, state, m.id);
    for (const Disc& d : discs) {
      if (collide_disc_polygon(d.center, d.radius, poly)) return false;
    }
  }
  return true;
}

double max_penetration(const WorldSpec& spec, const WorldState& state) {
  double worst = 0.0;
  const auto discs = agent_discs(state.agent);
  std::vector<Polygon> polys;
  for (const MovableObject& m : spec.movables) polys.push_back(movable_polygon(spec, state, m.id));

  for (const Disc& d : discs) {
    worst = std::max(worst, d.radius - (d.center.x() - spec.bounds.min().x()));
    worst = std::max(worst, d.radius - (spec.bounds.max().x() - d.center.x()));
    worst = std::max(worst, d.radius - (d.center.y() - spec.bounds.min().y()));
    worst = std::max(worst, d.radius - (spec.bounds.max().y() - d.center.y()));
    for (const ImmovableObject& obj : spec.immovable) {
      if (auto c = collide_disc_polygon(d.center, d.radius, obj.shape)) worst = std::max(worst, c->depth);
    }
    for (const Polygon& p : polys) {
      if (auto c = collide_disc_polygon(d.center, d.radius, p)) worst = std::max(worst, c->depth);
    }
  }
  for (std::size_t i = 0; i < polys.size(); ++i) {
    for (const Vec2& v : polys[i]) worst = std::max(worst, bound_violation(spec.bounds, v));
    for (const ImmovableObject& obj : spec.immovable) {
      if (auto c = collide_polygons(obj.shape, polys[i])) worst = std::max(worst, c->depth);
    }
    for (std::size_t j = i + 1; j < polys.size(); ++j) {
      if (auto c = collide_polygons(polys[i], polys[j])) worst = std::max(worst, c->depth);
    }
  }
  return worst;
}

void validate(const WorldSpec& spec) {
  const AgentConfig& a = spec.initial_agent;
  if (spec.bounds.isEmpty()) throw Error(ErrorKind::InvalidArgument, "empty bounds");
  if (a.base_radius <= 0 || a.link_radius <= 0) throw Error(ErrorKind::InvalidArgument, "radii must be positive");
  if (a.link_lengths.size() != a.joints.size()) {
    throw Error(ErrorKind::InvalidArgument, "one link length per joint required");
  }
  if (a.joint_limits.size() != a.joints.size()) {
    throw Error(ErrorKind::InvalidArgument, "one joint limit per joint required");
  }
  for (std::size_t k = 0; k < a.joints.size(); ++k) {
    if (a.link_lengths[k] <= 0) throw Error(ErrorKind::InvalidArgument, "link lengths must be positive");
    if (a.joint_limits[k].lo >= a.joint_limits[k].hi || a.joints[k] < a.joint_limits[k].lo ||
        a.joints[k] > a.joint_limits[k].hi) {
      throw Error(ErrorKind::InvalidArgument, "joint outside its limits");
    }
  }
  std::set<int> ids;
  for (const MovableObject& m : spec.movables) {
    if (m.id <= 0) throw Error(ErrorKind::InvalidArgument, "movable ids must be positive");
    if (!ids.insert(m.id).second) throw Error(ErrorKind::InvalidArgument, "duplicate movable id");
    if (!is_convex(m.shape)) throw Error(ErrorKind::InvalidArgument, "movable shape not convex");
  }
  for (const ImmovableObject& obj : spec.immovable) {
    if (!is_convex(obj.shape)) throw Error(ErrorKind::InvalidArgument, "immovable shape not convex");
    if (!polygon_in_bounds(spec.bounds, obj.shape)) {
      throw Error(ErrorKind::InvalidArgument, "immovable geometry outside bounds");
    }
  }
  if (max_penetration(spec, initial_state(spec)) > kPositionTolerance) {
    throw Error(ErrorKind::InvalidArgument, "initial geometry interpenetrates or leaves bounds");
  }
}

int substep_count(const AgentConfig& agent, const Action& action, double dt) {
  const double lever = action.dof_index == kBaseTranslation ? 1.0 : agent.reach();
  const double displacement = std::abs(action.velocity * dt) * lever;
  return std::max(kMinSubsteps, static_cast<int>(std::ceil(displacement / kSubstepDisplacement)));
}

StepResult step(const WorldState& state, const WorldSpec& spec, const Action& action, double dt,
                int substep_multiplier) {
  if (!(dt > 0.0)) throw Error(ErrorKind::InvalidArgument, "dt must be positive");
  check_action(spec, state.agent, action);

  StepResult result{state, {}};
  if (action.velocity == 0.0) return result;

  const double total = action.velocity * dt;
  const int n = substep_count(state.agent, action, dt) * std::max(1, substep_multiplier);
  const AgentConfig& start = state.agent;

  AgentConfig agent = start;
  std::map<int, Pose> poses = state.movable_poses;
  double done = 0.0;

  // Moves to `target`. When blocked, bisects to the last feasible fraction,
  // marks the step clamped and returns false.
  auto advance = [&](double target) {
    AgentConfig candidate = apply_motion(start, action, total * target);
    if (auto resolved = feasible(spec, candidate, poses)) {
      agent = std::move(candidate);
      poses = std::move(*resolved);
      done = target;
      return true;
    }
    double lo = done;
    double hi = target;
    for (int it = 0; it < kBisectionIterations; ++it) {
      const double mid = 0.5 * (lo + hi);
      AgentConfig trial = apply_motion(start, action, total * mid);
      if (auto resolved = feasible(spec, trial, poses)) {
        lo = mid;
        agent = std::move(trial);
        poses = std::move(*resolved);
      } else {
        hi = mid;
      }
    }
    done = lo;
    result.report.clamped = true;
    return false;
  };

  for (int s = 1; s <= n; ++s) {
    const double from = done;
    const double frac = static_cast<double>(s) / n;
    AgentConfig candidate = apply_motion(start, action, total * frac);
    auto resolved = feasible(spec, candidate, poses);
    if (resolved && *resolved == poses) {
      agent = std::move(candidate);
      done = frac;
      continue;
    }
    // Pushes depend on the path, so contact substeps are integrated finer.
    bool moving = true;
    for (int k = 1; k <= kContactRefinement && moving; ++k) {
      moving = advance(from + (frac - from) * k / kContactRefinement);
    }
    if (!moving) break;
  }

  result.state.agent = std::move(agent);
  for (const auto& [id, pose] : poses) {
    if (!(pose == state.movable_poses.at(id))) result.report.moved_ids.insert(id);
  }
  result.state.movable_poses = std::move(poses);
  result.state.flags.immovable_contact |= result.report.clamped;
  result.state.flags.movable_contact |= !result.report.moved_ids.empty();
  return result;
}

WorldState restore(const WorldSpec& spec, const WorldState& snap) {
  if (snap.spec_fingerprint != spec.fingerprint()) {
    throw Error(ErrorKind::SpecMismatch, "snapshot was taken against a different world spec");
  }
  return snap;
}

World::World(WorldSpec spec) : spec_(std::move(spec)) {
  validate(spec_);
  state_ = initial_state(spec_);
}

World::World(WorldSpec spec, WorldState state) : spec_(std::move(spec)) {
  validate(spec_);
  state_ = scod::restore(spec_, state);
}

ContactReport World::step(const Action& action, double dt) {
  StepResult r = scod::step(state_, spec_, action, dt);
  state_ = std::move(r.state);
  return r.report;
}

void World::restore(const WorldState& snap) { state_ = scod::restore(spec_, snap); }

}  // namespace scod
