#include "helpers.hpp"

#include "scod/error.hpp"
#include "scod/rng.hpp"
#include "scod/world.hpp"
#include "scod/world_io.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

using namespace scod;
using testing_support::small_room;

namespace {

AgentConfig arm_at_origin(double j0, double j1) {
  AgentConfig a;
  a.base = {Vec2::Zero(), 0.0};
  a.joints = {j0, j1};
  a.link_lengths = {0.3, 0.2};
  a.base_radius = 0.1;
  a.joint_limits = {{-6.3, 6.3}, {-2.5, 2.5}};
  return a;
}

void expect_vec(const Vec2& v, double x, double y) {
  EXPECT_NEAR(v.x(), x, 1e-12);
  EXPECT_NEAR(v.y(), y, 1e-12);
}

}  // namespace

TEST(Fk, StraightArm) {
  const auto s = fk(arm_at_origin(0, 0));
  ASSERT_EQ(s.size(), 2u);
  expect_vec(s[0].a, 0.1, 0);
  expect_vec(s[0].b, 0.4, 0);
  expect_vec(s[1].a, 0.4, 0);
  expect_vec(s[1].b, 0.6, 0);
}

TEST(Fk, ShoulderQuarterTurn) {
  const auto s = fk(arm_at_origin(kPi / 2, 0));
  expect_vec(s[0].a, 0, 0.1);
  expect_vec(s[0].b, 0, 0.4);
  expect_vec(s[1].b, 0, 0.6);
}

TEST(Fk, ElbowQuarterTurn) {
  const auto s = fk(arm_at_origin(0, kPi / 2));
  expect_vec(s[1].a, 0.4, 0);
  expect_vec(s[1].b, 0.4, 0.2);
}

TEST(Fk, FollowsBasePose) {
  AgentConfig a = arm_at_origin(0, 0);
  a.base = {Vec2(1, 2), kPi};
  const auto s = fk(a);
  expect_vec(s[1].b, 0.4, 2);
}

TEST(Step, ZeroVelocityLeavesStateUnchanged) {
  const WorldSpec spec = small_room();
  const WorldState s0 = initial_state(spec);
  for (int dof = 0; dof < 4; ++dof) {
    const StepResult r = step(s0, spec, {dof, 0.0}, 0.1);
    EXPECT_EQ(r.state, s0);
    EXPECT_TRUE(r.report.empty());
  }
}

TEST(Step, FreeRotationIsExact) {
  const WorldSpec spec = small_room();
  const WorldState s0 = initial_state(spec);
  const StepResult r = step(s0, spec, {kBaseRotation, 1.5}, 0.1);
  EXPECT_DOUBLE_EQ(r.state.agent.base.heading, 0.15);
  EXPECT_TRUE(r.report.empty());
  EXPECT_EQ(r.state.agent.base.position, s0.agent.base.position);
}

TEST(Step, FreeTranslationAlongHeading) {
  const WorldSpec spec = small_room("", "2 2 1.5707963267948966");
  const StepResult r = step(initial_state(spec), spec, {kBaseTranslation, 0.4}, 0.5);
  EXPECT_NEAR(r.state.agent.base.position.x(), 2.0, 1e-12);
  EXPECT_NEAR(r.state.agent.base.position.y(), 2.2, 1e-12);
}

TEST(Step, RejectsBadDofAndSpeed) {
  const WorldSpec spec = small_room();
  const WorldState s0 = initial_state(spec);
  try {
    step(s0, spec, {7, 0.1}, 0.1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InvalidDof);
  }
  try {
    step(s0, spec, {kFirstJointDof, 100.0}, 0.1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InvalidAction);
  }
}

TEST(Step, WallClampsTheArm) {
  // Shoulder 0.25 m from the east wall: a straight arm cannot sweep past it.
  const WorldSpec spec = small_room("", "3.3 2 1.5707963267948966");
  const StepResult r = step(initial_state(spec), spec, {kFirstJointDof, -2.0}, 1.0);
  EXPECT_TRUE(r.report.clamped);
  EXPECT_TRUE(r.state.flags.immovable_contact);
  EXPECT_GT(r.state.agent.joints[0], -2.0);
  EXPECT_NEAR(max_penetration(spec, r.state), 0.0, 1e-6);
}

TEST(Step, SweepMatchesFineSubstepOracle) {
  // A box sitting in the arc swept by the straight arm.
  const std::string box =
      "[movable 1]\nvertices = -0.05 -0.05, 0.05 -0.05, 0.05 0.05, -0.05 0.05\n"
      "pose = 2.35 2.3 0.2\ncolor = 250 60 60\n";
  const WorldSpec spec = small_room(box);
  const WorldState s0 = initial_state(spec);
  const Action sweep{kFirstJointDof, 1.5};
  const StepResult coarse = step(s0, spec, sweep, 0.8);
  const StepResult fine = step(s0, spec, sweep, 0.8, 100);
  ASSERT_EQ(coarse.report.moved_ids, std::set<int>{1});
  const Pose& a = coarse.state.movable_poses.at(1);
  const Pose& b = fine.state.movable_poses.at(1);
  EXPECT_GT((a.position - s0.movable_poses.at(1).position).norm(), 0.01);
  EXPECT_LT((a.position - b.position).norm(), 1e-3);
  EXPECT_TRUE(coarse.state.flags.movable_contact);
  EXPECT_FALSE(coarse.report.clamped);
}

TEST(Snapshot, RoundTripAndReplay) {
  const WorldSpec spec = small_room(
      "[movable 4]\nvertices = -0.05 -0.05, 0.05 -0.05, 0.05 0.05, -0.05 0.05\npose = 2.4 2.2 0\n"
      "color = 1 2 3\n");
  World w(spec);
  const WorldState snap = w.snapshot();
  EXPECT_EQ(restore(spec, snap), w.state());

  Rng rng(3);
  std::vector<Action> actions;
  for (int i = 0; i < 20; ++i) {
    actions.push_back({static_cast<int>(rng.index(4)), rng.uniform(-0.5, 0.5)});
  }
  for (const Action& a : actions) w.step(a, 0.1);
  const WorldState end1 = w.state();
  w.restore(snap);
  EXPECT_EQ(w.state(), snap);
  for (const Action& a : actions) w.step(a, 0.1);
  EXPECT_EQ(w.state(), end1);
}

TEST(Snapshot, RestoreAgainstOtherSpecFails) {
  const WorldSpec a = small_room();
  const WorldSpec b = small_room("", "1 1 0");
  try {
    restore(b, snapshot(initial_state(a)));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::SpecMismatch);
  }
}

TEST(Collide, DiscFarAndOnEdge) {
  const Polygon square{{0, 0}, {1, 0}, {1, 1}, {0, 1}};
  EXPECT_FALSE(collide_disc_polygon({3, 3}, 0.2, square));
  const auto c = collide_disc_polygon({1.0, 0.5}, 0.2, square);
  ASSERT_TRUE(c);
  EXPECT_NEAR(c->depth, 0.2, 1e-12);
  EXPECT_NEAR(c->normal.x(), 1.0, 1e-12);
}

// Overlap decisions against dense sampling of the disc: 4000 points on the
// rim (catching shallow edge contacts) plus 6000 in the interior, and the
// polygon's own vertices tested against the disc.
TEST(Collide, DiscPolygonMatchesSamplingOracle) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int decided = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    // Random points on a stretched circle, in angle order, are strictly convex.
    const int n = 3 + static_cast<int>(rng() % 6);
    std::vector<double> angles(n);
    for (double& a : angles) a = 2 * kPi * u(rng);
    std::sort(angles.begin(), angles.end());
    const double sx = 0.3 + u(rng), sy = 0.3 + u(rng);
    Polygon pts;
    for (double a : angles) pts.push_back({sx * std::cos(a), sy * std::sin(a)});
    if (!is_convex(pts)) continue;
    const Polygon poly = make_convex(pts);
    const Vec2 c(u(rng) * 3 - 1.5, u(rng) * 3 - 1.5);
    const double r = 0.05 + 0.5 * u(rng);

    const auto contact = collide_disc_polygon(c, r, poly);
    const bool marginal = (contact && contact->depth <= 1e-4) ||
                          (!contact && collide_disc_polygon(c, r + 1e-4, poly).has_value());
    if (marginal) continue;

    bool hit = false;
    for (int i = 0; i < 4000 && !hit; ++i) {
      const double a = 2 * kPi * i / 4000.0;
      hit = contains(poly, c + r * Vec2(std::cos(a), std::sin(a)));
    }
    for (int i = 0; i < 6000 && !hit; ++i) {
      const double a = 2 * kPi * u(rng), rr = r * std::sqrt(u(rng));
      hit = contains(poly, c + rr * Vec2(std::cos(a), std::sin(a)));
    }
    for (const Vec2& v : poly) hit |= (v - c).norm() < r;
    EXPECT_EQ(hit, contact.has_value()) << "trial " << trial;
    ++decided;
  }
  EXPECT_GT(decided, 900);
}

TEST(Collide, PolygonsSeparatingAxis) {
  const Polygon a{{0, 0}, {1, 0}, {1, 1}, {0, 1}};
  EXPECT_FALSE(collide_polygons(a, translate(a, {1.5, 0})));
  const auto c = collide_polygons(a, translate(a, {0.9, 0}));
  ASSERT_TRUE(c);
  EXPECT_NEAR(c->depth, 0.1, 1e-12);
  EXPECT_NEAR(c->normal.x(), 1.0, 1e-12);
}

TEST(WorldSpecText, RoundTripsThroughFormat) {
  const WorldSpec spec = load_world_spec(testing_support::layout_path("studio"));
  const WorldSpec again = parse_world_spec(format_world_spec(spec));
  EXPECT_EQ(spec.fingerprint(), again.fingerprint());
}

TEST(WorldSpecText, RejectsUnknownKeysAndConcavePolygons) {
  EXPECT_THROW(parse_world_spec("layout = x\nbounds = 0 0 1 1\nbogus = 1\n"), Error);
  EXPECT_THROW(small_room("[immovable]\nvertices = 1 1, 2 1, 1.5 1.2, 2 2, 1 2\ncolor = 1 1 1\n"), Error);
}

TEST(Layouts, BothValidate) {
  for (const char* name : {"studio", "loft"}) {
    const WorldSpec spec = load_world_spec(testing_support::layout_path(name));
    EXPECT_NO_THROW(validate(spec));
    EXPECT_NE(spec.find_region("free"), nullptr);
    EXPECT_NE(spec.find_region("wall"), nullptr);
    EXPECT_GE(spec.movables.size(), 10u);
  }
}
