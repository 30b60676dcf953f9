#include <gtest/gtest.h>

#include "softlfd/keypoint_projection.hpp"
#include "test_support.hpp"

using namespace softlfd;
using namespace softlfd::testing;

namespace {

KeypointSet src(std::vector<Vec3> p) { return KeypointSet(std::move(p), KeypointRole::kSource); }
KeypointSet tgt(std::vector<Vec3> p) { return KeypointSet(std::move(p), KeypointRole::kTarget); }

// Brute-force oracle for the nearest sample, lowest index on ties.
std::size_t nearest_index(const Demonstration& demo, const Vec3& s) {
  std::size_t best = 0;
  for (std::size_t i = 0; i < demo.size(); ++i) {
    if ((demo.positions()[i] - s).norm() < (demo.positions()[best] - s).norm()) best = i;
  }
  return best;
}

Demonstration helix_demo(std::size_t samples = 400) {
  DemoSpec spec;
  spec.samples = samples;
  for (int k = 0; k <= 8; ++k) {
    const double t = 0.7 * k;
    spec.waypoints.push_back({Vec3(0.4 + 0.1 * std::cos(t), 0.1 * std::sin(t), 0.05 + 0.02 * k), {}});
  }
  return synthesize_demonstration(spec);
}

}  // namespace

TEST(ProjectSources, PointOnTrajectory) {
  const Demonstration demo = helix_demo();
  const auto proj = project_sources(demo, src({demo.positions()[123]}));
  EXPECT_EQ(proj.indices[0], 123u);
  EXPECT_EQ(proj.points[0], demo.positions()[123]);
}

TEST(ProjectSources, StraightLine) {
  const Demonstration demo = straight_demo(Vec3::Zero(), Vec3(1, 0, 0), 101);
  const Vec3 s(0.5, 0.2, 0.0);
  const auto proj = project_sources(demo, src({s}));
  EXPECT_EQ(proj.indices[0], nearest_index(demo, s));
  EXPECT_EQ(proj.indices[0], 50u);
  EXPECT_EQ(proj.points[0], Vec3(0.5, 0.0, 0.0));
}

TEST(ProjectSources, TiesGoToLowestIndex) {
  std::vector<Vec3> pos;
  for (int i = 0; i < 10; ++i) pos.push_back(Vec3(0.3, 0.1 * i, 0.0));
  pos[2] = Vec3(0.1, 0.0, 0.0);
  pos[7] = Vec3(-0.1, 0.0, 0.0);
  const Demonstration demo(pos, std::vector<Rotation>(10), std::vector<Vec2>(10, Vec2::Zero()), 0.1, 1.0);
  EXPECT_EQ(project_sources(demo, src({Vec3::Zero()})).indices[0], 2u);
}

TEST(ComputeShifts, Basics) {
  const auto zero = compute_shifts(src({Vec3(1, 2, 3)}), src({Vec3(1, 2, 3)}));
  EXPECT_EQ(zero[0], Vec3::Zero());
  const auto shift = compute_shifts(src({Vec3(0.5, 0.2, 0)}), src({Vec3(0.5, 0, 0)}));
  EXPECT_EQ(shift[0], Vec3(0, -0.2, 0));
  EXPECT_THROW(compute_shifts(src({Vec3::Zero()}), src({Vec3::Zero(), Vec3::UnitX()})), CountMismatch);

  Rng rng(31);
  for (int c = 0; c < 100; ++c) {
    const Vec3 s = random_point(rng), p = random_point(rng);
    const Vec3 d = compute_shifts(src({s}), src({p}))[0];
    EXPECT_LE((p - d - s).cwiseAbs().maxCoeff(), 1e-15);
  }
}

TEST(ShiftTargets, Basics) {
  const KeypointSet t = tgt({Vec3(1, 1, 0)});
  EXPECT_EQ(shift_targets(t, {Vec3::Zero()})[0], t[0]);
  const Vec3 shifted = shift_targets(t, {Vec3(0, -0.2, 0)})[0];
  EXPECT_DOUBLE_EQ(shifted[0], 1.0);
  EXPECT_DOUBLE_EQ(shifted[1], 0.8);
  EXPECT_DOUBLE_EQ(shifted[2], 0.0);
  EXPECT_THROW(shift_targets(t, {}), CountMismatch);
}

TEST(ProjectAndShift, OnTrajectoryKeypointsAreUnchanged) {
  const Demonstration demo = helix_demo();
  const KeypointSet s = src({demo.positions()[10], demo.positions()[200], demo.positions()[390]});
  const KeypointSet t = tgt({Vec3(0.5, 0, 0), Vec3(0.4, 0.1, 0.1), Vec3(0.3, 0.0, 0.2)});
  const ProjectionResult r = project_and_shift(demo, s, t);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(r.projected_source[i], s[i]);
    EXPECT_EQ(r.shifted_target[i], t[i]);
    EXPECT_EQ(r.shifts[i], Vec3::Zero());
  }
  EXPECT_FALSE(r.has_collisions());
}

TEST(ProjectAndShift, StraightLineComposition) {
  const Demonstration demo = straight_demo(Vec3::Zero(), Vec3(1, 0, 0), 101);
  const Vec3 t(1.0, 1.0, 0.0);
  const ProjectionResult r = project_and_shift(demo, src({Vec3(0.5, 0.2, 0)}), tgt({t}));
  EXPECT_EQ(r.indices[0], 50u);
  EXPECT_EQ(r.projected_source[0], Vec3(0.5, 0, 0));
  EXPECT_EQ(r.shifts[0], Vec3(0, -0.2, 0));
  EXPECT_EQ(r.shifted_target[0], t + Vec3(0, -0.2, 0));
  EXPECT_THROW(project_and_shift(demo, src({Vec3::Zero()}), tgt({t, t})), CountMismatch);
}

TEST(ProjectAndShift, RandomizedInvariants) {
  Rng rng(32);
  for (int c = 0; c < 100; ++c) {
    const Demonstration demo = random_demo(rng, 4, 150);
    std::vector<Vec3> s, t;
    const std::size_t n = 1 + static_cast<std::size_t>(uniform(rng, 0, 6));
    for (std::size_t i = 0; i < n; ++i) {
      s.push_back(random_point(rng, -0.25, 0.25));
      t.push_back(random_point(rng, -0.25, 0.25));
    }
    const ProjectionResult r = project_and_shift(demo, src(s), tgt(t));
    for (std::size_t i = 0; i < n; ++i) {
      EXPECT_EQ(r.indices[i], nearest_index(demo, s[i]));
      EXPECT_EQ(r.projected_source[i], demo.positions()[r.indices[i]]);
      const double best = (r.projected_source[i] - s[i]).norm();
      for (const auto& x : demo.positions()) EXPECT_LE(best, (x - s[i]).norm());
      EXPECT_EQ(r.shifts[i], r.projected_source[i] - s[i]);
      EXPECT_EQ(r.shifted_target[i], t[i] + r.shifts[i]);
      EXPECT_LE(((r.shifted_target[i] - r.projected_source[i]) - (t[i] - s[i])).cwiseAbs().maxCoeff(), 1e-15);
    }
    // Projecting the projected set again changes nothing.
    const ProjectionResult again = project_and_shift(demo, r.projected_source, r.shifted_target);
    for (std::size_t i = 0; i < n; ++i) {
      EXPECT_EQ(again.shifts[i], Vec3::Zero());
      EXPECT_EQ(again.projected_source[i], r.projected_source[i]);
    }
  }
}

TEST(ProjectAndShift, TransportedPathPassesThroughShiftedTargets) {
  const Demonstration demo = helix_demo(600);
  const KeypointSet s = src({Vec3(0.52, 0.02, 0.04), Vec3(0.38, 0.12, 0.1), Vec3(0.3, -0.02, 0.14),
                             Vec3(0.45, -0.1, 0.2)});
  const KeypointSet t = tgt({Vec3(0.55, 0.05, 0.04), Vec3(0.38, 0.15, 0.1), Vec3(0.28, -0.02, 0.15),
                             Vec3(0.45, -0.1, 0.2)});
  const ProjectionResult r = project_and_shift(demo, s, t);
  ASSERT_FALSE(r.has_collisions());
  const DeformationMap map = fit(r.projected_source, r.shifted_target, 0.0);
  const auto moved = transport_positions(map, demo);
  for (std::size_t i = 0; i < s.size(); ++i) {
    EXPECT_LE((map(r.projected_source[i]) - r.shifted_target[i]).norm(), 1e-9);
    EXPECT_LE((moved[r.indices[i]] - r.shifted_target[i]).norm(), 1e-9);
  }
}

TEST(ProjectAndShift, CollidingProjectionsNeedRegularization) {
  const Demonstration demo = helix_demo(400);
  const std::size_t k = 100;
  const Vec3 tangent = (demo.positions()[k + 1] - demo.positions()[k - 1]).normalized();
  const Vec3 side = tangent.cross(Vec3::UnitZ()).normalized();
  const Vec3 up = tangent.cross(side).normalized();
  std::vector<Vec3> s{demo.positions()[k] + 0.002 * side, demo.positions()[k] + 0.002 * up,
                      demo.positions()[20] + Vec3(0.0, 0.0, 0.01), demo.positions()[250],
                      demo.positions()[380]};
  const Vec3 d(0.02, -0.01, 0.0);
  std::vector<Vec3> t;
  for (const auto& p : s) t.push_back(p + d);
  t[3] += Vec3(0.0, 0.03, 0.0);

  const ProjectionResult r = project_and_shift(demo, src(s), tgt(t));
  ASSERT_EQ(r.indices[0], k);
  ASSERT_EQ(r.indices[1], k);
  EXPECT_TRUE(r.has_collisions());
  EXPECT_THROW(fit(r.projected_source, r.shifted_target, 0.0), DegenerateSystem);
  const DeformationMap map = fit(r.projected_source, r.shifted_target);
  for (std::size_t i = 0; i < s.size(); ++i) {
    EXPECT_LE((map(r.projected_source[i]) - r.shifted_target[i]).norm(),
              std::max(1e-9, 10 * kDefaultRegularization * map.weight_norm()));
  }
}
