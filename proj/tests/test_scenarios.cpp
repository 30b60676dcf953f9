#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "softlfd/scenarios.hpp"
#include "test_support.hpp"

using namespace softlfd;
using namespace softlfd::testing;
namespace fs = std::filesystem;

namespace {

std::size_t variant_index(const Scenario& s, const std::string& name) {
  for (std::size_t v = 0; v < s.variants.size(); ++v) {
    if (s.variants[v].name == name) return v;
  }
  ADD_FAILURE() << "no variant " << name;
  return 0;
}

// Three waypoints used directly as keypoints, so projection leaves them put.
Scenario corner_scenario() {
  Scenario s;
  s.name = "corner";
  s.demo.samples = 120;
  s.demo.waypoints = {{Vec3(0.3, 0.0, 0.1), {}}, {Vec3(0.4, 0.0, 0.1), {}}, {Vec3(0.4, 0.1, 0.15), {}}};
  s.source = {Vec3(0.3, 0.0, 0.1), Vec3(0.4, 0.0, 0.1), Vec3(0.4, 0.1, 0.15)};
  s.variants = {{"flattened", {Vec3(0.3, 0.0, 0.1), Vec3(0.35, 0.0, 0.1), Vec3(0.4, 0.0, 0.1)}}};
  return s;
}

}  // namespace

TEST(Builtins, ArchetypesArePresent) {
  const auto names = builtin_scenario_names();
  ASSERT_EQ(names, (std::vector<std::string>{"stacking", "narrow_opening", "hollow_grasp"}));

  const Scenario stacking = builtin_scenario("stacking");
  EXPECT_EQ(stacking.source.size(), 3u);
  const auto& moved = stacking.variants[variant_index(stacking, "nonrigid")].target;
  std::size_t displaced = 0;
  for (std::size_t i = 0; i < 3; ++i) displaced += (moved[i] - stacking.source[i]).norm() > 1e-3;
  EXPECT_EQ(displaced, 2u);
  // Non-rigid: some pairwise distance changes.
  bool stretched = false;
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = i + 1; j < 3; ++j) {
      stretched |= std::abs((moved[i] - moved[j]).norm() - (stacking.source[i] - stacking.source[j]).norm()) > 1e-3;
    }
  }
  EXPECT_TRUE(stretched);

  EXPECT_EQ(builtin_scenario("narrow_opening").source.size(), 3u);
  const Scenario hollow = builtin_scenario("hollow_grasp");
  EXPECT_EQ(hollow.source.size(), 1u);
  double max_twist = 0.0;
  for (const auto& step : hollow.demo.servo_schedule) max_twist = std::max(max_twist, step.servos[kTwist]);
  EXPECT_GE(max_twist, 2.0);
  for (const auto& s : builtin_scenarios()) EXPECT_NO_THROW(s.validate());
}

TEST(Builtins, UnknownNameListsAvailable) {
  try {
    builtin_scenario("juggling");
    FAIL() << "expected UnknownScenario";
  } catch (const UnknownScenario& e) {
    const std::string msg = e.what();
    for (const auto& n : builtin_scenario_names()) EXPECT_NE(msg.find(n), std::string::npos);
  }
}

TEST(Builtins, IdentityVariantsReproduceDemonstration) {
  for (const auto& s : builtin_scenarios()) {
    const Demonstration demo = synthesize_demonstration(s.demo);
    const auto gen = generalize(demo, s.source_set(), s.target_set(variant_index(s, "identity")),
                                kDefaultRegularization);
    for (std::size_t i = 0; i < demo.size(); ++i) {
      EXPECT_LE((gen.transported.positions()[i] - demo.positions()[i]).norm(), 1e-9) << s.name;
      EXPECT_LE((gen.transported.orientations()[i].matrix() - demo.orientations()[i].matrix()).norm(), 1e-9);
      EXPECT_EQ(gen.transported.servos()[i], demo.servos()[i]);
    }
  }
}

TEST(Builtins, MovedCupIsApproachedMoreClosely) {
  const Scenario s = builtin_scenario("stacking");
  const std::size_t v = variant_index(s, "cup_moved");
  const ScenarioReport r = evaluate_scenario(s, v);
  for (std::size_t i = 0; i < s.source.size(); ++i) {
    if ((s.variants[v].target[i] - s.source[i]).norm() < 0.05) continue;
    EXPECT_LE(r.keypoints[i].min_distance_transported, r.keypoints[i].min_distance_original);
    EXPECT_LE(r.keypoints[i].min_distance_transported, 1e-3);
  }
}

TEST(Builtins, HollowGraspServosPassThrough) {
  const Scenario s = builtin_scenario("hollow_grasp");
  const Demonstration demo = synthesize_demonstration(s.demo);
  const auto gen = generalize(demo, s.source_set(), s.target_set(variant_index(s, "object_displaced")),
                              kDefaultRegularization);
  EXPECT_EQ(gen.transported.servos(), demo.servos());
  EXPECT_GT((gen.transported.positions()[0] - demo.positions()[0]).norm(), 0.05);
}

TEST(Evaluate, EveryBuiltinVariantPasses) {
  for (const auto& s : builtin_scenarios()) {
    for (std::size_t v = 0; v < s.variants.size(); ++v) {
      const ScenarioReport r = evaluate_scenario(s, v);
      EXPECT_FALSE(r.failed(s.tolerances)) << s.name << "/" << r.variant << " " << r.error;
      EXPECT_TRUE(r.converged);
      EXPECT_LE(r.final_error, 1e-3);
      EXPECT_LE(r.max_rotation_error, 1e-9);
      EXPECT_TRUE(r.warnings.empty());
      ASSERT_EQ(r.keypoints.size(), s.source.size());
      if (r.variant == "identity") EXPECT_LE(r.max_residual, 1e-9);
    }
  }
}

TEST(Evaluate, Deterministic) {
  const Scenario s = builtin_scenario("narrow_opening");
  PipelineConfig config;
  config.start_offset = Vec3(0.0, 0.03, 0.0);
  const ScenarioReport a = evaluate_scenario(s, 0, config);
  const ScenarioReport b = evaluate_scenario(s, 0, config);
  EXPECT_EQ(a.max_residual, b.max_residual);
  EXPECT_EQ(a.steps, b.steps);
  EXPECT_EQ(a.final_error, b.final_error);
  for (std::size_t i = 0; i < a.keypoints.size(); ++i) {
    EXPECT_EQ(a.keypoints[i].shift, b.keypoints[i].shift);
    EXPECT_EQ(a.keypoints[i].min_distance_transported, b.keypoints[i].min_distance_transported);
  }
}

TEST(Evaluate, CollidingProjectionsWarn) {
  Scenario s = builtin_scenario("stacking");
  // A fourth keypoint hovering just beside the medium cup snaps onto the same sample.
  s.source.push_back(s.source[0] + Vec3(0.0, 1e-6, 0.0));
  for (auto& v : s.variants) v.target.push_back(v.target[0] + Vec3(0.0, 1e-6, 0.0));
  const ScenarioReport r = evaluate_scenario(s, variant_index(s, "cup_moved"));
  ASSERT_EQ(r.warnings.size(), 1u);
  EXPECT_EQ(r.warnings[0].rfind("DegenerateSystem:", 0), 0u);
  EXPECT_TRUE(r.error.empty());
  EXPECT_EQ(r.keypoints[0].sample_index, r.keypoints[3].sample_index);
}

TEST(Evaluate, RolloutBudgetIsReportedNotThrown) {
  const Scenario s = builtin_scenario("hollow_grasp");
  PipelineConfig config;
  config.max_steps = 5;
  const ScenarioReport r = evaluate_scenario(s, 0, config);
  EXPECT_FALSE(r.converged);
  EXPECT_EQ(r.steps, 5u);
  EXPECT_EQ(r.error.rfind("DidNotConverge:", 0), 0u);
  EXPECT_TRUE(r.failed(s.tolerances));
}

TEST(Evaluate, PipelineErrorsCarryScenarioContext) {
  const Scenario s = corner_scenario();
  try {
    evaluate_scenario(s, 0);
    FAIL() << "expected ScenarioFailure";
  } catch (const ScenarioFailure& e) {
    EXPECT_EQ(e.kind(), "DegenerateSystem");
    const std::string msg = e.what();
    EXPECT_NE(msg.find("corner"), std::string::npos);
    EXPECT_NE(msg.find("flattened"), std::string::npos);
    EXPECT_EQ(e.partial_report().scenario, "corner");
  }
  EXPECT_THROW(evaluate_scenario(s, 3), InvalidScenario);
}

TEST(ScenarioFile, RoundTripAndValidation) {
  for (const auto& s : builtin_scenarios()) {
    const Scenario back = scenario_from_json(scenario_to_json(s));
    EXPECT_EQ(back.name, s.name);
    EXPECT_EQ(back.demo.samples, s.demo.samples);
    EXPECT_EQ(back.source, s.source);
    ASSERT_EQ(back.variants.size(), s.variants.size());
    const Demonstration a = synthesize_demonstration(s.demo);
    const Demonstration b = synthesize_demonstration(back.demo);
    for (std::size_t i = 0; i < a.size(); ++i) {
      EXPECT_LE((a.positions()[i] - b.positions()[i]).norm(), 1e-12);
      EXPECT_LE((a.orientations()[i].matrix() - b.orientations()[i].matrix()).norm(), 1e-12);
      EXPECT_EQ(a.servos()[i], b.servos()[i]);
    }
  }

  auto doc = scenario_to_json(builtin_scenario("stacking"));
  auto extra = doc;
  extra["colour"] = "red";
  EXPECT_THROW(scenario_from_json(extra), ParseError);
  auto short_variant = doc;
  short_variant["variants"][0]["target"].erase(0);
  EXPECT_THROW(scenario_from_json(short_variant), InvalidScenario);
  auto infinite = doc;
  infinite["demonstration"]["waypoints"][1]["position"][0] = "nan";
  EXPECT_THROW(scenario_from_json(infinite), ParseError);
}

TEST(ScenarioFile, BundledExampleRuns) {
  const Scenario s = load_scenario(fs::path(SOFTLFD_SCENARIO_DIR) / "drawer_pull.json");
  EXPECT_EQ(s.name, "drawer_pull");
  for (std::size_t v = 0; v < s.variants.size(); ++v) {
    const ScenarioReport r = evaluate_scenario(s, v);
    EXPECT_FALSE(r.failed(s.tolerances)) << r.variant << " " << r.error;
    for (const auto& k : r.keypoints) EXPECT_LE(k.min_distance_transported, 1e-9);
  }
  EXPECT_THROW(load_scenario(fs::path(SOFTLFD_SCENARIO_DIR) / "missing.json"), IoError);
}
