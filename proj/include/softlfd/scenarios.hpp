#pragma once

#include <cstddef>
#include <filesystem>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "softlfd/demonstration.hpp"
#include "softlfd/errors.hpp"
#include "softlfd/json_io.hpp"
#include "softlfd/pipeline.hpp"

namespace softlfd {

struct ScenarioVariant {
  std::string name;
  std::vector<Vec3> target;
};

struct ScenarioTolerances {
  double track = kDefaultTrackTolerance;  // m
  double residual = 1e-9;                 // m
};

/// A task template: a demonstration recipe, the keypoints observed while
/// demonstrating, and target configurations to generalize to.
struct Scenario {
  std::string name;
  DemoSpec demo;
  std::vector<Vec3> source;
  std::vector<ScenarioVariant> variants;
  ScenarioTolerances tolerances;

  KeypointSet source_set() const { return KeypointSet(source, KeypointRole::kSource); }
  KeypointSet target_set(std::size_t variant) const {
    return KeypointSet(variants.at(variant).target, KeypointRole::kTarget);
  }

  void validate() const {
    if (name.empty()) throw InvalidScenario("scenario needs a name");
    if (demo.waypoints.size() < 2) throw InvalidScenario(name + ": need at least 2 waypoints");
    for (const auto& w : demo.waypoints) {
      if (!w.position.allFinite()) throw InvalidScenario(name + ": non-finite waypoint");
    }
    if (source.empty()) throw InvalidScenario(name + ": no source keypoints");
    for (const auto& v : variants) {
      if (v.target.size() != source.size()) {
        throw InvalidScenario(name + ": variant '" + v.name + "' has " +
                              std::to_string(v.target.size()) + " keypoints, source has " +
                              std::to_string(source.size()));
      }
    }
  }
};

namespace detail {

// Tool axis pointing down, rotated by `yaw` about world z.
inline Rotation tool_down(double yaw) {
  return Rotation::about_axis(Vec3::UnitZ(), yaw) * Rotation::about_axis(Vec3::UnitX(), std::numbers::pi);
}

inline Scenario make_stacking() {
  Scenario s;
  s.name = "stacking";
  const Vec3 medium(0.40, -0.12, 0.06);  // grasp rim of the medium cup
  const Vec3 large(0.42, 0.14, 0.08);    // place above the large cup
  const Vec3 small(0.56, 0.02, 0.04);    // small cup, passed over on the way out
  s.demo.samples = 400;
  s.demo.waypoints = {
      {{0.30, 0.00, 0.25}, tool_down(0.0)},
      {{0.40, -0.12, 0.15}, tool_down(0.3)},
      {medium, tool_down(0.3)},
      {{0.41, -0.10, 0.18}, tool_down(0.3)},
      {{0.42, 0.12, 0.20}, tool_down(-0.2)},
      {large, tool_down(-0.2)},
      {{0.42, 0.16, 0.22}, tool_down(0.0)},
      {{0.52, 0.06, 0.20}, tool_down(0.0)},
      {{0.56, 0.02, 0.14}, tool_down(0.0)},
  };
  const auto idx = waypoint_sample_indices(s.demo);
  s.demo.servo_schedule = {{idx[2], Vec2(1.2, 0.0)}, {idx[5], Vec2(0.0, 0.0)}};
  s.source = {medium, large, small};
  s.variants = {
      {"cup_moved", {medium + Vec3(0.0, 0.10, 0.0), large, small}},
      {"nonrigid", {medium + Vec3(0.06, -0.05, 0.0), large + Vec3(-0.05, 0.06, 0.02), small}},
      {"identity", s.source},
  };
  return s;
}

inline Scenario make_narrow_opening() {
  Scenario s;
  s.name = "narrow_opening";
  const Vec3 left_edge(0.49, -0.035, 0.12);
  const Vec3 right_edge(0.51, 0.035, 0.12);
  const Vec3 object(0.62, 0.00, 0.05);
  s.demo.samples = 300;
  s.demo.waypoints = {
      {{0.35, 0.00, 0.20}, tool_down(0.0)},
      {{0.45, 0.00, 0.13}, tool_down(0.0)},
      {{0.50, 0.00, 0.12}, tool_down(0.1)},
      {{0.56, 0.00, 0.09}, tool_down(0.2)},
      {object, tool_down(0.2)},
      {{0.63, 0.01, 0.08}, tool_down(0.2)},
  };
  const auto idx = waypoint_sample_indices(s.demo);
  s.demo.servo_schedule = {{idx[4], Vec2(0.9, 0.0)}};
  s.source = {left_edge, right_edge, object};
  s.variants = {
      {"object_displaced", {left_edge, right_edge, object + Vec3(0.04, 0.06, 0.0)}},
      {"opening_shifted", {left_edge + Vec3(0.0, 0.05, 0.0), right_edge + Vec3(0.0, 0.05, 0.0),
                           object + Vec3(0.0, 0.05, 0.0)}},
      {"identity", s.source},
  };
  return s;
}

inline Scenario make_hollow_grasp() {
  Scenario s;
  s.name = "hollow_grasp";
  const Vec3 opening(0.50, 0.10, 0.10);
  s.demo.samples = 350;
  s.demo.waypoints = {
      {{0.35, 0.00, 0.25}, tool_down(0.0)},
      {{0.50, 0.10, 0.20}, tool_down(0.4)},
      {opening, tool_down(0.4)},
      {{0.50, 0.10, 0.06}, tool_down(0.4)},
      {{0.49, 0.09, 0.22}, tool_down(0.4)},
      {{0.40, -0.05, 0.20}, tool_down(0.0)},
  };
  const auto idx = waypoint_sample_indices(s.demo);
  // Twist cable wound up in steps while the arm is inside the object.
  std::vector<ServoStep> schedule;
  const std::size_t inside = idx[2];
  const std::size_t bottom = idx[3];
  for (std::size_t k = 0; k < 5; ++k) {
    schedule.push_back({inside + k * (bottom - inside) / 5, Vec2(0.3, 0.6 * static_cast<double>(k + 1))});
  }
  schedule.push_back({idx[4], Vec2(0.3, 3.0)});
  s.demo.servo_schedule = std::move(schedule);
  s.source = {opening};
  s.variants = {
      {"object_displaced", {opening + Vec3(0.08, -0.08, 0.02)}},
      {"identity", s.source},
  };
  return s;
}

}  // namespace detail

/// The three built-in task templates: stacking, narrow_opening, hollow_grasp.
inline std::vector<Scenario> builtin_scenarios() {
  return {detail::make_stacking(), detail::make_narrow_opening(), detail::make_hollow_grasp()};
}

inline std::vector<std::string> builtin_scenario_names() {
  std::vector<std::string> names;
  for (const auto& s : builtin_scenarios()) names.push_back(s.name);
  return names;
}

inline Scenario builtin_scenario(const std::string& name) {
  for (auto& s : builtin_scenarios()) {
    if (s.name == name) return s;
  }
  std::string msg = "unknown scenario '" + name + "'; available:";
  for (const auto& n : builtin_scenario_names()) msg += " " + n;
  throw UnknownScenario(msg);
}

// --- scenario file ---------------------------------------------------------

inline json_io::json scenario_to_json(const Scenario& s) {
  using json_io::json;
  using json_io::to_json;
  json waypoints = json::array();
  for (const auto& w : s.demo.waypoints) {
    waypoints.push_back({{"position", to_json(w.position)},
                         {"orientation", to_json(w.orientation.to_quaternion())}});
  }
  json schedule = json::array();
  for (const auto& step : s.demo.servo_schedule) {
    schedule.push_back({{"from_index", step.from_index}, {"servos", to_json(step.servos)}});
  }
  json source = json::array();
  for (const auto& p : s.source) source.push_back(to_json(p));
  json variants = json::array();
  for (const auto& v : s.variants) {
    json target = json::array();
    for (const auto& p : v.target) target.push_back(to_json(p));
    variants.push_back({{"name", v.name}, {"target", std::move(target)}});
  }
  return {{"name", s.name},
          {"demonstration",
           {{"samples", s.demo.samples},
            {"sample_period", s.demo.sample_period},
            {"waypoints", std::move(waypoints)},
            {"servo_schedule", std::move(schedule)}}},
          {"source", std::move(source)},
          {"variants", std::move(variants)},
          {"tolerances", {{"track", s.tolerances.track}, {"residual", s.tolerances.residual}}}};
}

inline Scenario scenario_from_json(const json_io::json& doc) {
  using namespace json_io;
  auto points = [](const json& j, std::string_view what) {
    if (!j.is_array()) throw ParseError(std::string(what) + " must be an array");
    std::vector<Vec3> out;
    for (const auto& p : j) out.push_back(as_vector<3>(p, what));
    return out;
  };
  auto count = [](const json& j, std::string_view what) -> std::size_t {
    if (!j.is_number_unsigned()) throw ParseError(std::string(what) + " must be a non-negative integer");
    return j.get<std::size_t>();
  };

  require_object(doc, "scenario");
  reject_unknown_keys(doc, {"name", "demonstration", "source", "variants", "tolerances"}, "scenario");
  Scenario s;
  const json& name = require_key(doc, "name", "scenario");
  if (!name.is_string()) throw ParseError("scenario name must be a string");
  s.name = name.get<std::string>();

  const json& demo = require_object(require_key(doc, "demonstration", "scenario"), "demonstration");
  reject_unknown_keys(demo, {"samples", "sample_period", "waypoints", "servo_schedule"},
                      "scenario demonstration");
  s.demo.samples = count(require_key(demo, "samples", "demonstration"), "samples");
  if (demo.contains("sample_period")) s.demo.sample_period = as_number(demo["sample_period"], "sample_period");
  const json& wps = require_key(demo, "waypoints", "demonstration");
  if (!wps.is_array()) throw ParseError("waypoints must be an array");
  for (const auto& w : wps) {
    require_object(w, "waypoint");
    reject_unknown_keys(w, {"position", "orientation"}, "waypoint");
    Waypoint wp{as_vector<3>(require_key(w, "position", "waypoint"), "waypoint position"),
                Rotation::identity()};
    if (w.contains("orientation")) {
      wp.orientation = Rotation::from_quaternion(as_vector<4>(w["orientation"], "waypoint orientation"));
    }
    s.demo.waypoints.push_back(wp);
  }
  if (demo.contains("servo_schedule")) {
    const json& sched = demo["servo_schedule"];
    if (!sched.is_array()) throw ParseError("servo_schedule must be an array");
    for (const auto& step : sched) {
      require_object(step, "servo step");
      reject_unknown_keys(step, {"from_index", "servos"}, "servo step");
      s.demo.servo_schedule.push_back(
          {count(require_key(step, "from_index", "servo step"), "from_index"),
           as_vector<2>(require_key(step, "servos", "servo step"), "servos")});
    }
  }

  s.source = points(require_key(doc, "source", "scenario"), "source keypoint");
  const json& variants = require_key(doc, "variants", "scenario");
  if (!variants.is_array()) throw ParseError("variants must be an array");
  for (const auto& v : variants) {
    require_object(v, "variant");
    reject_unknown_keys(v, {"name", "target"}, "variant");
    const json& vname = require_key(v, "name", "variant");
    if (!vname.is_string()) throw ParseError("variant name must be a string");
    s.variants.push_back({vname.get<std::string>(), points(require_key(v, "target", "variant"), "target keypoint")});
  }
  if (doc.contains("tolerances")) {
    const json& tol = require_object(doc["tolerances"], "tolerances");
    reject_unknown_keys(tol, {"track", "residual"}, "tolerances");
    if (tol.contains("track")) s.tolerances.track = as_number(tol["track"], "track tolerance");
    if (tol.contains("residual")) s.tolerances.residual = as_number(tol["residual"], "residual tolerance");
  }
  s.validate();
  return s;
}

inline Scenario load_scenario(const std::filesystem::path& path) {
  try {
    return scenario_from_json(json_io::read_file(path));
  } catch (const json_io::json::exception& e) {
    throw ParseError("'" + path.string() + "': " + e.what());
  }
}

// --- evaluation ------------------------------------------------------------

struct KeypointReport {
  Vec3 shift = Vec3::Zero();
  std::size_t sample_index = 0;
  double residual = 0.0;                 // ‖φ(s̃ᵢ) − t̃ᵢ‖
  double min_distance_transported = 0.0;  // transported path to tᵢ
  double min_distance_original = 0.0;     // original path to tᵢ
};

struct ScenarioReport {
  std::string scenario;
  std::string variant;
  std::vector<KeypointReport> keypoints;
  double max_residual = 0.0;
  double max_rotation_error = 0.0;  // over transported orientations
  bool converged = false;
  std::size_t steps = 0;
  double final_error = 0.0;
  std::vector<std::string> warnings;
  std::string error;  // "<Kind>: detail" when the pipeline failed

  /// Pipeline error, missed convergence or out-of-tolerance residual.
  bool failed(const ScenarioTolerances& tol) const {
    return !error.empty() || !converged || !(max_residual <= tol.residual);
  }
};

/// Raised by evaluate_scenario; keeps the original error kind and carries the
/// report filled up to the failing stage.
class ScenarioFailure : public Error {
 public:
  ScenarioFailure(const Error& cause, const std::string& context, ScenarioReport partial)
      : Error(cause.kind(), context + ": " + strip_kind(cause)), partial_(std::move(partial)) {}

  const ScenarioReport& partial_report() const noexcept { return partial_; }

 private:
  static std::string strip_kind(const Error& e) {
    const std::string what = e.what();
    const std::string prefix = e.kind() + ": ";
    return what.rfind(prefix, 0) == 0 ? what.substr(prefix.size()) : what;
  }

  ScenarioReport partial_;
};

/// Projection, fit, transport and rollout for one scenario variant.
/// Deterministic for a fixed scenario and configuration.
inline ScenarioReport evaluate_scenario(const Scenario& scenario, std::size_t variant,
                                        const PipelineConfig& config = {}) {
  if (variant >= scenario.variants.size()) {
    throw InvalidScenario(scenario.name + ": no variant " + std::to_string(variant));
  }
  ScenarioReport report;
  report.scenario = scenario.name;
  report.variant = scenario.variants[variant].name;
  const std::string context = "scenario '" + scenario.name + "' variant '" + report.variant + "'";
  try {
    scenario.validate();
    const Demonstration demo = synthesize_demonstration(scenario.demo);
    const KeypointSet source = scenario.source_set();
    const KeypointSet target = scenario.target_set(variant);
    const GeneralizationResult gen =
        generalize(demo, source, target, config.regularization, config.projection);
    report.warnings = gen.warnings;
    for (std::size_t i = 0; i < source.size(); ++i) {
      KeypointReport k;
      k.shift = gen.projection.shifts[i];
      k.sample_index = gen.projection.indices[i];
      k.residual = gen.residuals[i];
      k.min_distance_transported = min_distance(gen.transported.positions(), target[i]);
      k.min_distance_original = min_distance(demo.positions(), target[i]);
      report.max_residual = std::max(report.max_residual, k.residual);
      report.keypoints.push_back(k);
    }
    for (const auto& r : gen.transported.orientations()) {
      report.max_rotation_error = std::max(report.max_rotation_error, rotation_error(r.matrix()));
    }
    try {
      const SimTrace trace =
          run_rollout(gen.transported, config.policy, config.follower, config.max_steps,
                      start_state(gen.transported, config.start_offset), scenario.name);
      report.converged = true;
      report.steps = trace.records.size();
      report.final_error = trace.final_error;
    } catch (const DidNotConverge& e) {
      report.converged = false;
      report.steps = e.trace().records.size();
      report.final_error = e.trace().final_error;
      report.error = e.what();
    }
  } catch (const Error& e) {
    report.error = e.what();
    throw ScenarioFailure(e, context, std::move(report));
  }
  return report;
}

}  // namespace softlfd
