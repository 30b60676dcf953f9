#pragma once

#include <cmath>
#include <cstddef>
#include <cstdio>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "softlfd/demonstration.hpp"
#include "softlfd/errors.hpp"
#include "softlfd/geometry.hpp"
#include "softlfd/json_io.hpp"
#include "softlfd/policy.hpp"

namespace softlfd {

// Soft arm geometry (meters).
inline constexpr double kArmLength = 0.380;
inline constexpr double kArmBaseRadius = 0.0175;
inline constexpr double kArmTipRadius = 0.0035;
inline constexpr std::size_t kArmSamples = 50;
// Cable gains. A full 2π pull on the bending cable curls the arm by 1.5
// turns; the same pull on the twist cable rotates the bending plane by π
// along the length. Rendering constants only.
inline constexpr double kBendGain = 1.5 / kArmLength;  // curvature per radian of pull, 1/m
inline constexpr double kTwistGain = 0.5;              // twist per radian of pull

inline constexpr double kDefaultFollowerGain = 0.3;
inline constexpr double kDefaultTrackTolerance = 1e-3;

struct FollowerConfig {
  double gain = kDefaultFollowerGain;  // α in (0, 1]
  double servo_step = kDefaultServoStep;
  double track_tolerance = kDefaultTrackTolerance;
};

struct FollowerState {
  Pose pose;
  Vec2 servo = Vec2::Zero();
  std::size_t step_count = 0;
};

/// First-order kinematic tracker: moves a fraction α of the way to the
/// attractor pose (straight line in position, geodesic in orientation) and
/// one quantized step toward the servo target.
inline FollowerState step_follower(const FollowerState& state, const AttractorCommand& cmd,
                                   double gain, double servo_step = kDefaultServoStep) {
  if (!(gain > 0.0 && gain <= 1.0)) throw ValidationError("follower gain must be in (0, 1]");
  FollowerState next;
  if (gain == 1.0) {
    next.pose = cmd.pose;
  } else {
    next.pose.position = state.pose.position + gain * (cmd.pose.position - state.pose.position);
    next.pose.orientation = geodesic_interpolate(state.pose.orientation, cmd.pose.orientation, gain);
  }
  next.servo = servo_step_quantize(state.servo, cmd.servo_target, servo_step);
  next.step_count = state.step_count + 1;
  return next;
}

/// Rendered centerline of the tapered soft arm in its base frame (base at
/// the origin, tool axis +z, ventral bending toward +x). The bend cable sets
/// a constant curvature, the twist cable a constant torsion, so the
/// backbone is a circular helix parametrized by arc length.
struct SoftArmShape {
  double curvature = 0.0;  // 1/m
  double torsion = 0.0;    // rad/m
  std::vector<Vec3> centerline;
  std::vector<double> radii;

  /// Exact backbone point at arc length `s` in [0, kArmLength].
  Vec3 point_at(double s) const {
    const Vec3 tangent = Vec3::UnitZ();
    const Vec3 darboux = torsion * tangent + curvature * Vec3::UnitY();
    const double rate = darboux.norm();
    if (rate == 0.0) return s * tangent;
    const Vec3 axis = darboux / rate;
    const Vec3 along = axis.dot(tangent) * axis;
    const Vec3 across = tangent - along;
    return along * s + across * (std::sin(rate * s) / rate) +
           axis.cross(tangent) * ((1.0 - std::cos(rate * s)) / rate);
  }

  double radius_at(double s) const {
    return kArmBaseRadius + (kArmTipRadius - kArmBaseRadius) * (s / kArmLength);
  }
};

inline SoftArmShape soft_arm_shape(const Vec2& servo) {
  if (!servo.allFinite() || (servo.array() < 0.0).any()) {
    throw ValidationError("servo positions must be finite and non-negative");
  }
  SoftArmShape shape;
  shape.curvature = kBendGain * servo[kBend];
  shape.torsion = kTwistGain * servo[kTwist] / kArmLength;
  shape.centerline.reserve(kArmSamples);
  shape.radii.reserve(kArmSamples);
  for (std::size_t k = 0; k < kArmSamples; ++k) {
    const double s = kArmLength * static_cast<double>(k) / static_cast<double>(kArmSamples - 1);
    shape.centerline.push_back(shape.point_at(s));
    shape.radii.push_back(shape.radius_at(s));
  }
  return shape;
}

struct TraceRecord {
  FollowerState state;
  std::size_t attractor_index = 0;
  SoftArmShape arm;
};

struct SimTrace {
  std::string scenario;
  std::vector<TraceRecord> records;
  bool converged = false;
  double final_error = 0.0;  // distance of the follower to the last label, m
};

/// Raised when a rollout hits max_steps; the partial trace is attached.
class DidNotConverge : public Error {
 public:
  DidNotConverge(const std::string& detail, SimTrace trace)
      : Error("DidNotConverge", detail), trace_(std::move(trace)) {}

  const SimTrace& trace() const noexcept { return trace_; }

 private:
  SimTrace trace_;
};

/// Drives the follower with the attractor policy until the policy reports
/// the final label and the follower is within the tracking tolerance of it.
/// The follower starts at `start` or, by default, at the first label.
inline SimTrace run_rollout(const Demonstration& demo, const PolicyConfig& policy_config,
                            const FollowerConfig& follower, std::size_t max_steps,
                            std::optional<FollowerState> start = std::nullopt,
                            std::string scenario = {}) {
  if (max_steps < 1) throw ValidationError("max_steps must be >= 1");
  if (!(follower.track_tolerance > 0.0)) throw ValidationError("track tolerance must be > 0");
  AttractorPolicy policy(demo, policy_config);
  FollowerState state = start.value_or(FollowerState{demo.pose(0), demo.servos()[0], 0});
  state.step_count = 0;
  const Vec3 goal = demo.positions().back();

  SimTrace trace;
  trace.scenario = std::move(scenario);
  while (true) {
    const AttractorCommand cmd = policy.select(state.pose.position);
    trace.final_error = (state.pose.position - goal).norm();
    if (cmd.done && trace.final_error <= follower.track_tolerance) {
      trace.converged = true;
      return trace;
    }
    if (state.step_count >= max_steps) break;
    state = step_follower(state, cmd, follower.gain, follower.servo_step);
    trace.records.push_back({state, cmd.label, soft_arm_shape(state.servo)});
  }
  std::ostringstream os;
  os << "no convergence after " << max_steps << " steps (label " << policy.current_index() << "/"
     << demo.size() - 1 << ", error " << trace.final_error << " m)";
  throw DidNotConverge(os.str(), std::move(trace));
}

// --- export ----------------------------------------------------------------

namespace detail {
inline std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}
}  // namespace detail

/// step,x,y,z,qw,qx,qy,qz,l0,l1,attractor_index
inline std::string trace_to_csv(const SimTrace& trace) {
  std::string out = "step,x,y,z,qw,qx,qy,qz,l0,l1,attractor_index\n";
  for (const auto& r : trace.records) {
    const auto& p = r.state.pose.position;
    const Vec4 q = r.state.pose.orientation.to_quaternion();
    out += std::to_string(r.state.step_count);
    for (double v : {p[0], p[1], p[2], q[0], q[1], q[2], q[3], r.state.servo[0], r.state.servo[1]}) {
      out += ',';
      out += detail::fmt_double(v);
    }
    out += ',' + std::to_string(r.attractor_index) + '\n';
  }
  return out;
}

/// Per-step records; the arm centerline is exported in the world frame,
/// mounted at the follower pose.
inline json_io::json trace_to_json(const SimTrace& trace) {
  using json_io::json;
  using json_io::to_json;
  json steps = json::array();
  for (const auto& r : trace.records) {
    const Pose& pose = r.state.pose;
    json centerline = json::array();
    for (const auto& c : r.arm.centerline) centerline.push_back(to_json(pose.position + pose.orientation * c));
    steps.push_back({{"step", r.state.step_count},
                     {"position", to_json(pose.position)},
                     {"orientation", to_json(pose.orientation.to_quaternion())},
                     {"servo", to_json(r.state.servo)},
                     {"attractor_index", r.attractor_index},
                     {"arm", {{"centerline", std::move(centerline)}, {"radii", r.arm.radii}}}});
  }
  return {{"scenario", trace.scenario},
          {"converged", trace.converged},
          {"final_error", trace.final_error},
          {"steps", std::move(steps)}};
}

}  // namespace softlfd
