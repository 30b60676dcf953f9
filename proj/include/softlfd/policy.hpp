#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>

#include "softlfd/demonstration.hpp"
#include "softlfd/errors.hpp"
#include "softlfd/geometry.hpp"

namespace softlfd {

// Any γ > 0 stalls wherever the local sample spacing falls to γ·Δ̄ or
// below: a follower converging on x_{c+1} then never scores it under x_c.
// Spline demonstrations slow to a few percent of Δ̄ at sharp turns, so time
// enters through the forward-only window by default.
inline constexpr double kDefaultTimeWeight = 0.0;
inline constexpr std::size_t kDefaultSearchWindow = 20;
inline constexpr double kDefaultServoStep = 0.05;

struct PolicyConfig {
  double time_weight = kDefaultTimeWeight;  // γ, dimensionless
  std::size_t window = kDefaultSearchWindow;  // W, samples
};

struct AttractorCommand {
  Pose pose;
  Vec2 servo_target = Vec2::Zero();
  std::size_t label = 0;
  bool done = false;
};

/// Reactive replay of a demonstration. Each call picks the label closest to
/// the robot in position and time among
/// [current, min(current + W, M − 1)], scoring ‖p − xᵢ‖ + γ·(i − current)·Δ̄
/// with Δ̄ the mean sample spacing, and commands the label after it. Ties go
/// to the later sample so dwells (repeated positions) are passed through.
/// Selection never moves backwards. The demonstration must outlive the policy.
class AttractorPolicy {
 public:
  explicit AttractorPolicy(const Demonstration& demo, PolicyConfig config = {},
                           std::size_t start_index = 0)
      : demo_(&demo), config_(config), current_(start_index) {
    if (!(config.time_weight >= 0.0)) throw ValidationError("time weight must be >= 0");
    if (config.window < 1) throw ValidationError("search window must be >= 1");
    if (start_index >= demo.size()) throw ValidationError("start index out of range");
    spacing_ = demo.mean_spacing();
    // A stationary demonstration has no length scale; fall back to meters.
    if (!(spacing_ > 0.0)) spacing_ = 1.0;
  }

  std::size_t current_index() const { return current_; }
  const Demonstration& demonstration() const { return *demo_; }
  const PolicyConfig& config() const { return config_; }

  AttractorCommand select(const Vec3& robot_position) {
    const std::size_t last = demo_->size() - 1;
    const std::size_t end = std::min(current_ + config_.window, last);
    const auto& xs = demo_->positions();
    std::size_t best = current_;
    double best_score = std::numeric_limits<double>::infinity();
    for (std::size_t i = current_; i <= end; ++i) {
      const double score = (robot_position - xs[i]).norm() +
                           config_.time_weight * static_cast<double>(i - current_) * spacing_;
      if (score <= best_score) {
        best_score = score;
        best = i;
      }
    }
    current_ = best;
    const std::size_t label = std::min(best + 1, last);
    return {demo_->pose(label), demo_->servos()[label], label, best == last};
  }

 private:
  const Demonstration* demo_;
  PolicyConfig config_;
  std::size_t current_;
  double spacing_ = 1.0;
};

/// Moves each servo channel toward `target` by at most `step` radians, never
/// below zero. Models the button-driven servo interface.
inline Vec2 servo_step_quantize(const Vec2& current, const Vec2& target, double step) {
  if (!(step > 0.0)) throw ValidationError("servo step must be positive");
  Vec2 out;
  for (int c = 0; c < 2; ++c) {
    const double delta = target[c] - current[c];
    const double moved = std::abs(delta) <= step ? target[c] : current[c] + std::copysign(step, delta);
    out[c] = std::max(0.0, moved);
  }
  return out;
}

}  // namespace softlfd
