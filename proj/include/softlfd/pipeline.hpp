#pragma once

#include <cstddef>
#include <sstream>
#include <string>
#include <vector>

#include "softlfd/demonstration.hpp"
#include "softlfd/keypoint_projection.hpp"
#include "softlfd/policy.hpp"
#include "softlfd/simulation.hpp"
#include "softlfd/transport.hpp"

namespace softlfd {

inline constexpr std::size_t kDefaultMaxSteps = 100000;

/// Every tunable of the generalize-and-replay pipeline.
struct PipelineConfig {
  double regularization = kDefaultRegularization;  // λ
  bool projection = true;  // snap source keypoints onto the demonstration first
  PolicyConfig policy;
  FollowerConfig follower;
  std::size_t max_steps = kDefaultMaxSteps;
  Vec3 start_offset = Vec3::Zero();  // follower start relative to the first label
};

struct GeneralizationResult {
  ProjectionResult projection;  // identity projection when disabled
  DeformationMap map;
  TransportedDemonstration transported;
  std::vector<double> residuals;  // ‖φ(s̃ᵢ) − t̃ᵢ‖
  std::vector<std::string> warnings;
};

/// Projection (optional), fit and transport of one demonstration onto a new
/// keypoint configuration.
inline GeneralizationResult generalize(const Demonstration& demo, const KeypointSet& source,
                                       const KeypointSet& target, double regularization,
                                       bool projection = true) {
  if (source.size() != target.size()) {
    std::ostringstream os;
    os << "source has " << source.size() << " keypoints, target has " << target.size();
    throw CountMismatch(os.str());
  }
  std::vector<std::string> warnings;
  // Without projection the keypoints are used as given; the nearest sample
  // indices are still reported.
  ProjectionResult proj =
      projection ? project_and_shift(demo, source, target)
                 : ProjectionResult{source, target, std::vector<Vec3>(source.size(), Vec3::Zero()),
                                    project_sources(demo, source).indices};
  if (const auto [i, j] = proj.projected_source.first_duplicate(); i != proj.projected_source.size()) {
    std::ostringstream os;
    os << "DegenerateSystem: source keypoints " << i << " and " << j
       << " project to the same demonstration sample " << proj.indices[i]
       << "; relying on regularization " << regularization;
    warnings.push_back(os.str());
  }
  DeformationMap map = fit(proj.projected_source, proj.shifted_target, regularization);
  std::vector<double> residuals;
  for (std::size_t i = 0; i < source.size(); ++i) {
    residuals.push_back((map.evaluate(proj.projected_source[i]) - proj.shifted_target[i]).norm());
  }
  TransportedDemonstration transported = transport_demonstration(map, demo);
  return {std::move(proj), std::move(map), std::move(transported), std::move(residuals),
          std::move(warnings)};
}

inline FollowerState start_state(const Demonstration& demo, const Vec3& offset) {
  return {Pose{demo.positions().front() + offset, demo.orientations().front()}, demo.servos().front(),
          0};
}

/// Smallest distance from `point` to any sample of `path`.
inline double min_distance(const std::vector<Vec3>& path, const Vec3& point) {
  double best = INFINITY;
  for (const auto& x : path) best = std::min(best, (x - point).norm());
  return best;
}

}  // namespace softlfd
