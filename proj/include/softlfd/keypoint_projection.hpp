#pragma once

#include <cstddef>
#include <sstream>
#include <utility>
#include <vector>

#include "softlfd/demonstration.hpp"
#include "softlfd/errors.hpp"
#include "softlfd/transport.hpp"

namespace softlfd {

/// Source keypoints snapped onto the demonstrated path and the targets moved
/// by the same offsets.
struct ProjectionResult {
  KeypointSet projected_source;
  KeypointSet shifted_target;
  std::vector<Vec3> shifts;
  std::vector<std::size_t> indices;

  /// True when two keypoints snapped to the same demonstration sample.
  bool has_collisions() const { return projected_source.has_duplicates(); }
};

struct Projection {
  KeypointSet points;
  std::vector<std::size_t> indices;
};

/// s̃ᵢ = argmin over demonstration positions x of ‖x − sᵢ‖, lowest index on ties.
inline Projection project_sources(const Demonstration& demo, const KeypointSet& source) {
  std::vector<Vec3> projected;
  std::vector<std::size_t> indices;
  projected.reserve(source.size());
  indices.reserve(source.size());
  const auto& xs = demo.positions();
  for (const auto& s : source.points()) {
    std::size_t best = 0;
    double best_d = (xs[0] - s).squaredNorm();
    for (std::size_t i = 1; i < xs.size(); ++i) {
      const double d = (xs[i] - s).squaredNorm();
      if (d < best_d) {
        best_d = d;
        best = i;
      }
    }
    projected.push_back(xs[best]);
    indices.push_back(best);
  }
  return {KeypointSet(std::move(projected), KeypointRole::kSource), std::move(indices)};
}

namespace detail {
inline void require_same_count(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    std::ostringstream os;
    os << what << ": " << a << " vs " << b;
    throw CountMismatch(os.str());
  }
}
}  // namespace detail

/// Δᵢ = s̃ᵢ − sᵢ.
inline std::vector<Vec3> compute_shifts(const KeypointSet& source, const KeypointSet& projected) {
  detail::require_same_count(source.size(), projected.size(), "source vs projected keypoints");
  std::vector<Vec3> shifts;
  shifts.reserve(source.size());
  for (std::size_t i = 0; i < source.size(); ++i) shifts.push_back(projected[i] - source[i]);
  return shifts;
}

/// t̃ᵢ = tᵢ + Δᵢ.
inline KeypointSet shift_targets(const KeypointSet& target, const std::vector<Vec3>& shifts) {
  detail::require_same_count(target.size(), shifts.size(), "target keypoints vs shifts");
  std::vector<Vec3> out;
  out.reserve(target.size());
  for (std::size_t i = 0; i < target.size(); ++i) out.push_back(target[i] + shifts[i]);
  return KeypointSet(std::move(out), KeypointRole::kTarget);
}

inline ProjectionResult project_and_shift(const Demonstration& demo, const KeypointSet& source,
                                          const KeypointSet& target) {
  detail::require_same_count(source.size(), target.size(), "source vs target keypoints");
  auto projection = project_sources(demo, source);
  auto shifts = compute_shifts(source, projection.points);
  auto shifted = shift_targets(target, shifts);
  return {std::move(projection.points), std::move(shifted), std::move(shifts),
          std::move(projection.indices)};
}

}  // namespace softlfd
