#pragma once

// Random generators shared by the unit and acceptance suites.

#include <cmath>
#include <random>
#include <vector>

#include "softlfd/demonstration.hpp"
#include "softlfd/geometry.hpp"
#include "softlfd/transport.hpp"

namespace softlfd::testing {

using Rng = std::mt19937_64;

inline double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline Vec3 random_point(Rng& rng, double lo = -0.3, double hi = 0.3) {
  return {uniform(rng, lo, hi), uniform(rng, lo, hi), uniform(rng, lo, hi)};
}

inline Rotation random_rotation(Rng& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  return Rotation::from_quaternion(Vec4(n(rng), n(rng), n(rng), n(rng)).normalized());
}

inline Mat3 random_matrix(Rng& rng, double scale = 1.0) {
  Mat3 m;
  for (int i = 0; i < 9; ++i) m.data()[i] = uniform(rng, -scale, scale);
  return m;
}

/// `n` points in a 0.6 m box, pairwise at least `min_sep` apart and not
/// close to coplanar.
inline std::vector<Vec3> well_conditioned_points(Rng& rng, std::size_t n, double min_sep = 0.05) {
  while (true) {
    std::vector<Vec3> pts;
    while (pts.size() < n) {
      const Vec3 p = random_point(rng);
      bool ok = true;
      for (const auto& q : pts) ok = ok && (p - q).norm() >= min_sep;
      if (ok) pts.push_back(p);
    }
    if (n < 4) return pts;
    Vec3 c = Vec3::Zero();
    for (const auto& p : pts) c += p;
    c /= static_cast<double>(n);
    Eigen::MatrixXd m(static_cast<Eigen::Index>(n), 3);
    for (std::size_t i = 0; i < n; ++i) m.row(static_cast<Eigen::Index>(i)) = pts[i] - c;
    const Eigen::VectorXd s = Eigen::JacobiSVD<Eigen::MatrixXd>(m).singularValues();
    if (s[2] > 0.1 * s[0]) return pts;
  }
}

/// Straight, evenly sampled demonstration from `a` to `b` with identity
/// orientation and zero servos.
inline Demonstration straight_demo(const Vec3& a, const Vec3& b, std::size_t m) {
  std::vector<Vec3> pos;
  for (std::size_t i = 0; i < m; ++i) {
    pos.push_back(a + (b - a) * (static_cast<double>(i) / static_cast<double>(m - 1)));
  }
  return Demonstration(pos, std::vector<Rotation>(m), std::vector<Vec2>(m, Vec2::Zero()), 0.01);
}

/// Smooth wandering demonstration through random waypoints.
inline Demonstration random_demo(Rng& rng, std::size_t waypoints = 5, std::size_t samples = 300) {
  DemoSpec spec;
  spec.samples = samples;
  for (std::size_t k = 0; k < waypoints; ++k) {
    spec.waypoints.push_back({random_point(rng, -0.2, 0.2), random_rotation(rng)});
  }
  spec.servo_schedule = {{samples / 3, Vec2(uniform(rng, 0, 2), uniform(rng, 0, 2))}};
  return synthesize_demonstration(spec);
}

inline double max_abs_diff(const Mat3& a, const Mat3& b) { return (a - b).cwiseAbs().maxCoeff(); }

}  // namespace softlfd::testing
