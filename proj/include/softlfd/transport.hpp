#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include "softlfd/demonstration.hpp"
#include "softlfd/errors.hpp"
#include "softlfd/geometry.hpp"
#include "softlfd/json_io.hpp"

namespace softlfd {

inline constexpr double kDefaultRegularization = 1e-10;
inline constexpr double kMaxConditionNumber = 1e14;
inline constexpr double kDistinctTolerance = 1e-9;
/// Relative singular-value threshold below which a keypoint cloud is treated
/// as planar (or linear).
inline constexpr double kFlatnessTolerance = 1e-6;

enum class KeypointRole { kSource, kTarget };

inline const char* to_string(KeypointRole role) {
  return role == KeypointRole::kSource ? "source" : "target";
}

/// Ordered, registered keypoints: index i of a source set corresponds to
/// index i of its target set.
class KeypointSet {
 public:
  KeypointSet(std::vector<Vec3> points, KeypointRole role) : points_(std::move(points)), role_(role) {
    if (points_.empty()) throw ValidationError("keypoint set must not be empty");
    for (std::size_t i = 0; i < points_.size(); ++i) {
      if (!points_[i].allFinite()) {
        throw ValidationError("non-finite keypoint " + std::to_string(i));
      }
    }
  }

  std::size_t size() const { return points_.size(); }
  const std::vector<Vec3>& points() const { return points_; }
  const Vec3& operator[](std::size_t i) const { return points_[i]; }
  KeypointRole role() const { return role_; }

  /// First pair (i, j), i < j, closer than `tol`; {size(), size()} if none.
  std::pair<std::size_t, std::size_t> first_duplicate(double tol = kDistinctTolerance) const {
    for (std::size_t i = 0; i < points_.size(); ++i) {
      for (std::size_t j = i + 1; j < points_.size(); ++j) {
        if ((points_[i] - points_[j]).norm() <= tol) return {i, j};
      }
    }
    return {points_.size(), points_.size()};
  }

  bool has_duplicates(double tol = kDistinctTolerance) const {
    return first_duplicate(tol).first != points_.size();
  }

  void require_distinct(double tol = kDistinctTolerance) const {
    const auto [i, j] = first_duplicate(tol);
    if (i != points_.size()) {
      std::ostringstream os;
      os << to_string(role_) << " keypoints " << i << " and " << j << " coincide";
      throw ValidationError(os.str());
    }
  }

 private:
  std::vector<Vec3> points_;
  KeypointRole role_;
};

// {"points": [[x,y,z],...]}
inline json_io::json keypoints_to_json(const KeypointSet& set) {
  json_io::json pts = json_io::json::array();
  for (const auto& p : set.points()) pts.push_back(json_io::to_json(p));
  return {{"points", std::move(pts)}};
}

inline KeypointSet keypoints_from_json(const json_io::json& doc, KeypointRole role) {
  using namespace json_io;
  require_object(doc, "keypoint file");
  reject_unknown_keys(doc, {"points"}, "keypoint file");
  const json& pts = require_key(doc, "points", "keypoint file");
  if (!pts.is_array()) throw ParseError("points must be an array");
  std::vector<Vec3> points;
  for (const auto& p : pts) points.push_back(as_vector<3>(p, "keypoint"));
  KeypointSet set(std::move(points), role);
  set.require_distinct();
  return set;
}

inline KeypointSet load_keypoints(const std::filesystem::path& path, KeypointRole role) {
  try {
    return keypoints_from_json(json_io::read_file(path), role);
  } catch (const json_io::json::exception& e) {
    throw ParseError("'" + path.string() + "': " + e.what());
  }
}

inline void save_keypoints(const KeypointSet& set, const std::filesystem::path& path) {
  json_io::write_file(path, keypoints_to_json(set));
}

/// φ(q) = A·q + b + Σᵢ wᵢ·‖q − cᵢ‖, the 3-D polyharmonic (k(r) = r) kernel
/// expansion with a full affine term.
class DeformationMap {
 public:
  DeformationMap() : linear_(Mat3::Identity()), offset_(Vec3::Zero()) {}
  DeformationMap(Mat3 linear, Vec3 offset, std::vector<Vec3> centers, std::vector<Vec3> weights,
                 double regularization)
      : linear_(std::move(linear)),
        offset_(std::move(offset)),
        centers_(std::move(centers)),
        weights_(std::move(weights)),
        regularization_(regularization) {}

  const Mat3& linear() const { return linear_; }
  const Vec3& offset() const { return offset_; }
  const std::vector<Vec3>& centers() const { return centers_; }
  const std::vector<Vec3>& weights() const { return weights_; }
  double regularization() const { return regularization_; }

  Vec3 evaluate(const Vec3& q) const {
    Vec3 out = linear_ * q + offset_;
    for (std::size_t i = 0; i < centers_.size(); ++i) out += weights_[i] * (q - centers_[i]).norm();
    return out;
  }

  Vec3 operator()(const Vec3& q) const { return evaluate(q); }

  /// Analytic ∂φ/∂q = A + Σᵢ wᵢ·(q − cᵢ)ᵀ/‖q − cᵢ‖. The gradient of a kernel
  /// term is taken as 0 exactly at its center.
  Mat3 jacobian(const Vec3& q) const {
    Mat3 jac = linear_;
    for (std::size_t i = 0; i < centers_.size(); ++i) {
      const Vec3 d = q - centers_[i];
      const double r = d.norm();
      if (r > 0.0) jac += weights_[i] * (d / r).transpose();
    }
    return jac;
  }

  /// Largest kernel weight norm.
  double weight_norm() const {
    double n = 0.0;
    for (const auto& w : weights_) n = std::max(n, w.norm());
    return n;
  }

 private:
  Mat3 linear_;
  Vec3 offset_;
  std::vector<Vec3> centers_;
  std::vector<Vec3> weights_;
  double regularization_ = 0.0;
};

namespace detail {

inline Vec3 centroid(const std::vector<Vec3>& pts) {
  Vec3 c = Vec3::Zero();
  for (const auto& p : pts) c += p;
  return c / static_cast<double>(pts.size());
}

inline double rms_radius(const std::vector<Vec3>& pts, const Vec3& c) {
  double s = 0.0;
  for (const auto& p : pts) s += (p - c).squaredNorm();
  return std::sqrt(s / static_cast<double>(pts.size()));
}

/// Singular values (descending) of the centered point cloud.
inline Vec3 spread(const std::vector<Vec3>& pts) {
  const Vec3 c = centroid(pts);
  Eigen::MatrixXd m(static_cast<Eigen::Index>(pts.size()), 3);
  for (std::size_t i = 0; i < pts.size(); ++i) m.row(static_cast<Eigen::Index>(i)) = pts[i] - c;
  Vec3 sv = Vec3::Zero();
  const Eigen::VectorXd s = Eigen::JacobiSVD<Eigen::MatrixXd>(m).singularValues();
  for (Eigen::Index i = 0; i < std::min<Eigen::Index>(3, s.size()); ++i) sv[i] = s[i];
  return sv;
}

/// Rotation of minimal angle taking unit `from` onto unit `to`.
inline Mat3 minimal_rotation(const Vec3& from, const Vec3& to) {
  return Eigen::Quaterniond::FromTwoVectors(from, to).toRotationMatrix();
}

/// Two keypoints: uniform scale times the minimal rotation taking segment
/// s₀s₁ onto t₀t₁, plus translation.
inline DeformationMap fit_similarity(const KeypointSet& source, const KeypointSet& target,
                                     double lambda) {
  const Vec3 ds = source[1] - source[0];
  const Vec3 dt = target[1] - target[0];
  if (!(ds.norm() > kDistinctTolerance)) {
    throw DegenerateSystem("the two source keypoints coincide");
  }
  if (!(dt.norm() > kDistinctTolerance)) {
    throw DegenerateSystem("the two target keypoints coincide (map would collapse space)");
  }
  const Mat3 linear = (dt.norm() / ds.norm()) * minimal_rotation(ds.normalized(), dt.normalized());
  return DeformationMap(linear, target[0] - linear * source[0], {}, {}, lambda);
}

/// Largest-area triangle of the cloud; returns its unnormalized normal.
inline Vec3 dominant_normal(const std::vector<Vec3>& pts, std::size_t& a, std::size_t& b,
                            std::size_t& c) {
  double best = -1.0;
  Vec3 normal = Vec3::Zero();
  for (std::size_t i = 0; i < pts.size(); ++i) {
    for (std::size_t j = i + 1; j < pts.size(); ++j) {
      for (std::size_t k = j + 1; k < pts.size(); ++k) {
        const Vec3 n = (pts[j] - pts[i]).cross(pts[k] - pts[i]);
        if (n.norm() > best) {
          best = n.norm();
          normal = n;
          a = i;
          b = j;
          c = k;
        }
      }
    }
  }
  return normal;
}

}  // namespace detail

/// Fits φ with φ(sᵢ) = tᵢ (exactly for λ = 0; ridge λ on the kernel block
/// otherwise). One keypoint gives a translation, two a similarity transform.
/// Planar configurations (three or more points) are lifted with one virtual
/// keypoint pair off the plane so the affine term is determined; the pair is
/// built from the clouds' own normals and spreads, so rigid motions are
/// still reproduced exactly.
inline DeformationMap fit(const KeypointSet& source, const KeypointSet& target,
                          double lambda = kDefaultRegularization) {
  if (source.size() != target.size()) {
    std::ostringstream os;
    os << "source has " << source.size() << " keypoints, target has " << target.size();
    throw CountMismatch(os.str());
  }
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw ValidationError("regularization must be finite and >= 0");
  }
  const std::size_t n = source.size();
  if (n == 1) return DeformationMap(Mat3::Identity(), target[0] - source[0], {}, {}, lambda);
  if (n == 2) return detail::fit_similarity(source, target, lambda);

  std::vector<Vec3> centers = source.points();
  std::vector<Vec3> values = target.points();
  const Vec3 sv = detail::spread(centers);
  if (!(sv[1] > kFlatnessTolerance * sv[0])) {
    throw DegenerateSystem("source keypoints are collinear; the map is undetermined");
  }
  if (!(sv[2] > kFlatnessTolerance * sv[0])) {
    std::size_t a = 0, b = 0, c = 0;
    const Vec3 ns = detail::dominant_normal(centers, a, b, c);
    const Vec3 nt = (values[b] - values[a]).cross(values[c] - values[a]);
    if (!(nt.norm() > kFlatnessTolerance * (values[b] - values[a]).squaredNorm())) {
      throw DegenerateSystem("target keypoints are collinear where the sources span a plane");
    }
    const Vec3 cs = detail::centroid(centers);
    const Vec3 ct = detail::centroid(values);
    const double hs = detail::rms_radius(centers, cs);
    const double ht = detail::rms_radius(values, ct);
    centers.push_back(cs + hs * ns.normalized());
    values.push_back(ct + ht * nt.normalized());
  }

  const auto m = static_cast<Eigen::Index>(centers.size());
  const Vec3 origin = detail::centroid(centers);
  Eigen::MatrixXd sys = Eigen::MatrixXd::Zero(m + 4, m + 4);
  Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(m + 4, 3);
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto ui = static_cast<std::size_t>(i);
    for (Eigen::Index j = 0; j < m; ++j) {
      sys(i, j) = (centers[ui] - centers[static_cast<std::size_t>(j)]).norm();
    }
    sys(i, i) += lambda;
    sys(i, m) = 1.0;
    sys(m, i) = 1.0;
    const Vec3 local = centers[ui] - origin;
    for (Eigen::Index c = 0; c < 3; ++c) {
      sys(i, m + 1 + c) = local[c];
      sys(m + 1 + c, i) = local[c];
    }
    rhs.row(i) = values[ui].transpose();
  }

  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(sys, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& s = svd.singularValues();
  const double cond = s[s.size() - 1] > 0.0 ? s[0] / s[s.size() - 1] : INFINITY;
  if (!(cond <= kMaxConditionNumber)) {
    std::ostringstream os;
    os << "kernel system condition number " << cond << " exceeds " << kMaxConditionNumber
       << " (near-duplicate keypoints?)";
    throw DegenerateSystem(os.str());
  }
  const Eigen::MatrixXd sol = svd.solve(rhs);

  std::vector<Vec3> weights(static_cast<std::size_t>(m));
  for (Eigen::Index i = 0; i < m; ++i) weights[static_cast<std::size_t>(i)] = sol.row(i).transpose();
  const Vec3 constant = sol.row(m).transpose();
  const Mat3 linear = sol.block(m + 1, 0, 3, 3).transpose();
  return DeformationMap(linear, constant - linear * origin, std::move(centers), std::move(weights),
                        lambda);
}

/// x̂ᵢ = φ(xᵢ).
inline std::vector<Vec3> transport_positions(const DeformationMap& map, const Demonstration& demo) {
  std::vector<Vec3> out;
  out.reserve(demo.size());
  for (const auto& x : demo.positions()) out.push_back(map.evaluate(x));
  return out;
}

/// R̂ᵢ = polar(∂φ/∂x at xᵢ)·Rᵢ, with the Jacobian taken at the original
/// sample positions.
inline std::vector<Rotation> transport_orientations(const DeformationMap& map,
                                                    const Demonstration& demo) {
  std::vector<Rotation> out;
  out.reserve(demo.size());
  for (std::size_t i = 0; i < demo.size(); ++i) {
    try {
      out.push_back(polar_rotation(map.jacobian(demo.positions()[i])) * demo.orientations()[i]);
    } catch (const SingularJacobian& e) {
      std::ostringstream os;
      os << "deformation map folds at sample " << i << " (" << e.what() << ")";
      throw SingularJacobian(os.str(), i);
    }
  }
  return out;
}

/// Poses go through φ and its polar factor; servo labels and the sample
/// period are carried over unchanged.
inline TransportedDemonstration transport_demonstration(const DeformationMap& map,
                                                        const Demonstration& demo) {
  auto orientations = transport_orientations(map, demo);
  return TransportedDemonstration(transport_positions(map, demo), std::move(orientations),
                                  demo.servos(), demo.sample_period(), demo.jump_limit());
}

}  // namespace softlfd
