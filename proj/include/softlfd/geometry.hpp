#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

#include "softlfd/errors.hpp"

namespace softlfd {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Mat3 = Eigen::Matrix3d;

inline constexpr double kRotationTolerance = 1e-9;
inline constexpr double kSingularDeterminant = 1e-12;
inline constexpr double kQuaternionNormTolerance = 1e-3;
inline constexpr double kDefaultJacobianStep = 1e-5;

/// Largest absolute deviation of `m` from SO(3): max(‖MᵀM − I‖_max, |det M − 1|).
inline double rotation_error(const Mat3& m) {
  const double ortho = (m.transpose() * m - Mat3::Identity()).cwiseAbs().maxCoeff();
  return std::max(ortho, std::abs(m.determinant() - 1.0));
}

inline bool is_rotation(const Mat3& m, double tol = kRotationTolerance) {
  return m.allFinite() && rotation_error(m) <= tol;
}

/// A proper rotation matrix. Construction from a raw matrix checks the SO(3)
/// invariants; composition of two rotations skips the check.
class Rotation {
 public:
  Rotation() : m_(Mat3::Identity()) {}

  explicit Rotation(const Mat3& m) : m_(m) {
    if (!is_rotation(m)) {
      std::ostringstream os;
      os << "matrix is not in SO(3) (deviation " << (m.allFinite() ? rotation_error(m) : NAN)
         << ")";
      throw ValidationError(os.str());
    }
  }

  static Rotation identity() { return Rotation(); }

  /// Quaternion in [w, x, y, z] order. Normalized on ingest; rejected when
  /// its norm is off by more than 1e-3.
  static Rotation from_quaternion(const Vec4& wxyz) {
    const double n = wxyz.norm();
    if (!std::isfinite(n) || std::abs(n - 1.0) > kQuaternionNormTolerance) {
      std::ostringstream os;
      os << "quaternion norm " << n << " deviates from 1 by more than "
         << kQuaternionNormTolerance;
      throw ValidationError(os.str());
    }
    const Eigen::Quaterniond q(wxyz[0] / n, wxyz[1] / n, wxyz[2] / n, wxyz[3] / n);
    return Rotation(q.toRotationMatrix(), Unchecked{});
  }

  static Rotation about_axis(const Vec3& axis, double angle) {
    return Rotation(Eigen::AngleAxisd(angle, axis.normalized()).toRotationMatrix(), Unchecked{});
  }

  /// Wraps a matrix already known to be a rotation up to roundoff.
  static Rotation unchecked(const Mat3& m) { return Rotation(m, Unchecked{}); }

  /// Canonical [w, x, y, z] with w >= 0.
  Vec4 to_quaternion() const {
    Eigen::Quaterniond q(m_);
    q.normalize();
    Vec4 out(q.w(), q.x(), q.y(), q.z());
    if (out[0] < 0.0) out = -out;
    return out;
  }

  const Mat3& matrix() const { return m_; }
  Rotation transpose() const { return Rotation(m_.transpose(), Unchecked{}); }

  Rotation operator*(const Rotation& rhs) const { return Rotation(m_ * rhs.m_, Unchecked{}); }
  Vec3 operator*(const Vec3& v) const { return m_ * v; }

  /// Geodesic angle to `other`, radians.
  double angle_to(const Rotation& other) const {
    const double c = std::clamp(((m_.transpose() * other.m_).trace() - 1.0) / 2.0, -1.0, 1.0);
    return std::acos(c);
  }

 private:
  struct Unchecked {};
  Rotation(const Mat3& m, Unchecked) : m_(m) {}

  Mat3 m_;
};

struct Pose {
  Vec3 position = Vec3::Zero();
  Rotation orientation;
};

/// Point on the geodesic from `from` (t = 0) to `to` (t = 1).
inline Rotation geodesic_interpolate(const Rotation& from, const Rotation& to, double t) {
  if (from.matrix() == to.matrix()) return from;
  const Eigen::Quaterniond a(from.matrix());
  const Eigen::Quaterniond b(to.matrix());
  return Rotation::unchecked(a.slerp(t, b).normalized().toRotationMatrix());
}

/// Closest rotation to `j` in Frobenius norm: U·diag(1, 1, det(U·Vᵀ))·Vᵀ from
/// the SVD J = U·Σ·Vᵀ. Throws SingularJacobian when |det J| <= 1e-12.
inline Rotation polar_rotation(const Mat3& j) {
  const double det = j.determinant();
  if (!(std::abs(det) > kSingularDeterminant)) {
    std::ostringstream os;
    os << "|det J| = " << std::abs(det) << " <= " << kSingularDeterminant;
    throw SingularJacobian(os.str());
  }
  const Eigen::JacobiSVD<Mat3> svd(j, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Mat3& u = svd.matrixU();
  const Mat3& v = svd.matrixV();
  Vec3 d(1.0, 1.0, (u * v.transpose()).determinant() < 0.0 ? -1.0 : 1.0);
  return Rotation::unchecked(u * d.asDiagonal() * v.transpose());
}

/// Central-difference Jacobian of `f` at `x`; column j is
/// (f(x + h·eⱼ) − f(x − h·eⱼ)) / (2h).
template <typename F>
Mat3 numerical_jacobian(F&& f, const Vec3& x, double h = kDefaultJacobianStep) {
  if (!(h > 0.0)) throw ValidationError("finite-difference step must be positive");
  Mat3 jac;
  for (int c = 0; c < 3; ++c) {
    Vec3 plus = x;
    Vec3 minus = x;
    plus[c] += h;
    minus[c] -= h;
    const Vec3 fp = f(plus);
    const Vec3 fm = f(minus);
    jac.col(c) = (fp - fm) / (2.0 * h);
  }
  return jac;
}

}  // namespace softlfd
