#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace vprcal {

using Vector3 = Eigen::Vector3d;
using Vector6 = Eigen::Matrix<double, 6, 1>;
using Matrix3 = Eigen::Matrix3d;
using Matrix6 = Eigen::Matrix<double, 6, 6>;
using Quaternion = Eigen::Quaterniond;

/// Tangent vector of SE(3). Six-vector layout is (rho, phi): translation first.
struct Twist {
  Vector3 rho = Vector3::Zero();
  Vector3 phi = Vector3::Zero();

  Vector6 vector() const;
  static Twist FromVector(const Vector6& v);
};

/// Rigid transform stored as a unit quaternion (w >= 0) and a translation.
/// Maps points from the local frame into the parent frame: p = R * q + t.
class Pose {
 public:
  Pose();
  Pose(const Quaternion& rotation, const Vector3& translation);
  Pose(const Matrix3& rotation, const Vector3& translation);

  static Pose Identity() { return Pose(); }
  /// Rotation about +z by `yaw` radians followed by the given translation.
  static Pose FromYaw(double yaw, const Vector3& translation = Vector3::Zero());

  const Quaternion& rotation() const { return rotation_; }
  const Vector3& translation() const { return translation_; }
  Matrix3 rotation_matrix() const { return rotation_.toRotationMatrix(); }

  Pose inverse() const;
  Vector3 operator*(const Vector3& point) const;
  Pose operator*(const Pose& other) const;

  /// Rotation angle in [0, pi].
  double angle() const;

 private:
  Quaternion rotation_;
  Vector3 translation_;
};

Pose compose(const Pose& a, const Pose& b);
Pose inverse(const Pose& p);
/// Relative pose a^-1 * b.
Pose between(const Pose& a, const Pose& b);

/// Throws Error(kNearPiRotation) when the rotation angle is >= pi - 1e-6.
Twist log(const Pose& p);
Pose exp(const Twist& t);

Vector3 so3_log(const Quaternion& q);
Quaternion so3_exp(const Vector3& phi);

Matrix3 hat(const Vector3& v);
Matrix3 so3_left_jacobian(const Vector3& phi);
Matrix3 so3_left_jacobian_inverse(const Vector3& phi);
/// Inverse of the SE(3) left Jacobian, in (rho, phi) block order.
Matrix6 se3_left_jacobian_inverse(const Twist& xi);
/// Adjoint of T in (rho, phi) order: exp(Ad_T xi) = T exp(xi) T^-1.
Matrix6 adjoint(const Pose& p);

/// Angle of a^-1 b, radians.
double rotation_distance(const Pose& a, const Pose& b);
double translation_distance(const Pose& a, const Pose& b);

}  // namespace vprcal
