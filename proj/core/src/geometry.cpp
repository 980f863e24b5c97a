#include "vprcal/geometry.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "vprcal/errors.hpp"

namespace vprcal {
namespace {

constexpr double kExpSeriesThreshold = 1e-8;
constexpr double kJacobianSeriesThreshold = 1e-2;
constexpr double kNearPiMargin = 1e-6;

Quaternion canonicalize(Quaternion q) {
  const double norm_sq = q.squaredNorm();
  if (std::abs(norm_sq - 1.0) > 4.0 * std::numeric_limits<double>::epsilon()) {
    q.normalize();
  }
  bool flip = q.w() < 0.0;
  if (q.w() == 0.0) {
    flip = q.x() < 0.0 || (q.x() == 0.0 && (q.y() < 0.0 || (q.y() == 0.0 && q.z() < 0.0)));
  }
  if (flip) q.coeffs() = -q.coeffs();
  return q;
}

// (1 - cos t) / t^2
double coeff_a(double t) {
  if (t < kJacobianSeriesThreshold) {
    const double t2 = t * t;
    return 0.5 - t2 / 24.0 + t2 * t2 / 720.0;
  }
  const double s = std::sin(0.5 * t);
  return 2.0 * s * s / (t * t);
}

// (t - sin t) / t^3
double coeff_b(double t) {
  if (t < kJacobianSeriesThreshold) {
    const double t2 = t * t;
    return 1.0 / 6.0 - t2 / 120.0 + t2 * t2 / 5040.0;
  }
  return (t - std::sin(t)) / (t * t * t);
}

// 1/t^2 - (1 + cos t) / (2 t sin t)
double coeff_inverse(double t) {
  if (t < kJacobianSeriesThreshold) {
    const double t2 = t * t;
    return 1.0 / 12.0 + t2 / 720.0 + t2 * t2 / 30240.0;
  }
  return 1.0 / (t * t) - (1.0 + std::cos(t)) / (2.0 * t * std::sin(t));
}

// (t^2 + 2 cos t - 2) / (2 t^4)
double coeff_q2(double t) {
  if (t < kJacobianSeriesThreshold) {
    const double t2 = t * t;
    return 1.0 / 24.0 - t2 / 720.0 + t2 * t2 / 40320.0;
  }
  const double t2 = t * t;
  return (t2 + 2.0 * std::cos(t) - 2.0) / (2.0 * t2 * t2);
}

// (2t - 3 sin t + t cos t) / (2 t^5)
double coeff_q3(double t) {
  if (t < kJacobianSeriesThreshold) {
    const double t2 = t * t;
    return 1.0 / 120.0 - t2 / 2520.0 + t2 * t2 / 120960.0;
  }
  const double t2 = t * t;
  return (2.0 * t - 3.0 * std::sin(t) + t * std::cos(t)) / (2.0 * t2 * t2 * t);
}

// Q(rho, phi): upper-right block of the SE(3) left Jacobian.
Matrix3 se3_q_block(const Vector3& rho, const Vector3& phi) {
  const double t = phi.norm();
  const Matrix3 r = hat(rho);
  const Matrix3 p = hat(phi);
  const Matrix3 pr = p * r;
  const Matrix3 rp = r * p;
  const Matrix3 prp = pr * p;
  return 0.5 * r + coeff_b(t) * (pr + rp + prp) +
         coeff_q2(t) * (p * pr + rp * p - 3.0 * prp) + coeff_q3(t) * (prp * p + p * prp);
}

}  // namespace

Vector6 Twist::vector() const {
  Vector6 v;
  v << rho, phi;
  return v;
}

Twist Twist::FromVector(const Vector6& v) { return Twist{v.head<3>(), v.tail<3>()}; }

Pose::Pose() : rotation_(Quaternion::Identity()), translation_(Vector3::Zero()) {}

Pose::Pose(const Quaternion& rotation, const Vector3& translation)
    : rotation_(canonicalize(rotation)), translation_(translation) {}

Pose::Pose(const Matrix3& rotation, const Vector3& translation)
    : Pose(Quaternion(rotation), translation) {}

Pose Pose::FromYaw(double yaw, const Vector3& translation) {
  return Pose(Quaternion(Eigen::AngleAxisd(yaw, Vector3::UnitZ())), translation);
}

Pose Pose::inverse() const {
  const Quaternion inv = rotation_.conjugate();
  return Pose(inv, -(inv * translation_));
}

Vector3 Pose::operator*(const Vector3& point) const { return rotation_ * point + translation_; }

Pose Pose::operator*(const Pose& other) const {
  return Pose(rotation_ * other.rotation_, rotation_ * other.translation_ + translation_);
}

double Pose::angle() const {
  return 2.0 * std::atan2(rotation_.vec().norm(), std::abs(rotation_.w()));
}

Pose compose(const Pose& a, const Pose& b) { return a * b; }

Pose inverse(const Pose& p) { return p.inverse(); }

Pose between(const Pose& a, const Pose& b) { return a.inverse() * b; }

Matrix3 hat(const Vector3& v) {
  Matrix3 m;
  m << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
       -v.y(), v.x(), 0.0;
  return m;
}

Vector3 so3_log(const Quaternion& q) {
  const double w = q.w() < 0.0 ? -q.w() : q.w();
  const Vector3 v = q.w() < 0.0 ? Vector3(-q.vec()) : Vector3(q.vec());
  const double n = v.norm();
  if (n < kExpSeriesThreshold) {
    // atan2(n, w) / n ~ (1 - n^2 / (3 w^2)) / w
    return 2.0 * (1.0 - n * n / (3.0 * w * w)) / w * v;
  }
  return 2.0 * std::atan2(n, w) / n * v;
}

Quaternion so3_exp(const Vector3& phi) {
  const double t = phi.norm();
  double half_sinc;  // sin(t/2) / t
  if (t < kExpSeriesThreshold) {
    half_sinc = 0.5 - t * t / 48.0;
  } else {
    half_sinc = std::sin(0.5 * t) / t;
  }
  Quaternion q;
  q.w() = std::cos(0.5 * t);
  q.vec() = half_sinc * phi;
  return q;
}

Matrix3 so3_left_jacobian(const Vector3& phi) {
  const double t = phi.norm();
  const Matrix3 p = hat(phi);
  return Matrix3::Identity() + coeff_a(t) * p + coeff_b(t) * p * p;
}

Matrix3 so3_left_jacobian_inverse(const Vector3& phi) {
  const double t = phi.norm();
  const Matrix3 p = hat(phi);
  return Matrix3::Identity() - 0.5 * p + coeff_inverse(t) * p * p;
}

Twist log(const Pose& p) {
  const double angle = p.angle();
  if (angle >= std::numbers::pi - kNearPiMargin) {
    throw Error(ErrorCode::kNearPiRotation,
                "rotation angle " + std::to_string(angle) + " too close to pi for log");
  }
  Twist xi;
  xi.phi = so3_log(p.rotation());
  xi.rho = so3_left_jacobian_inverse(xi.phi) * p.translation();
  return xi;
}

Pose exp(const Twist& t) {
  return Pose(so3_exp(t.phi), so3_left_jacobian(t.phi) * t.rho);
}

Matrix6 se3_left_jacobian_inverse(const Twist& xi) {
  const Matrix3 j_inv = so3_left_jacobian_inverse(xi.phi);
  const Matrix3 q = se3_q_block(xi.rho, xi.phi);
  Matrix6 out = Matrix6::Zero();
  out.topLeftCorner<3, 3>() = j_inv;
  out.topRightCorner<3, 3>() = -j_inv * q * j_inv;
  out.bottomRightCorner<3, 3>() = j_inv;
  return out;
}

Matrix6 adjoint(const Pose& p) {
  const Matrix3 r = p.rotation_matrix();
  Matrix6 out = Matrix6::Zero();
  out.topLeftCorner<3, 3>() = r;
  out.topRightCorner<3, 3>() = hat(p.translation()) * r;
  out.bottomRightCorner<3, 3>() = r;
  return out;
}

double rotation_distance(const Pose& a, const Pose& b) { return between(a, b).angle(); }

double translation_distance(const Pose& a, const Pose& b) {
  return (a.translation() - b.translation()).norm();
}

}  // namespace vprcal
