#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>
#include <unsupported/Eigen/MatrixFunctions>

#include "test_support.hpp"
#include "vprcal/errors.hpp"
#include "vprcal/geometry.hpp"

namespace vprcal {
namespace {

using testing::PosesNear;
using testing::random_pose;
using testing::random_small_pose;

constexpr double kPi = std::numbers::pi;

Eigen::Matrix4d to_matrix(const Pose& p) {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.topLeftCorner<3, 3>() = p.rotation_matrix();
  m.topRightCorner<3, 1>() = p.translation();
  return m;
}

Eigen::Matrix4d twist_matrix(const Twist& t) {
  Eigen::Matrix4d m = Eigen::Matrix4d::Zero();
  m.topLeftCorner<3, 3>() << 0, -t.phi.z(), t.phi.y(), t.phi.z(), 0, -t.phi.x(), -t.phi.y(),
      t.phi.x(), 0;
  m.topRightCorner<3, 1>() = t.rho;
  return m;
}

Twist random_twist(std::mt19937_64& rng, double max_angle) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Vector3 axis(u(rng), u(rng), u(rng));
  axis.normalize();
  Twist t;
  t.phi = axis * (max_angle * std::abs(u(rng)));
  t.rho = Vector3(3 * u(rng), 3 * u(rng), 3 * u(rng));
  return t;
}

TEST(Geometry, ComposeIdentityAndInverse) {
  std::mt19937_64 rng(1);
  for (int k = 0; k < 50; ++k) {
    const Pose p = random_pose(rng);
    EXPECT_TRUE(PosesNear(compose(Pose::Identity(), p), p, 1e-15));
    EXPECT_TRUE(PosesNear(compose(p, inverse(p)), Pose::Identity(), 1e-12));
  }
}

TEST(Geometry, PlanarCompositionByHand) {
  const Pose a = Pose::FromYaw(kPi / 2, Vector3(1, 0, 0));
  const Pose c = compose(a, a);
  EXPECT_TRUE(PosesNear(c, Pose::FromYaw(kPi, Vector3(1, 1, 0)), 1e-15));
}

TEST(Geometry, BetweenExamples) {
  std::mt19937_64 rng(2);
  const Pose p = random_pose(rng);
  EXPECT_TRUE(PosesNear(between(p, p), Pose::Identity(), 1e-12));
  EXPECT_TRUE(PosesNear(between(Pose::Identity(), p), p, 1e-15));
  EXPECT_TRUE(PosesNear(between(Pose::FromYaw(kPi / 2), Pose::Identity()),
                        Pose::FromYaw(-kPi / 2), 1e-15));
}

TEST(Geometry, GroupAxiomsAgainstMatrices) {
  std::mt19937_64 rng(3);
  for (int k = 0; k < 200; ++k) {
    const Pose a = random_pose(rng), b = random_pose(rng), c = random_pose(rng);
    EXPECT_TRUE(PosesNear(compose(compose(a, b), c), compose(a, compose(b, c)), 1e-12));
    const Eigen::Matrix4d ab = to_matrix(a) * to_matrix(b);
    EXPECT_LT((to_matrix(compose(a, b)) - ab).norm(), 1e-12);
    EXPECT_LT((to_matrix(inverse(a)) - to_matrix(a).inverse()).norm(), 1e-12);
    const Vector3 x(0.3, -1.0, 2.0);
    EXPECT_LT((a * x - (to_matrix(a) * x.homogeneous()).head<3>()).norm(), 1e-12);
  }
}

TEST(Geometry, QuaternionCanonicalSign) {
  std::mt19937_64 rng(4);
  for (int k = 0; k < 100; ++k) {
    EXPECT_GE(random_pose(rng).rotation().w(), 0.0);
    EXPECT_GE(compose(random_pose(rng), random_pose(rng)).rotation().w(), 0.0);
  }
  EXPECT_NEAR(Pose(Quaternion(-1, 0, 0, 0), Vector3::Zero()).rotation().w(), 1.0, 0.0);
}

TEST(Geometry, LogIdentityIsZero) {
  const Twist t = log(Pose::Identity());
  EXPECT_EQ(t.vector(), Vector6::Zero());
}

TEST(Geometry, ExpOfQuarterTurn) {
  Twist t;
  t.phi = Vector3(0, 0, kPi / 2);
  const Pose p = exp(t);
  EXPECT_TRUE(PosesNear(p, Pose::FromYaw(kPi / 2), 1e-15));
  EXPECT_LT(p.translation().norm(), 1e-15);
}

TEST(Geometry, ExpMatchesMatrixExponential) {
  std::mt19937_64 rng(5);
  for (int k = 0; k < 300; ++k) {
    const Twist t = random_twist(rng, 3.0);
    const Eigen::Matrix4d oracle = twist_matrix(t).exp();
    EXPECT_LT((to_matrix(exp(t)) - oracle).norm(), 1e-10) << "case " << k;
  }
}

TEST(Geometry, LogMatchesMatrixLogarithm) {
  std::mt19937_64 rng(6);
  for (int k = 0; k < 300; ++k) {
    const Pose p = random_small_pose(rng, 3.0, 4.0);
    const Eigen::Matrix4d oracle = to_matrix(p).log();
    const Eigen::Matrix4d ours = twist_matrix(log(p));
    EXPECT_LT((ours - oracle).norm(), 1e-8) << "case " << k;
  }
}

TEST(Geometry, ExpLogRoundTrip) {
  std::mt19937_64 rng(7);
  for (int k = 0; k < 1000; ++k) {
    const Pose p = random_small_pose(rng, kPi - 1e-3, 5.0);
    EXPECT_TRUE(PosesNear(exp(log(p)), p, 1e-10)) << "case " << k;
    const Twist t = random_twist(rng, kPi - 1e-3);
    EXPECT_LT((log(exp(t)).vector() - t.vector()).norm(), 1e-9) << "case " << k;
  }
}

TEST(Geometry, SmallAngleSeriesIsContinuous) {
  for (double angle : {1e-3, 1e-5, 1e-7, 1e-9, 1e-12, 0.0}) {
    Twist t;
    t.phi = Vector3(angle, -0.5 * angle, 0.25 * angle);
    t.rho = Vector3(1.0, 2.0, -1.0);
    const Eigen::Matrix4d oracle = twist_matrix(t).exp();
    EXPECT_LT((to_matrix(exp(t)) - oracle).norm(), 1e-13) << angle;
    EXPECT_LT((log(exp(t)).vector() - t.vector()).norm(), 1e-12) << angle;
    EXPECT_TRUE(so3_left_jacobian(t.phi).allFinite());
    EXPECT_TRUE(so3_left_jacobian_inverse(t.phi).allFinite());
  }
}

TEST(Geometry, NearPiRotationRejected) {
  Twist t;
  t.phi = Vector3(0, 0, kPi - 1e-8);
  try {
    log(exp(t));
    FAIL() << "expected NearPiRotation";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNearPiRotation);
  }
  t.phi = Vector3(0, 0, kPi - 1e-4);
  EXPECT_NO_THROW(log(exp(t)));
}

TEST(Geometry, LeftJacobianInverse) {
  std::mt19937_64 rng(8);
  for (int k = 0; k < 100; ++k) {
    const Twist t = random_twist(rng, 2.5);
    const Matrix3 product = so3_left_jacobian(t.phi) * so3_left_jacobian_inverse(t.phi);
    EXPECT_LT((product - Matrix3::Identity()).norm(), 1e-12);
  }
}

TEST(Geometry, Se3LeftJacobianInverseLinearizesLog) {
  std::mt19937_64 rng(9);
  const double h = 1e-6;
  for (int k = 0; k < 50; ++k) {
    const Twist t = random_twist(rng, 2.0);
    const Matrix6 jinv = se3_left_jacobian_inverse(t);
    Matrix6 numeric;
    for (int c = 0; c < 6; ++c) {
      Vector6 d = Vector6::Zero();
      d(c) = h;
      const Vector6 plus = log(exp(Twist::FromVector(d)) * exp(t)).vector();
      const Vector6 minus = log(exp(Twist::FromVector(-d)) * exp(t)).vector();
      numeric.col(c) = (plus - minus) / (2 * h);
    }
    EXPECT_LT((numeric - jinv).norm(), 1e-6 * std::max(1.0, jinv.norm())) << "case " << k;
  }
}

TEST(Geometry, AdjointConjugation) {
  std::mt19937_64 rng(10);
  for (int k = 0; k < 100; ++k) {
    const Pose p = random_pose(rng);
    const Twist t = random_twist(rng, 1.0);
    const Pose lhs = exp(Twist::FromVector(adjoint(p) * t.vector()));
    const Pose rhs = p * exp(t) * p.inverse();
    EXPECT_TRUE(PosesNear(lhs, rhs, 1e-10));
  }
}

TEST(Geometry, Distances) {
  const Pose a = Pose::FromYaw(0.3, Vector3(1, 2, 3));
  const Pose b = Pose::FromYaw(-0.2, Vector3(1, 2, 7));
  EXPECT_NEAR(rotation_distance(a, b), 0.5, 1e-14);
  EXPECT_NEAR(translation_distance(a, b), 4.0, 1e-14);
  EXPECT_NEAR(Pose::FromYaw(kPi).angle(), kPi, 1e-12);
}

TEST(Geometry, TwistVectorLayout) {
  Twist t;
  t.rho = Vector3(1, 2, 3);
  t.phi = Vector3(4, 5, 6);
  Vector6 v;
  v << 1, 2, 3, 4, 5, 6;
  EXPECT_EQ(t.vector(), v);
  EXPECT_EQ(Twist::FromVector(v).phi, t.phi);
}

}  // namespace
}  // namespace vprcal
