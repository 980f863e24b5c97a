#pragma once

#include <cmath>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "vprcal/geometry.hpp"
#include "vprcal/pose_graph.hpp"

namespace vprcal::testing {

/// Uniform rotation (via a normalized Gaussian quaternion) and a translation
/// in [-scale, scale]^3.
inline Pose random_pose(std::mt19937_64& rng, double scale = 5.0) {
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> u(-scale, scale);
  Quaternion q(g(rng), g(rng), g(rng), g(rng));
  q.normalize();
  return Pose(q, Vector3(u(rng), u(rng), u(rng)));
}

/// Pose whose rotation angle stays below `max_angle`.
inline Pose random_small_pose(std::mt19937_64& rng, double max_angle, double scale = 1.0) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Vector3 axis(u(rng), u(rng), u(rng));
  axis.normalize();
  const double angle = max_angle * std::abs(u(rng));
  return Pose(Quaternion(Eigen::AngleAxisd(angle, axis)),
              Vector3(scale * u(rng), scale * u(rng), scale * u(rng)));
}

inline double pose_gap(const Pose& a, const Pose& b) {
  return std::max(rotation_distance(a, b), translation_distance(a, b));
}

inline ::testing::AssertionResult PosesNear(const Pose& a, const Pose& b, double tol) {
  const double r = rotation_distance(a, b);
  const double t = translation_distance(a, b);
  if (r <= tol && t <= tol) return ::testing::AssertionSuccess();
  return ::testing::AssertionFailure() << "rotation gap " << r << ", translation gap " << t
                                       << " exceed " << tol;
}

/// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& name) {
    path_ = std::filesystem::temp_directory_path() /
            ("vprcal_" + name + "_" + std::to_string(std::random_device{}()));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace vprcal::testing
