#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "vprcal/descriptor_store.hpp"
#include "vprcal/geometry.hpp"
#include "vprcal/pose_graph.hpp"
#include "vprcal/registration.hpp"

namespace vprcal {

enum class TrajectoryKind { kLoop, kFigureEight, kGridWithRevisits };

const char* to_string(TrajectoryKind kind) noexcept;
TrajectoryKind trajectory_kind_from_string(const std::string& name);

/// Synthetic world description. Everything derived from `environment_seed`
/// (landmarks, place signatures, descriptor subspace) is shared by every
/// sequence in the same environment; `seed` drives the per-sequence noise.
struct WorldConfig {
  TrajectoryKind trajectory = TrajectoryKind::kLoop;
  std::size_t keyframe_count = 200;
  /// Number of passes over the closed route.
  std::size_t laps = 2;
  /// Arc length between consecutive keyframes, meters.
  double step_length = 1.0;
  /// Closed-route length in meters; 0 derives it from keyframes per lap. A
  /// route longer than the traversal yields a sequence without revisits.
  double route_length = 0.0;
  /// Lateral shift added per lap, meters.
  double lap_offset = 0.0;
  /// Arc-length shift of the whole traversal, meters.
  double phase_offset = 0.0;

  double landmark_density = 4.0;  // per meter of route
  double landmark_spread = 6.0;   // max lateral distance from the route, meters
  double sensing_range = 5.0;
  double observation_noise = 0.01;

  double odometry_sigma_t = 0.02;
  double odometry_sigma_r = 0.005;

  std::size_t descriptor_dimension = 64;
  std::size_t signature_dimension = 8;
  double signature_cell = 3.0;
  double place_signature_noise = 0.05;
  /// Per-keyframe appearance variation (lighting, season) confined to a fixed
  /// subspace orthogonal to the place signal; raw descriptors do not ignore it.
  std::size_t appearance_dimension = 4;
  double appearance_noise = 2.0;

  std::size_t aliasing_pairs = 0;
  bool aliasing_shares_geometry = true;
  double aliasing_descriptor_noise = 0.01;

  double revisit_radius = 3.0;
  std::size_t window = kDefaultExclusionWindow;

  std::uint64_t seed = 1;
  std::uint64_t environment_seed = 7;
};

/// Throws Error(kInvalidConfig).
void validate(const WorldConfig& config);

using KeyframePair = std::pair<std::size_t, std::size_t>;

struct GroundTruth {
  std::vector<Pose> poses;
  /// Pairs i < j with j - i > window and true positions within the revisit radius.
  std::vector<KeyframePair> revisit_pairs;
  /// Planted traps: descriptor-close, pose-far pairs (i < j).
  std::vector<KeyframePair> aliased_pairs;
  double revisit_radius = 3.0;
};

struct World {
  std::vector<Descriptor> descriptors;
  std::vector<KeyframeObservations> observations;
  std::vector<OdometryMeasurement> odometry;
  GroundTruth truth;
};

World generate(const WorldConfig& config);

enum class TrueLabel { kPositive, kNegative };

/// Positive iff the true positions of i and j are within `radius`.
TrueLabel true_label(const GroundTruth& truth, std::size_t i, std::size_t j, double radius);
inline TrueLabel true_label(const GroundTruth& truth, std::size_t i, std::size_t j) {
  return true_label(truth, i, j, truth.revisit_radius);
}

std::string ground_truth_to_json(const GroundTruth& truth);
GroundTruth ground_truth_from_json(const std::string& text);

/// Odometry as a g2o fragment: chain-initialized vertices plus odometry edges.
std::string odometry_to_g2o(std::span<const OdometryMeasurement> odometry);

}  // namespace vprcal
