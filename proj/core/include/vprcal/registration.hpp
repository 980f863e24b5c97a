#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "vprcal/geometry.hpp"
#include "vprcal/pose_graph.hpp"

namespace vprcal {

using LandmarkId = std::int64_t;

struct LandmarkObservation {
  LandmarkId landmark_id = 0;
  /// Position in the observing keyframe's frame, meters.
  Vector3 position = Vector3::Zero();
};

struct KeyframeObservations {
  std::size_t keyframe_id = 0;
  std::vector<LandmarkObservation> points;
};

/// The same landmark seen from two keyframes.
struct PointPair {
  LandmarkId landmark_id = 0;
  Vector3 first = Vector3::Zero();
  Vector3 second = Vector3::Zero();
};

struct RansacConfig {
  std::size_t iterations = 100;
  double inlier_threshold = 0.05;
  std::uint64_t seed = 0;
};

struct RegistrationConfig {
  std::size_t min_correspondences = 6;
  RansacConfig ransac;
  Matrix6 loop_information = default_loop_information();
};

enum class RegistrationFailure { kTooFewCorrespondences, kNoConsensus };

const char* to_string(RegistrationFailure failure) noexcept;

struct RegistrationResult {
  /// Pose of the second frame expressed in the first: first = T * second.
  Pose relative_pose;
  std::size_t inlier_correspondences = 0;
  double rms_error = 0.0;
  /// Indices into the pair list that formed the final consensus.
  std::vector<std::size_t> inliers;
};

/// Either a result or the reason no loop closure could be computed. Failure is
/// an expected outcome, not an error.
class RegistrationOutcome {
 public:
  RegistrationOutcome(RegistrationResult result) : result_(std::move(result)) {}
  RegistrationOutcome(RegistrationFailure failure) : failure_(failure) {}

  bool ok() const { return result_.has_value(); }
  explicit operator bool() const { return ok(); }
  const RegistrationResult& result() const { return *result_; }
  RegistrationFailure failure() const { return failure_; }

 private:
  std::optional<RegistrationResult> result_;
  RegistrationFailure failure_ = RegistrationFailure::kNoConsensus;
};

/// Landmarks observed in both frames, ordered by landmark id. Inputs need not
/// be sorted.
std::vector<PointPair> match_correspondences(const KeyframeObservations& a,
                                             const KeyframeObservations& b);

/// Closed-form least-squares rigid alignment (no scale) of `second` onto
/// `first` over the selected pairs. Returns nullopt for degenerate input.
std::optional<Pose> align_points(std::span<const PointPair> pairs,
                                 std::span<const std::size_t> indices);

/// RANSAC over 3-point samples followed by a refit on the consensus set.
RegistrationOutcome estimate_relative_pose(std::span<const PointPair> pairs,
                                           std::size_t min_correspondences,
                                           const RansacConfig& ransac);

/// Seed for the pair (i, j) derived from a base seed; order-sensitive.
std::uint64_t pair_seed(std::uint64_t base, std::size_t i, std::size_t j);

/// Registers frame j against frame i; on success returns a loop-closure edge
/// i -> j carrying the configured information matrix.
std::optional<PoseEdge> attempt_loop_closure(std::span<const KeyframeObservations> frames,
                                             std::size_t i, std::size_t j,
                                             const RegistrationConfig& config);

/// JSON array of {keyframe_id, points: [{landmark_id, xyz: [x, y, z]}]}.
std::string observations_to_json(std::span<const KeyframeObservations> frames);
std::vector<KeyframeObservations> observations_from_json(const std::string& text);
std::vector<KeyframeObservations> load_observations(const std::filesystem::path& path);
void save_observations(const std::filesystem::path& path,
                       std::span<const KeyframeObservations> frames);

}  // namespace vprcal
