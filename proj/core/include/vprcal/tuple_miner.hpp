#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "vprcal/descriptor_store.hpp"
#include "vprcal/gnc.hpp"
#include "vprcal/pose_graph.hpp"
#include "vprcal/registration.hpp"

namespace vprcal {

enum class TupleStatus { kPending, kInlier, kRejected };

const char* to_string(TupleStatus status) noexcept;
TupleStatus tuple_status_from_string(const std::string& name);

struct TrainingTuple {
  KeyframeId anchor_id = 0;
  KeyframeId positive_id = 0;
  std::vector<KeyframeId> negative_ids;
  /// Index of the anchor -> positive loop closure in the mined pose graph.
  std::size_t loop_edge_index = 0;
  TupleStatus status = TupleStatus::kPending;

  friend bool operator==(const TrainingTuple&, const TrainingTuple&) = default;
};

struct MiningConfig {
  std::size_t window = kDefaultExclusionWindow;
  std::size_t k_max = 50;
  std::size_t max_negatives = 10;
  RegistrationConfig registration;
  GncConfig gnc;
};

struct MiningReport {
  /// Tuples emitted, Inlier and Rejected alike.
  std::size_t tuples_extracted = 0;
  std::size_t tuples_rejected_by_pgo = 0;
  std::size_t keyframes_without_positive = 0;
  /// Tuples dropped because no candidate after the positive failed registration.
  std::size_t tuples_without_negatives = 0;
};

struct MiningResult {
  std::vector<TrainingTuple> tuples;
  /// Odometry chain plus one loop closure per found positive, chain-initialized.
  PoseGraph graph;
  GncResult gnc;
  MiningReport report;
};

/// Retrieval candidates for one anchor in ascending descriptor distance,
/// restricted to ids outside the exclusion window.
class CandidateWalk {
 public:
  using const_iterator = std::vector<MatchCandidate>::const_iterator;

  CandidateWalk(const DescriptorStore& store, KeyframeId anchor, std::size_t k_max,
                std::size_t window);

  const_iterator begin() const { return candidates_.begin(); }
  const_iterator end() const { return candidates_.end(); }
  std::size_t size() const { return candidates_.size(); }
  bool empty() const { return candidates_.empty(); }

 private:
  std::vector<MatchCandidate> candidates_;
};

CandidateWalk candidate_walk(const DescriptorStore& store, KeyframeId anchor, std::size_t k_max,
                             std::size_t window = kDefaultExclusionWindow);

/// Keyframe ids are 0..N-1 in all three inputs.
MiningResult mine(const DescriptorStore& store, std::span<const KeyframeObservations> observations,
                  std::span<const OdometryMeasurement> odometry, const MiningConfig& config = {});

/// {version: 1, tuples: [{anchor, positive, negatives, loop_edge, status}]}
std::string tuples_to_json(std::span<const TrainingTuple> tuples);
std::vector<TrainingTuple> tuples_from_json(const std::string& text);
void export_tuples(std::span<const TrainingTuple> tuples, const std::filesystem::path& path);
std::vector<TrainingTuple> import_tuples(const std::filesystem::path& path);

std::string mining_report_to_json(const MiningReport& report);

}  // namespace vprcal
