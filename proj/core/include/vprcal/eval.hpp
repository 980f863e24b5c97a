#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "vprcal/descriptor_store.hpp"
#include "vprcal/gnc.hpp"
#include "vprcal/registration.hpp"
#include "vprcal/simulator.hpp"
#include "vprcal/trainer.hpp"
#include "vprcal/tuple_miner.hpp"

namespace vprcal {

struct EvalConfig {
  std::size_t window = kDefaultExclusionWindow;
  /// Ground-truth radius; nullopt uses the one stored with the ground truth.
  std::optional<double> revisit_radius;
  std::size_t threshold_count = 50;
  RegistrationConfig registration;
  GncConfig gnc;
};

/// The threshold-independent part of the detection criterion for every
/// candidate pair (i < j, j - i > window): registration success, survival of
/// the loop edge in one robust solve over odometry plus all registered pairs,
/// and the ground-truth label.
struct Verification {
  std::vector<KeyframePair> pairs;
  std::vector<char> registered;
  std::vector<char> survives;
  std::vector<char> positive;
  std::size_t ground_truth_positives = 0;
};

Verification verify_candidates(std::span<const KeyframeObservations> observations,
                               std::span<const OdometryMeasurement> odometry,
                               const GroundTruth& truth, const EvalConfig& config = {});

/// Embedded distance for each verification pair.
std::vector<double> pair_distances(const DescriptorStore& store, const Verification& verification);

struct PrCurve {
  std::vector<double> thresholds;
  std::vector<double> precision;
  std::vector<double> recall;
};

/// Detected at t: distance < t, registered, survives. Precision is 1 when
/// nothing is detected; recall is 0 when there are no ground-truth positives.
PrCurve pr_sweep(std::span<const double> distances, const Verification& verification,
                 std::span<const double> thresholds);

/// Sweep at every distinct distance among verified pairs, so that each
/// achievable recall level appears; thresholds sit just above each distance.
PrCurve exact_pr_curve(std::span<const double> distances, const Verification& verification);

/// Convenience form running verification and embedding in one call.
PrCurve pr_sweep(const DescriptorStore& store, const EmbeddingHead& head,
                 std::span<const KeyframeObservations> observations,
                 std::span<const OdometryMeasurement> odometry, const GroundTruth& truth,
                 std::span<const double> thresholds, const EvalConfig& config = {});

struct CorrectMatchResult {
  /// Percentage in [0, 100].
  double percentage = 0.0;
  /// True when no threshold produced a detection; percentage is then 0.
  bool zero_detections = false;
  std::size_t thresholds_used = 0;
};

/// Unweighted mean over thresholds of the correct fraction among detections;
/// thresholds with no detections are skipped.
CorrectMatchResult correct_match_percentage(std::span<const double> distances,
                                            const Verification& verification,
                                            std::span<const double> thresholds);

struct SeparationStats {
  std::vector<double> positive_distances;
  std::vector<double> negative_distances;
  double mean_positive = 0.0;
  double mean_negative = 0.0;
  /// mean_negative - mean_positive
  double mean_gap = 0.0;
};

/// Embedded anchor-positive and anchor-negative distances of every tuple.
SeparationStats separation_stats(const EmbeddingHead& head, std::span<const TrainingTuple> tuples,
                                 const DescriptorStore& store);

/// `count` evenly spaced values on [lo, hi]; a single value when lo == hi.
std::vector<double> threshold_grid(double lo, double hi, std::size_t count);

/// Grid spanning the pooled [min, max] of every distance list.
std::vector<double> shared_threshold_grid(std::span<const std::vector<double>> distance_sets,
                                          std::size_t count);

/// Interpolated precision (max precision at recall >= r) of `a` is at least
/// that of `b` at every recall level reached by both curves.
bool weakly_dominates(const PrCurve& a, const PrCurve& b, double tolerance = 0.0);

struct SystemResult {
  std::string label;
  PrCurve pr;
  CorrectMatchResult correct_match;
  Eigen::MatrixXd similarity;
  std::optional<SeparationStats> separation;
};

/// Writes <label>_pr_curve.csv, <label>_similarity.csv,
/// <label>_separation_hist.csv (when separation is present) and summary.json.
void emit_artifacts(std::span<const SystemResult> systems, const std::filesystem::path& out_dir,
                    std::size_t histogram_bins = 20);

std::string pr_curve_csv(const PrCurve& curve);
std::string similarity_csv(const Eigen::MatrixXd& similarity);
std::string separation_histogram_csv(const SeparationStats& stats, std::size_t bins);
std::string eval_summary_json(std::span<const SystemResult> systems);

}  // namespace vprcal
