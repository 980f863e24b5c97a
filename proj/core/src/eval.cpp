#include "vprcal/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <nlohmann/json.hpp>

#include "vprcal/errors.hpp"
#include "vprcal/io.hpp"

namespace vprcal {
namespace {

void require_thresholds(std::span<const double> thresholds) {
  if (thresholds.empty()) throw Error(ErrorCode::kEmptyThresholds, "threshold list is empty");
}

struct Counts {
  std::size_t detected = 0;
  std::size_t true_positive = 0;
};

Counts count_at(std::span<const double> distances, const Verification& v, double threshold) {
  Counts c;
  for (std::size_t k = 0; k < v.pairs.size(); ++k) {
    if (!(distances[k] < threshold) || !v.registered[k] || !v.survives[k]) continue;
    ++c.detected;
    if (v.positive[k]) ++c.true_positive;
  }
  return c;
}

void check_lengths(std::span<const double> distances, const Verification& v) {
  if (distances.size() != v.pairs.size()) {
    throw Error(ErrorCode::kInputLengthMismatch, "one distance per verification pair expected");
  }
}

double interpolated_precision(const PrCurve& c, double recall) {
  double best = 0.0;
  for (std::size_t k = 0; k < c.recall.size(); ++k) {
    if (c.recall[k] >= recall) best = std::max(best, c.precision[k]);
  }
  return best;
}

double mean(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

}  // namespace

Verification verify_candidates(std::span<const KeyframeObservations> observations,
                               std::span<const OdometryMeasurement> odometry,
                               const GroundTruth& truth, const EvalConfig& config) {
  const std::size_t n = observations.size();
  if (odometry.size() + 1 != n || truth.poses.size() != n) {
    throw Error(ErrorCode::kInputLengthMismatch,
                "verification needs N observation sets, N-1 odometry edges and N true poses");
  }
  const double radius = config.revisit_radius.value_or(truth.revisit_radius);

  Verification v;
  PoseGraph graph = chain_initialize(odometry);
  std::vector<std::size_t> edge_of;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + config.window + 1; j < n; ++j) {
      v.pairs.emplace_back(i, j);
      const bool positive = true_label(truth, i, j, radius) == TrueLabel::kPositive;
      v.positive.push_back(positive);
      if (positive) ++v.ground_truth_positives;
      const auto edge = attempt_loop_closure(observations, i, j, config.registration);
      v.registered.push_back(edge.has_value());
      edge_of.push_back(edge ? graph.add_edge(*edge) : 0);
    }
  }
  v.survives.assign(v.pairs.size(), 0);
  if (graph.loop_closure_count() > 0) {
    const GncResult gnc = gnc_solve(graph, config.gnc);
    const auto labels = classify_matches(gnc.report);
    for (std::size_t k = 0; k < v.pairs.size(); ++k) {
      if (v.registered[k]) v.survives[k] = labels.at(edge_of[k]) == MatchLabel::kInlier;
    }
  }
  return v;
}

std::vector<double> pair_distances(const DescriptorStore& store, const Verification& verification) {
  std::vector<double> out;
  out.reserve(verification.pairs.size());
  for (const auto& [i, j] : verification.pairs) {
    out.push_back(distance(store.vector(i), store.vector(j)));
  }
  return out;
}

PrCurve pr_sweep(std::span<const double> distances, const Verification& verification,
                 std::span<const double> thresholds) {
  require_thresholds(thresholds);
  check_lengths(distances, verification);
  PrCurve curve;
  for (double t : thresholds) {
    const Counts c = count_at(distances, verification, t);
    curve.thresholds.push_back(t);
    curve.precision.push_back(
        c.detected == 0 ? 1.0
                        : static_cast<double>(c.true_positive) / static_cast<double>(c.detected));
    curve.recall.push_back(verification.ground_truth_positives == 0
                               ? 0.0
                               : static_cast<double>(c.true_positive) /
                                     static_cast<double>(verification.ground_truth_positives));
  }
  return curve;
}

PrCurve exact_pr_curve(std::span<const double> distances, const Verification& verification) {
  check_lengths(distances, verification);
  std::vector<double> eligible;
  for (std::size_t k = 0; k < distances.size(); ++k) {
    if (verification.registered[k] && verification.survives[k]) eligible.push_back(distances[k]);
  }
  std::sort(eligible.begin(), eligible.end());
  eligible.erase(std::unique(eligible.begin(), eligible.end()), eligible.end());
  std::vector<double> thresholds;
  thresholds.reserve(eligible.size());
  for (double d : eligible) {
    thresholds.push_back(std::nextafter(d, std::numeric_limits<double>::infinity()));
  }
  if (thresholds.empty()) thresholds.push_back(0.0);
  return pr_sweep(distances, verification, thresholds);
}

PrCurve pr_sweep(const DescriptorStore& store, const EmbeddingHead& head,
                 std::span<const KeyframeObservations> observations,
                 std::span<const OdometryMeasurement> odometry, const GroundTruth& truth,
                 std::span<const double> thresholds, const EvalConfig& config) {
  require_thresholds(thresholds);
  const Verification v = verify_candidates(observations, odometry, truth, config);
  return pr_sweep(pair_distances(embed_store(head, store), v), v, thresholds);
}

CorrectMatchResult correct_match_percentage(std::span<const double> distances,
                                            const Verification& verification,
                                            std::span<const double> thresholds) {
  require_thresholds(thresholds);
  check_lengths(distances, verification);
  CorrectMatchResult out;
  double sum = 0.0;
  for (double t : thresholds) {
    const Counts c = count_at(distances, verification, t);
    if (c.detected == 0) continue;
    sum += static_cast<double>(c.true_positive) / static_cast<double>(c.detected);
    ++out.thresholds_used;
  }
  if (out.thresholds_used == 0) {
    out.zero_detections = true;
    return out;
  }
  out.percentage = 100.0 * sum / static_cast<double>(out.thresholds_used);
  return out;
}

SeparationStats separation_stats(const EmbeddingHead& head, std::span<const TrainingTuple> tuples,
                                 const DescriptorStore& store) {
  if (tuples.empty()) throw Error(ErrorCode::kEmptyTuples, "separation stats need tuples");
  SeparationStats s;
  for (const auto& t : tuples) {
    const TupleDescriptors raw = gather(t, store);
    const Eigen::VectorXd q = embed(head, raw.anchor);
    s.positive_distances.push_back((q - embed(head, raw.positive)).norm());
    for (const auto& n : raw.negatives) s.negative_distances.push_back((q - embed(head, n)).norm());
  }
  s.mean_positive = mean(s.positive_distances);
  s.mean_negative = mean(s.negative_distances);
  s.mean_gap = s.mean_negative - s.mean_positive;
  return s;
}

std::vector<double> threshold_grid(double lo, double hi, std::size_t count) {
  if (count == 0 || !(lo <= hi) || !std::isfinite(lo) || !std::isfinite(hi)) {
    throw Error(ErrorCode::kEmptyThresholds, "threshold grid needs count > 0 and lo <= hi");
  }
  if (count == 1 || lo == hi) return {lo};
  std::vector<double> grid(count);
  for (std::size_t k = 0; k < count; ++k) {
    grid[k] = lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(count - 1);
  }
  grid.back() = hi;
  return grid;
}

std::vector<double> shared_threshold_grid(std::span<const std::vector<double>> distance_sets,
                                          std::size_t count) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (const auto& set : distance_sets) {
    for (double d : set) {
      lo = std::min(lo, d);
      hi = std::max(hi, d);
    }
  }
  return threshold_grid(lo, hi, count);
}

bool weakly_dominates(const PrCurve& a, const PrCurve& b, double tolerance) {
  const double reach_a = a.recall.empty() ? 0.0 : *std::max_element(a.recall.begin(), a.recall.end());
  const double reach_b = b.recall.empty() ? 0.0 : *std::max_element(b.recall.begin(), b.recall.end());
  const double reach = std::min(reach_a, reach_b);
  std::vector<double> levels(a.recall);
  levels.insert(levels.end(), b.recall.begin(), b.recall.end());
  for (double r : levels) {
    if (r <= 0.0 || r > reach) continue;
    if (interpolated_precision(a, r) + tolerance < interpolated_precision(b, r)) return false;
  }
  return true;
}

std::string pr_curve_csv(const PrCurve& curve) {
  std::ostringstream out;
  out << "threshold,precision,recall\n";
  for (std::size_t k = 0; k < curve.thresholds.size(); ++k) {
    out << format_double(curve.thresholds[k]) << ',' << format_double(curve.precision[k]) << ','
        << format_double(curve.recall[k]) << '\n';
  }
  return out.str();
}

std::string similarity_csv(const Eigen::MatrixXd& similarity) {
  std::ostringstream out;
  for (Eigen::Index r = 0; r < similarity.rows(); ++r) {
    for (Eigen::Index c = 0; c < similarity.cols(); ++c) {
      if (c > 0) out << ',';
      out << format_double(similarity(r, c));
    }
    out << '\n';
  }
  return out.str();
}

std::string separation_histogram_csv(const SeparationStats& stats, std::size_t bins) {
  if (bins == 0) throw Error(ErrorCode::kInvalidConfig, "histogram needs at least one bin");
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (const auto* v : {&stats.positive_distances, &stats.negative_distances}) {
    for (double d : *v) {
      lo = std::min(lo, d);
      hi = std::max(hi, d);
    }
  }
  if (!(lo <= hi)) lo = hi = 0.0;
  const double width = hi > lo ? (hi - lo) / static_cast<double>(bins) : 1.0;
  std::vector<std::size_t> pos(bins, 0), neg(bins, 0);
  auto bin_of = [&](double d) {
    const auto b = static_cast<std::size_t>((d - lo) / width);
    return std::min(b, bins - 1);
  };
  for (double d : stats.positive_distances) ++pos[bin_of(d)];
  for (double d : stats.negative_distances) ++neg[bin_of(d)];
  std::ostringstream out;
  out << "bin_low,bin_high,positive_count,negative_count\n";
  for (std::size_t b = 0; b < bins; ++b) {
    out << format_double(lo + width * static_cast<double>(b)) << ','
        << format_double(lo + width * static_cast<double>(b + 1)) << ',' << pos[b] << ','
        << neg[b] << '\n';
  }
  return out.str();
}

std::string eval_summary_json(std::span<const SystemResult> systems) {
  nlohmann::json list = nlohmann::json::array();
  for (const auto& s : systems) {
    nlohmann::json entry = {
        {"label", s.label},
        {"correct_match_percentage", s.correct_match.percentage},
        {"zero_detections", s.correct_match.zero_detections},
        {"thresholds_used", s.correct_match.thresholds_used},
        {"threshold_count", s.pr.thresholds.size()},
        {"max_recall",
         s.pr.recall.empty() ? 0.0 : *std::max_element(s.pr.recall.begin(), s.pr.recall.end())}};
    if (s.separation) {
      entry["separation"] = {{"mean_positive", s.separation->mean_positive},
                             {"mean_negative", s.separation->mean_negative},
                             {"mean_gap", s.separation->mean_gap},
                             {"positive_pairs", s.separation->positive_distances.size()},
                             {"negative_pairs", s.separation->negative_distances.size()}};
    }
    list.push_back(std::move(entry));
  }
  return nlohmann::json{{"version", 1}, {"systems", std::move(list)}}.dump(2) + "\n";
}

void emit_artifacts(std::span<const SystemResult> systems, const std::filesystem::path& out_dir,
                    std::size_t histogram_bins) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw Error(ErrorCode::kIoFailure, "cannot create " + out_dir.string());
  for (const auto& s : systems) {
    write_file(out_dir / (s.label + "_pr_curve.csv"), pr_curve_csv(s.pr));
    write_file(out_dir / (s.label + "_similarity.csv"), similarity_csv(s.similarity));
    if (s.separation) {
      write_file(out_dir / (s.label + "_separation_hist.csv"),
                 separation_histogram_csv(*s.separation, histogram_bins));
    }
  }
  write_file(out_dir / "summary.json", eval_summary_json(systems));
}

}  // namespace vprcal
