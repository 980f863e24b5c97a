#include "vprcal/registration.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <random>

#include <Eigen/SVD>
#include <nlohmann/json.hpp>

#include "vprcal/errors.hpp"
#include "vprcal/io.hpp"

namespace vprcal {
namespace {

constexpr std::size_t kMinimalSample = 3;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::vector<std::size_t> consensus(std::span<const PointPair> pairs, const Pose& t,
                                   double threshold) {
  std::vector<std::size_t> inliers;
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    if ((pairs[k].first - t * pairs[k].second).norm() < threshold) inliers.push_back(k);
  }
  return inliers;
}

const KeyframeObservations& frame_by_id(std::span<const KeyframeObservations> frames,
                                        std::size_t id) {
  if (id < frames.size() && frames[id].keyframe_id == id) return frames[id];
  auto it = std::find_if(frames.begin(), frames.end(),
                         [id](const auto& f) { return f.keyframe_id == id; });
  if (it == frames.end()) {
    throw Error(ErrorCode::kUnknownKeyframe, "no observations for keyframe " + std::to_string(id));
  }
  return *it;
}

}  // namespace

const char* to_string(RegistrationFailure failure) noexcept {
  return failure == RegistrationFailure::kTooFewCorrespondences ? "TooFewCorrespondences"
                                                                : "NoConsensus";
}

std::vector<PointPair> match_correspondences(const KeyframeObservations& a,
                                             const KeyframeObservations& b) {
  auto sorted = [](const KeyframeObservations& f) {
    std::vector<const LandmarkObservation*> v;
    v.reserve(f.points.size());
    for (const auto& p : f.points) v.push_back(&p);
    std::sort(v.begin(), v.end(),
              [](const auto* x, const auto* y) { return x->landmark_id < y->landmark_id; });
    return v;
  };
  const auto sa = sorted(a);
  const auto sb = sorted(b);
  std::vector<PointPair> out;
  std::size_t i = 0, j = 0;
  while (i < sa.size() && j < sb.size()) {
    if (sa[i]->landmark_id < sb[j]->landmark_id) {
      ++i;
    } else if (sb[j]->landmark_id < sa[i]->landmark_id) {
      ++j;
    } else {
      out.push_back({sa[i]->landmark_id, sa[i]->position, sb[j]->position});
      ++i;
      ++j;
    }
  }
  return out;
}

std::optional<Pose> align_points(std::span<const PointPair> pairs,
                                 std::span<const std::size_t> indices) {
  if (indices.size() < kMinimalSample) return std::nullopt;
  Vector3 mean_first = Vector3::Zero();
  Vector3 mean_second = Vector3::Zero();
  for (std::size_t k : indices) {
    mean_first += pairs[k].first;
    mean_second += pairs[k].second;
  }
  const double n = static_cast<double>(indices.size());
  mean_first /= n;
  mean_second /= n;

  Matrix3 cross = Matrix3::Zero();
  for (std::size_t k : indices) {
    cross += (pairs[k].first - mean_first) * (pairs[k].second - mean_second).transpose();
  }
  Eigen::JacobiSVD<Matrix3> svd(cross, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vector3 sv = svd.singularValues();
  if (!(sv(0) > 0.0) || sv(1) < 1e-9 * sv(0)) return std::nullopt;  // collinear

  Matrix3 u = svd.matrixU();
  const Matrix3 v = svd.matrixV();
  if ((u * v.transpose()).determinant() < 0.0) u.col(2) = -u.col(2);
  const Matrix3 rotation = u * v.transpose();
  return Pose(rotation, mean_first - rotation * mean_second);
}

RegistrationOutcome estimate_relative_pose(std::span<const PointPair> pairs,
                                           std::size_t min_correspondences,
                                           const RansacConfig& ransac) {
  const std::size_t needed = std::max(min_correspondences, kMinimalSample);
  if (pairs.size() < needed) return RegistrationFailure::kTooFewCorrespondences;

  std::mt19937_64 rng(ransac.seed);
  std::uniform_int_distribution<std::size_t> pick(0, pairs.size() - 1);
  std::vector<std::size_t> best;
  for (std::size_t it = 0; it < ransac.iterations && best.size() < pairs.size(); ++it) {
    std::array<std::size_t, kMinimalSample> sample{};
    for (std::size_t s = 0; s < kMinimalSample; ++s) {
      std::size_t candidate;
      do {
        candidate = pick(rng);
      } while (std::find(sample.begin(), sample.begin() + static_cast<std::ptrdiff_t>(s),
                         candidate) != sample.begin() + static_cast<std::ptrdiff_t>(s));
      sample[s] = candidate;
    }
    const auto model = align_points(pairs, sample);
    if (!model) continue;
    auto inliers = consensus(pairs, *model, ransac.inlier_threshold);
    if (inliers.size() > best.size()) best = std::move(inliers);
  }
  if (best.size() < needed) return RegistrationFailure::kNoConsensus;

  const auto refit = align_points(pairs, best);
  if (!refit) return RegistrationFailure::kNoConsensus;
  std::vector<std::size_t> final_inliers = consensus(pairs, *refit, ransac.inlier_threshold);
  if (final_inliers.size() < needed) return RegistrationFailure::kNoConsensus;

  RegistrationResult result;
  result.relative_pose = *refit;
  double sum_sq = 0.0;
  for (std::size_t k : final_inliers) {
    sum_sq += (pairs[k].first - *refit * pairs[k].second).squaredNorm();
  }
  result.inlier_correspondences = final_inliers.size();
  result.rms_error = std::sqrt(sum_sq / static_cast<double>(final_inliers.size()));
  result.inliers = std::move(final_inliers);
  return result;
}

std::uint64_t pair_seed(std::uint64_t base, std::size_t i, std::size_t j) {
  return splitmix64(splitmix64(base ^ splitmix64(i)) + j);
}

std::optional<PoseEdge> attempt_loop_closure(std::span<const KeyframeObservations> frames,
                                             std::size_t i, std::size_t j,
                                             const RegistrationConfig& config) {
  const auto pairs = match_correspondences(frame_by_id(frames, i), frame_by_id(frames, j));
  RansacConfig ransac = config.ransac;
  ransac.seed = pair_seed(config.ransac.seed, i, j);
  const RegistrationOutcome outcome =
      estimate_relative_pose(pairs, config.min_correspondences, ransac);
  if (!outcome) return std::nullopt;
  return PoseEdge{i, j, outcome.result().relative_pose, config.loop_information,
                  EdgeKind::kLoopClosure};
}

std::string observations_to_json(std::span<const KeyframeObservations> frames) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& f : frames) {
    nlohmann::json points = nlohmann::json::array();
    for (const auto& p : f.points) {
      points.push_back({{"landmark_id", p.landmark_id},
                        {"xyz", {p.position.x(), p.position.y(), p.position.z()}}});
    }
    out.push_back({{"keyframe_id", f.keyframe_id}, {"points", std::move(points)}});
  }
  return out.dump() + "\n";
}

std::vector<KeyframeObservations> observations_from_json(const std::string& text) {
  std::vector<KeyframeObservations> out;
  try {
    const auto j = nlohmann::json::parse(text);
    if (!j.is_array()) throw Error(ErrorCode::kSchemaViolation, "observations must be an array");
    for (const auto& f : j) {
      KeyframeObservations frame;
      frame.keyframe_id = f.at("keyframe_id").get<std::size_t>();
      for (const auto& p : f.at("points")) {
        const auto& xyz = p.at("xyz");
        if (!xyz.is_array() || xyz.size() != 3) {
          throw Error(ErrorCode::kSchemaViolation, "xyz must have three entries");
        }
        frame.points.push_back({p.at("landmark_id").get<LandmarkId>(),
                                Vector3(xyz[0].get<double>(), xyz[1].get<double>(),
                                        xyz[2].get<double>())});
      }
      std::vector<LandmarkId> ids;
      for (const auto& p : frame.points) ids.push_back(p.landmark_id);
      std::sort(ids.begin(), ids.end());
      if (std::adjacent_find(ids.begin(), ids.end()) != ids.end()) {
        throw Error(ErrorCode::kSchemaViolation, "duplicate landmark id in keyframe " +
                                                     std::to_string(frame.keyframe_id));
      }
      out.push_back(std::move(frame));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kSchemaViolation, std::string("observations: ") + e.what());
  }
  return out;
}

std::vector<KeyframeObservations> load_observations(const std::filesystem::path& path) {
  return observations_from_json(read_file(path));
}

void save_observations(const std::filesystem::path& path,
                       std::span<const KeyframeObservations> frames) {
  write_file(path, observations_to_json(frames));
}

}  // namespace vprcal
