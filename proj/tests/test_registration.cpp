#include <random>

#include <gtest/gtest.h>

#include "test_support.hpp"
#include "vprcal/errors.hpp"
#include "vprcal/registration.hpp"
#include "vprcal/simulator.hpp"

namespace vprcal {
namespace {

using testing::PosesNear;
using testing::random_pose;

std::vector<PointPair> pairs_from_pose(const Pose& t, std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  std::vector<PointPair> out;
  for (std::size_t k = 0; k < n; ++k) {
    const Vector3 second(u(rng), u(rng), u(rng));
    out.push_back({static_cast<LandmarkId>(k), t * second, second});
  }
  return out;
}

KeyframeObservations frame(std::size_t id, std::initializer_list<LandmarkId> ids) {
  KeyframeObservations f{id, {}};
  for (LandmarkId l : ids) f.points.push_back({l, Vector3(double(l), 1.0, 2.0)});
  return f;
}

TEST(Registration, MatchBySetIntersection) {
  const auto a = frame(0, {5, 1, 3, 2});
  const auto b = frame(1, {9, 2, 5, 3});
  const auto pairs = match_correspondences(a, b);
  ASSERT_EQ(pairs.size(), 3u);
  EXPECT_EQ(pairs[0].landmark_id, 2);
  EXPECT_EQ(pairs[2].landmark_id, 5);
  EXPECT_TRUE(match_correspondences(frame(0, {1, 2}), frame(1, {3, 4})).empty());
  for (const auto& p : match_correspondences(a, a)) EXPECT_EQ(p.first, p.second);
}

TEST(Registration, TooFewCorrespondences) {
  std::mt19937_64 rng(1);
  const auto pairs = pairs_from_pose(random_pose(rng), 5, rng);
  const auto outcome = estimate_relative_pose(pairs, 6, RansacConfig{});
  ASSERT_FALSE(outcome.ok());
  EXPECT_EQ(outcome.failure(), RegistrationFailure::kTooFewCorrespondences);
}

TEST(Registration, NoiselessRecovery) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    const Pose truth = random_pose(rng, 10.0);
    const auto pairs = pairs_from_pose(truth, 20, rng);
    const auto outcome = estimate_relative_pose(pairs, 6, RansacConfig{});
    ASSERT_TRUE(outcome.ok());
    EXPECT_TRUE(PosesNear(outcome.result().relative_pose, truth, 1e-9)) << trial;
    EXPECT_EQ(outcome.result().inlier_correspondences, 20u);
    EXPECT_NEAR(outcome.result().relative_pose.rotation_matrix().determinant(), 1.0, 1e-9);
  }
}

TEST(Registration, CorruptedPairsExcluded) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const Pose truth = random_pose(rng, 10.0);
    auto pairs = pairs_from_pose(truth, 20, rng);
    for (std::size_t k = 0; k < 6; ++k) {
      pairs[3 * k].first += Vector3(u(rng), u(rng), u(rng)).normalized();
    }
    RansacConfig cfg;
    cfg.seed = trial;
    const auto outcome = estimate_relative_pose(pairs, 6, cfg);
    ASSERT_TRUE(outcome.ok());
    EXPECT_TRUE(PosesNear(outcome.result().relative_pose, truth, 1e-6));
    for (std::size_t idx : outcome.result().inliers) EXPECT_TRUE(idx % 3 != 0 || idx >= 18);
    EXPECT_EQ(outcome.result().inlier_correspondences, 14u);
  }
}

TEST(Registration, ReflectionNeverReturned) {
  // mirror-symmetric clouds tempt a reflection
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    const Pose truth = random_pose(rng);
    auto pairs = pairs_from_pose(truth, 8, rng);
    for (auto& p : pairs) {
      p.second.z() = 0.0;
      p.first = truth * p.second;
    }
    const auto outcome = estimate_relative_pose(pairs, 6, RansacConfig{});
    ASSERT_TRUE(outcome.ok());
    EXPECT_NEAR(outcome.result().relative_pose.rotation_matrix().determinant(), 1.0, 1e-9);
    EXPECT_TRUE(PosesNear(outcome.result().relative_pose, truth, 1e-9));
  }
}

TEST(Registration, NoConsensusOnGarbage) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  std::vector<PointPair> pairs;
  for (int k = 0; k < 12; ++k) {
    pairs.push_back({k, Vector3(u(rng), u(rng), u(rng)), Vector3(u(rng), u(rng), u(rng))});
  }
  const auto outcome = estimate_relative_pose(pairs, 6, RansacConfig{});
  ASSERT_FALSE(outcome.ok());
  EXPECT_EQ(outcome.failure(), RegistrationFailure::kNoConsensus);
}

TEST(Registration, SymmetricUnderSwap) {
  std::mt19937_64 rng(6);
  const Pose truth = random_pose(rng);
  auto pairs = pairs_from_pose(truth, 15, rng);
  auto swapped = pairs;
  for (auto& p : swapped) std::swap(p.first, p.second);
  const auto a = estimate_relative_pose(pairs, 6, RansacConfig{});
  const auto b = estimate_relative_pose(swapped, 6, RansacConfig{});
  ASSERT_TRUE(a.ok() && b.ok());
  EXPECT_TRUE(PosesNear(a.result().relative_pose * b.result().relative_pose, Pose::Identity(),
                        1e-9));
}

TEST(Registration, DeterministicGivenSeed) {
  std::mt19937_64 rng(7);
  const Pose truth = random_pose(rng);
  auto pairs = pairs_from_pose(truth, 30, rng);
  for (std::size_t k = 0; k < 10; ++k) pairs[k].first.x() += 2.0;
  RansacConfig cfg;
  cfg.seed = 99;
  const auto a = estimate_relative_pose(pairs, 6, cfg);
  const auto b = estimate_relative_pose(pairs, 6, cfg);
  ASSERT_TRUE(a.ok() && b.ok());
  EXPECT_EQ(a.result().inliers, b.result().inliers);
  EXPECT_EQ(pair_seed(1, 2, 3), pair_seed(1, 2, 3));
  EXPECT_NE(pair_seed(1, 2, 3), pair_seed(1, 3, 2));
}

TEST(Registration, LoopClosureOnSimulatedRevisit) {
  WorldConfig cfg;
  cfg.seed = 8;
  const World world = generate(cfg);
  ASSERT_FALSE(world.truth.revisit_pairs.empty());
  RegistrationConfig reg;
  std::size_t attempted = 0, closed = 0;
  for (std::size_t k = 0; k < world.truth.revisit_pairs.size(); k += 5) {
    const auto [i, j] = world.truth.revisit_pairs[k];
    ++attempted;
    const auto edge = attempt_loop_closure(world.observations, i, j, reg);
    if (!edge) continue;
    ++closed;
    EXPECT_EQ(edge->kind, EdgeKind::kLoopClosure);
    EXPECT_EQ(edge->information, default_loop_information());
    const Pose expected = between(world.truth.poses[i], world.truth.poses[j]);
    // three sigma of the observation noise, amplified by the lever arm
    EXPECT_LT(translation_distance(edge->measurement, expected), 3 * 0.05);
    EXPECT_LT(rotation_distance(edge->measurement, expected), 3 * 0.02);
  }
  EXPECT_GT(closed, attempted / 2);
}

TEST(Registration, IdenticalFramesGiveIdentity) {
  WorldConfig cfg;
  cfg.observation_noise = 0.0;
  const World world = generate(cfg);
  std::vector<KeyframeObservations> frames = {world.observations[20], world.observations[20]};
  frames[0].keyframe_id = 0;
  frames[1].keyframe_id = 1;
  const auto edge = attempt_loop_closure(frames, 0, 1, RegistrationConfig{});
  ASSERT_TRUE(edge.has_value());
  EXPECT_TRUE(PosesNear(edge->measurement, Pose::Identity(), 1e-9));
}

TEST(Registration, FewSharedLandmarksGiveNoEdge) {
  std::vector<KeyframeObservations> frames = {frame(0, {1, 2, 3, 4, 5, 6, 7}),
                                              frame(1, {3, 4, 5, 6, 7, 8, 9})};
  EXPECT_FALSE(attempt_loop_closure(frames, 0, 1, RegistrationConfig{}).has_value());
}

TEST(Registration, ObservationJsonRoundTrip) {
  WorldConfig cfg;
  cfg.keyframe_count = 30;
  const World world = generate(cfg);
  const auto back = observations_from_json(observations_to_json(world.observations));
  ASSERT_EQ(back.size(), world.observations.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    ASSERT_EQ(back[i].points.size(), world.observations[i].points.size());
    for (std::size_t k = 0; k < back[i].points.size(); ++k) {
      EXPECT_EQ(back[i].points[k].position, world.observations[i].points[k].position);
    }
  }
  EXPECT_THROW(observations_from_json(R"([{"keyframe_id":0,"points":[{"landmark_id":1,"xyz":[1,2]}]}])"),
               Error);
}

}  // namespace
}  // namespace vprcal
