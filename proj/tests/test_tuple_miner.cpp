#include <algorithm>
#include <set>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "test_support.hpp"
#include "vprcal/errors.hpp"
#include "vprcal/simulator.hpp"
#include "vprcal/tuple_miner.hpp"

namespace vprcal {
namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorCode::kIoFailure;
}

struct Mined {
  World world;
  DescriptorStore store{1};
  MiningResult result;
};

Mined mine_world(const WorldConfig& cfg, const MiningConfig& mining = {}) {
  Mined m;
  m.world = generate(cfg);
  m.store = make_store(m.world.descriptors);
  m.result = mine(m.store, m.world.observations, m.world.odometry, mining);
  return m;
}

std::size_t gap(std::size_t a, std::size_t b) { return a > b ? a - b : b - a; }

TEST(TupleMiner, CandidateWalkEqualsQuery) {
  const World w = generate(WorldConfig{});
  const DescriptorStore store = make_store(w.descriptors);
  for (KeyframeId a : {0u, 37u, 150u}) {
    const CandidateWalk walk = candidate_walk(store, a, 50);
    EXPECT_EQ(std::vector<MatchCandidate>(walk.begin(), walk.end()), store.query(a, 50, 10));
    const CandidateWalk one = candidate_walk(store, a, 1);
    ASSERT_EQ(one.size(), 1u);
    EXPECT_EQ(*one.begin(), store.query(a, 200, 10).front());
  }
  EXPECT_TRUE(candidate_walk(make_store({w.descriptors[0], w.descriptors[1]}), 0, 5).empty());
}

TEST(TupleMiner, WindowNeverViolated) {
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    WorldConfig cfg;
    cfg.seed = seed;
    cfg.trajectory = seed % 2 ? TrajectoryKind::kLoop : TrajectoryKind::kFigureEight;
    cfg.aliasing_pairs = 1;
    const Mined m = mine_world(cfg);
    EXPECT_FALSE(m.result.tuples.empty());
    for (const auto& t : m.result.tuples) {
      EXPECT_GT(gap(t.anchor_id, t.positive_id), 10u);
      std::set<KeyframeId> negs(t.negative_ids.begin(), t.negative_ids.end());
      EXPECT_EQ(negs.size(), t.negative_ids.size());
      EXPECT_EQ(negs.count(t.positive_id), 0u);
      EXPECT_GE(t.negative_ids.size(), 1u);
      EXPECT_LE(t.negative_ids.size(), 10u);
      for (KeyframeId n : t.negative_ids) EXPECT_GT(gap(t.anchor_id, n), 10u);
    }
  }
}

TEST(TupleMiner, PositiveIsFirstRegisteringCandidate) {
  WorldConfig cfg;
  cfg.aliasing_pairs = 2;
  const MiningConfig mining;
  const Mined m = mine_world(cfg, mining);
  std::map<KeyframeId, const TrainingTuple*> by_anchor;
  for (const auto& t : m.result.tuples) by_anchor[t.anchor_id] = &t;

  std::size_t without_positive = 0, without_negatives = 0;
  for (KeyframeId a = 0; a < m.store.size(); ++a) {
    // independent re-walk over a brute-force sorted candidate list
    std::vector<std::pair<double, KeyframeId>> order;
    for (KeyframeId c = 0; c < m.store.size(); ++c) {
      if (gap(a, c) > mining.window) {
        order.emplace_back((m.store.vector(a) - m.store.vector(c)).norm(), c);
      }
    }
    std::sort(order.begin(), order.end());
    if (order.size() > mining.k_max) order.resize(mining.k_max);
    std::optional<KeyframeId> positive;
    std::vector<KeyframeId> negatives;
    for (const auto& [d, c] : order) {
      const bool ok =
          attempt_loop_closure(m.world.observations, a, c, mining.registration).has_value();
      if (!positive) {
        if (ok) positive = c;
      } else if (!ok && negatives.size() < mining.max_negatives) {
        negatives.push_back(c);
      }
    }
    if (!positive) {
      ++without_positive;
      EXPECT_EQ(by_anchor.count(a), 0u) << a;
      continue;
    }
    if (negatives.empty()) {
      ++without_negatives;
      EXPECT_EQ(by_anchor.count(a), 0u) << a;
      continue;
    }
    ASSERT_EQ(by_anchor.count(a), 1u) << a;
    EXPECT_EQ(by_anchor[a]->positive_id, *positive) << a;
    EXPECT_EQ(by_anchor[a]->negative_ids, negatives) << a;
  }
  EXPECT_EQ(m.result.report.keyframes_without_positive, without_positive);
  EXPECT_EQ(m.result.report.tuples_without_negatives, without_negatives);
  EXPECT_EQ(m.result.report.tuples_extracted, m.result.tuples.size());
}

TEST(TupleMiner, StatusPartitionMatchesGnc) {
  WorldConfig cfg;
  cfg.aliasing_pairs = 2;
  const Mined m = mine_world(cfg);
  const std::set<std::size_t> inliers(m.result.gnc.report.inlier_edges.begin(),
                                      m.result.gnc.report.inlier_edges.end());
  const std::set<std::size_t> outliers(m.result.gnc.report.outlier_edges.begin(),
                                       m.result.gnc.report.outlier_edges.end());
  std::size_t rejected = 0;
  for (const auto& t : m.result.tuples) {
    const PoseEdge& e = m.result.graph.edges().at(t.loop_edge_index);
    EXPECT_EQ(e.kind, EdgeKind::kLoopClosure);
    EXPECT_EQ(e.from_id, t.anchor_id);
    EXPECT_EQ(e.to_id, t.positive_id);
    if (t.status == TupleStatus::kInlier) {
      EXPECT_EQ(inliers.count(t.loop_edge_index), 1u);
    } else {
      ASSERT_EQ(t.status, TupleStatus::kRejected);
      EXPECT_EQ(outliers.count(t.loop_edge_index), 1u);
      ++rejected;
    }
  }
  EXPECT_EQ(m.result.report.tuples_rejected_by_pgo, rejected);
}

TEST(TupleMiner, AliasedTuplesRejectedGenuineKept) {
  WorldConfig cfg;
  cfg.aliasing_pairs = 2;
  const Mined m = mine_world(cfg);
  const auto& truth = m.world.truth;
  std::set<KeyframePair> aliased(truth.aliased_pairs.begin(), truth.aliased_pairs.end());
  std::size_t aliased_tuples = 0, genuine = 0, genuine_kept = 0;
  for (const auto& t : m.result.tuples) {
    const KeyframePair key{std::min(t.anchor_id, t.positive_id),
                           std::max(t.anchor_id, t.positive_id)};
    if (aliased.count(key)) {
      ++aliased_tuples;
      EXPECT_EQ(t.status, TupleStatus::kRejected) << key.first << "," << key.second;
    } else if (true_label(truth, t.anchor_id, t.positive_id) == TrueLabel::kPositive) {
      ++genuine;
      genuine_kept += t.status == TupleStatus::kInlier;
    }
  }
  EXPECT_GE(aliased_tuples, 2u);
  EXPECT_EQ(genuine_kept, genuine);
}

TEST(TupleMiner, CleanLoopHasNoRejects) {
  const Mined m = mine_world(WorldConfig{});
  EXPECT_GT(m.result.tuples.size(), 50u);
  EXPECT_EQ(m.result.report.tuples_rejected_by_pgo, 0u);
  for (const auto& t : m.result.tuples) {
    EXPECT_EQ(t.status, TupleStatus::kInlier);
    // positives can sit past the revisit radius but the closure must still be right
    const PoseEdge& e = m.result.graph.edges()[t.loop_edge_index];
    const Pose expected = between(m.world.truth.poses[e.from_id], m.world.truth.poses[e.to_id]);
    EXPECT_LT(translation_distance(e.measurement, expected), 0.15);
    EXPECT_LT(rotation_distance(e.measurement, expected), 0.06);
  }
  // every second-lap keyframe has a revisit and yields a tuple
  std::set<KeyframeId> anchors;
  for (const auto& t : m.result.tuples) anchors.insert(t.anchor_id);
  std::size_t covered = 0;
  for (KeyframeId k = 100; k < 200; ++k) covered += anchors.count(k);
  EXPECT_GE(covered, 95u);
}

TEST(TupleMiner, StraightLineYieldsNothing) {
  WorldConfig cfg;
  cfg.route_length = 10000.0;
  const Mined m = mine_world(cfg);
  EXPECT_TRUE(m.result.tuples.empty());
  EXPECT_EQ(m.result.report.keyframes_without_positive, cfg.keyframe_count);
  EXPECT_EQ(m.result.graph.loop_closure_count(), 0u);
}

TEST(TupleMiner, Deterministic) {
  WorldConfig cfg;
  cfg.aliasing_pairs = 1;
  const Mined a = mine_world(cfg);
  const Mined b = mine_world(cfg);
  EXPECT_EQ(tuples_to_json(a.result.tuples), tuples_to_json(b.result.tuples));
}

TEST(TupleMiner, InputLengthMismatch) {
  const World w = generate(WorldConfig{});
  const DescriptorStore store = make_store(w.descriptors);
  std::vector<KeyframeObservations> short_obs(w.observations.begin(), w.observations.end() - 1);
  EXPECT_EQ(code_of([&] { mine(store, short_obs, w.odometry); }),
            ErrorCode::kInputLengthMismatch);
}

std::vector<TrainingTuple> random_tuples(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<TrainingTuple> out;
  for (std::size_t k = 0; k < n; ++k) {
    TrainingTuple t;
    t.anchor_id = rng() % 1000;
    t.positive_id = rng() % 1000;
    for (std::size_t i = 0, c = 1 + rng() % 10; i < c; ++i) t.negative_ids.push_back(rng() % 1000);
    t.loop_edge_index = rng() % 5000;
    t.status = static_cast<TupleStatus>(rng() % 3);
    out.push_back(t);
  }
  return out;
}

TEST(TupleMiner, JsonRoundTrip) {
  EXPECT_TRUE(tuples_from_json(tuples_to_json({})).empty());
  const auto tuples = random_tuples(297, 5);
  EXPECT_EQ(tuples_from_json(tuples_to_json(tuples)), tuples);
  testing::TempDir dir("tuples");
  export_tuples(tuples, dir.path() / "t.json");
  EXPECT_EQ(import_tuples(dir.path() / "t.json"), tuples);
  EXPECT_EQ(code_of([&] { import_tuples(dir.path() / "nope.json"); }), ErrorCode::kIoFailure);
}

TEST(TupleMiner, RejectedStatusIsExported) {
  auto tuples = random_tuples(3, 6);
  tuples[1].status = TupleStatus::kRejected;
  const auto j = nlohmann::json::parse(tuples_to_json(tuples));
  EXPECT_EQ(j.at("tuples").size(), 3u);
  EXPECT_EQ(j["tuples"][1]["status"], "rejected");
}

TEST(TupleMiner, SchemaViolations) {
  EXPECT_EQ(code_of([] {
              tuples_from_json(
                  R"({"version":1,"tuples":[{"anchor":0,"positive":20,"loop_edge":3,"status":"inlier"}]})");
            }),
            ErrorCode::kSchemaViolation);
  EXPECT_EQ(code_of([] {
              tuples_from_json(
                  R"({"version":1,"tuples":[{"anchor":0,"positive":20,"negatives":[],"loop_edge":3,"status":"inlier"}]})");
            }),
            ErrorCode::kSchemaViolation);
  EXPECT_EQ(code_of([] { tuples_from_json("{not json"); }), ErrorCode::kSchemaViolation);
  EXPECT_EQ(code_of([] {
              tuples_from_json(
                  R"({"version":1,"tuples":[{"anchor":0,"positive":20,"negatives":[1],"loop_edge":3,"status":"maybe"}]})");
            }),
            ErrorCode::kSchemaViolation);
}

}  // namespace
}  // namespace vprcal
