#include <random>
#include <string>

#include <gtest/gtest.h>

#include "test_support.hpp"
#include "vprcal/errors.hpp"
#include "vprcal/pose_graph.hpp"

namespace vprcal {
namespace {

using testing::PosesNear;
using testing::random_pose;

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorCode::kIoFailure;
}

PoseGraph chain(std::size_t n) {
  std::vector<Pose> steps(n - 1, Pose::FromYaw(0.0, Vector3(1, 0, 0)));
  return chain_initialize(steps, Matrix6::Identity());
}

Matrix6 random_spd(std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Matrix6 a;
  for (int i = 0; i < 36; ++i) a.data()[i] = g(rng);
  Matrix6 m = a * a.transpose() + Matrix6::Identity();
  return 0.5 * (m + m.transpose());
}

PoseGraph random_graph(std::mt19937_64& rng, std::size_t n, std::size_t loops) {
  std::vector<OdometryMeasurement> odo;
  for (std::size_t i = 0; i + 1 < n; ++i) odo.push_back({random_pose(rng, 2.0), random_spd(rng)});
  PoseGraph g = chain_initialize(odo);
  for (std::size_t k = 0; k < loops; ++k) {
    const NodeId a = rng() % n;
    NodeId b = rng() % n;
    while (b + 1 >= a && b <= a + 1) b = rng() % n;
    g.add_loop_closure(a, b, random_pose(rng), random_spd(rng));
  }
  return g;
}

TEST(PoseGraph, LoopEdgeOnChain) {
  PoseGraph g = chain(100);
  g.add_loop_closure(0, 50, Pose::Identity());
  EXPECT_EQ(g.loop_closure_count(), 1u);
  EXPECT_EQ(g.edge_count(), 100u);
  EXPECT_EQ(g.loop_edge_indices(), std::vector<std::size_t>{99});
  EXPECT_EQ(g.edges()[99].information, default_loop_information());
}

TEST(PoseGraph, DefaultLoopInformation) {
  Vector6 d;
  d << 100, 100, 100, 400, 400, 400;
  EXPECT_TRUE(default_loop_information().isApprox(Matrix6(d.asDiagonal()), 1e-12));
}

TEST(PoseGraph, EdgeErrors) {
  PoseGraph g = chain(10);
  EXPECT_EQ(code_of([&] { g.add_odometry_edge(3, 5, Pose::Identity(), Matrix6::Identity()); }),
            ErrorCode::kNonChainOdometry);
  EXPECT_EQ(code_of([&] { g.add_loop_closure(0, 5, Pose::Identity(), Matrix6::Zero()); }),
            ErrorCode::kNonSpdInformation);
  Matrix6 asym = Matrix6::Identity();
  asym(0, 1) = 1e-6;
  EXPECT_EQ(code_of([&] { g.add_loop_closure(0, 5, Pose::Identity(), asym); }),
            ErrorCode::kNonSpdInformation);
  EXPECT_EQ(code_of([&] { g.add_loop_closure(0, 50, Pose::Identity()); }),
            ErrorCode::kUnknownNode);
  EXPECT_EQ(g.edge_count(), 9u);
}

TEST(PoseGraph, ChainInitializeExamples) {
  const PoseGraph still =
      chain_initialize(std::vector<Pose>(4, Pose::Identity()), Matrix6::Identity());
  for (const auto& n : still.nodes()) EXPECT_TRUE(PosesNear(n.estimate, Pose::Identity(), 0.0));
  const PoseGraph line = chain(6);
  EXPECT_TRUE(PosesNear(line.nodes()[5].estimate, Pose(Matrix3::Identity(), Vector3(5, 0, 0)),
                        1e-15));
}

TEST(PoseGraph, ChainInitializeMatchesFold) {
  std::mt19937_64 rng(1);
  std::vector<Pose> steps;
  for (int i = 0; i < 50; ++i) steps.push_back(random_pose(rng, 1.0));
  const PoseGraph g = chain_initialize(steps, Matrix6::Identity());
  Eigen::Matrix4d fold = Eigen::Matrix4d::Identity();
  for (std::size_t k = 0; k < g.node_count(); ++k) {
    const Pose& p = g.nodes()[k].estimate;
    EXPECT_LT((p.rotation_matrix() - fold.topLeftCorner<3, 3>()).norm(), 1e-12);
    EXPECT_LT((p.translation() - fold.topRightCorner<3, 1>()).norm(), 1e-12 * (1 + k));
    if (k < steps.size()) {
      Eigen::Matrix4d step = Eigen::Matrix4d::Identity();
      step.topLeftCorner<3, 3>() = steps[k].rotation_matrix();
      step.topRightCorner<3, 1>() = steps[k].translation();
      fold = fold * step;
    }
  }
  const auto odo = extract_odometry(g);
  ASSERT_EQ(odo.size(), steps.size());
  EXPECT_TRUE(PosesNear(odo[7].relative, steps[7], 0.0));
}

TEST(PoseGraph, HandWrittenFixture) {
  const std::string text =
      "# square with one loop\n"
      "VERTEX_SE3:QUAT 0 0 0 0 0 0 0 1\n"
      "VERTEX_SE3:QUAT 1 1 0 0 0 0 0.70710678118654752 0.70710678118654752\n"
      "VERTEX_SE3:QUAT 2 1 1 0 0 0 1 0\n"
      "VERTEX_SE3:QUAT 3 0 1 0 0 0 0.70710678118654752 -0.70710678118654752\n"
      "EDGE_SE3:QUAT 0 1 1 0 0 0 0 0.70710678118654752 0.70710678118654752 "
      "1 0 0 0 0 0 1 0 0 0 0 1 0 0 0 1 0 0 1 0 1\n"
      "EDGE_SE3:QUAT 1 2 1 0 0 0 0 0.70710678118654752 0.70710678118654752 "
      "1 0 0 0 0 0 1 0 0 0 0 1 0 0 0 1 0 0 1 0 1\n"
      "EDGE_SE3:QUAT 2 3 1 0 0 0 0 0.70710678118654752 0.70710678118654752 "
      "1 0 0 0 0 0 1 0 0 0 0 1 0 0 0 1 0 0 1 0 1\n"
      "EDGE_SE3:QUAT 3 0 1 0 0 0 0 0.70710678118654752 0.70710678118654752 "
      "4 0.5 0 0 0 0 4 0 0 0 0 4 0 0 0 9 0 0 9 0 9\n";
  const PoseGraph g = parse_g2o(text);
  ASSERT_EQ(g.node_count(), 4u);
  EXPECT_EQ(g.edge_count(), 4u);
  EXPECT_EQ(g.loop_closure_count(), 1u);
  EXPECT_EQ(g.edges()[3].kind, EdgeKind::kLoopClosure);
  EXPECT_EQ(g.edges()[3].from_id, 3u);
  EXPECT_EQ(g.edges()[3].to_id, 0u);
  const Matrix6& info = g.edges()[3].information;
  EXPECT_EQ(info, info.transpose());
  EXPECT_EQ(info(0, 1), 0.5);
  EXPECT_EQ(info(1, 0), 0.5);
  EXPECT_EQ(info(5, 5), 9.0);
  EXPECT_TRUE(PosesNear(g.nodes()[2].estimate, Pose::FromYaw(std::acos(-1.0), Vector3(1, 1, 0)),
                        1e-15));
  // the loop measurement is consistent with the vertices
  const Pose implied = between(g.nodes()[3].estimate, g.nodes()[0].estimate);
  EXPECT_TRUE(PosesNear(implied, g.edges()[3].measurement, 1e-12));
}

TEST(PoseGraph, SingleVertexRoundTrip) {
  PoseGraph g;
  g.add_node(Pose::Identity());
  const PoseGraph back = parse_g2o(write_g2o(g));
  ASSERT_EQ(back.node_count(), 1u);
  EXPECT_TRUE(PosesNear(back.nodes()[0].estimate, Pose::Identity(), 0.0));
}

TEST(PoseGraph, RandomRoundTripIsExact) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const PoseGraph g = random_graph(rng, 5 + rng() % 40, rng() % 10);
    const std::string text = write_g2o(g);
    const PoseGraph back = parse_g2o(text);
    ASSERT_EQ(back.node_count(), g.node_count());
    ASSERT_EQ(back.edge_count(), g.edge_count());
    for (std::size_t i = 0; i < g.node_count(); ++i) {
      EXPECT_EQ(back.nodes()[i].id, g.nodes()[i].id);
      EXPECT_LE((back.nodes()[i].estimate.translation() - g.nodes()[i].estimate.translation())
                    .cwiseAbs()
                    .maxCoeff(),
                0.0);
      EXPECT_LE((back.nodes()[i].estimate.rotation().coeffs() -
                 g.nodes()[i].estimate.rotation().coeffs())
                    .cwiseAbs()
                    .maxCoeff(),
                1e-15);
    }
    for (std::size_t i = 0; i < g.edge_count(); ++i) {
      const PoseEdge& a = g.edges()[i];
      const PoseEdge& b = back.edges()[i];
      EXPECT_EQ(a.from_id, b.from_id);
      EXPECT_EQ(a.to_id, b.to_id);
      EXPECT_EQ(a.kind, b.kind);
      EXPECT_EQ(a.information, b.information);
      EXPECT_EQ(a.measurement.translation(), b.measurement.translation());
      EXPECT_LE((a.measurement.rotation().coeffs() - b.measurement.rotation().coeffs())
                    .cwiseAbs()
                    .maxCoeff(),
                1e-15);
      // kind is recoverable from the indices alone
      EXPECT_EQ(b.kind == EdgeKind::kOdometry, b.to_id == b.from_id + 1);
    }
    EXPECT_EQ(write_g2o(back), text);
  }
}

TEST(PoseGraph, ParseErrors) {
  try {
    parse_g2o("VERTEX_SE3:QUAT 0 0 0 0 0 0 0 1\nVERTEX_SE2 1 0 0 0\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.code(), ErrorCode::kMalformedLine);
    EXPECT_EQ(e.line_number(), 2u);
  }
  try {
    parse_g2o("VERTEX_SE3:QUAT 0 0 0 0 0 0 0 1\nVERTEX_SE3:QUAT 1 0 0 x 0 0 0 1\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line_number(), 2u);
  }
  EXPECT_EQ(code_of([] {
              parse_g2o(
                  "VERTEX_SE3:QUAT 0 0 0 0 0 0 0 1\n"
                  "EDGE_SE3:QUAT 0 1 1 0 0 0 0 0 1 1 0 0 0 0 0 1 0 0 0 0 1 0 0 0 1 0 0 1 0 1\n");
            }),
            ErrorCode::kMissingVertex);
  EXPECT_EQ(code_of([] {
              parse_g2o("VERTEX_SE3:QUAT 0 0 0 0 0 0 0 1\nVERTEX_SE3:QUAT 2 0 0 0 0 0 0 1\n");
            }),
            ErrorCode::kMissingVertex);
}

TEST(PoseGraph, ValidateChain) {
  PoseGraph g;
  g.add_node(Pose::Identity());
  g.add_node(Pose::Identity());
  g.add_node(Pose::Identity());
  g.add_odometry_edge(0, 1, Pose::Identity(), Matrix6::Identity());
  EXPECT_EQ(code_of([&] { g.validate_chain(); }), ErrorCode::kNonChainOdometry);
  g.add_odometry_edge(1, 2, Pose::Identity(), Matrix6::Identity());
  EXPECT_NO_THROW(g.validate_chain());
}

}  // namespace
}  // namespace vprcal
