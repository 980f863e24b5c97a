#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "vprcal/geometry.hpp"
#include "vprcal/pose_graph.hpp"

namespace vprcal {

struct ResidualEvaluation {
  std::size_t edge_index = 0;
  Twist residual;
  double whitened_norm_sq = 0.0;
};

/// r = log(Z^-1 * X_from^-1 * X_to). Propagates NearPiRotation.
ResidualEvaluation residual(const PoseGraph& graph, std::size_t edge_index,
                            std::span<const Pose> estimates);

/// Jacobians of the residual with respect to left perturbations
/// X <- exp(delta) * X of the two endpoints.
struct EdgeJacobians {
  Vector6 residual;
  Eigen::Matrix<double, 6, 6> d_from;
  Eigen::Matrix<double, 6, 6> d_to;
};
EdgeJacobians edge_jacobians(const PoseEdge& edge, const Pose& from, const Pose& to);

/// Sum over edges of w_e * r^T Omega r. `weights` has one entry per edge.
double total_cost(const PoseGraph& graph, std::span<const Pose> estimates,
                  std::span<const double> weights);
/// Gradient of total_cost with respect to left perturbations of every node
/// (6 * node_count entries, node-major).
Eigen::VectorXd cost_gradient(const PoseGraph& graph, std::span<const Pose> estimates,
                              std::span<const double> weights);

/// Per-edge weights: 1 for every edge.
std::vector<double> unit_weights(const PoseGraph& graph);

enum class LinearSolverKind { kSparseCholesky, kDenseCholesky };

struct LmConfig {
  std::size_t max_iterations = 100;
  double initial_lambda = 1e-4;
  double lambda_increase = 10.0;
  double lambda_decrease = 10.0;
  double max_lambda = 1e16;
  double step_tolerance = 1e-8;
  double relative_cost_tolerance = 1e-9;
  LinearSolverKind solver = LinearSolverKind::kSparseCholesky;
};

struct OptimizeReport {
  bool converged = false;
  std::size_t iterations = 0;
  double initial_cost = 0.0;
  double final_cost = 0.0;
  /// Edge indices (into graph.edges()) of loop closures, partitioned.
  std::vector<std::size_t> inlier_edges;
  std::vector<std::size_t> outlier_edges;
};

struct LmResult {
  std::vector<Pose> estimates;
  OptimizeReport report;
};

/// Weighted Levenberg-Marquardt starting from the graph's node estimates.
/// Node 0 is held fixed. Loop edges with weight >= 0.5 are reported as
/// inliers. Throws SingularNormalEquations if damping cannot make the system
/// factorizable and NonChainOdometry for a broken chain.
LmResult optimize_lm(const PoseGraph& graph, std::span<const double> weights,
                     const LmConfig& config = {});
/// Same, starting from explicit estimates instead of the stored ones.
LmResult optimize_lm(const PoseGraph& graph, std::span<const Pose> initial,
                     std::span<const double> weights, const LmConfig& config = {});

/// RMSE of translation error between two trajectories of equal length, each
/// expressed relative to its own first pose.
double trajectory_rmse(std::span<const Pose> a, std::span<const Pose> b);

std::string report_to_json(const OptimizeReport& report);

}  // namespace vprcal
