#include "vprcal/optimizer.hpp"

#include <cmath>
#include <limits>

#include <Eigen/Cholesky>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>
#include <nlohmann/json.hpp>

#include "vprcal/errors.hpp"

namespace vprcal {
namespace {

// Below this the cost is rounding noise and there is nothing left to descend.
constexpr double kNegligibleCost = 1e-24;

using SparseMatrix = Eigen::SparseMatrix<double>;

void check_sizes(const PoseGraph& graph, std::span<const Pose> estimates,
                 std::span<const double> weights) {
  if (estimates.size() != graph.node_count()) {
    throw Error(ErrorCode::kInputLengthMismatch, "estimate count " +
                                                     std::to_string(estimates.size()) +
                                                     " != node count " +
                                                     std::to_string(graph.node_count()));
  }
  if (weights.size() != graph.edge_count()) {
    throw Error(ErrorCode::kInputLengthMismatch, "weight count " + std::to_string(weights.size()) +
                                                     " != edge count " +
                                                     std::to_string(graph.edge_count()));
  }
}

// Normal equations over nodes 1..N-1 (node 0 is the gauge anchor).
struct NormalEquations {
  Eigen::VectorXd gradient;
  std::vector<Eigen::Triplet<double>> triplets;
  Eigen::MatrixXd dense;
};

void add_block(NormalEquations& ne, bool dense, Eigen::Index row, Eigen::Index col,
               const Matrix6& block) {
  if (dense) {
    ne.dense.block<6, 6>(row, col) += block;
    return;
  }
  for (int r = 0; r < 6; ++r) {
    for (int c = 0; c < 6; ++c) ne.triplets.emplace_back(row + r, col + c, block(r, c));
  }
}

NormalEquations build_normal_equations(const PoseGraph& graph, std::span<const Pose> x,
                                       std::span<const double> weights, bool dense) {
  const auto dim = static_cast<Eigen::Index>(6 * (graph.node_count() - 1));
  NormalEquations ne;
  ne.gradient = Eigen::VectorXd::Zero(dim);
  if (dense) {
    ne.dense = Eigen::MatrixXd::Zero(dim, dim);
  } else {
    ne.triplets.reserve(graph.edge_count() * 4 * 36);
  }
  for (std::size_t e = 0; e < graph.edge_count(); ++e) {
    if (weights[e] == 0.0) continue;
    const PoseEdge& edge = graph.edges()[e];
    const EdgeJacobians jac = edge_jacobians(edge, x[edge.from_id], x[edge.to_id]);
    const Matrix6 weighted_info = weights[e] * edge.information;
    const Vector6 wr = weighted_info * jac.residual;
    const Eigen::Matrix<double, 6, 6> jt_info_from = jac.d_from.transpose() * weighted_info;
    const Eigen::Matrix<double, 6, 6> jt_info_to = jac.d_to.transpose() * weighted_info;
    const bool from_free = edge.from_id != 0;
    const bool to_free = edge.to_id != 0;
    const Eigen::Index fi = 6 * (static_cast<Eigen::Index>(edge.from_id) - 1);
    const Eigen::Index ti = 6 * (static_cast<Eigen::Index>(edge.to_id) - 1);
    if (from_free) {
      ne.gradient.segment<6>(fi) += jac.d_from.transpose() * wr;
      add_block(ne, dense, fi, fi, jt_info_from * jac.d_from);
    }
    if (to_free) {
      ne.gradient.segment<6>(ti) += jac.d_to.transpose() * wr;
      add_block(ne, dense, ti, ti, jt_info_to * jac.d_to);
    }
    if (from_free && to_free) {
      const Matrix6 cross = jt_info_from * jac.d_to;
      add_block(ne, dense, fi, ti, cross);
      add_block(ne, dense, ti, fi, cross.transpose());
    }
  }
  return ne;
}

std::vector<Pose> retract(std::span<const Pose> x, const Eigen::VectorXd& delta) {
  std::vector<Pose> out(x.begin(), x.end());
  for (std::size_t k = 1; k < out.size(); ++k) {
    const Vector6 d = delta.segment<6>(6 * static_cast<Eigen::Index>(k - 1));
    out[k] = exp(Twist::FromVector(d)) * out[k];
  }
  return out;
}

void partition_loop_edges(const PoseGraph& graph, std::span<const double> weights,
                          OptimizeReport& report) {
  report.inlier_edges.clear();
  report.outlier_edges.clear();
  for (std::size_t e : graph.loop_edge_indices()) {
    (weights[e] >= 0.5 ? report.inlier_edges : report.outlier_edges).push_back(e);
  }
}

// Damped solve; returns false when the factorization fails.
class DampedSolver {
 public:
  DampedSolver(const NormalEquations& ne, bool dense) : ne_(ne), dense_(dense) {
    if (dense_) {
      diagonal_ = ne_.dense.diagonal();
    } else {
      const auto dim = ne_.gradient.size();
      hessian_.resize(dim, dim);
      hessian_.setFromTriplets(ne_.triplets.begin(), ne_.triplets.end());
      diagonal_ = hessian_.diagonal();
      sparse_.analyzePattern(hessian_);
    }
  }

  bool solve(double lambda, Eigen::VectorXd& delta) {
    if (dense_) {
      Eigen::MatrixXd damped = ne_.dense;
      damped.diagonal() += lambda * diagonal_;
      Eigen::LLT<Eigen::MatrixXd> llt(damped);
      if (llt.info() != Eigen::Success) return false;
      delta = llt.solve(-ne_.gradient);
    } else {
      SparseMatrix damped = hessian_;
      damped.diagonal() += lambda * diagonal_;
      sparse_.factorize(damped);
      if (sparse_.info() != Eigen::Success) return false;
      delta = sparse_.solve(-ne_.gradient);
    }
    return delta.allFinite();
  }

 private:
  const NormalEquations& ne_;
  bool dense_;
  Eigen::VectorXd diagonal_;
  SparseMatrix hessian_;
  Eigen::SimplicialLLT<SparseMatrix, Eigen::Lower, Eigen::AMDOrdering<int>> sparse_;
};

}  // namespace

EdgeJacobians edge_jacobians(const PoseEdge& edge, const Pose& from, const Pose& to) {
  const Pose error = edge.measurement.inverse() * between(from, to);
  const Twist r = log(error);
  EdgeJacobians out;
  out.residual = r.vector();
  // Perturbing X_to on the left moves the error by Ad_{(X_from Z)^-1}; X_from
  // moves it by the negative of the same.
  out.d_to = se3_left_jacobian_inverse(r) * adjoint((from * edge.measurement).inverse());
  out.d_from = -out.d_to;
  return out;
}

ResidualEvaluation residual(const PoseGraph& graph, std::size_t edge_index,
                            std::span<const Pose> estimates) {
  const PoseEdge& edge = graph.edges().at(edge_index);
  if (edge.from_id >= estimates.size() || edge.to_id >= estimates.size()) {
    throw Error(ErrorCode::kUnknownNode, "edge endpoint has no estimate");
  }
  ResidualEvaluation out;
  out.edge_index = edge_index;
  out.residual = log(edge.measurement.inverse() *
                     between(estimates[edge.from_id], estimates[edge.to_id]));
  const Vector6 r = out.residual.vector();
  out.whitened_norm_sq = std::max(0.0, r.dot(edge.information * r));
  return out;
}

double total_cost(const PoseGraph& graph, std::span<const Pose> estimates,
                  std::span<const double> weights) {
  check_sizes(graph, estimates, weights);
  double cost = 0.0;
  for (std::size_t e = 0; e < graph.edge_count(); ++e) {
    if (weights[e] == 0.0) continue;
    cost += weights[e] * residual(graph, e, estimates).whitened_norm_sq;
  }
  return cost;
}

Eigen::VectorXd cost_gradient(const PoseGraph& graph, std::span<const Pose> estimates,
                              std::span<const double> weights) {
  check_sizes(graph, estimates, weights);
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(6 * static_cast<Eigen::Index>(graph.node_count()));
  for (std::size_t e = 0; e < graph.edge_count(); ++e) {
    const PoseEdge& edge = graph.edges()[e];
    const EdgeJacobians jac =
        edge_jacobians(edge, estimates[edge.from_id], estimates[edge.to_id]);
    const Vector6 wr = 2.0 * weights[e] * (edge.information * jac.residual);
    grad.segment<6>(6 * static_cast<Eigen::Index>(edge.from_id)) += jac.d_from.transpose() * wr;
    grad.segment<6>(6 * static_cast<Eigen::Index>(edge.to_id)) += jac.d_to.transpose() * wr;
  }
  return grad;
}

std::vector<double> unit_weights(const PoseGraph& graph) {
  return std::vector<double>(graph.edge_count(), 1.0);
}

LmResult optimize_lm(const PoseGraph& graph, std::span<const double> weights,
                     const LmConfig& config) {
  const std::vector<Pose> initial = graph.estimates();
  return optimize_lm(graph, initial, weights, config);
}

LmResult optimize_lm(const PoseGraph& graph, std::span<const Pose> initial,
                     std::span<const double> weights, const LmConfig& config) {
  check_sizes(graph, initial, weights);
  graph.validate_chain();

  LmResult result;
  result.estimates.assign(initial.begin(), initial.end());
  double cost = total_cost(graph, result.estimates, weights);
  result.report.initial_cost = cost;

  const bool dense = config.solver == LinearSolverKind::kDenseCholesky;
  bool converged = graph.node_count() <= 1 || cost <= kNegligibleCost;
  double lambda = config.initial_lambda;
  std::size_t iterations = 0;

  while (!converged && iterations < config.max_iterations) {
    const NormalEquations ne = build_normal_equations(graph, result.estimates, weights, dense);
    DampedSolver solver(ne, dense);
    bool accepted = false;
    while (!accepted && iterations < config.max_iterations) {
      Eigen::VectorXd delta;
      if (!solver.solve(lambda, delta)) {
        lambda *= config.lambda_increase;
        if (lambda > config.max_lambda) {
          throw Error(ErrorCode::kSingularNormalEquations,
                      "normal equations remain singular after damping escalation");
        }
        continue;
      }
      ++iterations;
      const double step_norm = delta.norm();
      std::vector<Pose> candidate = retract(result.estimates, delta);
      double candidate_cost = std::numeric_limits<double>::infinity();
      try {
        candidate_cost = total_cost(graph, candidate, weights);
      } catch (const Error& err) {
        if (err.code() != ErrorCode::kNearPiRotation) throw;
      }
      if (std::isfinite(candidate_cost) && candidate_cost < cost) {
        const double relative_decrease = (cost - candidate_cost) / cost;
        result.estimates = std::move(candidate);
        cost = candidate_cost;
        lambda = std::max(lambda / config.lambda_decrease, 1e-12);
        accepted = true;
        if (step_norm < config.step_tolerance ||
            relative_decrease < config.relative_cost_tolerance || cost <= kNegligibleCost) {
          converged = true;
        }
      } else {
        if (step_norm < config.step_tolerance) {
          converged = true;
          break;
        }
        lambda *= config.lambda_increase;
        if (lambda > config.max_lambda) {
          converged = true;
          break;
        }
      }
    }
  }

  result.report.converged = converged;
  result.report.iterations = iterations;
  result.report.final_cost = cost;
  partition_loop_edges(graph, weights, result.report);
  return result;
}

double trajectory_rmse(std::span<const Pose> a, std::span<const Pose> b) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::kInputLengthMismatch, "trajectories differ in length");
  }
  if (a.empty()) return 0.0;
  const Pose to_a = a.front().inverse();
  const Pose to_b = b.front().inverse();
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sum += ((to_a * a[i]).translation() - (to_b * b[i]).translation()).squaredNorm();
  }
  return std::sqrt(sum / static_cast<double>(a.size()));
}

std::string report_to_json(const OptimizeReport& report) {
  const nlohmann::json j = {{"converged", report.converged},
                            {"iterations", report.iterations},
                            {"initial_cost", report.initial_cost},
                            {"final_cost", report.final_cost},
                            {"inlier_edges", report.inlier_edges},
                            {"outlier_edges", report.outlier_edges}};
  return j.dump(2) + "\n";
}

}  // namespace vprcal
