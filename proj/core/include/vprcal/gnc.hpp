#pragma once

#include <cstddef>
#include <map>
#include <vector>

#include "vprcal/optimizer.hpp"
#include "vprcal/pose_graph.hpp"

namespace vprcal {

/// Quantile of the chi-squared distribution with `dof` degrees of freedom.
double chi2_quantile(double probability, int dof = 6);

struct GncConfig {
  /// Squared inlier threshold on r^T Omega r (epsilon^2); 0.99 quantile of chi2(6).
  double chi2_threshold = chi2_quantile(0.99);
  double mu_growth = 1.4;
  double mu_stop = 1e6;
  double mu_min = 1e-6;
  /// Outer loop stops once no weight moves more than this.
  double weight_tolerance = 1e-3;
  std::size_t max_outer_iterations = 1000;
  LmConfig lm;
};

struct GncState {
  double mu = 0.0;
  /// One entry per graph edge; odometry entries stay at 1.
  std::vector<double> weights;
  std::size_t iteration = 0;
  /// mu used at each outer iteration.
  std::vector<double> mu_history;
};

struct GncResult {
  std::vector<Pose> estimates;
  GncState state;
  OptimizeReport report;
};

/// Truncated-least-squares GNC weight for one squared residual.
double tls_weight(double residual_sq, double mu, double chi2_threshold);

/// Graduated non-convexity over the loop-closure edges with a truncated least
/// squares cost. Odometry is never down-weighted. The report's inlier/outlier
/// sets come from binarizing the final weights at 0.5, and the returned
/// estimates are re-optimized with those binary weights.
GncResult gnc_solve(const PoseGraph& graph, const GncConfig& config = {});

enum class MatchLabel { kInlier, kOutlier };

/// Label per loop-edge index, taken from the report partition.
std::map<std::size_t, MatchLabel> classify_matches(const OptimizeReport& report);

}  // namespace vprcal
