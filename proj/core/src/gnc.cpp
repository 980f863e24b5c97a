#include "vprcal/gnc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/distributions/chi_squared.hpp>

#include "vprcal/errors.hpp"

namespace vprcal {
namespace {

// Squared whitened residual of every loop edge; residuals whose rotation sits
// at pi count as infinitely bad.
std::vector<double> loop_residuals(const PoseGraph& graph, const std::vector<std::size_t>& loops,
                                   std::span<const Pose> estimates) {
  std::vector<double> out;
  out.reserve(loops.size());
  for (std::size_t e : loops) {
    try {
      out.push_back(residual(graph, e, estimates).whitened_norm_sq);
    } catch (const Error& err) {
      if (err.code() != ErrorCode::kNearPiRotation) throw;
      out.push_back(std::numeric_limits<double>::infinity());
    }
  }
  return out;
}

}  // namespace

double chi2_quantile(double probability, int dof) {
  if (!(probability > 0.0 && probability < 1.0) || dof <= 0) {
    throw Error(ErrorCode::kInvalidConfig, "chi2 quantile needs probability in (0,1)");
  }
  return boost::math::quantile(boost::math::chi_squared(dof), probability);
}

double tls_weight(double residual_sq, double mu, double chi2_threshold) {
  const double upper = (mu + 1.0) / mu * chi2_threshold;
  const double lower = mu / (mu + 1.0) * chi2_threshold;
  if (residual_sq >= upper) return 0.0;
  if (residual_sq <= lower) return 1.0;
  const double w = std::sqrt(chi2_threshold * mu * (mu + 1.0) / residual_sq) - mu;
  return std::clamp(w, 0.0, 1.0);
}

GncResult gnc_solve(const PoseGraph& graph, const GncConfig& config) {
  if (config.chi2_threshold <= 0.0 || config.mu_growth <= 1.0) {
    throw Error(ErrorCode::kInvalidConfig, "GNC needs chi2_threshold > 0 and mu_growth > 1");
  }
  const std::vector<Pose> initial = graph.estimates();
  const std::vector<std::size_t> loops = graph.loop_edge_indices();

  GncResult result;
  result.state.weights = unit_weights(graph);
  LmResult lm = optimize_lm(graph, initial, result.state.weights, config.lm);
  std::size_t lm_iterations = lm.report.iterations;

  if (loops.empty()) {
    result.estimates = std::move(lm.estimates);
    result.report = std::move(lm.report);
    return result;
  }

  std::vector<double> r2 = loop_residuals(graph, loops, lm.estimates);
  const double r2_max = *std::max_element(r2.begin(), r2.end());
  const double eps2 = config.chi2_threshold;

  if (r2_max > eps2) {
    double mu = std::max(eps2 / (2.0 * r2_max - eps2), config.mu_min);
    while (result.state.iteration < config.max_outer_iterations) {
      ++result.state.iteration;
      result.state.mu = mu;
      result.state.mu_history.push_back(mu);
      double max_change = 0.0;
      for (std::size_t k = 0; k < loops.size(); ++k) {
        double& w = result.state.weights[loops[k]];
        const double updated = tls_weight(r2[k], mu, eps2);
        max_change = std::max(max_change, std::abs(updated - w));
        w = updated;
      }
      lm = optimize_lm(graph, lm.estimates, result.state.weights, config.lm);
      lm_iterations += lm.report.iterations;
      r2 = loop_residuals(graph, loops, lm.estimates);
      if (max_change < config.weight_tolerance || mu >= config.mu_stop) break;
      mu *= config.mu_growth;
    }
  }

  std::vector<double> binary = unit_weights(graph);
  for (std::size_t e : loops) binary[e] = result.state.weights[e] >= 0.5 ? 1.0 : 0.0;
  LmResult final_lm = optimize_lm(graph, lm.estimates, binary, config.lm);
  lm_iterations += final_lm.report.iterations;

  result.estimates = std::move(final_lm.estimates);
  result.report = std::move(final_lm.report);
  result.report.iterations = lm_iterations;
  result.report.initial_cost = total_cost(graph, initial, binary);
  return result;
}

std::map<std::size_t, MatchLabel> classify_matches(const OptimizeReport& report) {
  std::map<std::size_t, MatchLabel> labels;
  for (std::size_t e : report.inlier_edges) labels[e] = MatchLabel::kInlier;
  for (std::size_t e : report.outlier_edges) labels[e] = MatchLabel::kOutlier;
  return labels;
}

}  // namespace vprcal
