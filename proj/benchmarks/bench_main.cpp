#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "vprcal/descriptor_store.hpp"
#include "vprcal/gnc.hpp"
#include "vprcal/optimizer.hpp"
#include "vprcal/registration.hpp"
#include "vprcal/simulator.hpp"

namespace vprcal {
namespace {

PoseGraph loop_graph(std::size_t keyframes, std::size_t stride, bool with_outlier) {
  WorldConfig cfg;
  cfg.keyframe_count = keyframes;
  const World world = generate(cfg);
  PoseGraph graph = chain_initialize(world.odometry);
  for (std::size_t k = 0; k < world.truth.revisit_pairs.size(); k += stride) {
    const auto [i, j] = world.truth.revisit_pairs[k];
    graph.add_loop_closure(i, j, between(world.truth.poses[i], world.truth.poses[j]));
  }
  if (with_outlier) graph.add_loop_closure(10, keyframes / 2, Pose::Identity());
  return graph;
}

void BM_Query(benchmark::State& state) {
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g;
  DescriptorStore store(64);
  for (KeyframeId id = 0; id < n; ++id) {
    store.insert({id, Eigen::VectorXd::NullaryExpr(64, [&] { return g(rng); })});
  }
  KeyframeId q = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(store.query(q, 50, 10));
    q = (q + 1) % n;
  }
}
BENCHMARK(BM_Query)->Arg(200)->Arg(2000);

void BM_Lm(benchmark::State& state) {
  const PoseGraph graph = loop_graph(static_cast<std::size_t>(state.range(0)), 7, false);
  const auto weights = unit_weights(graph);
  LmConfig cfg;
  cfg.solver = state.range(1) ? LinearSolverKind::kDenseCholesky : LinearSolverKind::kSparseCholesky;
  for (auto _ : state) benchmark::DoNotOptimize(optimize_lm(graph, weights, cfg));
}
BENCHMARK(BM_Lm)->Args({200, 0})->Args({200, 1})->Args({800, 0})->Unit(benchmark::kMillisecond);

void BM_Gnc(benchmark::State& state) {
  const PoseGraph graph = loop_graph(static_cast<std::size_t>(state.range(0)), 7, true);
  for (auto _ : state) benchmark::DoNotOptimize(gnc_solve(graph));
}
BENCHMARK(BM_Gnc)->Arg(200)->Unit(benchmark::kMillisecond);

void BM_Registration(benchmark::State& state) {
  WorldConfig cfg;
  const World world = generate(cfg);
  const auto [i, j] = world.truth.revisit_pairs.front();
  const RegistrationConfig reg;
  for (auto _ : state) benchmark::DoNotOptimize(attempt_loop_closure(world.observations, i, j, reg));
}
BENCHMARK(BM_Registration);

}  // namespace
}  // namespace vprcal

BENCHMARK_MAIN();
