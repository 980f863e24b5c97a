#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "vprcal/errors.hpp"
#include "vprcal/eval.hpp"
#include "vprcal/simulator.hpp"
#include "vprcal/trainer.hpp"
#include "vprcal/tuple_miner.hpp"

namespace vprcal {

struct StageToggles {
  bool simulate = true;
  bool mine = true;
  bool optimize = true;
  bool train = true;
  bool eval = true;
};

/// The evaluation sequence: same environment as training, fresh noise and a
/// shifted traversal.
struct HeldoutConfig {
  std::uint64_t seed_offset = 1000;
  double phase_offset = 0.5;
};

struct PipelineConfig {
  /// Propagated to the simulator, RANSAC and SGD.
  std::uint64_t seed = 1;
  StageToggles stages;
  WorldConfig world;
  HeldoutConfig heldout;
  MiningConfig mining;
  TrainConfig train;
  EvalConfig eval;
};

/// Configuration used when a key is absent from the JSON file.
PipelineConfig default_pipeline_config();

/// Strict: unknown keys, wrong types and out-of-range values raise
/// Error(kInvalidConfig).
PipelineConfig pipeline_config_from_json(const std::string& text);
std::string pipeline_config_to_json(const PipelineConfig& config);
void validate(const PipelineConfig& config);

/// World settings <-> JSON object, used by the pipeline config and the
/// `simulate` subcommand.
std::string world_config_to_json(const WorldConfig& config);

/// Raised by run_pipeline; names the failing stage and keeps the cause's code.
class StageFailure : public Error {
 public:
  StageFailure(std::string stage, const Error& cause);

  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

struct StageTiming {
  std::string name;
  bool ran = false;
  double seconds = 0.0;
};

struct PipelineSummary {
  std::size_t tuples_extracted = 0;
  std::size_t tuples_rejected = 0;
  double identity_correct_match = 0.0;
  double tuned_correct_match = 0.0;
  double identity_gap = 0.0;
  double tuned_gap = 0.0;
  bool tuned_dominates = false;
};

struct PipelineOutcome {
  std::vector<StageTiming> stages;
  PipelineSummary summary;
  std::string manifest_json;
};

/// File layout under out_dir:
///   simulate/{train,heldout}/{descriptors.csv, observations.json,
///                             odometry.g2o, ground_truth.json}
///   mine/{tuples.json, graph.g2o, report.json}
///   optimize/{graph.g2o, report.json}
///   train/{head.json, loss_history.csv}
///   eval/{identity,tuned}_*.csv, eval/summary.json
///   manifest.json
/// A disabled stage's outputs must already exist for later stages to use.
PipelineOutcome run_pipeline(const PipelineConfig& config, const std::filesystem::path& out_dir);

}  // namespace vprcal
