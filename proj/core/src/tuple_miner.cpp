#include "vprcal/tuple_miner.hpp"

#include <algorithm>

#include <nlohmann/json.hpp>

#include "vprcal/errors.hpp"
#include "vprcal/io.hpp"

namespace vprcal {

const char* to_string(TupleStatus status) noexcept {
  switch (status) {
    case TupleStatus::kPending: return "pending";
    case TupleStatus::kInlier: return "inlier";
    case TupleStatus::kRejected: return "rejected";
  }
  return "pending";
}

TupleStatus tuple_status_from_string(const std::string& name) {
  if (name == "pending") return TupleStatus::kPending;
  if (name == "inlier") return TupleStatus::kInlier;
  if (name == "rejected") return TupleStatus::kRejected;
  throw Error(ErrorCode::kSchemaViolation, "unknown tuple status '" + name + "'");
}

CandidateWalk::CandidateWalk(const DescriptorStore& store, KeyframeId anchor, std::size_t k_max,
                             std::size_t window)
    : candidates_(store.query(anchor, k_max, window)) {}

CandidateWalk candidate_walk(const DescriptorStore& store, KeyframeId anchor, std::size_t k_max,
                             std::size_t window) {
  return CandidateWalk(store, anchor, k_max, window);
}

MiningResult mine(const DescriptorStore& store, std::span<const KeyframeObservations> observations,
                  std::span<const OdometryMeasurement> odometry, const MiningConfig& config) {
  const std::size_t n = store.size();
  if (observations.size() != n || odometry.size() + 1 != n) {
    throw Error(ErrorCode::kInputLengthMismatch,
                "mine needs N descriptors, N observation sets and N-1 odometry edges (got " +
                    std::to_string(n) + ", " + std::to_string(observations.size()) + ", " +
                    std::to_string(odometry.size()) + ")");
  }
  if (config.max_negatives == 0) {
    throw Error(ErrorCode::kInvalidConfig, "max_negatives must be >= 1");
  }

  MiningResult out;
  out.graph = chain_initialize(odometry);

  for (KeyframeId anchor = 0; anchor < n; ++anchor) {
    TrainingTuple tuple;
    tuple.anchor_id = anchor;
    bool have_positive = false;
    for (const MatchCandidate& c : candidate_walk(store, anchor, config.k_max, config.window)) {
      const auto edge = attempt_loop_closure(observations, anchor, c.candidate_id,
                                             config.registration);
      if (!have_positive) {
        if (!edge) continue;
        have_positive = true;
        tuple.positive_id = c.candidate_id;
        tuple.loop_edge_index = out.graph.add_edge(*edge);
      } else if (!edge) {
        tuple.negative_ids.push_back(c.candidate_id);
        if (tuple.negative_ids.size() == config.max_negatives) break;
      }
    }
    if (!have_positive) {
      ++out.report.keyframes_without_positive;
    } else if (tuple.negative_ids.empty()) {
      ++out.report.tuples_without_negatives;
    } else {
      out.tuples.push_back(std::move(tuple));
    }
  }

  out.gnc = gnc_solve(out.graph, config.gnc);
  const auto labels = classify_matches(out.gnc.report);
  for (TrainingTuple& t : out.tuples) {
    const bool inlier = labels.at(t.loop_edge_index) == MatchLabel::kInlier;
    t.status = inlier ? TupleStatus::kInlier : TupleStatus::kRejected;
    if (!inlier) ++out.report.tuples_rejected_by_pgo;
  }
  out.report.tuples_extracted = out.tuples.size();
  return out;
}

std::string tuples_to_json(std::span<const TrainingTuple> tuples) {
  nlohmann::json list = nlohmann::json::array();
  for (const auto& t : tuples) {
    list.push_back({{"anchor", t.anchor_id},
                    {"positive", t.positive_id},
                    {"negatives", t.negative_ids},
                    {"loop_edge", t.loop_edge_index},
                    {"status", to_string(t.status)}});
  }
  return nlohmann::json{{"version", 1}, {"tuples", std::move(list)}}.dump(1) + "\n";
}

std::vector<TrainingTuple> tuples_from_json(const std::string& text) {
  std::vector<TrainingTuple> out;
  try {
    const auto j = nlohmann::json::parse(text);
    if (j.at("version").get<int>() != 1) {
      throw Error(ErrorCode::kSchemaViolation, "unsupported tuple file version");
    }
    for (const auto& t : j.at("tuples")) {
      TrainingTuple tuple;
      tuple.anchor_id = t.at("anchor").get<KeyframeId>();
      tuple.positive_id = t.at("positive").get<KeyframeId>();
      tuple.negative_ids = t.at("negatives").get<std::vector<KeyframeId>>();
      tuple.loop_edge_index = t.at("loop_edge").get<std::size_t>();
      tuple.status = tuple_status_from_string(t.at("status").get<std::string>());
      if (tuple.negative_ids.empty()) {
        throw Error(ErrorCode::kSchemaViolation, "tuple needs at least one negative");
      }
      out.push_back(std::move(tuple));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kSchemaViolation, std::string("tuples: ") + e.what());
  }
  return out;
}

void export_tuples(std::span<const TrainingTuple> tuples, const std::filesystem::path& path) {
  write_file(path, tuples_to_json(tuples));
}

std::vector<TrainingTuple> import_tuples(const std::filesystem::path& path) {
  return tuples_from_json(read_file(path));
}

std::string mining_report_to_json(const MiningReport& report) {
  return nlohmann::json{{"tuples_extracted", report.tuples_extracted},
                        {"tuples_rejected_by_pgo", report.tuples_rejected_by_pgo},
                        {"keyframes_without_positive", report.keyframes_without_positive},
                        {"tuples_without_negatives", report.tuples_without_negatives}}
             .dump(1) +
         "\n";
}

}  // namespace vprcal
