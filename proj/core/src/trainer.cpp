#include "vprcal/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

#include <nlohmann/json.hpp>

#include "vprcal/errors.hpp"
#include "vprcal/io.hpp"

namespace vprcal {
namespace {

constexpr double kMinDistance = 1e-12;

void check_same_dimension(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "vectors of different dimension");
  }
}

// d ||W (a - b)|| / dW = (e / |e|) (a - b)^T with e = W (a - b).
void accumulate_distance_gradient(const EmbeddingHead& head, const Eigen::VectorXd& a,
                                  const Eigen::VectorXd& b, double sign, Eigen::MatrixXd& grad) {
  const Eigen::VectorXd diff = a - b;
  const Eigen::VectorXd e = head.weight * diff;
  const double d = e.norm();
  if (d < kMinDistance) {
    throw Error(ErrorCode::kDegenerateDistance,
                "embedded distance below 1e-12 in an active loss term");
  }
  grad.noalias() += (sign / d) * e * diff.transpose();
}

}  // namespace

EmbeddingHead EmbeddingHead::Identity(std::size_t dimension) {
  const auto d = static_cast<Eigen::Index>(dimension);
  return {Eigen::MatrixXd::Identity(d, d), Eigen::VectorXd::Zero(d)};
}

void validate(const EmbeddingHead& head) {
  if (head.weight.rows() == 0 || head.d_out() > head.d_in()) {
    throw Error(ErrorCode::kInvalidConfig, "embedding head needs 0 < d_out <= d_in");
  }
  if (head.bias.size() != head.weight.rows()) {
    throw Error(ErrorCode::kInvalidConfig, "bias length must equal d_out");
  }
  if (!head.weight.allFinite() || !head.bias.allFinite()) {
    throw Error(ErrorCode::kInvalidConfig, "embedding head has non-finite entries");
  }
}

Eigen::VectorXd embed(const EmbeddingHead& head, const Eigen::VectorXd& x) {
  if (x.size() != head.weight.cols()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "descriptor dimension " + std::to_string(x.size()) + " but head expects " +
                    std::to_string(head.weight.cols()));
  }
  return head.weight * x + head.bias;
}

double triplet_loss(const Eigen::VectorXd& query, const Eigen::VectorXd& positive,
                    std::span<const Eigen::VectorXd> negatives, double margin) {
  check_same_dimension(query, positive);
  const double d_pos = (query - positive).norm();
  double loss = 0.0;
  for (const auto& n : negatives) {
    check_same_dimension(query, n);
    loss += std::max(d_pos + margin - (query - n).norm(), 0.0);
  }
  return loss;
}

TupleDescriptors gather(const TrainingTuple& tuple, const DescriptorStore& store) {
  auto fetch = [&](KeyframeId id) -> const Eigen::VectorXd& {
    if (!store.contains(id)) {
      throw Error(ErrorCode::kMissingDescriptor, "no descriptor for keyframe " + std::to_string(id));
    }
    return store.vector(id);
  };
  TupleDescriptors out{fetch(tuple.anchor_id), fetch(tuple.positive_id), {}};
  out.negatives.reserve(tuple.negative_ids.size());
  for (KeyframeId id : tuple.negative_ids) out.negatives.push_back(fetch(id));
  return out;
}

double HeadGradient::norm() const {
  return std::sqrt(weight.squaredNorm() + bias.squaredNorm());
}

HeadGradient loss_gradient(const EmbeddingHead& head, const TupleDescriptors& tuple,
                           double margin) {
  HeadGradient g{Eigen::MatrixXd::Zero(head.weight.rows(), head.weight.cols()),
                 Eigen::VectorXd::Zero(head.bias.size()), 0.0};
  const Eigen::VectorXd q = embed(head, tuple.anchor);
  const Eigen::VectorXd p = embed(head, tuple.positive);
  const double d_pos = (q - p).norm();
  for (const auto& raw_negative : tuple.negatives) {
    const Eigen::VectorXd n = embed(head, raw_negative);
    const double term = d_pos + margin - (q - n).norm();
    if (!(term > 0.0)) continue;
    g.loss += term;
    accumulate_distance_gradient(head, tuple.anchor, tuple.positive, 1.0, g.weight);
    accumulate_distance_gradient(head, tuple.anchor, raw_negative, -1.0, g.weight);
  }
  return g;
}

void validate(const TrainConfig& config) {
  if (!(config.margin >= 0.0)) throw Error(ErrorCode::kInvalidConfig, "margin must be >= 0");
  if (!(config.learning_rate > 0.0)) {
    throw Error(ErrorCode::kInvalidConfig, "learning_rate must be > 0");
  }
  if (config.grad_clip_norm && !(*config.grad_clip_norm > 0.0)) {
    throw Error(ErrorCode::kInvalidConfig, "grad_clip_norm must be > 0");
  }
}

TrainResult train(const EmbeddingHead& head, std::span<const TrainingTuple> tuples,
                  const DescriptorStore& store, const TrainConfig& config) {
  validate(config);
  validate(head);
  std::vector<TupleDescriptors> data;
  data.reserve(tuples.size());
  for (const auto& t : tuples) {
    if (t.status != TupleStatus::kInlier) {
      throw Error(ErrorCode::kRejectedTupleInTrainingSet,
                  "tuple anchored at " + std::to_string(t.anchor_id) + " has status " +
                      to_string(t.status));
    }
    data.push_back(gather(t, store));
  }

  TrainResult result{head, {}};
  if (data.empty() || config.epochs == 0) return result;

  std::mt19937_64 rng(config.seed);
  std::vector<std::size_t> order(data.size());
  const double total_steps = static_cast<double>(config.epochs * data.size());
  std::size_t step = 0;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    for (std::size_t idx : order) {
      HeadGradient g = loss_gradient(result.head, data[idx], config.margin);
      epoch_loss += g.loss;
      double lr = config.learning_rate;
      if (config.cosine_decay) {
        lr *= 0.5 * (1.0 + std::cos(std::numbers::pi * static_cast<double>(step) / total_steps));
      }
      double scale = lr;
      if (config.grad_clip_norm) {
        const double norm = g.norm();
        if (norm > *config.grad_clip_norm) scale *= *config.grad_clip_norm / norm;
      }
      result.head.weight -= scale * g.weight;
      result.head.bias -= scale * g.bias;
      ++step;
    }
    result.loss_history.push_back(epoch_loss / static_cast<double>(data.size()));
  }
  return result;
}

DescriptorStore embed_store(const EmbeddingHead& head, const DescriptorStore& store) {
  DescriptorStore out(head.d_out());
  for (const auto& d : store.descriptors()) out.insert({d.keyframe_id, embed(head, d.vector)});
  return out;
}

std::string head_to_json(const EmbeddingHead& head) {
  std::vector<double> weight;
  weight.reserve(static_cast<std::size_t>(head.weight.size()));
  for (Eigen::Index r = 0; r < head.weight.rows(); ++r) {
    for (Eigen::Index c = 0; c < head.weight.cols(); ++c) weight.push_back(head.weight(r, c));
  }
  const std::vector<double> bias(head.bias.data(), head.bias.data() + head.bias.size());
  return nlohmann::json{{"version", 1},
                        {"d_in", head.d_in()},
                        {"d_out", head.d_out()},
                        {"weight", weight},
                        {"bias", bias}}
             .dump() +
         "\n";
}

EmbeddingHead head_from_json(const std::string& text) {
  EmbeddingHead head;
  try {
    const auto j = nlohmann::json::parse(text);
    if (j.at("version").get<int>() != 1) {
      throw Error(ErrorCode::kSchemaViolation, "unsupported head checkpoint version");
    }
    const auto d_in = j.at("d_in").get<std::size_t>();
    const auto d_out = j.at("d_out").get<std::size_t>();
    const auto weight = j.at("weight").get<std::vector<double>>();
    const auto bias = j.at("bias").get<std::vector<double>>();
    if (weight.size() != d_in * d_out || bias.size() != d_out) {
      throw Error(ErrorCode::kSchemaViolation, "head checkpoint sizes disagree with d_in/d_out");
    }
    head.weight.resize(static_cast<Eigen::Index>(d_out), static_cast<Eigen::Index>(d_in));
    for (std::size_t r = 0; r < d_out; ++r) {
      for (std::size_t c = 0; c < d_in; ++c) {
        head.weight(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
            weight[r * d_in + c];
      }
    }
    head.bias = Eigen::Map<const Eigen::VectorXd>(bias.data(), static_cast<Eigen::Index>(d_out));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kSchemaViolation, std::string("head checkpoint: ") + e.what());
  }
  try {
    validate(head);
  } catch (const Error& e) {
    throw Error(ErrorCode::kSchemaViolation, e.what());
  }
  return head;
}

void save_head(const std::filesystem::path& path, const EmbeddingHead& head) {
  write_file(path, head_to_json(head));
}

EmbeddingHead load_head(const std::filesystem::path& path) {
  return head_from_json(read_file(path));
}

}  // namespace vprcal
