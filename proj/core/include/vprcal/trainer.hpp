#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "vprcal/descriptor_store.hpp"
#include "vprcal/tuple_miner.hpp"

namespace vprcal {

/// Affine embedding x -> W x + b with W of shape d_out x d_in.
struct EmbeddingHead {
  Eigen::MatrixXd weight;
  Eigen::VectorXd bias;

  static EmbeddingHead Identity(std::size_t dimension);

  std::size_t d_in() const { return static_cast<std::size_t>(weight.cols()); }
  std::size_t d_out() const { return static_cast<std::size_t>(weight.rows()); }
};

/// Throws kInvalidConfig for non-finite entries, d_out > d_in, or a bias of
/// the wrong length.
void validate(const EmbeddingHead& head);

Eigen::VectorXd embed(const EmbeddingHead& head, const Eigen::VectorXd& x);

/// sum_i max(d(q, p) + margin - d(q, n_i), 0)
double triplet_loss(const Eigen::VectorXd& query, const Eigen::VectorXd& positive,
                    std::span<const Eigen::VectorXd> negatives, double margin);

/// Raw (un-embedded) descriptors of one tuple.
struct TupleDescriptors {
  Eigen::VectorXd anchor;
  Eigen::VectorXd positive;
  std::vector<Eigen::VectorXd> negatives;
};

TupleDescriptors gather(const TrainingTuple& tuple, const DescriptorStore& store);

struct HeadGradient {
  Eigen::MatrixXd weight;
  Eigen::VectorXd bias;
  double loss = 0.0;

  double norm() const;
};

/// Analytic gradient of the triplet loss through the head. The bias gradient
/// is identically zero since every distance is translation invariant.
HeadGradient loss_gradient(const EmbeddingHead& head, const TupleDescriptors& tuple, double margin);

struct TrainConfig {
  double margin = 0.25;
  double learning_rate = 0.001;
  std::size_t epochs = 10;
  /// Global-norm clip threshold; nullopt disables clipping.
  std::optional<double> grad_clip_norm = 1.0;
  bool cosine_decay = true;
  std::uint64_t seed = 0;
};

void validate(const TrainConfig& config);

struct TrainResult {
  EmbeddingHead head;
  /// Mean per-step loss of each epoch, evaluated before the step's update.
  std::vector<double> loss_history;
};

/// Plain SGD, one tuple per step, tuples reshuffled every epoch.
TrainResult train(const EmbeddingHead& head, std::span<const TrainingTuple> tuples,
                  const DescriptorStore& store, const TrainConfig& config = {});

/// Applies `head` to every descriptor in the store.
DescriptorStore embed_store(const EmbeddingHead& head, const DescriptorStore& store);

/// {version: 1, d_in, d_out, weight: [row-major], bias: [...]}
std::string head_to_json(const EmbeddingHead& head);
EmbeddingHead head_from_json(const std::string& text);
void save_head(const std::filesystem::path& path, const EmbeddingHead& head);
EmbeddingHead load_head(const std::filesystem::path& path);

}  // namespace vprcal
