#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>

namespace vprcal {

using KeyframeId = std::size_t;

struct Descriptor {
  KeyframeId keyframe_id = 0;
  Eigen::VectorXd vector;
};

struct MatchCandidate {
  KeyframeId query_id = 0;
  KeyframeId candidate_id = 0;
  double distance = 0.0;

  friend bool operator==(const MatchCandidate&, const MatchCandidate&) = default;
};

constexpr std::size_t kDefaultExclusionWindow = 10;

/// Euclidean distance. Throws DimensionMismatch on unequal sizes.
double distance(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

/// Exact (brute-force) nearest-neighbour store over per-keyframe global
/// descriptors. Const member functions are safe to call concurrently.
class DescriptorStore {
 public:
  explicit DescriptorStore(std::size_t dimension);

  /// Throws DuplicateKeyframe, DimensionMismatch, or SchemaViolation on
  /// non-finite entries.
  void insert(Descriptor d);

  std::size_t size() const { return entries_.size(); }
  std::size_t dimension() const { return dimension_; }
  bool empty() const { return entries_.empty(); }
  bool contains(KeyframeId id) const { return index_.count(id) != 0; }

  const Eigen::VectorXd& vector(KeyframeId id) const;
  /// Ids in ascending order.
  std::vector<KeyframeId> ids() const;
  /// Entries in ascending id order.
  std::vector<Descriptor> descriptors() const;

  /// Up to k candidates with |candidate - query| > window, ascending by
  /// distance, ties broken by ascending candidate id.
  std::vector<MatchCandidate> query(KeyframeId query_id, std::size_t k,
                                    std::size_t window = kDefaultExclusionWindow) const;

  /// N x N pairwise distances, rows and columns in ascending id order.
  Eigen::MatrixXd similarity_matrix() const;

 private:
  std::size_t dimension_;
  std::vector<Descriptor> entries_;
  std::unordered_map<KeyframeId, std::size_t> index_;
};

/// Copy of `store` with every vector scaled to unit L2 norm (zero vectors kept).
DescriptorStore normalized(const DescriptorStore& store);

DescriptorStore make_store(const std::vector<Descriptor>& descriptors);

// CSV: header `keyframe_id,v0,...,v{D-1}`, one row per keyframe.
std::string write_descriptors_csv(const std::vector<Descriptor>& descriptors);
std::vector<Descriptor> parse_descriptors_csv(const std::string& text);

// Binary: "VPRD", u32 version = 1, u32 D, u32 N, then N x (u64 id, D x f64),
// all little-endian.
std::string write_descriptors_binary(const std::vector<Descriptor>& descriptors);
std::vector<Descriptor> parse_descriptors_binary(const std::string& bytes);

/// Picks the format by sniffing the magic bytes.
std::vector<Descriptor> load_descriptors(const std::filesystem::path& path);
/// Binary when the extension is `.bin` or `.vprd`, CSV otherwise.
void save_descriptors(const std::filesystem::path& path, const std::vector<Descriptor>& descriptors);

}  // namespace vprcal
