#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "vprcal/geometry.hpp"

namespace vprcal {

using NodeId = std::size_t;

enum class EdgeKind { kOdometry, kLoopClosure };

const char* to_string(EdgeKind kind) noexcept;

struct PoseNode {
  NodeId id = 0;
  Pose estimate;
};

/// Relative-pose constraint from -> to. Information is in (x, y, z, rx, ry, rz)
/// order, matching the (rho, phi) twist layout.
struct PoseEdge {
  NodeId from_id = 0;
  NodeId to_id = 0;
  Pose measurement;
  Matrix6 information = Matrix6::Identity();
  EdgeKind kind = EdgeKind::kOdometry;
};

/// One dead-reckoning step between consecutive keyframes.
struct OdometryMeasurement {
  Pose relative;
  Matrix6 information = Matrix6::Identity();
};

/// diag(100, 100, 100, 400, 400, 400): sigma 0.1 m translation, 0.05 rad rotation.
Matrix6 default_loop_information();
/// diag(1/sigma_t^2 x3, 1/sigma_r^2 x3).
Matrix6 diagonal_information(double sigma_translation, double sigma_rotation);

/// Throws NonSpdInformation unless `information` is symmetric within 1e-12 and
/// Cholesky-factorizable.
void check_information(const Matrix6& information);

class PoseGraph {
 public:
  /// Appends a node; ids are contiguous so the new id equals the old size.
  NodeId add_node(const Pose& estimate);

  /// Throws UnknownNode, NonChainOdometry, or NonSpdInformation.
  std::size_t add_odometry_edge(NodeId from, NodeId to, const Pose& measurement,
                                const Matrix6& information);
  /// Throws UnknownNode, NonSpdInformation, or Error(kInvalidConfig) when the
  /// endpoints are not at least two apart.
  std::size_t add_loop_closure(NodeId from, NodeId to, const Pose& measurement,
                               const Matrix6& information = default_loop_information());
  /// Dispatches on edge.kind; returns the edge index.
  std::size_t add_edge(const PoseEdge& edge);

  const std::vector<PoseNode>& nodes() const { return nodes_; }
  const std::vector<PoseEdge>& edges() const { return edges_; }
  std::size_t node_count() const { return nodes_.size(); }
  std::size_t edge_count() const { return edges_.size(); }
  std::size_t loop_closure_count() const;
  std::vector<std::size_t> loop_edge_indices() const;

  std::vector<Pose> estimates() const;
  void set_estimates(std::span<const Pose> estimates);

  /// Throws NonChainOdometry unless odometry edges connect every i to i+1.
  void validate_chain() const;

 private:
  void check_endpoints(NodeId from, NodeId to) const;

  std::vector<PoseNode> nodes_;
  std::vector<PoseEdge> edges_;
};

/// Node 0 at identity; node k is the composition of the first k measurements.
PoseGraph chain_initialize(std::span<const OdometryMeasurement> odometry);
PoseGraph chain_initialize(std::span<const Pose> odometry, const Matrix6& information);

/// Odometry edges of `graph` in chain order.
std::vector<OdometryMeasurement> extract_odometry(const PoseGraph& graph);

/// Text format with VERTEX_SE3:QUAT and EDGE_SE3:QUAT lines; '#' starts a
/// comment line. Throws ParseError (MalformedLine) or Error(kMissingVertex).
PoseGraph parse_g2o(const std::string& text);
std::string write_g2o(const PoseGraph& graph);

PoseGraph load_g2o(const std::string& path);
void save_g2o(const std::string& path, const PoseGraph& graph);

/// {"nodes": [{id, translation, rotation_wxyz}], "edges": [{from, to, kind,
/// translation, rotation_wxyz, information}]}
std::string graph_to_json(const PoseGraph& graph);

}  // namespace vprcal
