#include "vprcal/pose_graph.hpp"

#include <algorithm>
#include <charconv>
#include <map>
#include <sstream>

#include <Eigen/Cholesky>
#include <nlohmann/json.hpp>

#include "vprcal/errors.hpp"
#include "vprcal/io.hpp"

namespace vprcal {
namespace {

constexpr const char* kVertexTag = "VERTEX_SE3:QUAT";
constexpr const char* kEdgeTag = "EDGE_SE3:QUAT";

std::vector<std::string_view> tokenize(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    if (i >= line.size()) break;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t') ++j;
    out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

template <typename T>
T parse_token(std::string_view token, std::size_t line_no) {
  T value{};
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc() || ptr != token.data() + token.size()) {
    throw ParseError(line_no, "invalid number '" + std::string(token) + "'");
  }
  return value;
}

Pose parse_pose(const std::vector<std::string_view>& t, std::size_t first, std::size_t line_no) {
  const Vector3 translation(parse_token<double>(t[first], line_no),
                            parse_token<double>(t[first + 1], line_no),
                            parse_token<double>(t[first + 2], line_no));
  const double qx = parse_token<double>(t[first + 3], line_no);
  const double qy = parse_token<double>(t[first + 4], line_no);
  const double qz = parse_token<double>(t[first + 5], line_no);
  const double qw = parse_token<double>(t[first + 6], line_no);
  const Quaternion q(qw, qx, qy, qz);
  if (!(q.norm() > 0.0) || !translation.allFinite()) {
    throw ParseError(line_no, "degenerate pose");
  }
  return Pose(q, translation);
}

void append_pose(std::string& out, const Pose& p) {
  const Vector3& t = p.translation();
  const Quaternion& q = p.rotation();
  for (double v : {t.x(), t.y(), t.z(), q.x(), q.y(), q.z(), q.w()}) {
    out += ' ';
    out += format_double(v);
  }
}

nlohmann::json pose_json(const Pose& p) {
  const Quaternion& q = p.rotation();
  return {{"translation", {p.translation().x(), p.translation().y(), p.translation().z()}},
          {"rotation_wxyz", {q.w(), q.x(), q.y(), q.z()}}};
}

}  // namespace

const char* to_string(EdgeKind kind) noexcept {
  return kind == EdgeKind::kOdometry ? "odometry" : "loop_closure";
}

Matrix6 default_loop_information() { return diagonal_information(0.1, 0.05); }

Matrix6 diagonal_information(double sigma_translation, double sigma_rotation) {
  Vector6 diag;
  const double it = 1.0 / (sigma_translation * sigma_translation);
  const double ir = 1.0 / (sigma_rotation * sigma_rotation);
  diag << it, it, it, ir, ir, ir;
  return diag.asDiagonal();
}

void check_information(const Matrix6& information) {
  if (!information.allFinite()) {
    throw Error(ErrorCode::kNonSpdInformation, "information matrix has non-finite entries");
  }
  if ((information - information.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
    throw Error(ErrorCode::kNonSpdInformation, "information matrix is not symmetric");
  }
  Eigen::LLT<Matrix6> llt(information);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorCode::kNonSpdInformation, "information matrix is not positive definite");
  }
}

NodeId PoseGraph::add_node(const Pose& estimate) {
  const NodeId id = nodes_.size();
  nodes_.push_back({id, estimate});
  return id;
}

void PoseGraph::check_endpoints(NodeId from, NodeId to) const {
  for (NodeId id : {from, to}) {
    if (id >= nodes_.size()) {
      throw Error(ErrorCode::kUnknownNode, "edge endpoint " + std::to_string(id) + " not in graph");
    }
  }
}

std::size_t PoseGraph::add_odometry_edge(NodeId from, NodeId to, const Pose& measurement,
                                         const Matrix6& information) {
  check_endpoints(from, to);
  if (to != from + 1) {
    throw Error(ErrorCode::kNonChainOdometry, "odometry edge " + std::to_string(from) + " -> " +
                                                  std::to_string(to) + " is not consecutive");
  }
  check_information(information);
  edges_.push_back({from, to, measurement, information, EdgeKind::kOdometry});
  return edges_.size() - 1;
}

std::size_t PoseGraph::add_loop_closure(NodeId from, NodeId to, const Pose& measurement,
                                        const Matrix6& information) {
  check_endpoints(from, to);
  const NodeId gap = from > to ? from - to : to - from;
  if (gap <= 1) {
    throw Error(ErrorCode::kInvalidConfig, "loop closure " + std::to_string(from) + " -> " +
                                               std::to_string(to) + " joins adjacent nodes");
  }
  check_information(information);
  edges_.push_back({from, to, measurement, information, EdgeKind::kLoopClosure});
  return edges_.size() - 1;
}

std::size_t PoseGraph::add_edge(const PoseEdge& edge) {
  if (edge.kind == EdgeKind::kOdometry) {
    return add_odometry_edge(edge.from_id, edge.to_id, edge.measurement, edge.information);
  }
  return add_loop_closure(edge.from_id, edge.to_id, edge.measurement, edge.information);
}

std::size_t PoseGraph::loop_closure_count() const {
  return static_cast<std::size_t>(std::count_if(edges_.begin(), edges_.end(), [](const auto& e) {
    return e.kind == EdgeKind::kLoopClosure;
  }));
}

std::vector<std::size_t> PoseGraph::loop_edge_indices() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < edges_.size(); ++i) {
    if (edges_[i].kind == EdgeKind::kLoopClosure) out.push_back(i);
  }
  return out;
}

std::vector<Pose> PoseGraph::estimates() const {
  std::vector<Pose> out;
  out.reserve(nodes_.size());
  for (const auto& n : nodes_) out.push_back(n.estimate);
  return out;
}

void PoseGraph::set_estimates(std::span<const Pose> estimates) {
  if (estimates.size() != nodes_.size()) {
    throw Error(ErrorCode::kInputLengthMismatch, "estimate count does not match node count");
  }
  for (std::size_t i = 0; i < nodes_.size(); ++i) nodes_[i].estimate = estimates[i];
}

void PoseGraph::validate_chain() const {
  if (nodes_.empty()) return;
  std::vector<bool> linked(nodes_.size() - 1, false);
  for (const auto& e : edges_) {
    if (e.kind == EdgeKind::kOdometry) linked[e.from_id] = true;
  }
  for (std::size_t i = 0; i < linked.size(); ++i) {
    if (!linked[i]) {
      throw Error(ErrorCode::kNonChainOdometry, "odometry chain broken between " +
                                                    std::to_string(i) + " and " +
                                                    std::to_string(i + 1));
    }
  }
}

PoseGraph chain_initialize(std::span<const OdometryMeasurement> odometry) {
  PoseGraph graph;
  Pose current;
  graph.add_node(current);
  for (const auto& step : odometry) {
    current = current * step.relative;
    const NodeId id = graph.add_node(current);
    graph.add_odometry_edge(id - 1, id, step.relative, step.information);
  }
  return graph;
}

PoseGraph chain_initialize(std::span<const Pose> odometry, const Matrix6& information) {
  std::vector<OdometryMeasurement> steps;
  steps.reserve(odometry.size());
  for (const auto& p : odometry) steps.push_back({p, information});
  return chain_initialize(steps);
}

std::vector<OdometryMeasurement> extract_odometry(const PoseGraph& graph) {
  std::vector<OdometryMeasurement> out(graph.node_count() > 0 ? graph.node_count() - 1 : 0);
  std::vector<bool> seen(out.size(), false);
  for (const auto& e : graph.edges()) {
    if (e.kind != EdgeKind::kOdometry || seen[e.from_id]) continue;
    out[e.from_id] = {e.measurement, e.information};
    seen[e.from_id] = true;
  }
  graph.validate_chain();
  return out;
}

PoseGraph parse_g2o(const std::string& text) {
  struct RawEdge {
    std::size_t line_no;
    NodeId from, to;
    Pose measurement;
    Matrix6 information;
  };
  std::map<NodeId, Pose> vertices;
  std::vector<RawEdge> raw_edges;

  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto tokens = tokenize(line);
    if (tokens.empty() || tokens.front().front() == '#') continue;
    if (tokens.front() == kVertexTag) {
      if (tokens.size() != 9) throw ParseError(line_no, "VERTEX_SE3:QUAT expects 8 fields");
      const auto id = parse_token<NodeId>(tokens[1], line_no);
      if (!vertices.emplace(id, parse_pose(tokens, 2, line_no)).second) {
        throw ParseError(line_no, "duplicate vertex " + std::to_string(id));
      }
    } else if (tokens.front() == kEdgeTag) {
      if (tokens.size() != 31) throw ParseError(line_no, "EDGE_SE3:QUAT expects 30 fields");
      RawEdge e{line_no, parse_token<NodeId>(tokens[1], line_no),
                parse_token<NodeId>(tokens[2], line_no), parse_pose(tokens, 3, line_no),
                Matrix6::Zero()};
      std::size_t k = 10;
      for (int r = 0; r < 6; ++r) {
        for (int c = r; c < 6; ++c) {
          const double v = parse_token<double>(tokens[k++], line_no);
          e.information(r, c) = v;
          e.information(c, r) = v;
        }
      }
      raw_edges.push_back(e);
    } else {
      throw ParseError(line_no, "unknown tag '" + std::string(tokens.front()) + "'");
    }
  }

  PoseGraph graph;
  NodeId expected = 0;
  for (const auto& [id, pose] : vertices) {
    if (id != expected) {
      throw Error(ErrorCode::kMissingVertex, "vertex ids must be contiguous from 0; missing " +
                                                 std::to_string(expected));
    }
    graph.add_node(pose);
    ++expected;
  }
  for (const auto& e : raw_edges) {
    if (!vertices.count(e.from) || !vertices.count(e.to)) {
      throw Error(ErrorCode::kMissingVertex, "line " + std::to_string(e.line_no) +
                                                 ": edge references a missing vertex");
    }
    if (e.to == e.from + 1) {
      graph.add_odometry_edge(e.from, e.to, e.measurement, e.information);
    } else if ((e.from > e.to ? e.from - e.to : e.to - e.from) > 1) {
      graph.add_loop_closure(e.from, e.to, e.measurement, e.information);
    } else {
      throw ParseError(e.line_no, "edge " + std::to_string(e.from) + " -> " +
                                      std::to_string(e.to) +
                                      " is neither forward odometry nor a loop closure");
    }
  }
  return graph;
}

std::string write_g2o(const PoseGraph& graph) {
  std::string out;
  for (const auto& n : graph.nodes()) {
    out += kVertexTag;
    out += ' ' + std::to_string(n.id);
    append_pose(out, n.estimate);
    out += '\n';
  }
  for (const auto& e : graph.edges()) {
    out += kEdgeTag;
    out += ' ' + std::to_string(e.from_id) + ' ' + std::to_string(e.to_id);
    append_pose(out, e.measurement);
    for (int r = 0; r < 6; ++r) {
      for (int c = r; c < 6; ++c) {
        out += ' ';
        out += format_double(e.information(r, c));
      }
    }
    out += '\n';
  }
  return out;
}

PoseGraph load_g2o(const std::string& path) { return parse_g2o(read_file(path)); }

void save_g2o(const std::string& path, const PoseGraph& graph) {
  write_file(path, write_g2o(graph));
}

std::string graph_to_json(const PoseGraph& graph) {
  nlohmann::json nodes = nlohmann::json::array();
  for (const auto& n : graph.nodes()) {
    nlohmann::json j = pose_json(n.estimate);
    j["id"] = n.id;
    nodes.push_back(std::move(j));
  }
  nlohmann::json edges = nlohmann::json::array();
  for (const auto& e : graph.edges()) {
    nlohmann::json j = pose_json(e.measurement);
    j["from"] = e.from_id;
    j["to"] = e.to_id;
    j["kind"] = to_string(e.kind);
    std::vector<double> info(e.information.data(), e.information.data() + 36);
    j["information"] = info;
    edges.push_back(std::move(j));
  }
  return nlohmann::json{{"nodes", nodes}, {"edges", edges}}.dump(2) + "\n";
}

}  // namespace vprcal
