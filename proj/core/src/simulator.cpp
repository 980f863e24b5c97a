#include "vprcal/simulator.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/QR>
#include <nlohmann/json.hpp>

#include "vprcal/errors.hpp"

namespace vprcal {
namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kMinInformationSigma = 1e-4;

std::uint64_t mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

struct RoutePoint {
  Eigen::Vector2d position;
  double heading = 0.0;

  Eigen::Vector2d left() const { return {-std::sin(heading), std::cos(heading)}; }
};

/// Closed planar route parameterized by arc length in [0, length).
class Route {
 public:
  Route(TrajectoryKind kind, double length) : kind_(kind), length_(length) {
    if (kind_ == TrajectoryKind::kGridWithRevisits) {
      const double a = length_ / 10.0;
      waypoints_ = {{0, 0}, {a, 0}, {a, a}, {0, a}, {0, 0}, {a, 0},
                    {2 * a, 0}, {2 * a, a}, {a, a}, {a, 0}, {0, 0}};
    }
  }

  double length() const { return length_; }

  RoutePoint at(double s) const {
    s = std::fmod(s, length_);
    if (s < 0.0) s += length_;
    switch (kind_) {
      case TrajectoryKind::kLoop: {
        const double r = length_ / (2.0 * kPi);
        const double a = s / r;
        return {{r * std::cos(a), r * std::sin(a)}, a + 0.5 * kPi};
      }
      case TrajectoryKind::kFigureEight: {
        const double r = length_ / (4.0 * kPi);
        if (s < 0.5 * length_) {
          const double a = kPi + s / r;
          return {{r + r * std::cos(a), r * std::sin(a)}, a + 0.5 * kPi};
        }
        const double b = -(s - 0.5 * length_) / r;
        return {{-r + r * std::cos(b), r * std::sin(b)}, b - 0.5 * kPi};
      }
      case TrajectoryKind::kGridWithRevisits: {
        for (std::size_t k = 0; k + 1 < waypoints_.size(); ++k) {
          const Eigen::Vector2d d = waypoints_[k + 1] - waypoints_[k];
          const double seg = d.norm();
          if (s <= seg || k + 2 == waypoints_.size()) {
            const double u = std::min(s, seg);
            return {waypoints_[k] + d * (u / seg), std::atan2(d.y(), d.x())};
          }
          s -= seg;
        }
        break;
      }
    }
    return {{0, 0}, 0.0};
  }

 private:
  TrajectoryKind kind_;
  double length_;
  std::vector<Eigen::Vector2d> waypoints_;
};

Eigen::VectorXd gaussian_vector(std::mt19937_64& rng, std::size_t n, double sigma) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd v(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = sigma * normal(rng);
  return v;
}

/// Smooth random field of place signatures: independent Gaussian vectors on a
/// square lattice, bilinearly interpolated, embedded into descriptor space
/// through a fixed orthonormal basis.
class SignatureField {
 public:
  SignatureField(const WorldConfig& config)
      : seed_(mix(config.environment_seed ^ 0x5157ULL)),
        cell_(config.signature_cell),
        dim_(config.signature_dimension) {
    std::mt19937_64 rng(mix(config.environment_seed ^ 0xba515ULL));
    const auto cols = static_cast<Eigen::Index>(dim_ + config.appearance_dimension);
    Eigen::MatrixXd g(static_cast<Eigen::Index>(config.descriptor_dimension), cols);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (Eigen::Index c = 0; c < g.cols(); ++c) {
      for (Eigen::Index r = 0; r < g.rows(); ++r) g(r, c) = normal(rng);
    }
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
    const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(g.rows(), cols);
    basis_ = q.leftCols(static_cast<Eigen::Index>(dim_));
    appearance_basis_ = q.rightCols(static_cast<Eigen::Index>(config.appearance_dimension));
  }

  const Eigen::MatrixXd& appearance_basis() const { return appearance_basis_; }

  Eigen::VectorXd at(const Eigen::Vector2d& p) const {
    const double gx = p.x() / cell_;
    const double gy = p.y() / cell_;
    const double fx = std::floor(gx);
    const double fy = std::floor(gy);
    const double u = gx - fx;
    const double v = gy - fy;
    const auto ix = static_cast<std::int64_t>(fx);
    const auto iy = static_cast<std::int64_t>(fy);
    const Eigen::VectorXd s = (1 - u) * (1 - v) * node(ix, iy) + u * (1 - v) * node(ix + 1, iy) +
                              (1 - u) * v * node(ix, iy + 1) + u * v * node(ix + 1, iy + 1);
    return basis_ * s;
  }

 private:
  Eigen::VectorXd node(std::int64_t ix, std::int64_t iy) const {
    std::mt19937_64 rng(mix(seed_ ^ mix(static_cast<std::uint64_t>(ix)) ^
                            (mix(static_cast<std::uint64_t>(iy)) << 1)));
    return gaussian_vector(rng, dim_, 1.0);
  }

  std::uint64_t seed_;
  double cell_;
  std::size_t dim_;
  Eigen::MatrixXd basis_;
  Eigen::MatrixXd appearance_basis_;
};

Vector3 sample_landmark(const Route& route, std::mt19937_64& rng, double spread) {
  std::uniform_real_distribution<double> along(0.0, route.length());
  std::uniform_real_distribution<double> lateral(1.0, std::max(1.0, spread));
  std::uniform_real_distribution<double> height(0.5, 4.0);
  std::bernoulli_distribution side(0.5);
  const RoutePoint rp = route.at(along(rng));
  const double offset = side(rng) ? lateral(rng) : -lateral(rng);
  const Eigen::Vector2d xy = rp.position + rp.left() * offset;
  return {xy.x(), xy.y(), height(rng)};
}

nlohmann::json pairs_json(const std::vector<KeyframePair>& pairs) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& [i, j] : pairs) out.push_back({i, j});
  return out;
}

std::vector<KeyframePair> pairs_from_json(const nlohmann::json& j) {
  std::vector<KeyframePair> out;
  for (const auto& p : j) {
    if (!p.is_array() || p.size() != 2) {
      throw Error(ErrorCode::kSchemaViolation, "pair entries must be [i, j]");
    }
    out.emplace_back(p[0].get<std::size_t>(), p[1].get<std::size_t>());
  }
  return out;
}

}  // namespace

const char* to_string(TrajectoryKind kind) noexcept {
  switch (kind) {
    case TrajectoryKind::kLoop: return "loop";
    case TrajectoryKind::kFigureEight: return "figure-eight";
    case TrajectoryKind::kGridWithRevisits: return "grid-with-revisits";
  }
  return "loop";
}

TrajectoryKind trajectory_kind_from_string(const std::string& name) {
  if (name == "loop") return TrajectoryKind::kLoop;
  if (name == "figure-eight") return TrajectoryKind::kFigureEight;
  if (name == "grid-with-revisits") return TrajectoryKind::kGridWithRevisits;
  throw Error(ErrorCode::kInvalidConfig, "unknown trajectory kind '" + name + "'");
}

void validate(const WorldConfig& c) {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw Error(ErrorCode::kInvalidConfig, what);
  };
  require(c.keyframe_count >= 2, "keyframe_count must be >= 2");
  require(c.laps >= 1, "laps must be >= 1");
  require(c.step_length > 0.0, "step_length must be > 0");
  require(c.route_length >= 0.0, "route_length must be >= 0");
  require(c.landmark_density >= 0.0, "landmark_density must be >= 0");
  require(c.landmark_spread >= 0.0, "landmark_spread must be >= 0");
  require(c.sensing_range > 0.0, "sensing_range must be > 0");
  require(c.observation_noise >= 0.0, "observation_noise must be >= 0");
  require(c.odometry_sigma_t >= 0.0 && c.odometry_sigma_r >= 0.0, "odometry sigmas must be >= 0");
  require(c.descriptor_dimension >= 1, "descriptor_dimension must be >= 1");
  require(c.signature_dimension >= 1 &&
              c.signature_dimension + c.appearance_dimension <= c.descriptor_dimension,
          "signature_dimension >= 1 and signature + appearance dimensions <= descriptor_dimension");
  require(c.appearance_noise >= 0.0, "appearance_noise must be >= 0");
  require(c.signature_cell > 0.0, "signature_cell must be > 0");
  require(c.place_signature_noise >= 0.0, "place_signature_noise must be >= 0");
  require(c.aliasing_descriptor_noise >= 0.0, "aliasing_descriptor_noise must be >= 0");
  require(c.revisit_radius > 0.0, "revisit_radius must be > 0");
}

World generate(const WorldConfig& config) {
  validate(config);
  const std::size_t n = config.keyframe_count;
  const std::size_t per_lap = (n + config.laps - 1) / config.laps;
  const bool derived_length = config.route_length == 0.0;
  const double length =
      derived_length ? static_cast<double>(per_lap) * config.step_length : config.route_length;
  const Route route(config.trajectory, length);

  std::mt19937_64 env_rng(mix(config.environment_seed) ^ static_cast<std::uint64_t>(config.trajectory));
  std::mt19937_64 seq_rng(mix(config.seed ^ 0xabcdefULL));

  World world;
  GroundTruth& truth = world.truth;
  truth.revisit_radius = config.revisit_radius;

  // True trajectory.
  truth.poses.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    double s;
    std::size_t lap;
    if (derived_length) {
      s = static_cast<double>(k % per_lap) * config.step_length;
      lap = k / per_lap;
    } else {
      const double travelled = static_cast<double>(k) * config.step_length;
      s = std::fmod(travelled, length);
      lap = static_cast<std::size_t>(travelled / length);
    }
    const RoutePoint rp = route.at(s + config.phase_offset);
    const Eigen::Vector2d xy =
        rp.position + rp.left() * (static_cast<double>(lap) * config.lap_offset);
    truth.poses.push_back(Pose::FromYaw(rp.heading, Vector3(xy.x(), xy.y(), 0.0)));
  }

  // Landmarks belong to the environment.
  const auto landmark_count =
      static_cast<std::size_t>(std::llround(config.landmark_density * length));
  std::vector<Vector3> landmarks;
  landmarks.reserve(landmark_count);
  for (std::size_t i = 0; i < landmark_count; ++i) {
    landmarks.push_back(sample_landmark(route, env_rng, config.landmark_spread));
  }

  std::normal_distribution<double> normal(0.0, 1.0);
  auto noisy = [&](const Vector3& p, double sigma) {
    return Vector3(p.x() + sigma * normal(seq_rng), p.y() + sigma * normal(seq_rng),
                   p.z() + sigma * normal(seq_rng));
  };

  world.observations.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    KeyframeObservations& frame = world.observations[k];
    frame.keyframe_id = k;
    const Pose to_local = truth.poses[k].inverse();
    for (std::size_t l = 0; l < landmarks.size(); ++l) {
      if ((landmarks[l] - truth.poses[k].translation()).norm() > config.sensing_range) continue;
      frame.points.push_back({static_cast<LandmarkId>(l),
                              noisy(to_local * landmarks[l], config.observation_noise)});
    }
  }

  // Odometry: true relative motion perturbed on the right.
  const Matrix6 odo_info =
      diagonal_information(std::max(config.odometry_sigma_t, kMinInformationSigma),
                           std::max(config.odometry_sigma_r, kMinInformationSigma));
  world.odometry.reserve(n - 1);
  for (std::size_t k = 0; k + 1 < n; ++k) {
    Twist noise;
    noise.rho = noisy(Vector3::Zero(), config.odometry_sigma_t);
    noise.phi = noisy(Vector3::Zero(), config.odometry_sigma_r);
    world.odometry.push_back(
        {between(truth.poses[k], truth.poses[k + 1]) * exp(noise), odo_info});
  }

  // Descriptors: place signature plus isotropic noise.
  const SignatureField field(config);
  world.descriptors.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    const Vector3& t = truth.poses[k].translation();
    Eigen::VectorXd v = field.at({t.x(), t.y()});
    if (config.place_signature_noise > 0.0) {
      v += gaussian_vector(seq_rng, config.descriptor_dimension, config.place_signature_noise);
    }
    if (config.appearance_noise > 0.0 && config.appearance_dimension > 0) {
      v += field.appearance_basis() *
           gaussian_vector(seq_rng, config.appearance_dimension, config.appearance_noise);
    }
    world.descriptors.push_back({k, std::move(v)});
  }

  // Ground-truth revisits.
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + config.window + 1; j < n; ++j) {
      if (translation_distance(truth.poses[i], truth.poses[j]) <= config.revisit_radius) {
        truth.revisit_pairs.emplace_back(i, j);
      }
    }
  }

  // Perceptual aliasing traps.
  if (config.aliasing_pairs > 0) {
    const double far = std::max(4.0 * config.revisit_radius, 2.0 * config.sensing_range + 1.0);
    std::vector<bool> used(n, false);
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    std::size_t attempts = 0;
    while (truth.aliased_pairs.size() < config.aliasing_pairs) {
      if (++attempts > 100000) {
        throw Error(ErrorCode::kInvalidConfig, "cannot place the requested aliasing pairs");
      }
      std::size_t a = pick(seq_rng);
      std::size_t b = pick(seq_rng);
      if (a > b) std::swap(a, b);
      if (b - a <= config.window || used[a] || used[b]) continue;
      if (translation_distance(truth.poses[a], truth.poses[b]) <= far) continue;
      used[a] = used[b] = true;
      truth.aliased_pairs.emplace_back(a, b);

      world.descriptors[b].vector =
          world.descriptors[a].vector +
          gaussian_vector(seq_rng, config.descriptor_dimension, config.aliasing_descriptor_noise);
      if (config.aliasing_shares_geometry) {
        // b also "sees" a copy of a's local structure, so registration
        // succeeds with a wrong relative pose.
        const auto copied = world.observations[a].points;
        for (const auto& p : copied) {
          world.observations[b].points.push_back(
              {p.landmark_id, noisy(p.position, config.observation_noise)});
        }
      }
    }
    std::sort(truth.aliased_pairs.begin(), truth.aliased_pairs.end());
  }
  return world;
}

TrueLabel true_label(const GroundTruth& truth, std::size_t i, std::size_t j, double radius) {
  if (i >= truth.poses.size() || j >= truth.poses.size()) {
    throw Error(ErrorCode::kUnknownKeyframe, "true_label index out of range");
  }
  return translation_distance(truth.poses[i], truth.poses[j]) <= radius ? TrueLabel::kPositive
                                                                        : TrueLabel::kNegative;
}

std::string ground_truth_to_json(const GroundTruth& truth) {
  nlohmann::json poses = nlohmann::json::array();
  for (const auto& p : truth.poses) {
    const Quaternion& q = p.rotation();
    poses.push_back({{"translation", {p.translation().x(), p.translation().y(), p.translation().z()}},
                     {"rotation_wxyz", {q.w(), q.x(), q.y(), q.z()}}});
  }
  const nlohmann::json j = {{"version", 1},
                            {"revisit_radius", truth.revisit_radius},
                            {"poses", poses},
                            {"revisit_pairs", pairs_json(truth.revisit_pairs)},
                            {"aliased_pairs", pairs_json(truth.aliased_pairs)}};
  return j.dump() + "\n";
}

GroundTruth ground_truth_from_json(const std::string& text) {
  GroundTruth truth;
  try {
    const auto j = nlohmann::json::parse(text);
    if (j.at("version").get<int>() != 1) {
      throw Error(ErrorCode::kSchemaViolation, "unsupported ground-truth version");
    }
    truth.revisit_radius = j.at("revisit_radius").get<double>();
    for (const auto& p : j.at("poses")) {
      const auto t = p.at("translation").get<std::array<double, 3>>();
      const auto q = p.at("rotation_wxyz").get<std::array<double, 4>>();
      truth.poses.emplace_back(Quaternion(q[0], q[1], q[2], q[3]), Vector3(t[0], t[1], t[2]));
    }
    truth.revisit_pairs = pairs_from_json(j.at("revisit_pairs"));
    truth.aliased_pairs = pairs_from_json(j.at("aliased_pairs"));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kSchemaViolation, std::string("ground truth: ") + e.what());
  }
  return truth;
}

std::string odometry_to_g2o(std::span<const OdometryMeasurement> odometry) {
  return write_g2o(chain_initialize(odometry));
}

}  // namespace vprcal
