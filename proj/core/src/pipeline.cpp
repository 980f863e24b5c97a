#include "vprcal/pipeline.hpp"

#include <chrono>
#include <ctime>
#include <functional>
#include <set>
#include <sstream>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "vprcal/io.hpp"
#include "vprcal/optimizer.hpp"
#include "vprcal/version.hpp"

namespace vprcal {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

[[noreturn]] void invalid(const std::string& message) {
  throw Error(ErrorCode::kInvalidConfig, message);
}

/// Reads keys from one JSON object, remembering which were used so that
/// leftovers can be reported as unknown.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) invalid(where() + " must be an object");
  }

  bool has(const char* key) const { return j_.contains(key); }

  Section child(const char* key) {
    used_.insert(key);
    static const json empty = json::object();
    return Section(j_.contains(key) ? j_.at(key) : empty, path_ + "." + key);
  }

  void read(const char* key, bool& out) {
    if (const json* v = take(key)) {
      if (!v->is_boolean()) invalid(where(key) + " must be a boolean");
      out = v->get<bool>();
    }
  }

  void read(const char* key, double& out) {
    if (const json* v = take(key)) {
      if (!v->is_number()) invalid(where(key) + " must be a number");
      out = v->get<double>();
    }
  }

  void read(const char* key, std::uint64_t& out) {
    if (const json* v = take(key)) {
      if (!v->is_number_unsigned()) invalid(where(key) + " must be a non-negative integer");
      out = v->get<std::uint64_t>();
    }
  }

  void read(const char* key, std::string& out) {
    if (const json* v = take(key)) {
      if (!v->is_string()) invalid(where(key) + " must be a string");
      out = v->get<std::string>();
    }
  }

  void read(const char* key, std::optional<double>& out) {
    if (const json* v = take(key)) {
      if (v->is_null()) {
        out.reset();
      } else if (v->is_number()) {
        out = v->get<double>();
      } else {
        invalid(where(key) + " must be a number or null");
      }
    }
  }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!used_.count(key)) invalid("unknown key " + where(key.c_str()));
    }
  }

 private:
  const json* take(const char* key) {
    used_.insert(key);
    return j_.contains(key) ? &j_.at(key) : nullptr;
  }

  std::string where() const { return path_.empty() ? "config" : path_.substr(1); }
  std::string where(const char* key) const {
    return path_.empty() ? std::string(key) : path_.substr(1) + "." + key;
  }

  const json& j_;
  std::string path_;
  std::set<std::string> used_;
};

void read_world(Section s, WorldConfig& w) {
  std::string trajectory = to_string(w.trajectory);
  s.read("trajectory", trajectory);
  try {
    w.trajectory = trajectory_kind_from_string(trajectory);
  } catch (const Error&) {
    invalid("world.trajectory must be loop, figure-eight or grid-with-revisits");
  }
  s.read("keyframe_count", w.keyframe_count);
  s.read("laps", w.laps);
  s.read("step_length", w.step_length);
  s.read("route_length", w.route_length);
  s.read("lap_offset", w.lap_offset);
  s.read("phase_offset", w.phase_offset);
  s.read("landmark_density", w.landmark_density);
  s.read("landmark_spread", w.landmark_spread);
  s.read("sensing_range", w.sensing_range);
  s.read("observation_noise", w.observation_noise);
  s.read("odometry_sigma_t", w.odometry_sigma_t);
  s.read("odometry_sigma_r", w.odometry_sigma_r);
  s.read("descriptor_dimension", w.descriptor_dimension);
  s.read("signature_dimension", w.signature_dimension);
  s.read("signature_cell", w.signature_cell);
  s.read("place_signature_noise", w.place_signature_noise);
  s.read("appearance_dimension", w.appearance_dimension);
  s.read("appearance_noise", w.appearance_noise);
  s.read("aliasing_pairs", w.aliasing_pairs);
  s.read("aliasing_shares_geometry", w.aliasing_shares_geometry);
  s.read("aliasing_descriptor_noise", w.aliasing_descriptor_noise);
  s.read("revisit_radius", w.revisit_radius);
  s.read("environment_seed", w.environment_seed);
  s.finish();
}

json world_json(const WorldConfig& w) {
  return {{"trajectory", to_string(w.trajectory)},
          {"keyframe_count", w.keyframe_count},
          {"laps", w.laps},
          {"step_length", w.step_length},
          {"route_length", w.route_length},
          {"lap_offset", w.lap_offset},
          {"phase_offset", w.phase_offset},
          {"landmark_density", w.landmark_density},
          {"landmark_spread", w.landmark_spread},
          {"sensing_range", w.sensing_range},
          {"observation_noise", w.observation_noise},
          {"odometry_sigma_t", w.odometry_sigma_t},
          {"odometry_sigma_r", w.odometry_sigma_r},
          {"descriptor_dimension", w.descriptor_dimension},
          {"signature_dimension", w.signature_dimension},
          {"signature_cell", w.signature_cell},
          {"place_signature_noise", w.place_signature_noise},
          {"appearance_dimension", w.appearance_dimension},
          {"appearance_noise", w.appearance_noise},
          {"aliasing_pairs", w.aliasing_pairs},
          {"aliasing_shares_geometry", w.aliasing_shares_geometry},
          {"aliasing_descriptor_noise", w.aliasing_descriptor_noise},
          {"revisit_radius", w.revisit_radius},
          {"environment_seed", w.environment_seed}};
}

const char* solver_name(LinearSolverKind kind) {
  return kind == LinearSolverKind::kDenseCholesky ? "dense" : "sparse";
}

// ---------------------------------------------------------------------------
// Stage plumbing

struct Layout {
  explicit Layout(const fs::path& root) : root(root) {}

  fs::path sim(const char* split, const char* file) const { return root / "simulate" / split / file; }

  fs::path root;
  fs::path tuples() const { return root / "mine" / "tuples.json"; }
  fs::path mined_graph() const { return root / "mine" / "graph.g2o"; }
  fs::path mining_report() const { return root / "mine" / "report.json"; }
  fs::path optimized_graph() const { return root / "optimize" / "graph.g2o"; }
  fs::path optimize_report() const { return root / "optimize" / "report.json"; }
  fs::path head() const { return root / "train" / "head.json"; }
  fs::path loss_history() const { return root / "train" / "loss_history.csv"; }
  fs::path eval_dir() const { return root / "eval"; }
  fs::path manifest() const { return root / "manifest.json"; }
};

struct Sequence {
  std::vector<Descriptor> descriptors;
  std::vector<KeyframeObservations> observations;
  std::vector<OdometryMeasurement> odometry;
  GroundTruth truth;
};

void write_sequence(const Layout& layout, const char* split, const World& world) {
  save_descriptors(layout.sim(split, "descriptors.csv"), world.descriptors);
  save_observations(layout.sim(split, "observations.json"), world.observations);
  write_file(layout.sim(split, "odometry.g2o"), odometry_to_g2o(world.odometry));
  write_file(layout.sim(split, "ground_truth.json"), ground_truth_to_json(world.truth));
}

std::vector<fs::path> sequence_files(const Layout& layout, const char* split) {
  return {layout.sim(split, "descriptors.csv"), layout.sim(split, "observations.json"),
          layout.sim(split, "odometry.g2o"), layout.sim(split, "ground_truth.json")};
}

Sequence read_sequence(const Layout& layout, const char* split) {
  Sequence s;
  s.descriptors = load_descriptors(layout.sim(split, "descriptors.csv"));
  s.observations = load_observations(layout.sim(split, "observations.json"));
  s.odometry = extract_odometry(load_g2o(layout.sim(split, "odometry.g2o").string()));
  s.truth = ground_truth_from_json(read_file(layout.sim(split, "ground_truth.json")));
  return s;
}

void require_inputs(const std::vector<fs::path>& paths) {
  for (const auto& p : paths) {
    if (!fs::is_regular_file(p)) {
      throw Error(ErrorCode::kIoFailure, "missing input file " + p.string());
    }
  }
}

std::vector<TrainingTuple> inliers_only(const std::vector<TrainingTuple>& tuples) {
  std::vector<TrainingTuple> out;
  for (const auto& t : tuples) {
    if (t.status == TupleStatus::kInlier) out.push_back(t);
  }
  return out;
}

std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

PipelineConfig default_pipeline_config() {
  PipelineConfig c;
  c.world.aliasing_pairs = 2;
  c.train.margin = 2.0;
  c.train.learning_rate = 0.01;
  c.train.epochs = 30;
  return c;
}

void validate(const PipelineConfig& c) {
  validate(c.world);
  validate(c.train);
  if (c.mining.k_max == 0) invalid("mining.k_max must be >= 1");
  if (c.mining.max_negatives == 0) invalid("mining.max_negatives must be >= 1");
  if (c.mining.registration.min_correspondences == 0) {
    invalid("mining.min_correspondences must be >= 1");
  }
  if (c.mining.registration.ransac.iterations == 0) invalid("mining.ransac_iterations must be >= 1");
  if (!(c.mining.registration.ransac.inlier_threshold > 0.0)) {
    invalid("mining.inlier_threshold must be > 0");
  }
  if (!(c.mining.gnc.mu_growth > 1.0)) invalid("gnc.mu_growth must be > 1");
  if (!(c.mining.gnc.chi2_threshold > 0.0)) invalid("gnc chi-square threshold must be > 0");
  if (c.eval.threshold_count == 0) invalid("eval.threshold_count must be >= 1");
  if (c.eval.revisit_radius && !(*c.eval.revisit_radius > 0.0)) {
    invalid("eval.revisit_radius must be > 0");
  }
}

PipelineConfig pipeline_config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    invalid(std::string("config is not valid JSON: ") + e.what());
  }
  PipelineConfig c = default_pipeline_config();
  Section root(j, "");
  root.read("seed", c.seed);
  std::uint64_t window = c.mining.window;
  root.read("window", window);
  c.mining.window = c.eval.window = c.world.window = window;

  Section stages = root.child("stages");
  stages.read("simulate", c.stages.simulate);
  stages.read("mine", c.stages.mine);
  stages.read("optimize", c.stages.optimize);
  stages.read("train", c.stages.train);
  stages.read("eval", c.stages.eval);
  stages.finish();

  read_world(root.child("world"), c.world);

  Section heldout = root.child("heldout");
  heldout.read("seed_offset", c.heldout.seed_offset);
  heldout.read("phase_offset", c.heldout.phase_offset);
  heldout.finish();

  Section mining = root.child("mining");
  mining.read("k_max", c.mining.k_max);
  mining.read("max_negatives", c.mining.max_negatives);
  mining.read("min_correspondences", c.mining.registration.min_correspondences);
  mining.read("ransac_iterations", c.mining.registration.ransac.iterations);
  mining.read("inlier_threshold", c.mining.registration.ransac.inlier_threshold);
  mining.finish();

  Section gnc = root.child("gnc");
  std::optional<double> probability;
  std::optional<double> threshold;
  gnc.read("chi2_probability", probability);
  gnc.read("chi2_threshold", threshold);
  if (probability && threshold) invalid("gnc: give chi2_probability or chi2_threshold, not both");
  if (probability) {
    if (!(*probability > 0.0 && *probability < 1.0)) {
      invalid("gnc.chi2_probability must be in (0, 1)");
    }
    c.mining.gnc.chi2_threshold = chi2_quantile(*probability);
  }
  if (threshold) c.mining.gnc.chi2_threshold = *threshold;
  gnc.read("mu_growth", c.mining.gnc.mu_growth);
  gnc.read("mu_stop", c.mining.gnc.mu_stop);
  gnc.read("weight_tolerance", c.mining.gnc.weight_tolerance);
  gnc.read("max_outer_iterations", c.mining.gnc.max_outer_iterations);
  gnc.read("lm_max_iterations", c.mining.gnc.lm.max_iterations);
  std::string solver = solver_name(c.mining.gnc.lm.solver);
  gnc.read("solver", solver);
  if (solver == "dense") {
    c.mining.gnc.lm.solver = LinearSolverKind::kDenseCholesky;
  } else if (solver == "sparse") {
    c.mining.gnc.lm.solver = LinearSolverKind::kSparseCholesky;
  } else {
    invalid("gnc.solver must be sparse or dense");
  }
  gnc.finish();

  Section train = root.child("train");
  train.read("margin", c.train.margin);
  train.read("learning_rate", c.train.learning_rate);
  train.read("epochs", c.train.epochs);
  train.read("grad_clip_norm", c.train.grad_clip_norm);
  train.read("cosine_decay", c.train.cosine_decay);
  train.finish();

  Section eval = root.child("eval");
  eval.read("threshold_count", c.eval.threshold_count);
  eval.read("revisit_radius", c.eval.revisit_radius);
  eval.finish();
  root.finish();

  c.eval.registration = c.mining.registration;
  c.eval.gnc = c.mining.gnc;
  validate(c);
  return c;
}

std::string pipeline_config_to_json(const PipelineConfig& c) {
  const json j = {
      {"seed", c.seed},
      {"window", c.mining.window},
      {"stages",
       {{"simulate", c.stages.simulate},
        {"mine", c.stages.mine},
        {"optimize", c.stages.optimize},
        {"train", c.stages.train},
        {"eval", c.stages.eval}}},
      {"world", world_json(c.world)},
      {"heldout", {{"seed_offset", c.heldout.seed_offset}, {"phase_offset", c.heldout.phase_offset}}},
      {"mining",
       {{"k_max", c.mining.k_max},
        {"max_negatives", c.mining.max_negatives},
        {"min_correspondences", c.mining.registration.min_correspondences},
        {"ransac_iterations", c.mining.registration.ransac.iterations},
        {"inlier_threshold", c.mining.registration.ransac.inlier_threshold}}},
      {"gnc",
       {{"chi2_threshold", c.mining.gnc.chi2_threshold},
        {"mu_growth", c.mining.gnc.mu_growth},
        {"mu_stop", c.mining.gnc.mu_stop},
        {"weight_tolerance", c.mining.gnc.weight_tolerance},
        {"max_outer_iterations", c.mining.gnc.max_outer_iterations},
        {"lm_max_iterations", c.mining.gnc.lm.max_iterations},
        {"solver", solver_name(c.mining.gnc.lm.solver)}}},
      {"train",
       {{"margin", c.train.margin},
        {"learning_rate", c.train.learning_rate},
        {"epochs", c.train.epochs},
        {"grad_clip_norm", c.train.grad_clip_norm ? json(*c.train.grad_clip_norm) : json(nullptr)},
        {"cosine_decay", c.train.cosine_decay}}},
      {"eval",
       {{"threshold_count", c.eval.threshold_count},
        {"revisit_radius", c.eval.revisit_radius ? json(*c.eval.revisit_radius) : json(nullptr)}}}};
  return j.dump(2) + "\n";
}

std::string world_config_to_json(const WorldConfig& config) {
  json j = world_json(config);
  j["seed"] = config.seed;
  j["window"] = config.window;
  return j.dump(2) + "\n";
}

StageFailure::StageFailure(std::string stage, const Error& cause)
    : Error(cause.code(), stage + ": " + cause.what()), stage_(std::move(stage)) {}

PipelineOutcome run_pipeline(const PipelineConfig& input, const fs::path& out_dir) {
  validate(input);
  PipelineConfig config = input;
  config.world.seed = config.seed;
  config.mining.registration.ransac.seed = config.seed;
  config.eval.registration.ransac.seed = config.seed;
  config.train.seed = config.seed;
  WorldConfig heldout_world = config.world;
  heldout_world.seed = config.seed + config.heldout.seed_offset;
  heldout_world.phase_offset += config.heldout.phase_offset;

  const Layout layout(out_dir);
  PipelineOutcome outcome;
  json stage_details = json::object();

  auto run_stage = [&](const char* name, bool enabled, const std::vector<fs::path>& inputs,
                       const std::function<void()>& body) {
    StageTiming timing{name, enabled, 0.0};
    if (enabled) {
      require_inputs(inputs);
      const auto start = std::chrono::steady_clock::now();
      try {
        body();
      } catch (const StageFailure&) {
        throw;
      } catch (const Error& e) {
        throw StageFailure(name, e);
      }
      timing.seconds =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
    outcome.stages.push_back(timing);
  };

  run_stage("simulate", config.stages.simulate, {}, [&] {
    write_sequence(layout, "train", generate(config.world));
    write_sequence(layout, "heldout", generate(heldout_world));
  });

  run_stage("mine", config.stages.mine, sequence_files(layout, "train"), [&] {
    const Sequence train = read_sequence(layout, "train");
    const MiningResult mined =
        mine(make_store(train.descriptors), train.observations, train.odometry, config.mining);
    export_tuples(mined.tuples, layout.tuples());
    save_g2o(layout.mined_graph().string(), mined.graph);
    write_file(layout.mining_report(), mining_report_to_json(mined.report));
    outcome.summary.tuples_extracted = mined.report.tuples_extracted;
    outcome.summary.tuples_rejected = mined.report.tuples_rejected_by_pgo;
    stage_details["mine"] = json::parse(mining_report_to_json(mined.report));
  });

  run_stage("optimize", config.stages.optimize,
            {layout.mined_graph(), layout.sim("train", "ground_truth.json")}, [&] {
              PoseGraph graph = load_g2o(layout.mined_graph().string());
              const GroundTruth truth =
                  ground_truth_from_json(read_file(layout.sim("train", "ground_truth.json")));
              const std::vector<Pose> initial = graph.estimates();
              const GncResult gnc = gnc_solve(graph, config.mining.gnc);
              graph.set_estimates(gnc.estimates);
              save_g2o(layout.optimized_graph().string(), graph);
              json report = json::parse(report_to_json(gnc.report));
              report["gnc_outer_iterations"] = gnc.state.iteration;
              if (truth.poses.size() == initial.size()) {
                report["rmse_initial"] = trajectory_rmse(initial, truth.poses);
                report["rmse_optimized"] = trajectory_rmse(gnc.estimates, truth.poses);
              }
              write_file(layout.optimize_report(), report.dump(2) + "\n");
              stage_details["optimize"] = {{"inlier_edges", gnc.report.inlier_edges.size()},
                                           {"outlier_edges", gnc.report.outlier_edges.size()}};
            });

  run_stage("train", config.stages.train, {layout.tuples(), layout.sim("train", "descriptors.csv")},
            [&] {
              const auto tuples = inliers_only(import_tuples(layout.tuples()));
              const DescriptorStore store =
                  make_store(load_descriptors(layout.sim("train", "descriptors.csv")));
              const TrainResult trained = train(EmbeddingHead::Identity(store.dimension()), tuples,
                                                store, config.train);
              save_head(layout.head(), trained.head);
              std::ostringstream csv;
              csv << "epoch,mean_loss\n";
              for (std::size_t e = 0; e < trained.loss_history.size(); ++e) {
                csv << e + 1 << ',' << format_double(trained.loss_history[e]) << '\n';
              }
              write_file(layout.loss_history(), csv.str());
              stage_details["train"] = {{"tuples", tuples.size()},
                                        {"epochs", trained.loss_history.size()}};
            });

  std::vector<fs::path> eval_inputs = sequence_files(layout, "heldout");
  eval_inputs.insert(eval_inputs.end(),
                     {layout.head(), layout.tuples(), layout.sim("train", "descriptors.csv")});
  run_stage("eval", config.stages.eval, eval_inputs, [&] {
    const Sequence heldout = read_sequence(layout, "heldout");
    const EmbeddingHead tuned = load_head(layout.head());
    const auto tuples = inliers_only(import_tuples(layout.tuples()));
    const DescriptorStore train_store =
        make_store(load_descriptors(layout.sim("train", "descriptors.csv")));
    const DescriptorStore raw = make_store(heldout.descriptors);
    const EmbeddingHead identity = EmbeddingHead::Identity(raw.dimension());

    const Verification v =
        verify_candidates(heldout.observations, heldout.odometry, heldout.truth, config.eval);
    const DescriptorStore tuned_store = embed_store(tuned, raw);
    const std::vector<std::vector<double>> distances = {pair_distances(raw, v),
                                                        pair_distances(tuned_store, v)};
    const auto grid = shared_threshold_grid(distances, config.eval.threshold_count);

    std::vector<SystemResult> systems(2);
    systems[0].label = "identity";
    systems[0].similarity = raw.similarity_matrix();
    systems[1].label = "tuned";
    systems[1].similarity = tuned_store.similarity_matrix();
    const EmbeddingHead* heads[2] = {&identity, &tuned};
    for (std::size_t k = 0; k < 2; ++k) {
      systems[k].pr = pr_sweep(distances[k], v, grid);
      systems[k].correct_match = correct_match_percentage(distances[k], v, grid);
      if (!tuples.empty()) systems[k].separation = separation_stats(*heads[k], tuples, train_store);
    }
    emit_artifacts(systems, layout.eval_dir());

    PipelineSummary& s = outcome.summary;
    s.identity_correct_match = systems[0].correct_match.percentage;
    s.tuned_correct_match = systems[1].correct_match.percentage;
    if (!tuples.empty()) {
      s.identity_gap = systems[0].separation->mean_gap;
      s.tuned_gap = systems[1].separation->mean_gap;
    }
    s.tuned_dominates = weakly_dominates(exact_pr_curve(distances[1], v),
                                         exact_pr_curve(distances[0], v));
    const json comparison = {
        {"identity_correct_match_percentage", s.identity_correct_match},
        {"tuned_correct_match_percentage", s.tuned_correct_match},
        {"identity_separation_gap", s.identity_gap},
        {"tuned_separation_gap", s.tuned_gap},
        {"tuned_weakly_dominates_exact", s.tuned_dominates},
        {"tuned_weakly_dominates_grid", weakly_dominates(systems[1].pr, systems[0].pr)},
        {"threshold_grid", {{"low", grid.front()}, {"high", grid.back()}, {"count", grid.size()}}},
        {"candidate_pairs", v.pairs.size()},
        {"ground_truth_positives", v.ground_truth_positives}};
    write_file(layout.eval_dir() / "comparison.json", comparison.dump(2) + "\n");
    stage_details["eval"] = comparison;
  });

  json stages = json::array();
  for (const auto& t : outcome.stages) {
    stages.push_back({{"name", t.name}, {"ran", t.ran}, {"wall_time_s", t.seconds}});
  }
  std::ostringstream eigen_version;
  eigen_version << EIGEN_WORLD_VERSION << '.' << EIGEN_MAJOR_VERSION << '.' << EIGEN_MINOR_VERSION;
  const json manifest = {
      {"version", 1},
      {"created_at", utc_timestamp()},
      {"versions",
       {{"vprcal", kVersion},
        {"eigen", eigen_version.str()},
        {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                              std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                              std::to_string(NLOHMANN_JSON_VERSION_PATCH)}}},
      {"seeds",
       {{"global", config.seed},
        {"environment", config.world.environment_seed},
        {"train_sequence", config.world.seed},
        {"heldout_sequence", heldout_world.seed},
        {"ransac", config.mining.registration.ransac.seed},
        {"sgd", config.train.seed}}},
      {"config", json::parse(pipeline_config_to_json(config))},
      {"stages", stages},
      {"results", stage_details}};
  outcome.manifest_json = manifest.dump(2) + "\n";
  write_file(layout.manifest(), outcome.manifest_json);
  return outcome;
}

}  // namespace vprcal
