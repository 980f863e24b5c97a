#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "paths.hpp"
#include "vprcal/descriptor_store.hpp"
#include "vprcal/errors.hpp"
#include "vprcal/eval.hpp"
#include "vprcal/gnc.hpp"
#include "vprcal/io.hpp"
#include "vprcal/optimizer.hpp"
#include "vprcal/pipeline.hpp"
#include "vprcal/pose_graph.hpp"
#include "vprcal/registration.hpp"
#include "vprcal/simulator.hpp"
#include "vprcal/trainer.hpp"
#include "vprcal/tuple_miner.hpp"
#include "vprcal/version.hpp"

namespace fs = std::filesystem;
using namespace vprcal;
using vprcal::cli::PathEscape;
using vprcal::cli::resolve_output;

namespace {

enum ExitCode { kOk = 0, kUsage = 1, kInvalidInput = 2, kStageFailure = 3 };

/// Problem with what the user handed us: unreadable or malformed input files,
/// bad configuration, or output paths escaping --out-dir.
struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

template <typename F>
auto load(F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const Error& e) {
    throw InputError(e.what());
  }
}

fs::path output(const fs::path& out_dir, const fs::path& path) {
  try {
    return resolve_output(out_dir, path);
  } catch (const PathEscape& e) {
    throw InputError(e.what());
  }
}

int guarded(const char* stage, const std::function<void()>& body) {
  try {
    body();
    return kOk;
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInvalidInput;
  } catch (const StageFailure& e) {
    std::cerr << "error: stage '" << e.stage() << "' failed: " << e.what() << '\n';
    return kStageFailure;
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kInvalidConfig) {
      std::cerr << "error: " << e.what() << '\n';
      return kInvalidInput;
    }
    std::cerr << "error: stage '" << stage << "' failed: " << e.what() << '\n';
    return kStageFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: stage '" << stage << "' failed: " << e.what() << '\n';
    return kStageFailure;
  }
}

CLI::App* subcommand(CLI::App& app, const char* name, const char* description,
                     std::string& out_dir) {
  CLI::App* sub = app.add_subcommand(name, description);
  sub->set_version_flag("--version", std::string("vprcal ") + kVersion);
  sub->add_option("--out-dir", out_dir, "Directory receiving every output of this command")
      ->capture_default_str();
  return sub;
}

DescriptorStore load_store(const std::string& path, bool normalize) {
  DescriptorStore store = load([&] { return make_store(load_descriptors(path)); });
  return normalize ? normalized(store) : store;
}

std::vector<OdometryMeasurement> load_odometry(const std::string& path) {
  return load([&] { return extract_odometry(load_g2o(path)); });
}

// ---------------------------------------------------------------------------

struct SimulateOptions {
  WorldConfig world;
  std::string trajectory = "loop";
  bool no_aliasing_geometry = false;
  std::string format = "csv";
};

void add_simulate(CLI::App& app, SimulateOptions& o, std::string& out_dir,
                  std::function<int()>& action) {
  CLI::App* sub = subcommand(app, "simulate", "Generate a synthetic world", out_dir);
  WorldConfig& w = o.world;
  sub->add_option("--trajectory", o.trajectory, "loop | figure-eight | grid-with-revisits")
      ->check(CLI::IsMember({"loop", "figure-eight", "grid-with-revisits"}))
      ->capture_default_str();
  sub->add_option("--keyframes", w.keyframe_count, "Number of keyframes")->capture_default_str();
  sub->add_option("--laps", w.laps, "Passes over the closed route")->capture_default_str();
  sub->add_option("--step-length", w.step_length, "Meters between keyframes")
      ->capture_default_str();
  sub->add_option("--route-length", w.route_length, "Route length in meters (0: derived)")
      ->capture_default_str();
  sub->add_option("--lap-offset", w.lap_offset, "Lateral shift per lap, meters")
      ->capture_default_str();
  sub->add_option("--phase-offset", w.phase_offset, "Arc-length shift, meters")
      ->capture_default_str();
  sub->add_option("--landmark-density", w.landmark_density, "Landmarks per meter of route")
      ->capture_default_str();
  sub->add_option("--landmark-spread", w.landmark_spread, "Max lateral landmark offset, meters")
      ->capture_default_str();
  sub->add_option("--sensing-range", w.sensing_range, "Observation range, meters")
      ->capture_default_str();
  sub->add_option("--observation-noise", w.observation_noise, "Landmark noise sigma, meters")
      ->capture_default_str();
  sub->add_option("--odometry-sigma-t", w.odometry_sigma_t, "Odometry translation sigma, meters")
      ->capture_default_str();
  sub->add_option("--odometry-sigma-r", w.odometry_sigma_r, "Odometry rotation sigma, radians")
      ->capture_default_str();
  sub->add_option("--descriptor-dim", w.descriptor_dimension, "Descriptor dimension D")
      ->capture_default_str();
  sub->add_option("--signature-dim", w.signature_dimension, "Place-signal subspace dimension")
      ->capture_default_str();
  sub->add_option("--signature-cell", w.signature_cell, "Place-signature lattice spacing, meters")
      ->capture_default_str();
  sub->add_option("--signature-noise", w.place_signature_noise, "Isotropic descriptor noise")
      ->capture_default_str();
  sub->add_option("--appearance-dim", w.appearance_dimension, "Appearance subspace dimension")
      ->capture_default_str();
  sub->add_option("--appearance-noise", w.appearance_noise, "Appearance variation sigma")
      ->capture_default_str();
  sub->add_option("--aliasing-pairs", w.aliasing_pairs, "Planted perceptual-aliasing pairs")
      ->capture_default_str();
  sub->add_flag("--no-aliasing-geometry", o.no_aliasing_geometry,
                "Aliased pairs share descriptors only, not landmark geometry");
  sub->add_option("--aliasing-noise", w.aliasing_descriptor_noise, "Descriptor noise of aliases")
      ->capture_default_str();
  sub->add_option("--revisit-radius", w.revisit_radius, "Ground-truth revisit radius, meters")
      ->capture_default_str();
  sub->add_option("--window", w.window, "Exclusion window for ground-truth pairs")
      ->capture_default_str();
  sub->add_option("--seed", w.seed, "Sequence seed")->capture_default_str();
  sub->add_option("--environment-seed", w.environment_seed, "Environment seed")
      ->capture_default_str();
  sub->add_option("--descriptor-format", o.format, "csv | bin")
      ->check(CLI::IsMember({"csv", "bin"}))
      ->capture_default_str();
  sub->callback([&] {
    action = [&] {
      return guarded("simulate", [&] {
        o.world.trajectory = trajectory_kind_from_string(o.trajectory);
        o.world.aliasing_shares_geometry = !o.no_aliasing_geometry;
        try {
          validate(o.world);
        } catch (const Error& e) {
          throw InputError(e.what());
        }
        const fs::path desc = output(out_dir, "descriptors." + o.format);
        const fs::path obs = output(out_dir, "observations.json");
        const fs::path odo = output(out_dir, "odometry.g2o");
        const fs::path gt = output(out_dir, "ground_truth.json");
        const fs::path cfg = output(out_dir, "world.json");
        const World world = generate(o.world);
        save_descriptors(desc, world.descriptors);
        save_observations(obs, world.observations);
        write_file(odo, odometry_to_g2o(world.odometry));
        write_file(gt, ground_truth_to_json(world.truth));
        write_file(cfg, world_config_to_json(o.world));
        std::cout << "simulated " << world.descriptors.size() << " keyframes, "
                  << world.truth.revisit_pairs.size() << " revisit pairs, "
                  << world.truth.aliased_pairs.size() << " aliased pairs\n";
      });
    };
  });
}

// ---------------------------------------------------------------------------

struct MineOptions {
  std::string descriptors, observations, odometry;
  bool normalize = false;
  MiningConfig config;
  std::uint64_t seed = 0;
  std::string out_tuples = "tuples.json";
  std::string out_graph = "mined_graph.g2o";
  std::string report = "mining_report.json";
};

void add_mine(CLI::App& app, MineOptions& o, std::string& out_dir, std::function<int()>& action) {
  CLI::App* sub = subcommand(app, "mine", "Mine training tuples from one traversal", out_dir);
  sub->add_option("--descriptors", o.descriptors, "Descriptor file (.csv or binary)")->required();
  sub->add_option("--observations", o.observations, "Observations JSON")->required();
  sub->add_option("--odometry", o.odometry, "Odometry g2o file")->required();
  sub->add_flag("--normalize", o.normalize, "L2-normalize descriptors before matching");
  sub->add_option("--window", o.config.window, "Exclusion window W")->capture_default_str();
  sub->add_option("--k-max", o.config.k_max, "Candidates walked per keyframe")
      ->capture_default_str();
  sub->add_option("--max-negatives", o.config.max_negatives, "Negatives per tuple")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  sub->add_option("--min-correspondences", o.config.registration.min_correspondences,
                  "Registration correspondence minimum")
      ->capture_default_str();
  sub->add_option("--ransac-iterations", o.config.registration.ransac.iterations,
                  "RANSAC iterations")
      ->capture_default_str();
  sub->add_option("--inlier-threshold", o.config.registration.ransac.inlier_threshold,
                  "RANSAC inlier threshold, meters")
      ->capture_default_str();
  sub->add_option("--seed", o.seed, "RANSAC seed")->capture_default_str();
  sub->add_option("--out-tuples", o.out_tuples, "Tuple JSON (under --out-dir)")
      ->capture_default_str();
  sub->add_option("--out-graph", o.out_graph, "Mined pose graph, g2o (under --out-dir)")
      ->capture_default_str();
  sub->add_option("--report", o.report, "Mining report JSON (under --out-dir)")
      ->capture_default_str();
  sub->callback([&] {
    action = [&] {
      return guarded("mine", [&] {
        const fs::path tuples_path = output(out_dir, o.out_tuples);
        const fs::path graph_path = output(out_dir, o.out_graph);
        const fs::path report_path = output(out_dir, o.report);
        const auto descriptors = load_store(o.descriptors, o.normalize);
        const auto observations = load([&] { return load_observations(o.observations); });
        const auto odometry = load_odometry(o.odometry);
        o.config.registration.ransac.seed = o.seed;
        const MiningResult mined = mine(descriptors, observations, odometry, o.config);
        export_tuples(mined.tuples, tuples_path);
        save_g2o(graph_path.string(), mined.graph);
        write_file(report_path, mining_report_to_json(mined.report));
        std::cout << "extracted " << mined.report.tuples_extracted << " tuples, "
                  << mined.report.tuples_rejected_by_pgo << " rejected by PGO, "
                  << mined.report.keyframes_without_positive << " keyframes without positive\n";
      });
    };
  });
}

// ---------------------------------------------------------------------------

struct OptimizeOptions {
  std::string input;
  std::string ground_truth;
  std::string robust = "gnc";
  std::string solver = "sparse";
  double chi2_quantile = 0.99;
  double mu_growth = 1.4;
  std::size_t max_iters = 100;
  std::string out_graph = "optimized.g2o";
  std::string report = "optimize_report.json";
};

void add_optimize(CLI::App& app, OptimizeOptions& o, std::string& out_dir,
                  std::function<int()>& action) {
  CLI::App* sub = subcommand(app, "optimize", "Optimize a pose graph", out_dir);
  sub->add_option("--input", o.input, "Input g2o file")->required();
  sub->add_option("--robust", o.robust, "none (plain Levenberg-Marquardt) | gnc")
      ->check(CLI::IsMember({"none", "gnc"}))
      ->capture_default_str();
  sub->add_option("--chi2-quantile", o.chi2_quantile,
                  "Chi-square probability defining the GNC inlier threshold (6 DoF)")
      ->check(CLI::Range(1e-9, 1.0 - 1e-9))
      ->capture_default_str();
  sub->add_option("--mu-growth", o.mu_growth, "GNC continuation factor (> 1)")
      ->check(CLI::Range(1.0 + 1e-12, 1e6))
      ->capture_default_str();
  sub->add_option("--max-iters", o.max_iters, "Levenberg-Marquardt iteration cap per solve")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  sub->add_option("--solver", o.solver, "sparse | dense Cholesky")
      ->check(CLI::IsMember({"sparse", "dense"}))
      ->capture_default_str();
  sub->add_option("--ground-truth", o.ground_truth, "Ground-truth JSON for trajectory RMSE");
  sub->add_option("--out-graph", o.out_graph, "Optimized g2o (under --out-dir)")
      ->capture_default_str();
  sub->add_option("--report", o.report, "Report JSON (under --out-dir)")->capture_default_str();
  sub->callback([&] {
    action = [&] {
      return guarded("optimize", [&] {
        const fs::path graph_path = output(out_dir, o.out_graph);
        const fs::path report_path = output(out_dir, o.report);
        PoseGraph graph = load([&] { return load_g2o(o.input); });
        std::optional<GroundTruth> truth;
        if (!o.ground_truth.empty()) {
          truth = load([&] { return ground_truth_from_json(read_file(o.ground_truth)); });
        }
        GncConfig gnc;
        gnc.chi2_threshold = chi2_quantile(o.chi2_quantile);
        gnc.mu_growth = o.mu_growth;
        gnc.lm.max_iterations = o.max_iters;
        gnc.lm.solver = o.solver == "dense" ? LinearSolverKind::kDenseCholesky
                                            : LinearSolverKind::kSparseCholesky;
        const std::vector<Pose> initial = graph.estimates();
        std::vector<Pose> estimates;
        nlohmann::json report;
        if (o.robust == "none") {
          const LmResult lm = optimize_lm(graph, unit_weights(graph), gnc.lm);
          estimates = lm.estimates;
          report = nlohmann::json::parse(report_to_json(lm.report));
        } else {
          const GncResult r = gnc_solve(graph, gnc);
          estimates = r.estimates;
          report = nlohmann::json::parse(report_to_json(r.report));
          report["gnc_outer_iterations"] = r.state.iteration;
        }
        if (truth && truth->poses.size() == initial.size()) {
          report["rmse_initial"] = trajectory_rmse(initial, truth->poses);
          report["rmse_optimized"] = trajectory_rmse(estimates, truth->poses);
        }
        graph.set_estimates(estimates);
        save_g2o(graph_path.string(), graph);
        write_file(report_path, report.dump(2) + "\n");
        std::cout << "optimized " << graph.node_count() << " nodes; "
                  << report["outlier_edges"].size() << " outlier edges\n";
      });
    };
  });
}

// ---------------------------------------------------------------------------

struct TrainOptions {
  std::string tuples, descriptors, init_head;
  bool normalize = false;
  TrainConfig config;
  double grad_clip = 1.0;
  bool no_cosine = false;
  std::string out_head = "head.json";
  std::string loss_history = "loss_history.csv";
};

void add_train(CLI::App& app, TrainOptions& o, std::string& out_dir,
               std::function<int()>& action) {
  CLI::App* sub = subcommand(app, "train", "Fine-tune the embedding head on mined tuples", out_dir);
  sub->add_option("--tuples", o.tuples, "Tuple JSON; only inlier tuples are used")->required();
  sub->add_option("--descriptors", o.descriptors, "Descriptor file")->required();
  sub->add_option("--init-head", o.init_head, "Starting head (default: identity)");
  sub->add_flag("--normalize", o.normalize, "L2-normalize descriptors before training");
  sub->add_option("--margin", o.config.margin, "Triplet margin m")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  sub->add_option("--learning-rate", o.config.learning_rate, "Initial learning rate")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  sub->add_option("--epochs", o.config.epochs, "Epochs")->capture_default_str();
  sub->add_option("--grad-clip-norm", o.grad_clip, "Global-norm clip threshold (0 disables)")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  sub->add_flag("--no-cosine", o.no_cosine, "Constant learning rate");
  sub->add_option("--seed", o.config.seed, "Shuffle seed")->capture_default_str();
  sub->add_option("--out-head", o.out_head, "Head checkpoint (under --out-dir)")
      ->capture_default_str();
  sub->add_option("--loss-history", o.loss_history, "Per-epoch loss CSV (under --out-dir)")
      ->capture_default_str();
  sub->callback([&] {
    action = [&] {
      return guarded("train", [&] {
        const fs::path head_path = output(out_dir, o.out_head);
        const fs::path history_path = output(out_dir, o.loss_history);
        const auto all = load([&] { return import_tuples(o.tuples); });
        const auto store = load_store(o.descriptors, o.normalize);
        const EmbeddingHead init = o.init_head.empty()
                                       ? EmbeddingHead::Identity(store.dimension())
                                       : load([&] { return load_head(o.init_head); });
        std::vector<TrainingTuple> tuples;
        for (const auto& t : all) {
          if (t.status == TupleStatus::kInlier) tuples.push_back(t);
        }
        o.config.grad_clip_norm =
            o.grad_clip > 0.0 ? std::optional<double>(o.grad_clip) : std::nullopt;
        o.config.cosine_decay = !o.no_cosine;
        const TrainResult result = train(init, tuples, store, o.config);
        save_head(head_path, result.head);
        std::ostringstream csv;
        csv << "epoch,mean_loss\n";
        for (std::size_t e = 0; e < result.loss_history.size(); ++e) {
          csv << e + 1 << ',' << format_double(result.loss_history[e]) << '\n';
        }
        write_file(history_path, csv.str());
        std::cout << "trained on " << tuples.size() << " of " << all.size() << " tuples";
        if (!result.loss_history.empty()) {
          std::cout << "; loss " << result.loss_history.front() << " -> "
                    << result.loss_history.back();
        }
        std::cout << '\n';
      });
    };
  });
}

// ---------------------------------------------------------------------------

struct EvalOptions {
  std::string head, descriptors, observations, odometry, ground_truth, tuples;
  std::string train_descriptors;
  bool normalize = false;
  std::size_t thresholds = 50;
  std::size_t window = kDefaultExclusionWindow;
  std::optional<double> revisit_radius;
  std::size_t min_correspondences = 6;
  std::uint64_t seed = 0;
};

void add_eval(CLI::App& app, EvalOptions& o, std::string& out_dir, std::function<int()>& action) {
  CLI::App* sub = subcommand(
      app, "eval", "Evaluate place recognition under the three-stage detection rule", out_dir);
  sub->add_option("--head", o.head, "Tuned head; compared against the identity head");
  sub->add_option("--descriptors", o.descriptors, "Descriptors of the evaluated sequence")
      ->required();
  sub->add_option("--observations", o.observations, "Observations JSON")->required();
  sub->add_option("--odometry", o.odometry, "Odometry g2o of the evaluated sequence")->required();
  sub->add_option("--ground-truth", o.ground_truth, "Ground-truth JSON")->required();
  sub->add_option("--thresholds", o.thresholds, "Number of thresholds in the grid")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  sub->add_option("--tuples", o.tuples, "Tuples for separation histograms");
  sub->add_option("--train-descriptors", o.train_descriptors,
                  "Descriptors the tuples refer to (default: --descriptors)");
  sub->add_flag("--normalize", o.normalize, "L2-normalize descriptors before embedding");
  sub->add_option("--window", o.window, "Exclusion window")->capture_default_str();
  sub->add_option("--revisit-radius", o.revisit_radius,
                  "Ground-truth radius (default: value stored with the ground truth)");
  sub->add_option("--min-correspondences", o.min_correspondences,
                  "Registration correspondence minimum")
      ->capture_default_str();
  sub->add_option("--seed", o.seed, "RANSAC seed")->capture_default_str();
  sub->callback([&] {
    action = [&] {
      return guarded("eval", [&] {
        const fs::path dir = output(out_dir, "eval");
        const auto raw = load_store(o.descriptors, o.normalize);
        const auto observations = load([&] { return load_observations(o.observations); });
        const auto odometry = load_odometry(o.odometry);
        const auto truth =
            load([&] { return ground_truth_from_json(read_file(o.ground_truth)); });
        std::vector<std::pair<std::string, EmbeddingHead>> heads = {
            {"identity", EmbeddingHead::Identity(raw.dimension())}};
        if (!o.head.empty()) heads.emplace_back("tuned", load([&] { return load_head(o.head); }));
        std::vector<TrainingTuple> tuples;
        std::optional<DescriptorStore> tuple_store;
        if (!o.tuples.empty()) {
          for (const auto& t : load([&] { return import_tuples(o.tuples); })) {
            if (t.status == TupleStatus::kInlier) tuples.push_back(t);
          }
          const std::string& path =
              o.train_descriptors.empty() ? o.descriptors : o.train_descriptors;
          tuple_store = load_store(path, o.normalize);
        }

        EvalConfig config;
        config.window = o.window;
        config.revisit_radius = o.revisit_radius;
        config.threshold_count = o.thresholds;
        config.registration.min_correspondences = o.min_correspondences;
        config.registration.ransac.seed = o.seed;
        const Verification v = verify_candidates(observations, odometry, truth, config);

        std::vector<DescriptorStore> stores;
        std::vector<std::vector<double>> distances;
        for (const auto& [label, head] : heads) {
          stores.push_back(embed_store(head, raw));
          distances.push_back(pair_distances(stores.back(), v));
        }
        const auto grid = shared_threshold_grid(distances, o.thresholds);
        std::vector<SystemResult> systems;
        for (std::size_t k = 0; k < heads.size(); ++k) {
          SystemResult s;
          s.label = heads[k].first;
          s.pr = pr_sweep(distances[k], v, grid);
          s.correct_match = correct_match_percentage(distances[k], v, grid);
          s.similarity = stores[k].similarity_matrix();
          if (!tuples.empty()) s.separation = separation_stats(heads[k].second, tuples, *tuple_store);
          systems.push_back(std::move(s));
          std::cout << systems.back().label << ": correct matches "
                    << systems.back().correct_match.percentage << "%\n";
        }
        emit_artifacts(systems, dir);
        if (heads.size() == 2) {
          const nlohmann::json comparison = {
              {"identity_correct_match_percentage", systems[0].correct_match.percentage},
              {"tuned_correct_match_percentage", systems[1].correct_match.percentage},
              {"tuned_weakly_dominates_exact",
               weakly_dominates(exact_pr_curve(distances[1], v), exact_pr_curve(distances[0], v))},
              {"tuned_weakly_dominates_grid", weakly_dominates(systems[1].pr, systems[0].pr)}};
          write_file(dir / "comparison.json", comparison.dump(2) + "\n");
        }
      });
    };
  });
}

// ---------------------------------------------------------------------------

struct PipelineOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  bool print_default = false;
};

void add_pipeline(CLI::App& app, PipelineOptions& o, std::string& out_dir,
                  std::function<int()>& action) {
  CLI::App* sub = subcommand(app, "pipeline", "Run simulate, mine, optimize, train and eval",
                             out_dir);
  sub->add_option("--config", o.config, "Pipeline JSON (absent keys take defaults)");
  sub->add_option("--seed", o.seed, "Override the global seed");
  sub->add_flag("--print-default-config", o.print_default, "Print the default config and exit");
  sub->callback([&] {
    action = [&] {
      if (o.print_default) {
        std::cout << pipeline_config_to_json(default_pipeline_config());
        return static_cast<int>(kOk);
      }
      return guarded("pipeline", [&] {
        PipelineConfig config =
            o.config.empty()
                ? default_pipeline_config()
                : load([&] { return pipeline_config_from_json(read_file(o.config)); });
        if (o.seed) config.seed = *o.seed;
        try {
          validate(config);
        } catch (const Error& e) {
          throw InputError(e.what());
        }
        PipelineOutcome outcome;
        try {
          outcome = run_pipeline(config, out_dir);
        } catch (const StageFailure&) {
          throw;
        } catch (const Error& e) {
          throw InputError(e.what());
        }
        for (const auto& s : outcome.stages) {
          std::printf("%-9s %s %.3f s\n", s.name.c_str(), s.ran ? "ran    " : "skipped", s.seconds);
        }
        const PipelineSummary& r = outcome.summary;
        std::printf("tuples: %zu extracted, %zu rejected by PGO\n", r.tuples_extracted,
                    r.tuples_rejected);
        std::printf("correct matches: identity %.2f%%, tuned %.2f%%\n", r.identity_correct_match,
                    r.tuned_correct_match);
        std::printf("separation gap: identity %.4f, tuned %.4f\n", r.identity_gap, r.tuned_gap);
      });
    };
  });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Self-supervised place-recognition tuple mining and calibration"};
  app.set_version_flag("--version", std::string("vprcal ") + kVersion);
  app.require_subcommand(1);

  std::string out_dir = ".";
  std::function<int()> action;
  SimulateOptions simulate;
  MineOptions mine_opts;
  OptimizeOptions optimize;
  TrainOptions train_opts;
  EvalOptions eval_opts;
  PipelineOptions pipeline;
  add_simulate(app, simulate, out_dir, action);
  add_mine(app, mine_opts, out_dir, action);
  add_optimize(app, optimize, out_dir, action);
  add_train(app, train_opts, out_dir, action);
  add_eval(app, eval_opts, out_dir, action);
  add_pipeline(app, pipeline, out_dir, action);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }
  return action ? action() : kUsage;
}
