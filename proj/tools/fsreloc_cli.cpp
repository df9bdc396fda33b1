// Copyright 2026 The fsreloc Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


// Command-line front end: synth, train-encoder, build-tree, localize,
// evaluate, upper-bound, ablate.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fsreloc/config.hpp"
#include "fsreloc/error.hpp"
#include "fsreloc/eval.hpp"
#include "fsreloc/pipeline.hpp"
#include "fsreloc/scene.hpp"
#include "fsreloc/synthetic.hpp"
#include "fsreloc/triplet.hpp"

namespace fs = std::filesystem;
using namespace fsreloc;

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> sets;
  std::vector<std::string> scenes;
  std::vector<std::string> priors;
  std::string model;
  std::string tree;
  std::string out;
  std::string results;
  std::string mode;
  std::string pairs;
  std::size_t workers = 1;
  std::size_t count = 1;
};

PipelineConfig resolve_config(const Options& o) {
  PipelineConfig cfg = o.config.empty() ? PipelineConfig{} : load_pipeline_config(o.config);
  for (const auto& kv : o.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw UsageError("--set expects key=value, got '" + kv + "'");
    cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (o.seed) cfg.seed = *o.seed;
  if (!o.mode.empty()) cfg.mode = parse_ablation_mode(o.mode);
  cfg.validate();
  return cfg;
}

void need(bool ok, const std::string& msg) {
  if (!ok) throw UsageError(msg);
}

double seconds_since(std::chrono::steady_clock::time_point t) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t).count();
}

void print_report(const Report& r) {
  std::printf("frames %zu  failures %zu\n", r.frames, r.failures);
  std::printf("median error  %.4f m  %.3f deg\n", r.median_trans_m, r.median_rot_deg);
  std::printf("success (5cm,5deg) %.2f%%  (20cm,20deg) %.2f%%\n", 100.0 * r.success_fine,
              100.0 * r.success_coarse);
}

void write_report_files(const fs::path& dir, const Report& rep,
                        std::span<const LocalizationResult> results) {
  fs::create_directories(dir);
  write_text(dir / "report.json", report_to_json(rep));
  write_text(dir / "report.csv", report_to_csv(rep));
  if (!results.empty()) {
    write_text(dir / "results.csv", results_to_csv(results));
    write_text(dir / "timing.csv", timings_to_csv(results));
  }
}

int cmd_synth(const Options& o) {
  need(!o.out.empty(), "synth: --out is required");
  need(o.count >= 1, "synth: --count must be >= 1");
  PipelineConfig cfg = resolve_config(o);
  for (std::size_t i = 0; i < o.count; ++i) {
    SyntheticSceneConfig sc = cfg.synth;
    sc.seed = stream_seed(cfg.stage("synth"), i);
    char name[32];
    std::snprintf(name, sizeof name, "%s-%02zu", cfg.synth.name.c_str(), i);
    sc.name = name;
    const auto t0 = std::chrono::steady_clock::now();
    const SyntheticScene syn = generate_synthetic_scene(sc);
    for (std::size_t e : syn.empty_views) {
      std::fprintf(stderr, "warning: %s sees no surface\n", syn.frames[e].id.to_string().c_str());
    }
    write_seven_scenes(syn.to_scene(name), fs::path(o.out) / name);
    std::printf("%s: %zu frames in %.2f s\n", name, syn.frames.size(), seconds_since(t0));
  }
  return 0;
}

std::vector<Scene> load_scenes(const std::vector<std::string>& paths) {
  std::vector<Scene> out;
  for (const auto& p : paths) out.push_back(load_seven_scenes(p));
  return out;
}

int cmd_train_encoder(const Options& o) {
  need(!o.scenes.empty(), "train-encoder: at least one --scene is required");
  need(!o.out.empty(), "train-encoder: --out is required");
  const PipelineConfig cfg = resolve_config(o);
  const auto scenes = load_scenes(o.scenes);
  std::vector<SceneFrames> training;
  for (const auto& s : scenes) training.push_back(s.all_frames());
  const auto t0 = std::chrono::steady_clock::now();
  if (cfg.encoder != EncoderVariant::Learned) {
    make_encoder(cfg, training).save(o.out);
    std::printf("wrote %s encoder to %s\n", to_string(cfg.encoder), o.out.c_str());
    return 0;
  }
  TripletTrainConfig tc = cfg.train;
  tc.seed = cfg.stage("encoder");
  const auto triplets = mine_pairs(training, tc);
  std::printf("mined %zu triplets in %.1f s\n", triplets.size(), seconds_since(t0));
  if (!o.pairs.empty()) write_pair_dump(o.pairs, triplets);
  const TrainResult r = train_encoder(triplets, training, tc);
  r.model.save(o.out);
  if (r.diverged) std::fprintf(stderr, "warning: training diverged; kept the best finite model\n");
  std::printf("held-out loss %.6f -> %.6f (epoch %zu) in %.1f s\n", r.initial_heldout_loss,
              r.best_heldout_loss, r.best_epoch, seconds_since(t0));
  return r.diverged ? kExitRuntime : 0;
}

int cmd_build_tree(const Options& o) {
  need(o.scenes.size() == 1, "build-tree: exactly one --scene is required");
  need(!o.model.empty() && !o.out.empty(), "build-tree: --model and --out are required");
  const PipelineConfig cfg = resolve_config(o);
  const EncoderModel enc = EncoderModel::load(o.model);
  const Scene scene = load_seven_scenes(o.scenes[0]);
  const auto frames = train_frames(scene);
  if (cfg.few_shot > frames.size()) {
    std::fprintf(stderr, "warning: few_shot.n = %zu exceeds the %zu training frames; using all\n",
                 cfg.few_shot, frames.size());
  }
  const auto t0 = std::chrono::steady_clock::now();
  const SceneModel m = build_scene_model(frames, enc, cfg);
  m.tree.save(o.out);
  for (std::size_t i : m.insufficient_frames) {
    std::fprintf(stderr, "warning: %s has fewer than %zu valid pixels\n",
                 m.few_shot[i].id.to_string().c_str(), cfg.per_frame);
  }
  const auto st = m.tree.stats();
  std::printf("tree: %zu samples, %zu nodes, %zu leaves, depth %zu, mean leaf %.2f\n", m.samples,
              st.nodes, st.leaves, st.depth, st.mean_leaf_size);
  std::printf("build time %.2f s\n", seconds_since(t0));
  return 0;
}

std::vector<Pose> few_shot_poses(const Scene& scene, const PipelineConfig& cfg) {
  if (scene.train_split.empty()) return {};
  const auto train = train_frames(scene);
  for (const auto& f : train) {
    if (!f.pose) return {};
  }
  std::vector<Pose> out;
  for (std::size_t i : select_few_shot(train, std::min(cfg.few_shot, train.size()))) {
    out.push_back(*train[i].pose);
  }
  return out;
}

int cmd_localize(const Options& o) {
  need(o.scenes.size() == 1, "localize: exactly one --scene is required");
  need(!o.model.empty() && !o.tree.empty() && !o.out.empty(),
       "localize: --model, --tree and --out are required");
  const PipelineConfig cfg = resolve_config(o);
  const EncoderModel enc = EncoderModel::load(o.model);
  const RegressionTree tree = RegressionTree::load(o.tree);
  const Scene scene = load_seven_scenes(o.scenes[0]);
  const auto frames = test_frames(scene);
  need(!frames.empty(), "localize: the scene has no test frames");
  const auto t0 = std::chrono::steady_clock::now();
  const auto results = localize_frames(frames, enc, tree, cfg, o.workers);
  const double elapsed = seconds_since(t0);
  std::size_t posed = 0;
  for (const auto& f : frames) posed += f.pose ? 1 : 0;
  std::printf("localized %zu frames in %.2f s (%.0f ms per frame)\n", frames.size(), elapsed,
              1000.0 * elapsed / static_cast<double>(frames.size()));
  fs::create_directories(o.out);
  if (posed == frames.size()) {
    const auto shots = few_shot_poses(scene, cfg);
    const Report rep = make_report(results, shots, cfg);
    write_report_files(o.out, rep, results);
    print_report(rep);
  } else {
    write_text(fs::path(o.out) / "results.csv", results_to_csv(results));
    write_text(fs::path(o.out) / "timing.csv", timings_to_csv(results));
  }
  return 0;
}

int cmd_evaluate(const Options& o) {
  need(!o.results.empty() && !o.out.empty(), "evaluate: --results and --out are required");
  const PipelineConfig cfg = resolve_config(o);
  const auto results = results_from_csv(read_text(o.results));
  need(!results.empty(), "evaluate: the result set is empty");
  std::vector<Pose> shots;
  if (!o.scenes.empty()) shots = few_shot_poses(load_seven_scenes(o.scenes[0]), cfg);
  const Report rep = make_report(results, shots, cfg);
  write_report_files(o.out, rep, {});
  print_report(rep);
  return 0;
}

int cmd_upper_bound(const Options& o) {
  need(o.scenes.size() == 1 && !o.out.empty(), "upper-bound: one --scene and --out are required");
  PipelineConfig cfg = resolve_config(o);
  const Scene scene = load_seven_scenes(o.scenes[0]);
  const auto train = train_frames(scene);
  const auto test = test_frames(scene);
  need(!test.empty(), "upper-bound: the scene has no test frames");
  std::vector<Frame> shots;
  std::vector<Pose> poses;
  for (std::size_t i : select_few_shot(train, std::min(cfg.few_shot, train.size()))) {
    shots.push_back(train[i]);
    poses.push_back(*train[i].pose);
  }
  const PointCloud cloud = build_point_cloud(shots, cfg.per_frame);
  UpperBoundConfig uc = cfg.upper_bound;
  uc.seed = cfg.stage("upper-bound");
  uc.refine = cfg.ransac.refine_config();
  const auto t0 = std::chrono::steady_clock::now();
  const auto results = upper_bound(cloud, test, uc);
  std::printf("upper bound over %zu frames, cloud of %zu points, %.2f s\n", test.size(),
              cloud.size(), seconds_since(t0));
  const Report rep = make_report(results, poses, cfg);
  write_report_files(o.out, rep, results);
  print_report(rep);
  return 0;
}

int cmd_ablate(const Options& o) {
  need(o.scenes.size() == 1 && !o.out.empty(), "ablate: one --scene (target) and --out are required");
  const PipelineConfig cfg = resolve_config(o);
  const Scene target = load_seven_scenes(o.scenes[0]);
  const auto prior = load_scenes(o.priors);
  if (cfg.encoder == EncoderVariant::Learned && cfg.mode != AblationMode::NoDecoupling) {
    need(!prior.empty(), "ablate: the learned encoder needs at least one --prior scene");
  }
  const auto t0 = std::chrono::steady_clock::now();
  const AblationRun run = run_ablation(cfg.mode, prior, target, cfg, o.workers);
  std::printf("mode %s, %.1f s\n", to_string(cfg.mode), seconds_since(t0));
  write_report_files(o.out, run.report, run.results);
  print_report(run.report);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Few-shot camera relocalization toolkit"};
  app.require_subcommand(1);
  Options o;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "Key = value config file")->check(CLI::ExistingFile);
    sub->add_option("--seed", o.seed, "Global seed");
    sub->add_option("--set", o.sets, "Override a config key (key=value), repeatable");
    sub->add_option("--out", o.out, "Output file or directory");
  };

  auto* synth = app.add_subcommand("synth", "Generate synthetic scenes in 7-Scenes layout");
  common(synth);
  synth->add_option("--count", o.count, "Number of scenes");

  auto* train = app.add_subcommand("train-encoder", "Train the patch encoder on prior scenes");
  common(train);
  train->add_option("--scene", o.scenes, "Training scene directory, repeatable");
  train->add_option("--pairs", o.pairs, "Optional mined-pair dump");

  auto* build = app.add_subcommand("build-tree", "Build the coordinate tree of a target scene");
  common(build);
  build->add_option("--scene", o.scenes, "Target scene directory");
  build->add_option("--model", o.model, "Encoder model file")->check(CLI::ExistingFile);

  auto* localize = app.add_subcommand("localize", "Localize the test frames of a scene");
  common(localize);
  localize->add_option("--scene", o.scenes, "Scene directory");
  localize->add_option("--model", o.model, "Encoder model file")->check(CLI::ExistingFile);
  localize->add_option("--tree", o.tree, "Tree file")->check(CLI::ExistingFile);
  localize->add_option("--workers", o.workers, "Worker threads")->check(CLI::PositiveNumber);
  localize->add_option("--mode", o.mode, "full, no_decoupling or vanilla_ransac");

  auto* evaluate = app.add_subcommand("evaluate", "Report from a per-frame results file");
  common(evaluate);
  evaluate->add_option("--results", o.results, "results.csv from localize")->check(CLI::ExistingFile);
  evaluate->add_option("--scene", o.scenes, "Scene directory, for viewpoint bins");

  auto* ub = app.add_subcommand("upper-bound", "Point-cloud upper bound on a scene");
  common(ub);
  ub->add_option("--scene", o.scenes, "Scene directory");

  auto* ablate = app.add_subcommand("ablate", "Run one ablation mode end to end");
  common(ablate);
  ablate->add_option("--scene", o.scenes, "Target scene directory");
  ablate->add_option("--prior", o.priors, "Scene for encoder training, repeatable");
  ablate->add_option("--mode", o.mode, "full, no_decoupling or vanilla_ransac");
  ablate->add_option("--workers", o.workers, "Worker threads")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (synth->parsed()) return cmd_synth(o);
    if (train->parsed()) return cmd_train_encoder(o);
    if (build->parsed()) return cmd_build_tree(o);
    if (localize->parsed()) return cmd_localize(o);
    if (evaluate->parsed()) return cmd_evaluate(o);
    if (ub->parsed()) return cmd_upper_bound(o);
    if (ablate->parsed()) return cmd_ablate(o);
  } catch (const UsageError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  } catch (const Error& e) {
    std::fprintf(stderr, "error [%s]: %s\n", to_string(e.code()), e.what());
    const bool usage = e.code() == ErrorCode::ConfigError || e.code() == ErrorCode::EmptyResults;
    return usage ? kExitUsage : kExitRuntime;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitRuntime;
  }
  return kExitUsage;
}
