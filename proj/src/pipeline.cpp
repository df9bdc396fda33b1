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


#include "fsreloc/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <limits>
#include <thread>

#include "fsreloc/error.hpp"
#include "fsreloc/rng.hpp"

namespace fsreloc {

std::vector<Frame> train_frames(const Scene& scene) {
  if (!scene.train_split.empty()) return scene.frames_of(scene.train_split);
  require(!scene.sequences.empty(), "scene " + scene.name + " has no sequences");
  return scene.sequences.front().frames;
}

std::vector<Frame> test_frames(const Scene& scene) {
  if (!scene.test_split.empty()) return scene.frames_of(scene.test_split);
  std::vector<Frame> out;
  for (std::size_t i = 1; i < scene.sequences.size(); ++i) {
    out.insert(out.end(), scene.sequences[i].frames.begin(), scene.sequences[i].frames.end());
  }
  return out;
}

std::vector<PixelCoord> sample_query_pixels(const Frame& frame, std::size_t count,
                                            std::uint64_t seed) {
  const int w = frame.rgb.width, h = frame.rgb.height;
  const int iw = w - 2 * kPatchRadius, ih = h - 2 * kPatchRadius;
  if (iw <= 0 || ih <= 0) return {};
  const auto total = static_cast<std::size_t>(iw) * static_cast<std::size_t>(ih);
  std::vector<std::uint32_t> idx(total);
  for (std::size_t i = 0; i < total; ++i) idx[i] = static_cast<std::uint32_t>(i);
  const std::size_t n = std::min(count, total);
  Rng rng(seed);
  for (std::size_t i = 0; i < n; ++i) std::swap(idx[i], idx[i + uniform_index(rng, total - i)]);
  std::vector<PixelCoord> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = {kPatchRadius + static_cast<int>(idx[i] % static_cast<std::uint32_t>(iw)),
              kPatchRadius + static_cast<int>(idx[i] / static_cast<std::uint32_t>(iw))};
  }
  return out;
}

PredictionSet predict(const Frame& frame, std::span<const PixelCoord> pixels,
                      const EncoderModel& encoder, const RegressionTree& tree) {
  PredictionSet preds;
  preds.reserve(pixels.size());
  for (const auto& p : pixels) {
    const Descriptor d = encoder.encode(frame, p.u, p.v);
    Correspondence c;
    c.pixel = Pixel(p.u, p.v);
    for (const auto& x : tree.query(d)) c.candidates.push_back(x.cast<double>());
    preds.push_back(std::move(c));
  }
  return preds;
}

Bounds3 tree_bounds(const RegressionTree& tree) {
  Bounds3 b;
  b.lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  b.hi = -b.lo;
  for (const auto& n : tree.nodes()) {
    if (!n.leaf) continue;
    for (const auto& x : tree.leaf_coordinates(n)) {
      b.lo = b.lo.cwiseMin(x.cast<double>());
      b.hi = b.hi.cwiseMax(x.cast<double>());
    }
  }
  return b;
}

std::vector<std::size_t> inject_outliers(PredictionSet& preds, double fraction,
                                         const Bounds3& bounds, Rng& rng) {
  require(fraction >= 0.0 && fraction <= 1.0, "inject_outliers: fraction must be in [0, 1]");
  std::vector<std::size_t> order(preds.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  const auto n = static_cast<std::size_t>(std::lround(fraction * static_cast<double>(preds.size())));
  for (std::size_t i = 0; i < n; ++i) std::swap(order[i], order[i + uniform_index(rng, order.size() - i)]);
  order.resize(n);
  std::sort(order.begin(), order.end());
  for (std::size_t i : order) {
    for (auto& c : preds[i].candidates) {
      for (int a = 0; a < 3; ++a) c[a] = uniform_real(rng, bounds.lo[a], bounds.hi[a]);
    }
  }
  return order;
}

EncoderModel make_encoder(const PipelineConfig& cfg, std::span<const SceneFrames> training,
                          TrainResult* report) {
  switch (cfg.encoder) {
    case EncoderVariant::Baseline:
      return EncoderModel::baseline(cfg.stage("encoder"));
    case EncoderVariant::Oracle:
      return EncoderModel::oracle(cfg.oracle_noise, cfg.stage("encoder"));
    case EncoderVariant::Learned:
      break;
  }
  TripletTrainConfig tc = cfg.train;
  tc.seed = cfg.stage("encoder");
  const auto triplets = mine_pairs(training, tc);
  TrainResult r = train_encoder(triplets, training, tc);
  EncoderModel model = r.model;
  if (report) *report = std::move(r);
  return model;
}

SceneModel build_scene_model(std::span<const Frame> frames, const EncoderModel& encoder,
                             const PipelineConfig& cfg) {
  require(!frames.empty(), "build_scene_model: no training frames");
  SceneModel m;
  const std::size_t n = std::min(cfg.few_shot, frames.size());
  for (std::size_t i : select_few_shot(frames, n)) {
    m.few_shot.push_back(frames[i]);
    m.few_shot_poses.push_back(*frames[i].pose);
  }
  SampleSet samples = extract_training_samples(m.few_shot, cfg.per_frame, encoder);
  if (samples.samples.empty()) {
    throw Error(ErrorCode::EmptySamples, "build_scene_model: no valid pixels in the few-shot frames");
  }
  m.insufficient_frames = std::move(samples.insufficient_frames);
  m.samples = samples.samples.size();
  m.tree = RegressionTree::build(samples.samples, cfg.leaf_cap, cfg.stage("tree"));
  return m;
}

LocalizationResult localize_frame(const Frame& frame, std::size_t index,
                                  const EncoderModel& encoder, const RegressionTree& tree,
                                  const PipelineConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  LocalizationResult res;
  res.id = frame.id;
  if (frame.pose) res.truth = *frame.pose;
  try {
    const auto pixels = sample_query_pixels(frame, cfg.ransac.pool_size,
                                            stream_seed(cfg.stage("query-pixels"), index));
    PredictionSet preds = predict(frame, pixels, encoder, tree);
    if (cfg.outlier_fraction > 0.0) {
      Rng rng(stream_seed(cfg.stage("outliers"), index));
      inject_outliers(preds, cfg.outlier_fraction, tree_bounds(tree), rng);
    }
    RansacConfig rc = cfg.ransac;
    rc.seed = stream_seed(cfg.stage("ransac"), index);
    if (cfg.mode == AblationMode::VanillaRansac) rc.score_mode = ScoreMode::InlierCount;
    RansacResult r = estimate_pose(preds, frame.intrinsics, rc);
    res.estimate = r.pose;
    res.diagnostics = std::move(r.diagnostics);
  } catch (const Error& e) {
    res.failure = to_string(e.code());
  }
  if (frame.pose) score_result(res);
  res.runtime_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return res;
}

std::vector<LocalizationResult> localize_frames(std::span<const Frame> frames,
                                                const EncoderModel& encoder,
                                                const RegressionTree& tree,
                                                const PipelineConfig& cfg, std::size_t workers) {
  std::vector<LocalizationResult> out(frames.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  auto work = [&] {
    while (!failed) {
      const std::size_t i = next++;
      if (i >= frames.size()) return;
      try {
        out[i] = localize_frame(frames[i], i, encoder, tree, cfg);
      } catch (...) {
        if (!failed.exchange(true)) failure = std::current_exception();
      }
    }
  };
  workers = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(frames.size(), 1));
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

Report make_report(std::span<const LocalizationResult> results, std::span<const Pose> few_shot_poses,
                   const PipelineConfig& cfg) {
  Report rep = compute_report(results);
  if (!few_shot_poses.empty()) rep.bins = bin_by_viewpoint(results, few_shot_poses, cfg.bins);
  rep.config = cfg.echo();
  rep.seed = cfg.seed;
  return rep;
}

AblationRun run_ablation(AblationMode mode, std::span<const Scene> prior, const Scene& target,
                         const PipelineConfig& base, std::size_t workers) {
  PipelineConfig cfg = base;
  cfg.mode = mode;
  const auto train = train_frames(target);
  const auto test = test_frames(target);
  require(!test.empty(), "run_ablation: target scene has no test frames");

  EncoderModel encoder = EncoderModel::baseline(0);
  if (cfg.encoder == EncoderVariant::Learned && mode == AblationMode::NoDecoupling) {
    // The encoder only ever sees the target scene's few-shot frames.
    const std::size_t n = std::min(cfg.few_shot, train.size());
    SceneFrames few;
    for (std::size_t i : select_few_shot(train, n)) few.push_back(train[i]);
    const std::vector<SceneFrames> own{few};
    encoder = make_encoder(cfg, own);
  } else {
    std::vector<SceneFrames> training;
    for (const auto& s : prior) training.push_back(s.all_frames());
    if (cfg.encoder == EncoderVariant::Learned) {
      require(!training.empty(), "run_ablation: no prior scenes for encoder training");
    }
    encoder = make_encoder(cfg, training);
  }
  const SceneModel model = build_scene_model(train, encoder, cfg);
  AblationRun run;
  run.results = localize_frames(test, encoder, model.tree, cfg, workers);
  run.report = make_report(run.results, model.few_shot_poses, cfg);
  return run;
}

}  // namespace fsreloc
