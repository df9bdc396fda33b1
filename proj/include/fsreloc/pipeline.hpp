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


#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "fsreloc/config.hpp"
#include "fsreloc/encoder.hpp"
#include "fsreloc/eval.hpp"
#include "fsreloc/ransac.hpp"
#include "fsreloc/regression_tree.hpp"
#include "fsreloc/sampling.hpp"
#include "fsreloc/scene.hpp"

namespace fsreloc {

/// Frames of the training split (the first sequence when no split is given).
std::vector<Frame> train_frames(const Scene& scene);
/// Frames of the test split (all other sequences when no split is given).
std::vector<Frame> test_frames(const Scene& scene);

/// `count` distinct random patch-centre pixels (all of them when fewer exist).
std::vector<PixelCoord> sample_query_pixels(const Frame& frame, std::size_t count,
                                            std::uint64_t seed);

/// Encodes each pixel's patch and looks up its candidate coordinates.
PredictionSet predict(const Frame& frame, std::span<const PixelCoord> pixels,
                      const EncoderModel& encoder, const RegressionTree& tree);

struct Bounds3 {
  Vec3 lo = Vec3::Zero();
  Vec3 hi = Vec3::Zero();
};
Bounds3 tree_bounds(const RegressionTree& tree);

/// Replaces round(fraction * size) randomly chosen entries with candidate sets
/// of the same size drawn uniformly inside `bounds`. Returns their indices.
std::vector<std::size_t> inject_outliers(PredictionSet& preds, double fraction,
                                         const Bounds3& bounds, Rng& rng);

/// Encoder for the configured variant. The learned variant mines triplets
/// from `training` and trains; the others ignore it.
EncoderModel make_encoder(const PipelineConfig& cfg, std::span<const SceneFrames> training,
                          TrainResult* report = nullptr);

struct SceneModel {
  RegressionTree tree;
  std::vector<Frame> few_shot;
  std::vector<Pose> few_shot_poses;
  std::vector<std::size_t> insufficient_frames;
  std::size_t samples = 0;
};

/// Few-shot selection (clamped to the number of frames), sample extraction
/// and tree construction.
SceneModel build_scene_model(std::span<const Frame> frames, const EncoderModel& encoder,
                             const PipelineConfig& cfg);

/// Localizes one RGB frame; depth is never read except by the oracle encoder.
/// `index` selects the frame's RNG streams.
LocalizationResult localize_frame(const Frame& frame, std::size_t index,
                                  const EncoderModel& encoder, const RegressionTree& tree,
                                  const PipelineConfig& cfg);

/// Localizes frames on `workers` threads; results are identical for any
/// worker count.
std::vector<LocalizationResult> localize_frames(std::span<const Frame> frames,
                                                const EncoderModel& encoder,
                                                const RegressionTree& tree,
                                                const PipelineConfig& cfg, std::size_t workers = 1);

/// Report with viewpoint bins (when `few_shot_poses` is non-empty), config
/// echo and seed.
Report make_report(std::span<const LocalizationResult> results, std::span<const Pose> few_shot_poses,
                   const PipelineConfig& cfg);

struct AblationRun {
  Report report;
  std::vector<LocalizationResult> results;
};

/// Full pipeline on `target` in the configured mode: full trains the encoder
/// on `prior` scenes, no_decoupling on the target's few-shot frames only,
/// vanilla_ransac uses inlier counting for hypothesis scores.
AblationRun run_ablation(AblationMode mode, std::span<const Scene> prior, const Scene& target,
                         const PipelineConfig& cfg, std::size_t workers = 1);

}  // namespace fsreloc
