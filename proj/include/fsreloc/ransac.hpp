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
#include <optional>
#include <span>
#include <vector>

#include "fsreloc/geometry.hpp"
#include "fsreloc/pnp.hpp"
#include "fsreloc/reprojection.hpp"
#include "fsreloc/rng.hpp"

namespace fsreloc {

/// Pixel-to-candidates pairs of one query image.
using PredictionSet = std::vector<Correspondence>;

enum class ScoreMode {
  Ratio,        // Inner^2 / (sum of errors + eps)
  InlierCount,  // Inner
};

struct RansacConfig {
  std::size_t k_hypo = 256;
  std::size_t validation_size = 1600;
  double inlier_threshold_px = 25.0;
  double history_blend = 0.5;
  double score_epsilon = 1e-6;
  double early_reject_px = 10.0;
  /// Per-pixel error used in the score denominator for behind-camera points.
  double error_clamp_px = 1e4;
  /// Hypothesis generation gives up after retry_factor * k_hypo attempts.
  std::size_t retry_factor = 16;
  /// Pixels drawn per query image by the pipeline.
  std::size_t pool_size = 12800;
  ScoreMode score_mode = ScoreMode::Ratio;
  /// Extra refinement of the survivor over the whole prediction pool.
  bool final_refinement = true;
  int refine_iterations = 10;
  std::uint64_t seed = 0;

  void validate() const;
  RefineConfig refine_config() const;
};

struct Hypothesis {
  Pose pose;
  double score = 0.0;
  std::size_t inner_count = 0;
  bool alive = true;
};

struct HypothesisScore {
  double score = 0.0;
  std::size_t inner = 0;
};

/// Scores `pose` on `validation`. Inner counts pixels whose best candidate
/// lies below the inlier threshold; the ratio score divides Inner^2 by the
/// summed best-candidate error over all of `validation`, with infinite errors
/// clamped.
HypothesisScore score_hypothesis(const Pose& pose, std::span<const Correspondence> validation,
                                 const Intrinsics& k, const RansacConfig& cfg);

/// One minimal-sample hypothesis: four distinct pixels, one uniformly chosen
/// candidate each, P3P plus fourth-point disambiguation. std::nullopt when the
/// sample is degenerate or the mean error of the four pairs exceeds
/// early_reject_px. Throws InvalidArgument for fewer than four predictions.
std::optional<Hypothesis> generate_hypothesis(std::span<const Correspondence> preds,
                                              const Intrinsics& k, const RansacConfig& cfg,
                                              Rng& rng);

struct RansacDiagnostics {
  std::size_t attempts = 0;
  std::size_t accepted = 0;
  bool starved = false;
  std::size_t iterations = 0;
  std::vector<std::size_t> survivors;  // hypothesis count after each halving
  std::vector<double> best_score;      // blended score of the leader per iteration
  std::vector<std::size_t> best_inner;
  std::size_t final_inner = 0;
};

struct RansacResult {
  Pose pose;
  RansacDiagnostics diagnostics;
};

/// Preemptive RANSAC: k_hypo hypotheses are scored on a fresh validation set
/// each round, scores are blended with their history, the better half
/// survives and is refined on that round's inliers, until one is left.
/// Throws HypothesisStarvation when no hypothesis could be generated; fewer
/// than k_hypo hypotheses are used as they are and flagged `starved`.
RansacResult estimate_pose(std::span<const Correspondence> preds, const Intrinsics& k,
                           const RansacConfig& cfg);

}  // namespace fsreloc
