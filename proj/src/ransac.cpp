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


#include "fsreloc/ransac.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

#include "fsreloc/error.hpp"

namespace fsreloc {

void RansacConfig::validate() const {
  require(k_hypo >= 1, "ransac: k_hypo must be >= 1");
  require(validation_size >= 1, "ransac: validation_size must be >= 1");
  require(inlier_threshold_px > 0.0, "ransac: inlier threshold must be > 0");
  require(history_blend > 0.0 && history_blend < 1.0, "ransac: history blend must be in (0, 1)");
  require(score_epsilon > 0.0, "ransac: score epsilon must be > 0");
  require(early_reject_px > 0.0, "ransac: early rejection threshold must be > 0");
  require(error_clamp_px > 0.0, "ransac: error clamp must be > 0");
  require(retry_factor >= 1, "ransac: retry factor must be >= 1");
  require(pool_size >= 4, "ransac: pool size must be >= 4");
  require(refine_iterations >= 1, "ransac: refine iterations must be >= 1");
}

RefineConfig RansacConfig::refine_config() const {
  RefineConfig rc;
  rc.max_iterations = refine_iterations;
  rc.inlier_threshold_px = inlier_threshold_px;
  return rc;
}

HypothesisScore score_hypothesis(const Pose& pose, std::span<const Correspondence> validation,
                                 const Intrinsics& k, const RansacConfig& cfg) {
  require(!validation.empty(), "score: empty validation set");
  HypothesisScore s;
  double denom = 0.0;
  for (const auto& c : validation) {
    const double e = optimal_candidate(c.pixel, pose, c.candidates, k).error;
    if (e < cfg.inlier_threshold_px) ++s.inner;
    denom += std::min(e, cfg.error_clamp_px);
  }
  const double inner = static_cast<double>(s.inner);
  s.score = cfg.score_mode == ScoreMode::Ratio ? inner * inner / (denom + cfg.score_epsilon)
                                               : inner;
  return s;
}

std::optional<Hypothesis> generate_hypothesis(std::span<const Correspondence> preds,
                                              const Intrinsics& k, const RansacConfig& cfg,
                                              Rng& rng) {
  require(preds.size() >= 4, "generate_hypothesis: need at least 4 predictions");
  std::array<std::size_t, 4> idx{};
  for (std::size_t i = 0; i < 4; ++i) {
    bool fresh;
    do {
      idx[i] = uniform_index(rng, preds.size());
      fresh = std::find(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(i), idx[i]) ==
              idx.begin() + static_cast<std::ptrdiff_t>(i);
    } while (!fresh);
  }
  std::array<PointMatch, 4> sample;
  for (std::size_t i = 0; i < 4; ++i) {
    const auto& c = preds[idx[i]];
    require(!c.candidates.empty(), "generate_hypothesis: prediction without candidates");
    sample[i].pixel = c.pixel;
    sample[i].point = c.candidates[uniform_index(rng, c.candidates.size())];
  }
  const auto pose = solve_pnp4(std::span<const PointMatch, 4>(sample), k);
  if (!pose) return std::nullopt;
  double mean = 0.0;
  for (const auto& m : sample) mean += reprojection_error(m.pixel, *pose, m.point, k);
  mean /= 4.0;
  if (!(mean <= cfg.early_reject_px)) return std::nullopt;
  return Hypothesis{*pose, 0.0, 0, true};
}

namespace {

/// `count` distinct entries of `preds` (all of them when the pool is smaller).
std::vector<Correspondence> draw_validation(std::span<const Correspondence> preds,
                                            std::size_t count, Rng& rng) {
  std::vector<std::size_t> order(preds.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const std::size_t n = std::min(count, preds.size());
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = i + uniform_index(rng, order.size() - i);
    std::swap(order[i], order[j]);
  }
  std::vector<Correspondence> v;
  v.reserve(n);
  for (std::size_t i = 0; i < n; ++i) v.push_back(preds[order[i]]);
  return v;
}

}  // namespace

RansacResult estimate_pose(std::span<const Correspondence> preds, const Intrinsics& k,
                           const RansacConfig& cfg) {
  cfg.validate();
  require(preds.size() >= 4, "estimate_pose: need at least 4 predictions");
  for (const auto& c : preds) {
    require(!c.candidates.empty(), "estimate_pose: prediction without candidates");
  }

  RansacResult out;
  auto& diag = out.diagnostics;
  const RefineConfig refine_cfg = cfg.refine_config();

  // Every attempt owns an RNG stream, so the accepted set depends only on the
  // seed and not on the order attempts are evaluated in.
  const std::uint64_t hypo_seed = stage_seed(cfg.seed, "hypotheses");
  std::vector<Hypothesis> hyps;
  hyps.reserve(cfg.k_hypo);
  const std::size_t max_attempts = cfg.retry_factor * cfg.k_hypo;
  while (hyps.size() < cfg.k_hypo && diag.attempts < max_attempts) {
    Rng rng(stream_seed(hypo_seed, diag.attempts++));
    if (auto h = generate_hypothesis(preds, k, cfg, rng)) hyps.push_back(*h);
  }
  diag.accepted = hyps.size();
  if (hyps.empty()) {
    throw Error(ErrorCode::HypothesisStarvation,
                "estimate_pose: no hypothesis accepted in " + std::to_string(diag.attempts) +
                    " attempts");
  }
  diag.starved = hyps.size() < cfg.k_hypo;

  const std::uint64_t val_seed = stage_seed(cfg.seed, "validation");
  std::size_t alive = hyps.size();
  if (alive == 1) {
    hyps[0].pose = refine_pose(hyps[0].pose, preds, k, refine_cfg).pose;
  }
  while (alive > 1) {
    Rng rng(stream_seed(val_seed, diag.iterations));
    const auto validation = draw_validation(preds, cfg.validation_size, rng);
    for (std::size_t i = 0; i < alive; ++i) {
      const auto s = score_hypothesis(hyps[i].pose, validation, k, cfg);
      hyps[i].score = cfg.history_blend * hyps[i].score + s.score;
      hyps[i].inner_count = s.inner;
    }
    std::stable_sort(hyps.begin(), hyps.begin() + static_cast<std::ptrdiff_t>(alive),
                     [](const Hypothesis& a, const Hypothesis& b) { return a.score > b.score; });
    diag.best_score.push_back(hyps[0].score);
    diag.best_inner.push_back(hyps[0].inner_count);
    const std::size_t keep = (alive + 1) / 2;
    for (std::size_t i = keep; i < alive; ++i) hyps[i].alive = false;
    alive = keep;
    diag.survivors.push_back(alive);
    ++diag.iterations;
    for (std::size_t i = 0; i < alive; ++i) {
      hyps[i].pose = refine_pose(hyps[i].pose, validation, k, refine_cfg).pose;
    }
  }

  Pose best = hyps[0].pose;
  if (cfg.final_refinement && hyps.size() > 1) {
    best = refine_pose(best, preds, k, refine_cfg).pose;
  }
  std::size_t inner = 0;
  for (const auto& c : preds) {
    if (optimal_candidate(c.pixel, best, c.candidates, k).error < cfg.inlier_threshold_px) ++inner;
  }
  diag.final_inner = inner;
  out.pose = best;
  return out;
}

}  // namespace fsreloc
