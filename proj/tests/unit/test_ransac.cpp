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


#include <cmath>
#include <cstring>
#include <vector>

#include <gtest/gtest.h>

#include "fsreloc/error.hpp"
#include "fsreloc/ransac.hpp"
#include "support.hpp"

namespace fsreloc {
namespace {

const Intrinsics kK = Intrinsics::seven_scenes();

// Each pixel holds its true point plus `decoys` unrelated points.
PredictionSet make_predictions(const Pose& truth, std::size_t n, std::size_t decoys, Rng& rng) {
  PredictionSet preds(n);
  for (auto& c : preds) {
    c.candidates.push_back(testing::random_visible_point(truth, kK, rng, 1.0, 4.0, &c.pixel));
    for (std::size_t d = 0; d < decoys; ++d) {
      c.candidates.push_back(testing::random_visible_point(truth, kK, rng, 1.0, 4.0));
    }
    shuffle(c.candidates.begin(), c.candidates.end(), rng);
  }
  return preds;
}

Correspondence offset_pixel(const Pose& pose, const Pixel& pix, double offset_px) {
  Correspondence c;
  c.pixel = pix;
  c.candidates = {backproject(pix + Pixel(offset_px, 0.0), 2.0, pose, kK)};
  return c;
}

RansacConfig small_config() {
  RansacConfig cfg;
  cfg.k_hypo = 64;
  cfg.validation_size = 500;
  cfg.pool_size = 2000;
  return cfg;
}

TEST(Score, AllExactInliers) {
  // Points on the optical axis reproject with exactly zero error.
  std::vector<Correspondence> v(100);
  for (int i = 0; i < 100; ++i) {
    v[i].pixel = Pixel(kK.cx, kK.cy);
    v[i].candidates = {Vec3(0, 0, 1.0 + 0.01 * i)};
  }
  RansacConfig cfg;
  const auto s = score_hypothesis(Pose::identity(), v, kK, cfg);
  EXPECT_EQ(s.inner, 100u);
  EXPECT_EQ(s.score, 100.0 * 100.0 / 1e-6);
}

TEST(Score, NoInliersScoresZero) {
  std::vector<Correspondence> v;
  for (int i = 0; i < 20; ++i) v.push_back(offset_pixel(Pose::identity(), Pixel(100 + i, 200), 40));
  Correspondence behind;
  behind.candidates = {Vec3(0, 0, -1)};
  v.push_back(behind);
  const auto s = score_hypothesis(Pose::identity(), v, kK, RansacConfig{});
  EXPECT_EQ(s.inner, 0u);
  EXPECT_EQ(s.score, 0.0);
}

TEST(Score, ClampedOutliers) {
  std::vector<Correspondence> v;
  for (int i = 0; i < 50; ++i) v.push_back(offset_pixel(Pose::identity(), Pixel(100 + i, 200), 1));
  for (int i = 0; i < 50; ++i) {
    Correspondence c;
    c.pixel = Pixel(100 + i, 300);
    c.candidates = {Vec3(0.1 * i, 0, -2)};
    v.push_back(c);
  }
  RansacConfig cfg;
  const auto s = score_hypothesis(Pose::identity(), v, kK, cfg);
  EXPECT_EQ(s.inner, 50u);
  EXPECT_NEAR(s.score, 2500.0 / (50.0 + 5e5 + 1e-6), 1e-12);
  cfg.score_mode = ScoreMode::InlierCount;
  EXPECT_EQ(score_hypothesis(Pose::identity(), v, kK, cfg).score, 50.0);
}

TEST(Hypothesis, ConsistentQuadrupleAccepted) {
  Rng rng(21);
  const Pose truth = testing::random_pose(rng);
  const auto preds = make_predictions(truth, 4, 0, rng);
  Rng draw(1);
  const auto h = generate_hypothesis(preds, kK, RansacConfig{}, draw);
  ASSERT_TRUE(h);
  double mean = 0.0;
  for (const auto& c : preds) mean += reprojection_error(c.pixel, h->pose, c.candidates[0], kK);
  EXPECT_LT(mean / 4.0, 1e-6);
}

TEST(Hypothesis, UnrelatedPointsMostlyRejected) {
  Rng rng(22);
  std::size_t accepted = 0, trials = 500;
  for (std::size_t t = 0; t < trials; ++t) {
    const Pose truth = testing::random_pose(rng);
    PredictionSet preds(4);
    for (auto& c : preds) {
      c.pixel = Pixel(uniform_real(rng, 0, 640), uniform_real(rng, 0, 480));
      c.candidates = {testing::random_visible_point(truth, kK, rng)};
    }
    accepted += generate_hypothesis(preds, kK, RansacConfig{}, rng).has_value();
  }
  EXPECT_LT(accepted, trials / 10);
}

TEST(Hypothesis, NeedsFourPredictions) {
  Rng rng(23);
  const auto preds = make_predictions(Pose::identity(), 3, 0, rng);
  EXPECT_THROW(generate_hypothesis(preds, kK, RansacConfig{}, rng), Error);
}

TEST(EstimatePose, OraclePredictions) {
  Rng rng(24);
  for (int trial = 0; trial < 5; ++trial) {
    const Pose truth = testing::random_pose(rng);
    const auto preds = make_predictions(truth, 2000, 0, rng);
    auto cfg = small_config();
    cfg.seed = static_cast<std::uint64_t>(trial);
    const auto r = estimate_pose(preds, kK, cfg);
    const PoseError e = pose_error(r.pose, truth);
    EXPECT_LT(e.translation_m, 0.01);
    EXPECT_LT(e.rotation_deg, 1.0);
    EXPECT_FALSE(r.diagnostics.starved);
    EXPECT_EQ(r.diagnostics.survivors, (std::vector<std::size_t>{32, 16, 8, 4, 2, 1}));
    EXPECT_EQ(r.diagnostics.iterations, 6u);
    EXPECT_EQ(r.diagnostics.final_inner, 2000u);
  }
}

TEST(EstimatePose, DecoysStarveButStillLocalize) {
  // A uniform candidate per pixel is consistent only 1 time in 5^4.
  Rng rng(29);
  const Pose truth = testing::random_pose(rng);
  const auto preds = make_predictions(truth, 2000, 4, rng);
  auto cfg = small_config();
  const auto r = estimate_pose(preds, kK, cfg);
  EXPECT_TRUE(r.diagnostics.starved);
  EXPECT_EQ(r.diagnostics.attempts, cfg.retry_factor * cfg.k_hypo);
  std::size_t k = r.diagnostics.accepted, halvings = 0;
  while (k > 1) {
    k = (k + 1) / 2;
    ++halvings;
  }
  EXPECT_EQ(r.diagnostics.iterations, halvings);
  const PoseError e = pose_error(r.pose, truth);
  EXPECT_LT(e.translation_m, 0.01);
}

TEST(EstimatePose, ThirtyPercentOutliers) {
  Rng rng(25);
  std::size_t good = 0;
  const std::size_t trials = 20;
  for (std::size_t trial = 0; trial < trials; ++trial) {
    const Pose truth = testing::random_pose(rng);
    auto preds = make_predictions(truth, 2000, 0, rng);
    for (std::size_t i = 0; i < preds.size(); ++i) {
      if (uniform_unit(rng) < 0.3) {
        for (auto& m : preds[i].candidates) {
          m = truth * Vec3(uniform_real(rng, -3, 3), uniform_real(rng, -3, 3),
                           uniform_real(rng, 0.5, 5));
        }
      }
    }
    auto cfg = small_config();
    cfg.seed = trial;
    const auto r = estimate_pose(preds, kK, cfg);
    const PoseError e = pose_error(r.pose, truth);
    good += e.translation_m < 0.05 && e.rotation_deg < 5.0;
  }
  EXPECT_GE(good, 19u);
}

TEST(EstimatePose, SingleHypothesisSkipsLoop) {
  Rng rng(26);
  const Pose truth = testing::random_pose(rng);
  const auto preds = make_predictions(truth, 500, 0, rng);
  auto cfg = small_config();
  cfg.k_hypo = 1;
  const auto r = estimate_pose(preds, kK, cfg);
  EXPECT_EQ(r.diagnostics.iterations, 0u);
  EXPECT_EQ(r.diagnostics.accepted, 1u);
  const PoseError e = pose_error(r.pose, truth);
  EXPECT_LT(e.translation_m, 1e-6);
}

TEST(EstimatePose, Deterministic) {
  Rng rng(27);
  const Pose truth = testing::random_pose(rng);
  const auto preds = make_predictions(truth, 1500, 4, rng);
  auto cfg = small_config();
  cfg.seed = 99;
  const auto a = estimate_pose(preds, kK, cfg);
  const auto b = estimate_pose(preds, kK, cfg);
  EXPECT_EQ(std::memcmp(a.pose.rotation.data(), b.pose.rotation.data(), sizeof(double) * 9), 0);
  EXPECT_EQ(std::memcmp(a.pose.translation.data(), b.pose.translation.data(), sizeof(double) * 3),
            0);
  EXPECT_EQ(a.diagnostics.best_score, b.diagnostics.best_score);
}

TEST(EstimatePose, StarvationWithoutConsistentData) {
  Rng rng(28);
  // Collinear scene points never give a minimal solution.
  PredictionSet preds(200);
  for (auto& c : preds) {
    c.pixel = Pixel(uniform_real(rng, 0, 640), uniform_real(rng, 0, 480));
    c.candidates = {Vec3(uniform_real(rng, -1, 1), 0.0, 3.0)};
  }
  auto cfg = small_config();
  cfg.retry_factor = 2;
  try {
    estimate_pose(preds, kK, cfg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::HypothesisStarvation);
  }
}

TEST(RansacConfig, Validation) {
  RansacConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.k_hypo = 0;
  EXPECT_THROW(cfg.validate(), Error);
  cfg = {};
  cfg.history_blend = 1.0;
  EXPECT_THROW(cfg.validate(), Error);
  cfg = {};
  cfg.pool_size = 3;
  EXPECT_THROW(cfg.validate(), Error);
}

}  // namespace
}  // namespace fsreloc
