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


#include <array>
#include <cmath>
#include <numbers>
#include <vector>

#include <gtest/gtest.h>

#include "fsreloc/encoder.hpp"
#include "fsreloc/error.hpp"
#include "fsreloc/network.hpp"
#include "fsreloc/synthetic.hpp"
#include "fsreloc/triplet.hpp"
#include "support.hpp"

namespace fsreloc {
namespace {

std::array<double, 2> at(double x) { return {x, 0.0}; }

TEST(TripletLoss, AnchorEqualsPositive) {
  EXPECT_EQ(triplet_loss(at(0.0), at(0.0), at(1.0), 0.4), 0.0);
}

TEST(TripletLoss, EqualDistancesLeaveMargin) {
  EXPECT_EQ(triplet_loss(at(0.0), at(0.5), at(-0.5), 0.4), 0.4);
}

TEST(TripletLoss, DirectSubstitution) {
  // 1.0 - 0.2 + 0.4 is one ulp above the literal 1.2 in binary.
  EXPECT_EQ(triplet_loss(at(0.0), at(1.0), at(0.2), 0.4), 1.0 - 0.2 + 0.4);
  EXPECT_DOUBLE_EQ(triplet_loss(at(0.0), at(1.0), at(0.2), 0.4), 1.2);
}

Architecture reduced_architecture() {
  Architecture a;
  a.input = {2, 9, 9};
  a.layers = {{LayerKind::Conv, 3, 3, 2, true},
              {LayerKind::Dense, 6, 1, 1, true},
              {LayerKind::Dense, 4, 1, 1, false}};
  return a;
}

TEST(Network, ShapesFollowArchitecture) {
  Network<float> net(default_encoder_architecture());
  EXPECT_EQ(net.output_shape().size(), static_cast<std::size_t>(kDescriptorDim));
  Network<double> small(reduced_architecture());
  EXPECT_EQ(small.parameter_count(), (2u * 9 + 1) * 3 + (3u * 16 + 1) * 6 + (6u + 1) * 4);
}

TEST(Network, RejectsOversizedKernel) {
  Architecture a;
  a.input = {1, 2, 2};
  a.layers = {{LayerKind::Conv, 1, 3, 1, false}};
  EXPECT_THROW(Network<float>{a}, Error);
}

TEST(Network, TripletGradientMatchesFiniteDifferences) {
  Network<double> net(reduced_architecture());
  net.initialize(5);
  Rng rng(6);
  const std::size_t n = net.architecture().input.size();
  std::vector<std::vector<double>> data(9, std::vector<double>(n));
  for (auto& v : data)
    for (double& x : v) x = uniform_unit(rng);
  std::vector<TripletInputs<double>> batch;
  for (int t = 0; t < 3; ++t) batch.push_back({data[3 * t], data[3 * t + 1], data[3 * t + 2]});
  // A wide margin keeps every triplet on the active side of the hinge.
  const double margin = 10.0;

  std::vector<double> grad(net.parameter_count(), 0.0);
  const double loss = triplet_batch_gradient<double>(net, batch, margin, grad);
  ASSERT_GT(loss, 0.0);

  auto total = [&]() {
    std::vector<double> scratch(net.parameter_count(), 0.0);
    return triplet_batch_gradient<double>(net, batch, margin, scratch);
  };
  auto params = net.parameters();
  double worst = 0.0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double saved = params[i];
    const double h = 1e-6 * std::max(1.0, std::abs(saved));
    params[i] = saved + h;
    const double up = total();
    params[i] = saved - h;
    const double down = total();
    params[i] = saved;
    const double fd = (up - down) / (2.0 * h);
    const double rel = std::abs(fd - grad[i]) / std::max({std::abs(fd), std::abs(grad[i]), 1e-3});
    worst = std::max(worst, rel);
  }
  EXPECT_LT(worst, 1e-4);
}

TEST(Network, InitializationIsSeeded) {
  Network<float> a(default_encoder_architecture()), b(default_encoder_architecture());
  a.initialize(3);
  b.initialize(3);
  EXPECT_TRUE(std::equal(a.parameters().begin(), a.parameters().end(), b.parameters().begin()));
  b.initialize(4);
  EXPECT_FALSE(std::equal(a.parameters().begin(), a.parameters().end(), b.parameters().begin()));
}

TEST(Patch, RejectsWrongSizeAndRange) {
  EXPECT_THROW(Patch(std::vector<float>(10, 0.0f)), Error);
  EXPECT_THROW(Patch(std::vector<float>(Patch::kSize, 1.5f)), Error);
  EXPECT_NO_THROW(Patch(std::vector<float>(Patch::kSize, 0.5f)));
}

TEST(Patch, ExtractRequiresInterior) {
  RgbImage img(100, 80);
  EXPECT_THROW(extract_patch(img, 19, 40), Error);
  EXPECT_NO_THROW(extract_patch(img, 20, 20));
  EXPECT_THROW(extract_patch(img, 80, 40), Error);
}

TEST(Encoder, BaselineIsDeterministic) {
  Rng rng(7);
  std::vector<float> v(Patch::kSize);
  for (float& x : v) x = static_cast<float>(uniform_unit(rng));
  const Patch p(v);
  const auto e = EncoderModel::baseline(9);
  EXPECT_EQ(e.encode(p), e.encode(Patch(v)));
  EXPECT_EQ(e.encode(p), EncoderModel::baseline(9).encode(p));
}

TEST(Encoder, OracleReturnsWorldPoint) {
  const Intrinsics k{100, 100, 50, 40, 100, 80};
  Frame f;
  f.id = {"s", "seq-01", 0};
  f.intrinsics = k;
  f.rgb = RgbImage(100, 80);
  f.depth = DepthMap(100, 80);
  f.pose = Pose::identity();
  f.pose->translation = Vec3(1.0, 2.0, 0.0);
  f.depth->at(50, 40) = 3.0f;
  const Descriptor d = EncoderModel::oracle(0.0, 1).encode(f, 50, 40);
  EXPECT_EQ(d[0], 1.0f);
  EXPECT_EQ(d[1], 2.0f);
  EXPECT_EQ(d[2], 3.0f);
  for (int i = 3; i < kDescriptorDim; ++i) EXPECT_EQ(d[i], 0.0f);
  EXPECT_THROW(EncoderModel::oracle(0.0, 1).encode(Patch()), Error);
  f.depth.reset();
  EXPECT_THROW(EncoderModel::oracle(0.0, 1).encode(f, 50, 40), Error);
}

TEST(Encoder, SerializationRoundTrip) {
  for (const auto& m : {EncoderModel::learned(default_encoder_architecture(), 3),
                        EncoderModel::baseline(4), EncoderModel::oracle(0.01, 5)}) {
    const auto bytes = m.serialize();
    const auto back = EncoderModel::deserialize(bytes);
    EXPECT_EQ(back.variant(), m.variant());
    EXPECT_EQ(back.seed(), m.seed());
    EXPECT_EQ(back.serialize(), bytes);
  }
}

TEST(Encoder, DeserializeRejectsCorruption) {
  auto bytes = EncoderModel::learned(default_encoder_architecture(), 3).serialize();
  auto bad = bytes;
  bad[0] = 'X';
  EXPECT_THROW(EncoderModel::deserialize(bad), Error);
  auto cut = bytes;
  cut.resize(cut.size() - 1);
  EXPECT_THROW(EncoderModel::deserialize(cut), Error);
  auto extra = bytes;
  extra.push_back(0);
  EXPECT_THROW(EncoderModel::deserialize(extra), Error);
}

TEST(Encoder, EmptyModelRefusesToEncode) {
  EXPECT_THROW(EncoderModel().encode(Patch()), Error);
}

std::vector<Frame> plane_frames(std::vector<Pose> poses) {
  return generate_synthetic_scene(testing::plane_scene(std::move(poses))).frames;
}

TEST(Overlap, IdenticalFramesMatchThemselves) {
  const auto frames = plane_frames({Pose::identity(), Pose::identity()});
  const auto ov = compute_overlap(frames[0], frames[1], 0.05);
  const Frame& f = frames[0];
  std::size_t interior = 0;
  for (int v = kPatchRadius; v < f.rgb.height - kPatchRadius; ++v)
    for (int u = kPatchRadius; u < f.rgb.width - kPatchRadius; ++u) interior += f.depth->valid(u, v);
  EXPECT_EQ(ov.size(), interior);
  for (const auto& o : ov) {
    ASSERT_EQ(o.a, o.b);
    ASSERT_LT(o.distance, 1e-6);
  }
}

TEST(Overlap, OppositeViewsShareNothing) {
  Pose back = Pose::identity();
  back.rotation = so3_exp(Vec3(0, std::numbers::pi, 0));
  SyntheticSceneConfig sc = testing::plane_scene({Pose::identity(), back});
  sc.extra_surfaces.push_back({Vec3(-20, 20, -2), Vec3(40, 0, 0), Vec3(0, -40, 0)});
  const auto frames = generate_synthetic_scene(sc).frames;
  EXPECT_TRUE(compute_overlap(frames[0], frames[1], 0.05).empty());
  TripletTrainConfig cfg;
  const std::vector<SceneFrames> scenes{frames};
  EXPECT_THROW(mine_pairs(scenes, cfg), Error);
}

TEST(MinePairs, PositivesAgreeWithGeometry) {
  Pose b;
  b.rotation = so3_exp(Vec3(0, 30.0 * std::numbers::pi / 180.0, 0));
  b.translation = Vec3(0, 0, 2) - 2.0 * b.rotation.col(2);
  const auto scene = generate_synthetic_scene(testing::plane_scene({Pose::identity(), b}));
  const std::vector<SceneFrames> scenes{scene.frames};
  TripletTrainConfig cfg;
  cfg.kappa = 200;
  const auto triplets = mine_pairs(scenes, cfg);
  ASSERT_EQ(triplets.size(), 400u);
  for (const auto& t : triplets) {
    const Frame& fa = scene.frames[t.frame_a];
    const Frame& fb = scene.frames[t.frame_b];
    const auto pa = scene.oracle.world_point(*fa.pose, fa.intrinsics, Pixel(t.anchor.u, t.anchor.v));
    const auto pp = scene.oracle.world_point(*fb.pose, fb.intrinsics,
                                             Pixel(t.positive.u, t.positive.v));
    const auto pn = scene.oracle.world_point(*fb.pose, fb.intrinsics,
                                             Pixel(t.negative.u, t.negative.v));
    ASSERT_TRUE(pa && pp && pn);
    EXPECT_LT((*pa - *pp).norm(), 0.05);
    EXPECT_LT(t.positive_distance, 0.05);
    EXPECT_GE((*pa - *pn).norm(), 0.05 - 1e-4);
    EXPECT_GE(t.negative_distance, 0.05);
  }
  const auto pairs = to_pairs(triplets);
  EXPECT_EQ(pairs.size(), 2 * triplets.size());
  EXPECT_TRUE(pairs[0].positive);
  EXPECT_FALSE(pairs[1].positive);
}

TEST(MinePairs, SeededAndCapped) {
  Pose b = Pose::identity();
  b.translation = Vec3(0.2, 0, 0);
  const auto frames = plane_frames({Pose::identity(), b});
  const std::vector<SceneFrames> scenes{frames};
  TripletTrainConfig cfg;
  cfg.seed = 3;
  cfg.max_triplets = 50;
  const auto a = mine_pairs(scenes, cfg);
  const auto c = mine_pairs(scenes, cfg);
  ASSERT_EQ(a.size(), 50u);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].anchor, c[i].anchor);
    EXPECT_EQ(a[i].negative, c[i].negative);
  }
}

TEST(Train, ZeroEpochsReturnsInitialization) {
  Pose b = Pose::identity();
  b.translation = Vec3(0.2, 0, 0);
  const auto frames = plane_frames({Pose::identity(), b});
  const std::vector<SceneFrames> scenes{frames};
  TripletTrainConfig cfg;
  cfg.seed = 8;
  cfg.kappa = 20;
  cfg.epochs = 0;
  const auto triplets = mine_pairs(scenes, cfg);
  const TrainResult r = train_encoder(triplets, scenes, cfg);
  const auto init =
      EncoderModel::learned(default_encoder_architecture(), stage_seed(cfg.seed, "encoder-init"));
  EXPECT_EQ(r.model.serialize(), init.serialize());
  EXPECT_EQ(r.best_epoch, 0u);
  EXPECT_FALSE(r.diverged);
}

TEST(Train, LowersHeldOutLossAndIsReproducible) {
  Pose b = Pose::identity();
  b.translation = Vec3(0.3, 0.1, 0);
  const auto frames = plane_frames({Pose::identity(), b});
  const std::vector<SceneFrames> scenes{frames};
  TripletTrainConfig cfg;
  cfg.seed = 9;
  cfg.kappa = 150;
  cfg.epochs = 3;
  cfg.holdout_fraction = 0.2;
  const auto triplets = mine_pairs(scenes, cfg);
  const TrainResult r = train_encoder(triplets, scenes, cfg);
  EXPECT_EQ(r.train_triplets + r.heldout_triplets, triplets.size());
  EXPECT_LE(r.best_heldout_loss, r.initial_heldout_loss);
  EXPECT_EQ(r.heldout_history.size(), 3u);
  EXPECT_EQ(train_encoder(triplets, scenes, cfg).model.serialize(), r.model.serialize());
}

TEST(TrainConfig, Validation) {
  TripletTrainConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.margin = 0.0;
  EXPECT_THROW(cfg.validate(), Error);
  cfg = {};
  cfg.momentum = 1.0;
  EXPECT_THROW(cfg.validate(), Error);
  cfg = {};
  cfg.holdout_fraction = 1.0;
  EXPECT_THROW(cfg.validate(), Error);
}

}  // namespace
}  // namespace fsreloc
