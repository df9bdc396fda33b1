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


#include <algorithm>
#include <set>
#include <vector>

#include <gtest/gtest.h>

#include "fsreloc/encoder.hpp"
#include "fsreloc/error.hpp"
#include "fsreloc/sampling.hpp"
#include "support.hpp"

namespace fsreloc {
namespace {

Frame flat_frame(int index, float depth = 1.5f) {
  Frame f;
  f.id = {"flat", "seq-01", index};
  f.intrinsics = Intrinsics::seven_scenes();
  f.rgb = RgbImage(640, 480);
  f.depth = DepthMap(640, 480);
  for (float& m : f.depth->meters) m = depth;
  f.pose = Pose::identity();
  return f;
}

std::vector<Frame> line_frames(std::size_t n) {
  std::vector<Frame> frames;
  for (std::size_t i = 0; i < n; ++i) {
    Frame f;
    f.id = {"line", "seq-01", static_cast<int>(i)};
    f.pose = Pose::identity();
    f.pose->translation = Vec3(0.05 * static_cast<double>(i), 0, 0);
    frames.push_back(f);
  }
  return frames;
}

TEST(FewShot, WholeSequence) {
  const auto frames = line_frames(7);
  auto idx = select_few_shot(frames, 7);
  std::sort(idx.begin(), idx.end());
  EXPECT_EQ(idx, (std::vector<std::size_t>{0, 1, 2, 3, 4, 5, 6}));
}

TEST(FewShot, OneIsFirstFrame) {
  const auto frames = line_frames(7);
  EXPECT_EQ(select_few_shot(frames, 1), std::vector<std::size_t>{0});
}

TEST(FewShot, LineIncludesEndpoints) {
  const auto frames = line_frames(100);
  const auto idx = select_few_shot(frames, 10);
  ASSERT_EQ(idx.size(), 10u);
  EXPECT_NE(std::find(idx.begin(), idx.end(), 0u), idx.end());
  EXPECT_NE(std::find(idx.begin(), idx.end(), 99u), idx.end());
  EXPECT_EQ(std::set<std::size_t>(idx.begin(), idx.end()).size(), 10u);
}

TEST(FewShot, IndependentOfInputOrder) {
  auto frames = line_frames(30);
  const auto a = select_few_shot(frames, 6);
  std::reverse(frames.begin(), frames.end());
  const auto b = select_few_shot(frames, 6);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i], 29 - b[i]);
}

TEST(FewShot, RejectsTooMany) {
  const auto frames = line_frames(3);
  EXPECT_THROW(select_few_shot(frames, 4), Error);
}

TEST(GridSample, RegularGridOnValidFrame) {
  const Frame f = flat_frame(0);
  const GridSample g = grid_sample(f, 19200);
  ASSERT_FALSE(g.insufficient);
  ASSERT_EQ(g.pixels.size(), 19200u);
  std::set<int> us, vs;
  std::set<std::pair<int, int>> all;
  for (const auto& p : g.pixels) {
    us.insert(p.u);
    vs.insert(p.v);
    all.insert({p.u, p.v});
    ASSERT_TRUE(patch_fits(p.u, p.v, 640, 480));
  }
  EXPECT_EQ(all.size(), 19200u);
  EXPECT_EQ(us.size() * vs.size(), 19200u);
  auto spread = [](const std::set<int>& s) {
    std::vector<int> d;
    for (auto it = std::next(s.begin()); it != s.end(); ++it) d.push_back(*it - *std::prev(it));
    return *std::max_element(d.begin(), d.end()) - *std::min_element(d.begin(), d.end());
  };
  EXPECT_LE(spread(us), 1);
  EXPECT_LE(spread(vs), 1);
}

TEST(GridSample, InvalidDepthGivesNothing) {
  const Frame f = flat_frame(0, 0.0f);
  const GridSample g = grid_sample(f, 500);
  EXPECT_TRUE(g.pixels.empty());
  EXPECT_TRUE(g.insufficient);
  EXPECT_EQ(grid_sample(f, 500, false).pixels.size(), 500u);
}

TEST(GridSample, PartialDepthStillFillsCount) {
  Frame f = flat_frame(0);
  for (int v = 0; v < 480; ++v)
    for (int u = 0; u < 320; ++u) f.depth->at(u, v) = 0.0f;
  const GridSample g = grid_sample(f, 4800);
  EXPECT_FALSE(g.insufficient);
  ASSERT_EQ(g.pixels.size(), 4800u);
  for (const auto& p : g.pixels) ASSERT_TRUE(f.depth->valid(p.u, p.v));
}

TEST(PointCloud, TenFramesAtFullRate) {
  std::vector<Frame> frames;
  for (int i = 0; i < 10; ++i) frames.push_back(flat_frame(i));
  const PointCloud cloud = build_point_cloud(frames, 19200);
  EXPECT_EQ(cloud.size(), 192000u);
  EXPECT_EQ(cloud.colors.size(), 192000u);
  EXPECT_TRUE(cloud.insufficient_frames.empty());
  const auto& s = cloud.sources[12345];
  const Vec3 expect = backproject(Pixel(s.u, s.v), 1.5, Pose::identity(), frames[0].intrinsics);
  EXPECT_LT((cloud.points[12345] - expect).norm(), 1e-12);
}

TEST(PointCloud, DuplicatesKept) {
  const std::vector<Frame> frames{flat_frame(0), flat_frame(0)};
  const PointCloud cloud = build_point_cloud(frames, 100);
  ASSERT_EQ(cloud.size(), 200u);
  for (std::size_t i = 0; i < 100; ++i) EXPECT_EQ(cloud.points[i], cloud.points[100 + i]);
}

TEST(TrainingSamples, OracleDescriptorsHoldCoordinates) {
  std::vector<Frame> frames{flat_frame(0), flat_frame(1, 0.0f)};
  const auto set = extract_training_samples(frames, 300, EncoderModel::oracle(0.0, 1));
  ASSERT_EQ(set.samples.size(), 300u);
  EXPECT_EQ(set.insufficient_frames, std::vector<std::size_t>{1});
  for (const auto& s : set.samples) {
    EXPECT_EQ(s.descriptor[0], s.coordinate.x());
    EXPECT_EQ(s.descriptor[2], s.coordinate.z());
    EXPECT_EQ(s.frame, 0u);
  }
}

}  // namespace
}  // namespace fsreloc
