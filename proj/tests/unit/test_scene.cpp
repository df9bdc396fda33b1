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


#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include <gtest/gtest.h>
#include <png.h>

#include "fsreloc/error.hpp"
#include "fsreloc/scene.hpp"
#include "fsreloc/synthetic.hpp"
#include "support.hpp"

namespace fsreloc {
namespace {

namespace fs = std::filesystem;

class TempDir {
 public:
  explicit TempDir(const std::string& name)
      : path_(fs::temp_directory_path() / ("fsreloc_" + name)) {
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

void write_raw_depth(const fs::path& path, int w, int h, const std::vector<std::uint16_t>& mm) {
  FILE* fp = std::fopen(path.c_str(), "wb");
  ASSERT_NE(fp, nullptr);
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  png_init_io(png, fp);
  png_set_IHDR(png, info, w, h, 16, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  std::vector<png_byte> row(static_cast<std::size_t>(w) * 2);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::uint16_t v = mm[static_cast<std::size_t>(y) * w + x];
      row[2 * x] = static_cast<png_byte>(v >> 8);
      row[2 * x + 1] = static_cast<png_byte>(v & 0xff);
    }
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  std::fclose(fp);
}

TEST(DepthPng, MillimetresAndSentinel) {
  TempDir dir("depth_png");
  const fs::path p = dir.path() / "d.png";
  write_raw_depth(p, 3, 1, {2000, 65535, 0});
  const DepthMap d = read_depth_png(p);
  ASSERT_EQ(d.width, 3);
  EXPECT_EQ(d.at(0, 0), 2.0f);
  EXPECT_FALSE(d.valid(1, 0));
  EXPECT_FALSE(d.valid(2, 0));
}

TEST(DepthPng, WriterUsesSentinelForInvalid) {
  TempDir dir("depth_writer");
  DepthMap d(4, 2);
  d.at(0, 0) = 1.234f;
  d.at(1, 0) = 0.0f;
  d.at(2, 0) = 70.0f;  // beyond the 16-bit millimetre range
  d.at(3, 1) = 0.0004f;
  write_depth_png(dir.path() / "d.png", d);
  const DepthMap back = read_depth_png(dir.path() / "d.png");
  EXPECT_EQ(back.at(0, 0), 1.234f);
  EXPECT_FALSE(back.valid(1, 0));
  EXPECT_FALSE(back.valid(2, 0));
  EXPECT_FALSE(back.valid(3, 1));
}

TEST(RgbPng, RoundTrip) {
  TempDir dir("rgb");
  RgbImage img(5, 4);
  for (std::size_t i = 0; i < img.data.size(); ++i) img.data[i] = static_cast<std::uint8_t>(i * 7);
  write_rgb_png(dir.path() / "c.png", img);
  EXPECT_EQ(read_rgb_png(dir.path() / "c.png"), img);
  EXPECT_THROW(read_rgb_png(dir.path() / "missing.png"), Error);
}

TEST(PoseText, ParsesFourByFour) {
  const Pose p = parse_pose_text("1 0 0 0.5\n0 1 0 -1\n0 0 1 2\n0 0 0 1\n");
  EXPECT_EQ(p.rotation, Mat3::Identity());
  EXPECT_EQ(p.translation, Vec3(0.5, -1, 2));
}

TEST(PoseText, ThreeByFourIsMalformed) {
  try {
    parse_pose_text("1 0 0 0\n0 1 0 0\n0 0 1 0\n");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MalformedPose);
  }
  EXPECT_THROW(parse_pose_text("1 0 0 0\n0 1 0 0\n0 0 1 0\n0 0 1 1\n"), Error);
  EXPECT_THROW(parse_pose_text("2 0 0 0\n0 1 0 0\n0 0 1 0\n0 0 0 1\n"), Error);
  EXPECT_THROW(parse_pose_text("1 0 0 x\n0 1 0 0\n0 0 1 0\n0 0 0 1\n"), Error);
}

TEST(PoseText, RoundTripIsExact) {
  Rng rng(31);
  for (int i = 0; i < 50; ++i) {
    const Pose p = testing::random_pose(rng);
    const Pose q = parse_pose_text(format_pose_text(p));
    EXPECT_EQ(q.translation, p.translation);
    EXPECT_LT((q.rotation - p.rotation).cwiseAbs().maxCoeff(), 1e-15);
    EXPECT_EQ(format_pose_text(q), format_pose_text(parse_pose_text(format_pose_text(q))));
  }
}

TEST(Intrinsics, TextRoundTrip) {
  const Intrinsics k{292.5, 290.25, 160, 120, 320, 240};
  const Intrinsics back = parse_intrinsics_text(format_intrinsics_text(k));
  EXPECT_EQ(back.fx, k.fx);
  EXPECT_EQ(back.fy, k.fy);
  EXPECT_EQ(back.width, 320);
  EXPECT_THROW(parse_intrinsics_text("1 2 3"), Error);
}

SyntheticSceneConfig tiny_scene() {
  SyntheticSceneConfig sc = testing::desk_scene(5, 3, 2);
  sc.width = 96;
  sc.height = 72;
  sc.fx = sc.fy = 90;
  sc.cx = 48;
  sc.cy = 36;
  return sc;
}

TEST(SevenScenes, WriterReaderRoundTrip) {
  TempDir dir("seven_scenes");
  const Scene scene = generate_synthetic_scene(tiny_scene()).to_scene("tiny");
  write_seven_scenes(scene, dir.path() / "tiny");
  EXPECT_TRUE(fs::exists(dir.path() / "tiny" / "seq-01" / "frame-000000.color.png"));
  EXPECT_TRUE(fs::exists(dir.path() / "tiny" / "seq-01" / "frame-000002.pose.txt"));
  const Scene back = load_seven_scenes(dir.path() / "tiny");
  ASSERT_EQ(back.sequences.size(), 2u);
  EXPECT_EQ(back.train_split, scene.train_split);
  EXPECT_EQ(back.test_split, scene.test_split);
  const auto a = scene.all_frames(), b = back.all_frames();
  ASSERT_EQ(b.size(), 5u);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(b[i].id, a[i].id);
    EXPECT_EQ(b[i].rgb, a[i].rgb);
    ASSERT_TRUE(b[i].pose && b[i].depth);
    EXPECT_EQ(format_pose_text(*b[i].pose), format_pose_text(*a[i].pose));
    for (std::size_t p = 0; p < a[i].depth->meters.size(); ++p) {
      const float m = a[i].depth->meters[p];
      const float r = b[i].depth->meters[p];
      if (m <= 0.0f) {
        ASSERT_EQ(r, 0.0f);
      } else {
        ASSERT_NEAR(r, m, 0.0005f + 1e-6f);
      }
    }
    EXPECT_EQ(b[i].intrinsics.fx, a[i].intrinsics.fx);
  }
  // Written depth is millimetre-quantized, so a second pass is bitwise stable.
  write_seven_scenes(back, dir.path() / "again");
  const Scene third = load_seven_scenes(dir.path() / "again");
  for (std::size_t i = 0; i < b.size(); ++i) {
    EXPECT_EQ(third.all_frames()[i].depth, b[i].depth);
  }
}

TEST(SevenScenes, Errors) {
  TempDir dir("seven_scenes_errors");
  EXPECT_THROW(load_seven_scenes(dir.path() / "nope"), Error);
  const Scene scene = generate_synthetic_scene(tiny_scene()).to_scene("tiny");
  write_seven_scenes(scene, dir.path() / "s");
  write_text(dir.path() / "s" / "seq-01" / "frame-000001.pose.txt", "1 0 0 0\n0 1 0 0\n0 0 1 0\n");
  try {
    load_seven_scenes(dir.path() / "s");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MalformedPose);
  }
}

TEST(SevenScenes, RgbOnlyFrames) {
  TempDir dir("rgb_only");
  Scene scene = generate_synthetic_scene(tiny_scene()).to_scene("tiny");
  for (auto& f : scene.sequences[1].frames) {
    f.depth.reset();
    f.pose.reset();
  }
  write_seven_scenes(scene, dir.path() / "s");
  const Scene back = load_seven_scenes(dir.path() / "s");
  for (const auto& f : back.sequences[1].frames) {
    EXPECT_FALSE(f.has_depth());
    EXPECT_FALSE(f.pose);
  }
}

TEST(Synthetic, FrontoParallelPlaneDepth) {
  const auto scene = generate_synthetic_scene(testing::plane_scene({Pose::identity()}));
  const DepthMap& d = *scene.frames[0].depth;
  for (float m : d.meters) ASSERT_NEAR(m, 2.0f, 1e-6f);
}

TEST(Synthetic, DepthNoiseIsBounded) {
  auto sc = testing::plane_scene({Pose::identity()});
  sc.depth_noise_m = 0.002;
  const auto scene = generate_synthetic_scene(sc);
  double sum = 0.0, sq = 0.0;
  for (float m : scene.frames[0].depth->meters) {
    sum += m - 2.0;
    sq += (m - 2.0) * (m - 2.0);
  }
  const double n = static_cast<double>(scene.frames[0].depth->meters.size());
  EXPECT_NEAR(sum / n, 0.0, 1e-4);
  EXPECT_NEAR(std::sqrt(sq / n), 0.002, 2e-4);
}

TEST(Synthetic, Deterministic) {
  const auto a = generate_synthetic_scene(tiny_scene());
  const auto b = generate_synthetic_scene(tiny_scene());
  ASSERT_EQ(a.frames.size(), b.frames.size());
  for (std::size_t i = 0; i < a.frames.size(); ++i) {
    EXPECT_EQ(a.frames[i].rgb, b.frames[i].rgb);
    EXPECT_EQ(a.frames[i].depth, b.frames[i].depth);
    EXPECT_EQ(format_pose_text(*a.frames[i].pose), format_pose_text(*b.frames[i].pose));
  }
  auto other = tiny_scene();
  other.seed = 6;
  EXPECT_NE(generate_synthetic_scene(other).frames[0].rgb, a.frames[0].rgb);
}

TEST(Synthetic, OracleConsistentAcrossViews) {
  const auto sc = testing::desk_scene(3, 8, 1);
  const auto scene = generate_synthetic_scene(sc);
  const Frame& a = scene.frames[0];
  const Frame& b = scene.frames[1];
  Rng rng(32);
  std::size_t checked = 0;
  for (int i = 0; i < 2000; ++i) {
    const Pixel pa(uniform_real(rng, 0, a.intrinsics.width), uniform_real(rng, 0, a.intrinsics.height));
    const auto m = scene.oracle.world_point(*a.pose, a.intrinsics, pa);
    if (!m) continue;
    const auto pb = project(*m, *b.pose, b.intrinsics);
    if (!pb || pb->x() < 0 || pb->y() < 0 || pb->x() >= b.intrinsics.width ||
        pb->y() >= b.intrinsics.height) {
      continue;
    }
    const auto mb = scene.oracle.world_point(*b.pose, b.intrinsics, *pb);
    ASSERT_TRUE(mb);
    // Points hidden from b hit a nearer surface; skip them.
    if ((*mb - b.pose->translation).norm() < (*m - b.pose->translation).norm() - 1e-6) continue;
    EXPECT_LT((*mb - *m).norm(), 1e-9);
    ++checked;
  }
  EXPECT_GT(checked, 100u);
}

TEST(Synthetic, DepthMatchesOracle) {
  const auto scene = generate_synthetic_scene(tiny_scene());
  const Frame& f = scene.frames[0];
  for (int v = 0; v < f.rgb.height; v += 7) {
    for (int u = 0; u < f.rgb.width; u += 5) {
      const auto d = scene.oracle.depth(*f.pose, f.intrinsics, Pixel(u, v));
      if (!d) {
        EXPECT_FALSE(f.depth->valid(u, v));
        continue;
      }
      EXPECT_NEAR(f.depth->at(u, v), *d, 1e-5 * *d);
    }
  }
}

TEST(Synthetic, SplitsAndSettings) {
  SyntheticSceneConfig sc = tiny_scene();
  EXPECT_TRUE(apply_synthetic_setting(sc, "room_half", "2.5"));
  EXPECT_EQ(sc.room_half, 2.5);
  EXPECT_TRUE(apply_synthetic_setting(sc, "test.count", "4"));
  EXPECT_EQ(sc.trajectories[1].count, 4u);
  EXPECT_FALSE(apply_synthetic_setting(sc, "no_such_key", "1"));
  EXPECT_THROW(apply_synthetic_setting(sc, "width", "abc"), Error);
  const Scene s = generate_synthetic_scene(sc).to_scene("x");
  EXPECT_EQ(s.train_split, std::vector<std::string>{"seq-01"});
  EXPECT_EQ(s.test_split, std::vector<std::string>{"seq-02"});
  EXPECT_EQ(s.find("seq-02")->frames.size(), 4u);
}

TEST(Synthetic, LineTrajectoryEndpoints) {
  TrajectorySpec t;
  t.kind = TrajectoryKind::Line;
  t.count = 5;
  t.line_from = Vec3(0, 0, 1);
  t.line_to = Vec3(4, 0, 1);
  const auto poses = make_trajectory(t);
  ASSERT_EQ(poses.size(), 5u);
  EXPECT_LT((poses.front().translation - t.line_from).norm(), 1e-12);
  EXPECT_LT((poses.back().translation - t.line_to).norm(), 1e-12);
  EXPECT_LT((poses[2].translation - Vec3(2, 0, 1)).norm(), 1e-12);
}

TEST(Synthetic, RejectsEmptyConfig) {
  SyntheticSceneConfig sc;
  sc.room = false;
  sc.boxes = 0;
  EXPECT_THROW(generate_synthetic_scene(sc), Error);
}

}  // namespace
}  // namespace fsreloc
