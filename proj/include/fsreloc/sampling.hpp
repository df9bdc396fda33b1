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

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "fsreloc/encoder.hpp"
#include "fsreloc/regression_tree.hpp"
#include "fsreloc/scene.hpp"
#include "fsreloc/triplet.hpp"

namespace fsreloc {

/// Weight of the rotation term (meters per degree) in the few-shot pose distance.
inline constexpr double kFewShotDegreeWeight = 0.01;

/// trans_m + kFewShotDegreeWeight * rot_deg.
double few_shot_distance(const Pose& a, const Pose& b);

/// Greedy farthest-point selection of `n` posed frames. Starts from the frame
/// with the smallest id and repeatedly adds the frame whose distance to the
/// selected set is largest (smallest id on ties). Returns indices into
/// `frames` in selection order.
std::vector<std::size_t> select_few_shot(std::span<const Frame> frames, std::size_t n);

struct GridSample {
  std::vector<PixelCoord> pixels;
  /// Fewer usable pixels than requested; `pixels` holds all of them.
  bool insufficient = false;
};

/// `count` pixels spread over the usable pixels (patch fits, depth valid when
/// `need_depth`) on a regular grid over the patch-valid interior. When grid
/// nodes fall on unusable pixels the grid is refined until enough nodes
/// remain and then thinned evenly to exactly `count`.
GridSample grid_sample(const Frame& frame, std::size_t count, bool need_depth = true);

struct SampleSet {
  std::vector<TrainingSample> samples;
  /// Indices of frames that yielded fewer than the requested pixel count.
  std::vector<std::size_t> insufficient_frames;
};

/// Grid-samples every frame, encodes each patch and back-projects each pixel
/// with the frame's depth and pose.
SampleSet extract_training_samples(std::span<const Frame> frames, std::size_t per_frame,
                                   const EncoderModel& encoder);

struct PointCloud {
  struct Source {
    std::uint32_t frame = 0;
    std::uint16_t u = 0;
    std::uint16_t v = 0;
  };
  std::vector<WorldPoint> points;
  std::vector<std::array<std::uint8_t, 3>> colors;
  std::vector<Source> sources;
  std::vector<std::size_t> insufficient_frames;
  std::size_t size() const { return points.size(); }
};

PointCloud build_point_cloud(std::span<const Frame> frames, std::size_t per_frame);

}  // namespace fsreloc
