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

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "fsreloc/geometry.hpp"
#include "fsreloc/image.hpp"

namespace fsreloc {

struct FrameId {
  std::string scene;
  std::string sequence;
  int index = 0;

  std::string to_string() const;
  friend bool operator==(const FrameId&, const FrameId&) = default;
  friend auto operator<=>(const FrameId&, const FrameId&) = default;
};

/// An RGB image with optional depth and ground-truth camera-to-world pose.
struct Frame {
  FrameId id;
  RgbImage rgb;
  std::optional<DepthMap> depth;
  std::optional<Pose> pose;
  Intrinsics intrinsics;

  bool has_depth() const { return depth.has_value(); }
  /// Throws InvalidArgument when image sizes disagree with the intrinsics.
  void validate() const;
};

struct Sequence {
  std::string name;
  std::vector<Frame> frames;
};

struct Scene {
  std::string name;
  std::vector<Sequence> sequences;
  /// Sequence names listed in TrainSplit.txt / TestSplit.txt, when present.
  std::vector<std::string> train_split;
  std::vector<std::string> test_split;

  const Sequence* find(const std::string& sequence) const;
  /// Frames of the named sequences, in order.
  std::vector<Frame> frames_of(const std::vector<std::string>& sequences) const;
  std::vector<Frame> all_frames() const;
};

/// Loads a 7-Scenes-style directory:
///   <root>/seq-XX/frame-XXXXXX.color.png   (required)
///   <root>/seq-XX/frame-XXXXXX.depth.png   (optional, 16-bit millimeters)
///   <root>/seq-XX/frame-XXXXXX.pose.txt    (optional, 4x4 row-major)
/// Intrinsics default to the 7-Scenes calibration unless <root>/intrinsics.txt
/// holds "fx fy cx cy width height".
Scene load_seven_scenes(const std::filesystem::path& root);

/// Writes frames in the same layout; the inverse of load_seven_scenes.
void write_seven_scenes(const Scene& scene, const std::filesystem::path& root);

/// Parses a 4x4 row-major camera-to-world matrix. Throws MalformedPose when the
/// text is not 4x4 or the matrix is not rigid within 1e-3.
Pose parse_pose_text(const std::string& text);
std::string format_pose_text(const Pose& pose);

Intrinsics parse_intrinsics_text(const std::string& text);
std::string format_intrinsics_text(const Intrinsics& k);

}  // namespace fsreloc
