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
#include <filesystem>
#include <vector>

namespace fsreloc {

/// 8-bit interleaved RGB image.
struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;

  RgbImage() = default;
  RgbImage(int w, int h) : width(w), height(h), data(static_cast<std::size_t>(w) * h * 3, 0) {}

  std::uint8_t& at(int u, int v, int c) {
    return data[(static_cast<std::size_t>(v) * width + u) * 3 + c];
  }
  std::uint8_t at(int u, int v, int c) const {
    return data[(static_cast<std::size_t>(v) * width + u) * 3 + c];
  }
  friend bool operator==(const RgbImage&, const RgbImage&) = default;
};

/// Z-depth in meters. Zero marks an invalid measurement.
struct DepthMap {
  int width = 0;
  int height = 0;
  std::vector<float> meters;

  DepthMap() = default;
  DepthMap(int w, int h) : width(w), height(h), meters(static_cast<std::size_t>(w) * h, 0.0f) {}

  float& at(int u, int v) { return meters[static_cast<std::size_t>(v) * width + u]; }
  float at(int u, int v) const { return meters[static_cast<std::size_t>(v) * width + u]; }
  bool valid(int u, int v) const { return at(u, v) > 0.0f; }
  friend bool operator==(const DepthMap&, const DepthMap&) = default;
};

/// Depth PNG sentinel for missing measurements.
inline constexpr std::uint16_t kInvalidDepthMm = 65535;

RgbImage read_rgb_png(const std::filesystem::path& path);
void write_rgb_png(const std::filesystem::path& path, const RgbImage& image);

/// 16-bit millimeter PNG; 0 and 65535 load as invalid.
DepthMap read_depth_png(const std::filesystem::path& path);
/// Rounds to whole millimeters; invalid and out-of-range depths are written
/// as 65535.
void write_depth_png(const std::filesystem::path& path, const DepthMap& depth);

}  // namespace fsreloc
