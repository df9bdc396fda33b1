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
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "fsreloc/geometry.hpp"
#include "fsreloc/network.hpp"
#include "fsreloc/scene.hpp"

namespace fsreloc {

inline constexpr int kPatchSize = 41;
/// Pixels closer than this to the image border cannot be the center of a
/// patch; they are never sampled.
inline constexpr int kPatchRadius = kPatchSize / 2;
inline constexpr int kPatchChannels = 3;
inline constexpr int kDescriptorDim = 16;
/// Sanity cap on descriptor magnitude (descriptors are not normalized).
inline constexpr float kDescriptorNormBound = 1e6f;

/// 41x41 RGB crop, channel-major, values in [0, 1].
struct Patch {
  std::vector<float> data;

  static constexpr std::size_t kSize =
      static_cast<std::size_t>(kPatchChannels) * kPatchSize * kPatchSize;

  Patch() : data(kSize, 0.0f) {}
  explicit Patch(std::vector<float> values);
};

using Descriptor = std::array<float, kDescriptorDim>;

/// True when a patch centered at (u, v) fits inside a width x height image.
inline bool patch_fits(int u, int v, int width, int height) {
  return u >= kPatchRadius && v >= kPatchRadius && u < width - kPatchRadius &&
         v < height - kPatchRadius;
}

/// Crops the patch centered at integer pixel (u, v). Throws InvalidArgument
/// for centers within kPatchRadius of the border.
Patch extract_patch(const RgbImage& image, int u, int v);

enum class EncoderVariant : std::uint32_t { Learned = 0, Baseline = 1, Oracle = 2 };

const char* to_string(EncoderVariant v);

/// Reduced VGG-style stack: three stride-2 3x3 convolutions (8, 16, 32
/// channels) and three dense layers (64, 32, 16), ELU everywhere except the
/// final layer.
Architecture default_encoder_architecture();

/// Patch-to-descriptor function. Learned and baseline variants depend only on
/// the patch pixels; the oracle variant (tests only) reads the frame's
/// ground-truth depth and pose and returns the scene coordinate.
class EncoderModel {
 public:
  /// Empty learned model with no layers; assign before use.
  EncoderModel() = default;

  static EncoderModel learned(const Architecture& arch, std::uint64_t seed);
  static EncoderModel learned(Network<float> net, std::uint64_t seed);
  /// Random projection of the mean-centered patch.
  static EncoderModel baseline(std::uint64_t seed);
  static EncoderModel oracle(double noise_sigma, std::uint64_t seed);

  EncoderVariant variant() const { return variant_; }
  std::uint64_t seed() const { return seed_; }
  double oracle_noise() const { return oracle_noise_; }
  /// Learned and baseline variants; the baseline is one linear layer.
  const Network<float>& network() const { return net_; }
  Network<float>& network() { return net_; }

  /// Learned/baseline only: throws InvalidArgument for the oracle.
  Descriptor encode(const Patch& patch) const;
  /// Any variant; the patch is cropped from the frame around `pixel`.
  Descriptor encode(const Frame& frame, int u, int v) const;

  void save(const std::filesystem::path& path) const;
  static EncoderModel load(const std::filesystem::path& path);
  std::vector<std::uint8_t> serialize() const;
  static EncoderModel deserialize(std::span<const std::uint8_t> bytes);

 private:

  EncoderVariant variant_ = EncoderVariant::Learned;
  std::uint64_t seed_ = 0;
  double oracle_noise_ = 0.0;
  Network<float> net_;
};

/// Triplet hinge on L2 distances:
///   max(|a - p| - |a - n| + margin, 0).
template <class Vector>
double triplet_loss(const Vector& anchor, const Vector& positive, const Vector& negative,
                    double margin) {
  double dp = 0.0, dn = 0.0;
  for (std::size_t i = 0; i < anchor.size(); ++i) {
    const double a = static_cast<double>(anchor[i]);
    dp += (a - static_cast<double>(positive[i])) * (a - static_cast<double>(positive[i]));
    dn += (a - static_cast<double>(negative[i])) * (a - static_cast<double>(negative[i]));
  }
  return std::max(std::sqrt(dp) - std::sqrt(dn) + margin, 0.0);
}

double descriptor_distance(const Descriptor& a, const Descriptor& b);

}  // namespace fsreloc
