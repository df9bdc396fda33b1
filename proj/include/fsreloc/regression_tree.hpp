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
#include <span>
#include <vector>

#include <Eigen/Core>

#include "fsreloc/encoder.hpp"

namespace fsreloc {

/// A descriptor paired with the scene coordinate it was observed at.
struct TrainingSample {
  Descriptor descriptor{};
  Eigen::Vector3f coordinate = Eigen::Vector3f::Zero();
  std::uint32_t frame = 0;
  std::uint16_t u = 0;
  std::uint16_t v = 0;
};

inline constexpr std::size_t kDefaultLeafCap = 10;

/// Binary tree routing a descriptor to a leaf of up to `leaf_cap` candidate
/// scene coordinates.
///
/// A node holding more than `leaf_cap` samples splits on the descriptor
/// channel of largest variance (lowest index on ties) at the channel's upper
/// median: values below the threshold go left, the rest right. When the median
/// equals the channel minimum the threshold moves to the next larger value so
/// neither side is empty. Nodes whose samples share one descriptor cannot be
/// split by value; they are cut into ceil(n / leaf_cap) balanced leaves by a
/// seeded shuffle, and a query reaches only one of those leaves.
class RegressionTree {
 public:
  struct Node {
    bool leaf = false;
    std::uint16_t channel = 0;
    float threshold = 0.0f;
    std::uint32_t right = 0;  // left child is always the next node (pre-order)
    std::uint32_t first = 0;  // leaf: offset into the coordinate pool
    std::uint32_t count = 0;  // leaf: number of coordinates
  };

  struct Stats {
    std::size_t nodes = 0;
    std::size_t leaves = 0;
    std::size_t depth = 0;
    std::size_t fallback_leaves = 0;
    double mean_leaf_size = 0.0;
  };

  /// Throws EmptySamples for an empty sample set.
  static RegressionTree build(std::span<const TrainingSample> samples,
                              std::size_t leaf_cap = kDefaultLeafCap, std::uint64_t seed = 0);

  /// Coordinates of the leaf `descriptor` routes to, in stored order. Throws
  /// DimensionMismatch when the descriptor length differs from the tree's.
  std::span<const Eigen::Vector3f> query(std::span<const float> descriptor) const;
  std::span<const Eigen::Vector3f> query(const Descriptor& d) const {
    return query(std::span<const float>(d));
  }

  std::size_t leaf_cap() const { return leaf_cap_; }
  std::size_t dimension() const { return dimension_; }
  std::uint64_t sample_count() const { return sample_count_; }
  std::uint64_t seed() const { return seed_; }
  const std::vector<Node>& nodes() const { return nodes_; }
  std::span<const Eigen::Vector3f> leaf_coordinates(const Node& leaf) const;
  Stats stats() const;

  std::vector<std::uint8_t> serialize() const;
  static RegressionTree deserialize(std::span<const std::uint8_t> bytes);
  void save(const std::filesystem::path& path) const;
  static RegressionTree load(const std::filesystem::path& path);

 private:
  std::size_t leaf_cap_ = kDefaultLeafCap;
  std::size_t dimension_ = kDescriptorDim;
  std::uint64_t sample_count_ = 0;
  std::uint64_t seed_ = 0;
  std::size_t fallback_leaves_ = 0;
  std::vector<Node> nodes_;
  std::vector<Eigen::Vector3f> coords_;
};

}  // namespace fsreloc
