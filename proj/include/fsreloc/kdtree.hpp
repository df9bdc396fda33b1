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

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "fsreloc/geometry.hpp"

namespace fsreloc {

/// Static 3-d tree for nearest-neighbor lookups in a point cloud.
class KdTree3 {
 public:
  KdTree3() = default;
  explicit KdTree3(std::span<const Vec3> points) : points_(points.begin(), points.end()) {
    index_.resize(points_.size());
    for (std::size_t i = 0; i < index_.size(); ++i) index_[i] = static_cast<std::uint32_t>(i);
    if (!index_.empty()) build(0, index_.size(), 0);
  }

  bool empty() const { return points_.empty(); }
  std::size_t size() const { return points_.size(); }

  /// Index of the point closest to `q` (lowest index among exact ties is not
  /// guaranteed). Requires a non-empty tree.
  std::size_t nearest(const Vec3& q) const {
    std::size_t best = index_[0];
    double best_d2 = std::numeric_limits<double>::infinity();
    search(0, index_.size(), 0, q, best, best_d2);
    return best;
  }
  const Vec3& point(std::size_t i) const { return points_[i]; }

 private:
  static constexpr std::size_t kLeaf = 8;

  void build(std::size_t lo, std::size_t hi, int axis) {
    if (hi - lo <= kLeaf) return;
    const std::size_t mid = (lo + hi) / 2;
    std::nth_element(index_.begin() + static_cast<std::ptrdiff_t>(lo),
                     index_.begin() + static_cast<std::ptrdiff_t>(mid),
                     index_.begin() + static_cast<std::ptrdiff_t>(hi),
                     [&](std::uint32_t a, std::uint32_t b) {
                       return points_[a][axis] < points_[b][axis];
                     });
    build(lo, mid, (axis + 1) % 3);
    build(mid + 1, hi, (axis + 1) % 3);
  }

  void search(std::size_t lo, std::size_t hi, int axis, const Vec3& q, std::size_t& best,
              double& best_d2) const {
    if (hi - lo <= kLeaf) {
      for (std::size_t i = lo; i < hi; ++i) {
        const double d2 = (points_[index_[i]] - q).squaredNorm();
        if (d2 < best_d2) {
          best_d2 = d2;
          best = index_[i];
        }
      }
      return;
    }
    const std::size_t mid = (lo + hi) / 2;
    const Vec3& p = points_[index_[mid]];
    const double d2 = (p - q).squaredNorm();
    if (d2 < best_d2) {
      best_d2 = d2;
      best = index_[mid];
    }
    const double diff = q[axis] - p[axis];
    const int next = (axis + 1) % 3;
    if (diff < 0) {
      search(lo, mid, next, q, best, best_d2);
      if (diff * diff < best_d2) search(mid + 1, hi, next, q, best, best_d2);
    } else {
      search(mid + 1, hi, next, q, best, best_d2);
      if (diff * diff < best_d2) search(lo, mid, next, q, best, best_d2);
    }
  }

  std::vector<Vec3> points_;
  std::vector<std::uint32_t> index_;
};

}  // namespace fsreloc
