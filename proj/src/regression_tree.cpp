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


#include "fsreloc/regression_tree.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>

#include "fsreloc/binary_io.hpp"
#include "fsreloc/error.hpp"
#include "fsreloc/rng.hpp"

namespace fsreloc {

namespace {

constexpr char kTreeMagic[4] = {'C', 'R', 'T', 'R'};
constexpr std::uint32_t kTreeVersion = 1;
constexpr std::uint8_t kInternalTag = 0;
constexpr std::uint8_t kLeafTag = 1;

struct Task {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::int64_t parent = -1;  // node whose `right` field this task fills
};

}  // namespace

RegressionTree RegressionTree::build(std::span<const TrainingSample> samples,
                                     std::size_t leaf_cap, std::uint64_t seed) {
  if (samples.empty()) throw Error(ErrorCode::EmptySamples, "build_tree: no samples");
  require(leaf_cap >= 1, "build_tree: leaf_cap must be >= 1");
  for (const auto& s : samples) {
    for (float x : s.descriptor) require(std::isfinite(x), "build_tree: non-finite descriptor");
    require(s.coordinate.allFinite(), "build_tree: non-finite coordinate");
  }

  RegressionTree tree;
  tree.leaf_cap_ = leaf_cap;
  tree.sample_count_ = samples.size();
  tree.seed_ = seed;

  std::vector<std::uint32_t> idx(samples.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<std::uint32_t>(i);

  auto make_leaf = [&](std::size_t begin, std::size_t end) {
    Node n;
    n.leaf = true;
    n.first = static_cast<std::uint32_t>(tree.coords_.size());
    n.count = static_cast<std::uint32_t>(end - begin);
    for (std::size_t i = begin; i < end; ++i) tree.coords_.push_back(samples[idx[i]].coordinate);
    tree.nodes_.push_back(n);
  };

  // Explicit stack in pre-order: the left child is emitted right after its
  // parent, the right child is linked when its task is popped.
  std::vector<Task> stack{{0, samples.size(), -1}};
  std::vector<float> values;
  while (!stack.empty()) {
    const Task task = stack.back();
    stack.pop_back();
    if (task.parent >= 0) {
      tree.nodes_[static_cast<std::size_t>(task.parent)].right =
          static_cast<std::uint32_t>(tree.nodes_.size());
    }
    const std::size_t n = task.end - task.begin;
    if (n <= leaf_cap) {
      make_leaf(task.begin, task.end);
      continue;
    }

    // Channel of maximal variance (two-pass in double).
    int best_channel = -1;
    double best_var = 0.0;
    for (int c = 0; c < kDescriptorDim; ++c) {
      double mean = 0.0;
      for (std::size_t i = task.begin; i < task.end; ++i) mean += samples[idx[i]].descriptor[c];
      mean /= static_cast<double>(n);
      double var = 0.0;
      for (std::size_t i = task.begin; i < task.end; ++i) {
        const double d = samples[idx[i]].descriptor[c] - mean;
        var += d * d;
      }
      var /= static_cast<double>(n);
      if (var > best_var) {
        best_var = var;
        best_channel = c;
      }
    }

    if (best_channel < 0) {
      // Identical descriptors: seeded balanced partition into leaves.
      Rng rng(stream_seed(seed, tree.nodes_.size()));
      shuffle(idx.begin() + static_cast<std::ptrdiff_t>(task.begin),
              idx.begin() + static_cast<std::ptrdiff_t>(task.end), rng);
      const std::size_t groups = (n + leaf_cap - 1) / leaf_cap;
      const float value = samples[idx[task.begin]].descriptor[0];
      // Balanced binary structure over the groups; every group is a leaf.
      struct Span {
        std::size_t g0, g1;
        std::int64_t parent;
      };
      std::vector<Span> sub{{0, groups, -1}};
      auto group_begin = [&](std::size_t g) { return task.begin + g * n / groups; };
      while (!sub.empty()) {
        const Span sp = sub.back();
        sub.pop_back();
        if (sp.parent >= 0) {
          tree.nodes_[static_cast<std::size_t>(sp.parent)].right =
              static_cast<std::uint32_t>(tree.nodes_.size());
        }
        if (sp.g1 - sp.g0 == 1) {
          make_leaf(group_begin(sp.g0), group_begin(sp.g1));
          ++tree.fallback_leaves_;
          continue;
        }
        const std::size_t mid = (sp.g0 + sp.g1) / 2;
        Node node;
        node.channel = 0;
        node.threshold = value;
        const auto self = static_cast<std::int64_t>(tree.nodes_.size());
        tree.nodes_.push_back(node);
        sub.push_back({mid, sp.g1, self});
        sub.push_back({sp.g0, mid, -1});
      }
      continue;
    }

    values.clear();
    for (std::size_t i = task.begin; i < task.end; ++i) {
      values.push_back(samples[idx[i]].descriptor[best_channel]);
    }
    auto mid = values.begin() + static_cast<std::ptrdiff_t>(n / 2);
    std::nth_element(values.begin(), mid, values.end());
    float threshold = *mid;
    const float min_value = *std::min_element(values.begin(), values.end());
    if (threshold == min_value) {
      // Upper median equals the minimum: move to the next distinct value.
      float next = std::numeric_limits<float>::infinity();
      for (float x : values) {
        if (x > min_value && x < next) next = x;
      }
      threshold = next;
    }
    const auto split = std::stable_partition(
        idx.begin() + static_cast<std::ptrdiff_t>(task.begin),
        idx.begin() + static_cast<std::ptrdiff_t>(task.end),
        [&](std::uint32_t i) { return samples[i].descriptor[best_channel] < threshold; });
    const std::size_t split_at = static_cast<std::size_t>(split - idx.begin());

    Node node;
    node.channel = static_cast<std::uint16_t>(best_channel);
    node.threshold = threshold;
    const auto self = static_cast<std::int64_t>(tree.nodes_.size());
    tree.nodes_.push_back(node);
    stack.push_back({split_at, task.end, self});
    stack.push_back({task.begin, split_at, -1});
  }
  return tree;
}

std::span<const Eigen::Vector3f> RegressionTree::leaf_coordinates(const Node& leaf) const {
  return std::span<const Eigen::Vector3f>(coords_).subspan(leaf.first, leaf.count);
}

std::span<const Eigen::Vector3f> RegressionTree::query(std::span<const float> d) const {
  if (d.size() != dimension_) {
    throw Error(ErrorCode::DimensionMismatch,
                "query: descriptor has " + std::to_string(d.size()) + " channels, tree expects " +
                    std::to_string(dimension_));
  }
  std::size_t i = 0;
  while (!nodes_[i].leaf) {
    const Node& n = nodes_[i];
    i = d[n.channel] < n.threshold ? i + 1 : n.right;
  }
  return leaf_coordinates(nodes_[i]);
}

RegressionTree::Stats RegressionTree::stats() const {
  Stats s;
  s.nodes = nodes_.size();
  s.fallback_leaves = fallback_leaves_;
  // Depth via the pre-order layout.
  std::vector<std::pair<std::size_t, std::size_t>> stack{{0, 0}};
  std::size_t total = 0;
  while (!stack.empty()) {
    const auto [i, depth] = stack.back();
    stack.pop_back();
    s.depth = std::max(s.depth, depth);
    if (nodes_[i].leaf) {
      ++s.leaves;
      total += nodes_[i].count;
    } else {
      stack.push_back({nodes_[i].right, depth + 1});
      stack.push_back({i + 1, depth + 1});
    }
  }
  s.mean_leaf_size = s.leaves ? static_cast<double>(total) / static_cast<double>(s.leaves) : 0.0;
  return s;
}

std::vector<std::uint8_t> RegressionTree::serialize() const {
  ByteWriter w;
  w.bytes(kTreeMagic, 4);
  w.u32(kTreeVersion);
  w.u32(static_cast<std::uint32_t>(leaf_cap_));
  w.u32(static_cast<std::uint32_t>(dimension_));
  w.u64(sample_count_);
  w.u64(seed_);
  w.u32(static_cast<std::uint32_t>(nodes_.size()));
  for (const Node& n : nodes_) {
    if (n.leaf) {
      w.u8(kLeafTag);
      w.u32(n.count);
      for (const auto& c : leaf_coordinates(n)) {
        w.f32(c.x());
        w.f32(c.y());
        w.f32(c.z());
      }
    } else {
      w.u8(kInternalTag);
      w.u16(n.channel);
      w.f32(n.threshold);
    }
  }
  return w.take();
}

RegressionTree RegressionTree::deserialize(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  char magic[4];
  r.bytes(magic, 4);
  if (std::memcmp(magic, kTreeMagic, 4) != 0) {
    throw Error(ErrorCode::BadFormat, "tree: bad magic (expected CRTR)");
  }
  const std::uint32_t version = r.u32();
  if (version != kTreeVersion) {
    throw Error(ErrorCode::BadFormat, "tree: unsupported version " + std::to_string(version));
  }
  RegressionTree t;
  t.leaf_cap_ = r.u32();
  t.dimension_ = r.u32();
  t.sample_count_ = r.u64();
  t.seed_ = r.u64();
  const std::uint32_t count = r.u32();
  if (t.leaf_cap_ < 1 || t.dimension_ < 1 || count == 0 || count > r.remaining()) {
    throw Error(ErrorCode::BadFormat, "tree: corrupt header");
  }
  t.nodes_.reserve(count);
  // Internal nodes whose right child has not been read yet, with a flag set
  // once their left child has been read. The next node in the stream is
  // always a child of the top entry.
  std::vector<std::pair<std::uint32_t, bool>> open;
  for (std::uint32_t i = 0; i < count; ++i) {
    if (i > 0) {
      if (open.empty()) throw Error(ErrorCode::BadFormat, "tree: node outside the tree");
      auto& top = open.back();
      if (!top.second) {
        top.second = true;
      } else {
        t.nodes_[top.first].right = i;
        open.pop_back();
      }
    }
    Node n;
    const std::uint8_t tag = r.u8();
    if (tag == kLeafTag) {
      n.leaf = true;
      n.count = r.u32();
      if (n.count == 0 || n.count > t.leaf_cap_) {
        throw Error(ErrorCode::BadFormat, "tree: leaf size out of range");
      }
      n.first = static_cast<std::uint32_t>(t.coords_.size());
      for (std::uint32_t j = 0; j < n.count; ++j) {
        Eigen::Vector3f c;
        c.x() = r.f32();
        c.y() = r.f32();
        c.z() = r.f32();
        t.coords_.push_back(c);
      }
      t.nodes_.push_back(n);
    } else if (tag == kInternalTag) {
      n.channel = r.u16();
      n.threshold = r.f32();
      if (n.channel >= t.dimension_ || std::isnan(n.threshold)) {
        throw Error(ErrorCode::BadFormat, "tree: bad split parameters");
      }
      t.nodes_.push_back(n);
      open.push_back({i, false});
    } else {
      throw Error(ErrorCode::BadFormat, "tree: unknown node tag");
    }
  }
  if (!open.empty()) throw Error(ErrorCode::BadFormat, "tree: truncated node stream");
  if (r.remaining() != 0) throw Error(ErrorCode::BadFormat, "tree: trailing bytes");
  return t;
}

void RegressionTree::save(const std::filesystem::path& path) const { write_file(path, serialize()); }

RegressionTree RegressionTree::load(const std::filesystem::path& path) {
  return deserialize(read_file(path));
}

}  // namespace fsreloc
