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


#include "fsreloc/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fsreloc/error.hpp"

namespace fsreloc {

double few_shot_distance(const Pose& a, const Pose& b) {
  const PoseError e = pose_error(a, b);
  return e.translation_m + kFewShotDegreeWeight * e.rotation_deg;
}

std::vector<std::size_t> select_few_shot(std::span<const Frame> frames, std::size_t n) {
  require(n <= frames.size(), "select_few_shot: n exceeds the number of frames");
  for (const auto& f : frames) require(f.pose.has_value(), "select_few_shot: frame without pose");
  std::vector<std::size_t> selected;
  if (n == 0) return selected;

  // Visiting frames in id order makes the result independent of input order.
  std::vector<std::size_t> order(frames.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return frames[a].id < frames[b].id; });

  std::vector<double> nearest(frames.size(), std::numeric_limits<double>::infinity());
  std::vector<bool> taken(frames.size(), false);
  std::size_t next = order.front();
  while (true) {
    selected.push_back(next);
    taken[next] = true;
    if (selected.size() == n) break;
    for (std::size_t i : order) {
      if (!taken[i]) nearest[i] = std::min(nearest[i], few_shot_distance(*frames[i].pose, *frames[next].pose));
    }
    double best = -1.0;
    for (std::size_t i : order) {
      if (!taken[i] && nearest[i] > best) {
        best = nearest[i];
        next = i;
      }
    }
  }
  return selected;
}

namespace {

/// Grid dimensions with gx * gy == count (when such a factorization fits the
/// region) whose aspect ratio is closest to the region's; otherwise the
/// smallest aspect-matched grid with at least `count` nodes.
std::pair<std::size_t, std::size_t> grid_shape(std::size_t count, std::size_t w, std::size_t h) {
  const double aspect = static_cast<double>(w) / static_cast<double>(h);
  std::pair<std::size_t, std::size_t> best{0, 0};
  double best_err = std::numeric_limits<double>::infinity();
  for (std::size_t gy = 1; gy <= std::min(count, h); ++gy) {
    if (count % gy != 0) continue;
    const std::size_t gx = count / gy;
    if (gx > w) continue;
    const double err = std::abs(std::log(static_cast<double>(gx) / static_cast<double>(gy) / aspect));
    if (err < best_err) {
      best_err = err;
      best = {gx, gy};
    }
  }
  // Accept an exact factorization only when its aspect is reasonably close.
  if (best.first != 0 && best_err < std::log(1.5)) return best;
  std::size_t gx = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(count) * aspect)));
  gx = std::clamp<std::size_t>(gx, 1, w);
  std::size_t gy = std::min(h, (count + gx - 1) / gx);
  return {gx, std::max<std::size_t>(gy, 1)};
}

}  // namespace

GridSample grid_sample(const Frame& frame, std::size_t count, bool need_depth) {
  require(count >= 1, "grid_sample: count must be >= 1");
  const int w = frame.rgb.width, h = frame.rgb.height;
  GridSample out;
  const int iw = w - 2 * kPatchRadius, ih = h - 2 * kPatchRadius;
  if (iw <= 0 || ih <= 0) {
    out.insufficient = true;
    return out;
  }
  if (need_depth) require(frame.depth.has_value(), "grid_sample: frame has no depth");
  auto usable = [&](int u, int v) { return !need_depth || frame.depth->valid(u, v); };

  auto [gx, gy] = grid_shape(count, static_cast<std::size_t>(iw), static_cast<std::size_t>(ih));
  std::vector<PixelCoord> nodes;
  while (true) {
    nodes.clear();
    for (std::size_t j = 0; j < gy; ++j) {
      const int v = kPatchRadius + static_cast<int>((2 * j + 1) * static_cast<std::size_t>(ih) / (2 * gy));
      for (std::size_t i = 0; i < gx; ++i) {
        const int u = kPatchRadius + static_cast<int>((2 * i + 1) * static_cast<std::size_t>(iw) / (2 * gx));
        if (usable(u, v)) nodes.push_back({u, v});
      }
    }
    const bool full = gx >= static_cast<std::size_t>(iw) && gy >= static_cast<std::size_t>(ih);
    if (nodes.size() >= count || full) break;
    gx = std::min<std::size_t>(iw, gx + std::max<std::size_t>(1, gx / 4));
    gy = std::min<std::size_t>(ih, gy + std::max<std::size_t>(1, gy / 4));
  }
  if (nodes.size() <= count) {
    out.insufficient = nodes.size() < count;
    out.pixels = std::move(nodes);
    return out;
  }
  out.pixels.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.pixels.push_back(nodes[i * nodes.size() / count]);
  return out;
}

SampleSet extract_training_samples(std::span<const Frame> frames, std::size_t per_frame,
                                   const EncoderModel& encoder) {
  require(per_frame >= 1, "extract_training_samples: per_frame must be >= 1");
  SampleSet out;
  for (std::size_t fi = 0; fi < frames.size(); ++fi) {
    const Frame& f = frames[fi];
    require(f.depth.has_value() && f.pose.has_value(),
            "extract_training_samples: frame needs depth and pose");
    const GridSample grid = grid_sample(f, per_frame);
    if (grid.insufficient) out.insufficient_frames.push_back(fi);
    for (const auto& p : grid.pixels) {
      TrainingSample s;
      s.descriptor = encoder.encode(f, p.u, p.v);
      s.coordinate = backproject(Pixel(p.u, p.v), f.depth->at(p.u, p.v), *f.pose, f.intrinsics).cast<float>();
      s.frame = static_cast<std::uint32_t>(fi);
      s.u = static_cast<std::uint16_t>(p.u);
      s.v = static_cast<std::uint16_t>(p.v);
      out.samples.push_back(s);
    }
  }
  return out;
}

PointCloud build_point_cloud(std::span<const Frame> frames, std::size_t per_frame) {
  require(per_frame >= 1, "build_point_cloud: per_frame must be >= 1");
  PointCloud cloud;
  for (std::size_t fi = 0; fi < frames.size(); ++fi) {
    const Frame& f = frames[fi];
    require(f.depth.has_value() && f.pose.has_value(), "build_point_cloud: frame needs depth and pose");
    const GridSample grid = grid_sample(f, per_frame);
    if (grid.insufficient) cloud.insufficient_frames.push_back(fi);
    for (const auto& p : grid.pixels) {
      cloud.points.push_back(backproject(Pixel(p.u, p.v), f.depth->at(p.u, p.v), *f.pose, f.intrinsics));
      cloud.colors.push_back({f.rgb.at(p.u, p.v, 0), f.rgb.at(p.u, p.v, 1), f.rgb.at(p.u, p.v, 2)});
      cloud.sources.push_back({static_cast<std::uint32_t>(fi), static_cast<std::uint16_t>(p.u),
                               static_cast<std::uint16_t>(p.v)});
    }
  }
  return cloud;
}

}  // namespace fsreloc
