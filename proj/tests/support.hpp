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


// Helpers shared by the unit and acceptance suites.

#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "fsreloc/geometry.hpp"
#include "fsreloc/pipeline.hpp"
#include "fsreloc/rng.hpp"
#include "fsreloc/synthetic.hpp"

namespace fsreloc::testing {

inline Vec3 random_unit(Rng& rng) {
  Vec3 v;
  do {
    v = Vec3(standard_normal(rng), standard_normal(rng), standard_normal(rng));
  } while (v.norm() < 1e-6);
  return v.normalized();
}

inline Pose random_pose(Rng& rng, double max_angle = 3.0, double max_translation = 2.0) {
  const Vec3 axis = random_unit(rng);
  const double angle = uniform_real(rng, 0.0, max_angle);
  Pose p;
  p.rotation = so3_exp(axis * angle);
  p.translation = Vec3(uniform_real(rng, -max_translation, max_translation),
                       uniform_real(rng, -max_translation, max_translation),
                       uniform_real(rng, -max_translation, max_translation));
  return p;
}

inline Pose perturb(const Pose& p, double trans_m, double rot_deg, Rng& rng) {
  Pose q = p;
  q.rotation = so3_exp(random_unit(rng) * (rot_deg * 3.14159265358979323846 / 180.0)) *
               p.rotation;
  q.translation += random_unit(rng) * trans_m;
  return q;
}

// Pixel inside the image with a point at depth [lo, hi] in front of the camera.
inline WorldPoint random_visible_point(const Pose& pose, const Intrinsics& k, Rng& rng,
                                       double lo = 1.0, double hi = 3.0, Pixel* pix = nullptr) {
  const Pixel p(uniform_real(rng, 0.0, k.width), uniform_real(rng, 0.0, k.height));
  if (pix) *pix = p;
  return backproject(p, uniform_real(rng, lo, hi), pose, k);
}

// Desk-sized room: short viewing distances keep pixel quantization below 1 cm.
inline SyntheticSceneConfig desk_scene(std::uint64_t seed, std::size_t train = 40,
                                       std::size_t test = 20) {
  SyntheticSceneConfig sc;
  sc.name = "desk";
  sc.seed = seed;
  sc.room_half = 1.5;
  sc.room_height = 2.2;
  sc.trajectories[0].count = train;
  sc.trajectories[0].radius = 0.6;
  sc.trajectories[0].center.z() = 1.1;
  sc.trajectories[1].count = test;
  sc.trajectories[1].radius = 0.4;
  sc.trajectories[1].center.z() = 1.1;
  return sc;
}

// Thresholds in pixels scale with image width; 12.5 px at 320 wide is 25 px at 640.
inline PipelineConfig desk_pipeline(EncoderVariant encoder) {
  PipelineConfig cfg;
  cfg.encoder = encoder;
  cfg.per_frame = 19200;
  cfg.ransac.pool_size = 3200;
  cfg.ransac.inlier_threshold_px = 12.5;
  cfg.ransac.early_reject_px = 5.0;
  return cfg;
}

// A single textured plane z = `depth` seen by explicit camera poses.
inline SyntheticSceneConfig plane_scene(std::vector<Pose> poses, double depth = 2.0,
                                        std::uint64_t seed = 1) {
  SyntheticSceneConfig sc;
  sc.name = "plane";
  sc.seed = seed;
  sc.room = false;
  sc.boxes = 0;
  sc.extra_surfaces = {{Vec3(-20, -20, depth), Vec3(40, 0, 0), Vec3(0, 40, 0)}};
  TrajectorySpec t;
  t.name = "seq-01";
  t.kind = TrajectoryKind::Explicit;
  t.poses = std::move(poses);
  sc.trajectories = {t};
  return sc;
}

}  // namespace fsreloc::testing
