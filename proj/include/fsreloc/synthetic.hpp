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
#include <optional>
#include <string>
#include <vector>

#include "fsreloc/geometry.hpp"
#include "fsreloc/scene.hpp"

namespace fsreloc {

/// Textured planar rectangle: origin + s * edge_u + t * edge_v, s, t in [0, 1].
struct Rectangle {
  Vec3 origin = Vec3::Zero();
  Vec3 edge_u = Vec3::UnitX();
  Vec3 edge_v = Vec3::UnitY();
  Vec3 normal() const { return edge_u.cross(edge_v).normalized(); }
};

enum class TrajectoryKind { Orbit, Random, Line, Explicit };

struct TrajectorySpec {
  std::string name = "seq-01";
  TrajectoryKind kind = TrajectoryKind::Orbit;
  std::size_t count = 40;
  Vec3 center = Vec3(0.0, 0.0, 1.4);
  /// Orbit: circle radius. Random: radius of the disc positions are drawn in.
  double radius = 1.5;
  /// Orbit: first angle and angular span (degrees).
  double start_deg = 0.0;
  double arc_deg = 360.0;
  /// Random: vertical jitter (m) and pitch jitter (deg) around `center`.
  double height_jitter = 0.2;
  double pitch_jitter_deg = 10.0;
  /// Line: end points; cameras look along `look`.
  Vec3 line_from = Vec3(-1.0, 0.0, 1.4);
  Vec3 line_to = Vec3(1.0, 0.0, 1.4);
  Vec3 look = Vec3::UnitY();
  std::vector<Pose> poses;  // Explicit
  std::uint64_t seed = 0;
};

struct SyntheticSceneConfig {
  std::string name = "synth";
  std::uint64_t seed = 0;
  int width = 320;
  int height = 240;
  /// Focal length defaults to the 7-Scenes field of view at this resolution.
  double fx = 292.5;
  double fy = 292.5;
  double cx = 160.0;
  double cy = 120.0;
  /// Room interior [-room_half, room_half]^2 x [0, room_height].
  bool room = true;
  double room_half = 3.0;
  double room_height = 3.0;
  std::size_t boxes = 6;
  /// Base value-noise frequency in cycles per meter; a second octave runs at
  /// three times this rate.
  double texture_frequency = 4.0;
  double depth_noise_m = 0.0;
  double pixel_noise = 0.0;  // RGB noise sigma in 8-bit units
  std::vector<Rectangle> extra_surfaces;
  /// First entry is the training sequence, second the test sequence.
  std::vector<TrajectorySpec> trajectories = default_trajectories();

  static std::vector<TrajectorySpec> default_trajectories();

  Intrinsics intrinsics() const { return {fx, fy, cx, cy, width, height}; }
  /// Throws InvalidArgument for inconsistent settings.
  void validate() const;
};

/// Exact scene geometry for ground-truth queries.
class GeometryOracle {
 public:
  GeometryOracle() = default;
  explicit GeometryOracle(std::vector<Rectangle> surfaces) : surfaces_(std::move(surfaces)) {}

  struct Hit {
    double distance = 0.0;  // along the ray direction as given
    std::size_t surface = 0;
    double s = 0.0;
    double t = 0.0;
  };
  std::optional<Hit> cast(const Vec3& origin, const Vec3& direction) const;

  /// Scene point seen at (sub-pixel) `pix`, or std::nullopt when the ray
  /// escapes the scene.
  std::optional<WorldPoint> world_point(const Pose& pose, const Intrinsics& k,
                                        const Pixel& pix) const;
  std::optional<double> depth(const Pose& pose, const Intrinsics& k, const Pixel& pix) const;

  const std::vector<Rectangle>& surfaces() const { return surfaces_; }

 private:
  std::vector<Rectangle> surfaces_;
};

struct SyntheticScene {
  std::vector<Frame> frames;
  GeometryOracle oracle;
  /// Indices into `frames` of views that see no surface at all.
  std::vector<std::size_t> empty_views;

  /// Groups frames into sequences by trajectory name; the first trajectory is
  /// the training split, the rest are test splits.
  Scene to_scene(const std::string& name) const;
};

std::vector<Rectangle> build_surfaces(const SyntheticSceneConfig& cfg);
std::vector<Pose> make_trajectory(const TrajectorySpec& spec);
SyntheticScene generate_synthetic_scene(const SyntheticSceneConfig& cfg);

/// Applies one `key = value` setting (keys as listed in the README). Returns
/// false for an unknown key; throws ConfigError for a malformed value.
bool apply_synthetic_setting(SyntheticSceneConfig& cfg, const std::string& key,
                             const std::string& value);

}  // namespace fsreloc
