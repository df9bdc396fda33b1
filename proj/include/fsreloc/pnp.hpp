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
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "fsreloc/geometry.hpp"
#include "fsreloc/reprojection.hpp"

namespace fsreloc {

/// A single pixel-to-coordinate pairing used by minimal solvers.
struct PointMatch {
  Pixel pixel = Pixel::Zero();
  WorldPoint point = WorldPoint::Zero();
};

/// Minimal samples are rejected when two pixels are closer than this.
inline constexpr double kCoincidentPixelThreshold = 1.0;
/// Minimal samples are rejected when the first three pixels span a triangle
/// smaller than this in normalized image coordinates.
inline constexpr double kCollinearAreaThreshold = 1e-8;

/// All real P3P solutions (camera-to-world) for three unit bearing vectors in
/// camera coordinates and their world points. Up to four poses.
std::vector<Pose> solve_p3p(const std::array<Vec3, 3>& bearings,
                            const std::array<WorldPoint, 3>& points);

/// Pose from exactly four matches: P3P on the first three, the fourth picks
/// among the real solutions by reprojection error. std::nullopt when the
/// sample is degenerate (coincident pixels, collinear points, no solution).
std::optional<Pose> solve_pnp4(std::span<const PointMatch, 4> matches, const Intrinsics& k);

struct RefineConfig {
  int max_iterations = 10;
  double damping = 1e-6;
  double convergence_tol = 1e-8;
  double inlier_threshold_px = 25.0;

  void validate() const;
};

enum class RefineStatus { Converged, MaxIterations, Stalled, NoInliers };

struct RefineResult {
  Pose pose;
  RefineStatus status = RefineStatus::MaxIterations;
  int iterations = 0;
  std::size_t inliers = 0;
  /// Summed squared inlier error of the returned pose under its own
  /// candidate selection and inlier set.
  double final_cost = 0.0;
  /// The initial pose evaluated against that same selection and inlier set.
  double initial_cost = 0.0;
};

/// Damped Gauss-Newton refinement over one-to-many correspondences. Each
/// iteration re-selects every pixel's best candidate under the current pose,
/// keeps the pixels whose error is below the inlier threshold and takes one
/// twist step on their summed squared reprojection error.
RefineResult refine_pose(const Pose& init, std::span<const Correspondence> corrs,
                         const Intrinsics& k, const RefineConfig& cfg);

/// Pose perturbed by a twist applied on the left of the world-to-camera map:
/// world_to_camera' = exp(delta) * world_to_camera.
Pose apply_update(const Pose& pose, const Twist& delta);

/// Derivative of the projected pixel of `m` with respect to `apply_update`'s
/// twist at zero. Requires `m` in front of the camera.
Eigen::Matrix<double, 2, 6> reprojection_jacobian(const Pose& pose, const WorldPoint& m,
                                                  const Intrinsics& k);

}  // namespace fsreloc
