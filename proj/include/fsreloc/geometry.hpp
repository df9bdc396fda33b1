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

#include <optional>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace fsreloc {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat3 = Eigen::Matrix3d;

/// Image location in pixels; integer values are pixel centers.
using Pixel = Vec2;
/// Scene coordinate in meters.
using WorldPoint = Vec3;
/// SE3 tangent vector: (omega_x, omega_y, omega_z, rho_x, rho_y, rho_z).
using Twist = Vec6;

/// Rigid camera-to-world transform: a camera-frame point p maps to the world
/// as rotation * p + translation. The camera looks down +z with +y pointing
/// down the image, +x to the right.
struct Pose {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  static Pose identity() { return {}; }

  Vec3 operator*(const Vec3& p) const { return rotation * p + translation; }
  Pose operator*(const Pose& rhs) const {
    return {rotation * rhs.rotation, rotation * rhs.translation + translation};
  }

  Pose inverse() const {
    const Mat3 rt = rotation.transpose();
    return {rt, -(rt * translation)};
  }

  /// World point expressed in this camera's frame.
  Vec3 to_camera(const Vec3& world) const {
    return rotation.transpose() * (world - translation);
  }

  bool is_finite() const { return rotation.allFinite() && translation.allFinite(); }

  /// Orthonormal with det +1 within `tol` per entry.
  bool is_valid(double tol = 1e-9) const;
};

struct Intrinsics {
  double fx = 0.0;
  double fy = 0.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 0;
  int height = 0;

  bool is_valid() const {
    return fx > 0.0 && fy > 0.0 && cx >= 0.0 && cx < width && cy >= 0.0 && cy < height;
  }

  /// Default calibration of the 7-Scenes Kinect recordings.
  static Intrinsics seven_scenes() { return {585.0, 585.0, 320.0, 240.0, 640, 480}; }
};

/// Pinhole projection of a world point; std::nullopt when the point lies at or
/// behind the camera plane (camera-frame z <= 1e-9). Throws InvalidArgument on
/// non-finite input.
std::optional<Pixel> project(const WorldPoint& point, const Pose& pose, const Intrinsics& k);

/// Projection of a point already in camera coordinates.
std::optional<Pixel> project_camera(const Vec3& camera_point, const Intrinsics& k);

/// World point seen at `pix` with z-depth `depth` (meters). Throws
/// InvalidArgument when depth is not a positive finite number.
WorldPoint backproject(const Pixel& pix, double depth, const Pose& pose, const Intrinsics& k);

struct PoseError {
  double translation_m = 0.0;
  double rotation_deg = 0.0;
};

PoseError pose_error(const Pose& estimate, const Pose& truth);

/// Geodesic angle of a rotation matrix, radians in [0, pi].
double rotation_angle(const Mat3& r);

Mat3 skew(const Vec3& v);
Mat3 so3_exp(const Vec3& omega);
/// Throws NumericallyDegenerate for angles within 1e-6 of pi.
Vec3 so3_log(const Mat3& r);

Pose se3_exp(const Twist& xi);
/// Throws NumericallyDegenerate for rotation angles within 1e-6 of pi.
Twist se3_log(const Pose& pose);

/// Closest rotation in the Frobenius sense (polar decomposition via SVD).
Mat3 nearest_rotation(const Mat3& m);

/// Camera-to-world pose of a camera at `eye` looking at `target`. `up` is the
/// world direction that should appear upward in the image.
Pose look_at(const Vec3& eye, const Vec3& target, const Vec3& up = Vec3::UnitZ());

}  // namespace fsreloc
