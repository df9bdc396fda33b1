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


#include "fsreloc/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Geometry>
#include <Eigen/LU>
#include <Eigen/SVD>

#include "fsreloc/error.hpp"

namespace fsreloc {

namespace {

constexpr double kBehindCameraZ = 1e-9;
constexpr double kRadToDeg = 180.0 / std::numbers::pi;

Vec3 vee(const Mat3& m) { return {m(2, 1) - m(1, 2), m(0, 2) - m(2, 0), m(1, 0) - m(0, 1)}; }

}  // namespace

bool Pose::is_valid(double tol) const {
  if (!is_finite()) return false;
  const Mat3 should_be_identity = rotation * rotation.transpose();
  if ((should_be_identity - Mat3::Identity()).cwiseAbs().maxCoeff() > tol) return false;
  return std::abs(rotation.determinant() - 1.0) <= tol;
}

std::optional<Pixel> project_camera(const Vec3& c, const Intrinsics& k) {
  if (c.z() <= kBehindCameraZ) return std::nullopt;
  return Pixel(k.fx * c.x() / c.z() + k.cx, k.fy * c.y() / c.z() + k.cy);
}

std::optional<Pixel> project(const WorldPoint& point, const Pose& pose, const Intrinsics& k) {
  require(point.allFinite() && pose.is_finite(), "project: non-finite input");
  return project_camera(pose.to_camera(point), k);
}

WorldPoint backproject(const Pixel& pix, double depth, const Pose& pose, const Intrinsics& k) {
  require(std::isfinite(depth) && depth > 0.0, "backproject: depth must be positive");
  require(pix.allFinite(), "backproject: non-finite pixel");
  const Vec3 c((pix.x() - k.cx) * depth / k.fx, (pix.y() - k.cy) * depth / k.fy, depth);
  return pose * c;
}

double rotation_angle(const Mat3& r) {
  // atan2 keeps full precision near 0 where arccos((trace - 1) / 2) does not.
  const double c = std::clamp((r.trace() - 1.0) * 0.5, -1.0, 1.0);
  const double s = 0.5 * vee(r).norm();
  return std::atan2(s, c);
}

PoseError pose_error(const Pose& estimate, const Pose& truth) {
  PoseError e;
  e.translation_m = (estimate.translation - truth.translation).norm();
  e.rotation_deg = std::clamp(
      rotation_angle(estimate.rotation.transpose() * truth.rotation) * kRadToDeg, 0.0, 180.0);
  return e;
}

Mat3 skew(const Vec3& v) {
  Mat3 m;
  m << 0.0, -v.z(), v.y(), v.z(), 0.0, -v.x(), -v.y(), v.x(), 0.0;
  return m;
}

Mat3 so3_exp(const Vec3& omega) {
  const double theta2 = omega.squaredNorm();
  const double theta = std::sqrt(theta2);
  const Mat3 k = skew(omega);
  double a, b;
  if (theta < 1e-4) {
    a = 1.0 - theta2 / 6.0 + theta2 * theta2 / 120.0;
    b = 0.5 - theta2 / 24.0 + theta2 * theta2 / 720.0;
  } else {
    const double h = std::sin(0.5 * theta);
    a = std::sin(theta) / theta;
    b = 2.0 * h * h / theta2;
  }
  return Mat3::Identity() + a * k + b * k * k;
}

Vec3 so3_log(const Mat3& r) {
  const Vec3 w = vee(r);
  const double s = 0.5 * w.norm();
  const double c = std::clamp((r.trace() - 1.0) * 0.5, -1.0, 1.0);
  const double theta = std::atan2(s, c);
  if (theta > std::numbers::pi - 1e-6) {
    throw Error(ErrorCode::NumericallyDegenerate, "so3_log: rotation angle too close to pi");
  }
  if (theta < 1e-4) {
    const double t2 = theta * theta;
    return 0.5 * w * (1.0 + t2 / 6.0 + 7.0 * t2 * t2 / 360.0);
  }
  return 0.5 * w * (theta / s);
}

namespace {

// Left Jacobian of SO3 (the V matrix of the SE3 exponential).
Mat3 left_jacobian(const Vec3& omega) {
  const double theta2 = omega.squaredNorm();
  const double theta = std::sqrt(theta2);
  const Mat3 k = skew(omega);
  double b, c;
  if (theta < 1e-4) {
    b = 0.5 - theta2 / 24.0 + theta2 * theta2 / 720.0;
    c = 1.0 / 6.0 - theta2 / 120.0 + theta2 * theta2 / 5040.0;
  } else {
    const double h = std::sin(0.5 * theta);
    b = 2.0 * h * h / theta2;
    c = (theta - std::sin(theta)) / (theta2 * theta);
  }
  return Mat3::Identity() + b * k + c * k * k;
}

Mat3 left_jacobian_inverse(const Vec3& omega) {
  const double theta2 = omega.squaredNorm();
  const double theta = std::sqrt(theta2);
  const Mat3 k = skew(omega);
  double d;
  if (theta < 1e-4) {
    d = 1.0 / 12.0 + theta2 / 720.0 + theta2 * theta2 / 30240.0;
  } else {
    // 1 - cos(theta) cancels badly; the half-angle cotangent form does not.
    const double half = 0.5 * theta;
    d = (1.0 - half * std::cos(half) / std::sin(half)) / theta2;
  }
  return Mat3::Identity() - 0.5 * k + d * k * k;
}

}  // namespace

Pose se3_exp(const Twist& xi) {
  const Vec3 omega = xi.head<3>();
  const Vec3 rho = xi.tail<3>();
  return {so3_exp(omega), left_jacobian(omega) * rho};
}

Twist se3_log(const Pose& pose) {
  const Vec3 omega = so3_log(pose.rotation);
  Twist xi;
  xi.head<3>() = omega;
  xi.tail<3>() = left_jacobian_inverse(omega) * pose.translation;
  return xi;
}

Mat3 nearest_rotation(const Mat3& m) {
  Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 d = Mat3::Identity();
  if ((svd.matrixU() * svd.matrixV().transpose()).determinant() < 0.0) d(2, 2) = -1.0;
  return svd.matrixU() * d * svd.matrixV().transpose();
}

Pose look_at(const Vec3& eye, const Vec3& target, const Vec3& up) {
  const Vec3 z = (target - eye).normalized();
  Vec3 x = z.cross(up);
  if (x.norm() < 1e-9) x = z.unitOrthogonal();
  x.normalize();
  const Vec3 y = z.cross(x);
  Pose p;
  p.rotation.col(0) = x;
  p.rotation.col(1) = y;
  p.rotation.col(2) = z;
  p.translation = eye;
  return p;
}

}  // namespace fsreloc
