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


#include "fsreloc/pnp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/Geometry>
#include <Eigen/LU>
#include <Eigen/SVD>

#include "fsreloc/error.hpp"

namespace fsreloc {

namespace {

// Polynomials are ascending coefficient arrays.
using Poly = std::vector<double>;

Poly poly_mul(const Poly& a, const Poly& b) {
  Poly r(a.size() + b.size() - 1, 0.0);
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) r[i + j] += a[i] * b[j];
  return r;
}

Poly poly_sub(const Poly& a, const Poly& b) {
  Poly r(std::max(a.size(), b.size()), 0.0);
  for (std::size_t i = 0; i < a.size(); ++i) r[i] += a[i];
  for (std::size_t i = 0; i < b.size(); ++i) r[i] -= b[i];
  return r;
}

double poly_eval(const Poly& p, double x) {
  double r = 0.0;
  for (auto it = p.rbegin(); it != p.rend(); ++it) r = r * x + *it;
  return r;
}

double poly_deriv_eval(const Poly& p, double x) {
  double r = 0.0;
  for (std::size_t i = p.size() - 1; i >= 1; --i) r = r * x + static_cast<double>(i) * p[i];
  return r;
}

// Real roots via companion-matrix eigenvalues, polished with Newton steps.
std::vector<double> real_roots(Poly p) {
  double scale = 0.0;
  for (double c : p) scale = std::max(scale, std::abs(c));
  while (p.size() > 1 && std::abs(p.back()) <= 1e-14 * scale) p.pop_back();
  const int degree = static_cast<int>(p.size()) - 1;
  std::vector<double> roots;
  if (degree < 1) return roots;
  Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(degree, degree);
  for (int i = 0; i < degree; ++i) companion(0, i) = -p[degree - 1 - i] / p[degree];
  for (int i = 1; i < degree; ++i) companion(i, i - 1) = 1.0;
  Eigen::EigenSolver<Eigen::MatrixXd> solver(companion, false);
  for (int i = 0; i < degree; ++i) {
    const auto z = solver.eigenvalues()[i];
    if (std::abs(z.imag()) > 1e-4 * (1.0 + std::abs(z.real()))) continue;
    double x = z.real();
    for (int it = 0; it < 8; ++it) {
      const double d = poly_deriv_eval(p, x);
      if (d == 0.0) break;
      const double step = poly_eval(p, x) / d;
      x -= step;
      if (std::abs(step) <= 1e-15 * (1.0 + std::abs(x))) break;
    }
    roots.push_back(x);
  }
  return roots;
}

// Rigid transform mapping camera points onto world points (exact for three
// non-collinear noise-free pairs).
Pose align_points(const std::array<Vec3, 3>& camera, const std::array<WorldPoint, 3>& world) {
  Vec3 mc = Vec3::Zero(), mw = Vec3::Zero();
  for (int i = 0; i < 3; ++i) {
    mc += camera[i];
    mw += world[i];
  }
  mc /= 3.0;
  mw /= 3.0;
  Mat3 h = Mat3::Zero();
  for (int i = 0; i < 3; ++i) h += (camera[i] - mc) * (world[i] - mw).transpose();
  Eigen::JacobiSVD<Mat3> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 d = Mat3::Identity();
  if ((svd.matrixV() * svd.matrixU().transpose()).determinant() < 0.0) d(2, 2) = -1.0;
  Pose pose;
  pose.rotation = svd.matrixV() * d * svd.matrixU().transpose();
  pose.translation = mw - pose.rotation * mc;
  return pose;
}

Vec3 bearing(const Pixel& pix, const Intrinsics& k) {
  return Vec3((pix.x() - k.cx) / k.fx, (pix.y() - k.cy) / k.fy, 1.0).normalized();
}

}  // namespace

std::vector<Pose> solve_p3p(const std::array<Vec3, 3>& f, const std::array<WorldPoint, 3>& p) {
  // Distances s_i along the bearings satisfy the law of cosines for each side.
  // With u = s2/s1 and v = s3/s1 two equations quadratic in u remain; their
  // resultant is a quartic in v.
  const double ca = f[1].dot(f[2]);
  const double cb = f[0].dot(f[2]);
  const double cg = f[0].dot(f[1]);
  const double a2 = (p[1] - p[2]).squaredNorm();
  const double b2 = (p[0] - p[2]).squaredNorm();
  const double c2 = (p[0] - p[1]).squaredNorm();
  std::vector<Pose> out;
  if (a2 <= 0.0 || b2 <= 0.0 || c2 <= 0.0) return out;

  const Poly p1{-2.0 * b2 * cg};
  const Poly p0{b2 - c2, 2.0 * c2 * cb, -c2};
  const Poly q1{0.0, -2.0 * b2 * ca};
  const Poly q0{-a2, 2.0 * a2 * cb, b2 - a2};

  const Poly dq0 = poly_sub(q0, p0);
  const Poly dq1 = poly_sub(q1, p1);
  const Poly cross = poly_sub(poly_mul(p1, q0), poly_mul(p0, q1));
  const Poly quartic = poly_sub(poly_mul(Poly{b2}, poly_mul(dq0, dq0)), poly_mul(dq1, cross));

  for (double v : real_roots(quartic)) {
    if (!(v > 0.0)) continue;
    const double denom = poly_eval(poly_sub(p1, q1), v);
    if (std::abs(denom) < 1e-14) continue;
    const double u = poly_eval(dq0, v) / denom;
    if (!(u > 0.0)) continue;
    const double s1_sq = b2 / (1.0 + v * v - 2.0 * v * cb);
    if (!(s1_sq > 0.0)) continue;
    Vec3 s;
    s[0] = std::sqrt(s1_sq);
    s[1] = u * s[0];
    s[2] = v * s[0];

    // Polish the distances on the original three equations.
    for (int it = 0; it < 5; ++it) {
      Vec3 r(s[0] * s[0] + s[1] * s[1] - 2.0 * s[0] * s[1] * cg - c2,
             s[0] * s[0] + s[2] * s[2] - 2.0 * s[0] * s[2] * cb - b2,
             s[1] * s[1] + s[2] * s[2] - 2.0 * s[1] * s[2] * ca - a2);
      Mat3 j;
      j << 2.0 * s[0] - 2.0 * s[1] * cg, 2.0 * s[1] - 2.0 * s[0] * cg, 0.0,
          2.0 * s[0] - 2.0 * s[2] * cb, 0.0, 2.0 * s[2] - 2.0 * s[0] * cb,
          0.0, 2.0 * s[1] - 2.0 * s[2] * ca, 2.0 * s[2] - 2.0 * s[1] * ca;
      Eigen::FullPivLU<Mat3> lu(j);
      if (!lu.isInvertible()) break;
      const Vec3 step = lu.solve(r);
      s -= step;
      if (step.norm() <= 1e-15 * s.norm()) break;
    }
    if (!(s.minCoeff() > 0.0) || !s.allFinite()) continue;

    const std::array<Vec3, 3> camera{s[0] * f[0], s[1] * f[1], s[2] * f[2]};
    out.push_back(align_points(camera, p));
  }
  return out;
}

std::optional<Pose> solve_pnp4(std::span<const PointMatch, 4> m, const Intrinsics& k) {
  for (const auto& pm : m) {
    require(pm.pixel.allFinite() && pm.point.allFinite(), "solve_pnp4: non-finite input");
  }
  for (int i = 0; i < 4; ++i)
    for (int j = i + 1; j < 4; ++j)
      if ((m[i].pixel - m[j].pixel).norm() < kCoincidentPixelThreshold) return std::nullopt;

  std::array<Vec2, 3> normalized;
  for (int i = 0; i < 3; ++i) {
    normalized[i] = {(m[i].pixel.x() - k.cx) / k.fx, (m[i].pixel.y() - k.cy) / k.fy};
  }
  const Vec2 e1 = normalized[1] - normalized[0];
  const Vec2 e2 = normalized[2] - normalized[0];
  if (0.5 * std::abs(e1.x() * e2.y() - e1.y() * e2.x()) < kCollinearAreaThreshold) {
    return std::nullopt;
  }
  const double world_area =
      0.5 * (m[1].point - m[0].point).cross(m[2].point - m[0].point).norm();
  if (world_area < kCollinearAreaThreshold) return std::nullopt;

  const std::array<Vec3, 3> bearings{bearing(m[0].pixel, k), bearing(m[1].pixel, k),
                                     bearing(m[2].pixel, k)};
  const std::array<WorldPoint, 3> points{m[0].point, m[1].point, m[2].point};

  std::optional<Pose> best;
  double best_error = std::numeric_limits<double>::infinity();
  for (const Pose& candidate : solve_p3p(bearings, points)) {
    if (!candidate.is_finite()) continue;
    const double e = reprojection_error(m[3].pixel, candidate, m[3].point, k);
    if (e < best_error) {
      best_error = e;
      best = candidate;
    }
  }
  return best;
}

void RefineConfig::validate() const {
  require(max_iterations >= 1, "RefineConfig: max_iterations must be >= 1");
  require(damping >= 0.0 && std::isfinite(damping), "RefineConfig: damping must be >= 0");
  require(convergence_tol > 0.0, "RefineConfig: convergence_tol must be > 0");
  require(inlier_threshold_px > 0.0, "RefineConfig: inlier threshold must be > 0");
}

Pose apply_update(const Pose& pose, const Twist& delta) {
  const Pose world_to_camera = se3_exp(delta) * pose.inverse();
  Pose updated = world_to_camera.inverse();
  updated.rotation = nearest_rotation(updated.rotation);
  return updated;
}

Eigen::Matrix<double, 2, 6> reprojection_jacobian(const Pose& pose, const WorldPoint& m,
                                                  const Intrinsics& k) {
  const Vec3 x = pose.to_camera(m);
  const double iz = 1.0 / x.z();
  Eigen::Matrix<double, 2, 3> dproj;
  dproj << k.fx * iz, 0.0, -k.fx * x.x() * iz * iz, 0.0, k.fy * iz, -k.fy * x.y() * iz * iz;
  Eigen::Matrix<double, 3, 6> dpoint;
  dpoint.leftCols<3>() = -skew(x);
  dpoint.rightCols<3>() = Mat3::Identity();
  return dproj * dpoint;
}

namespace {

struct Selection {
  std::vector<std::size_t> candidate;  // chosen candidate per correspondence
  std::vector<std::size_t> inliers;    // correspondence indices
};

Selection select(const Pose& pose, std::span<const Correspondence> corrs, const Intrinsics& k,
                 double tau) {
  Selection s;
  s.candidate.resize(corrs.size());
  for (std::size_t i = 0; i < corrs.size(); ++i) {
    const auto choice = optimal_candidate(corrs[i].pixel, pose, corrs[i].candidates, k);
    s.candidate[i] = choice.index;
    if (choice.error < tau) s.inliers.push_back(i);
  }
  return s;
}

double selection_cost(const Pose& pose, std::span<const Correspondence> corrs,
                      const Selection& s, const Intrinsics& k) {
  double cost = 0.0;
  for (std::size_t i : s.inliers) {
    const double e =
        reprojection_error(corrs[i].pixel, pose, corrs[i].candidates[s.candidate[i]], k);
    cost += e * e;
  }
  return cost;
}

}  // namespace

RefineResult refine_pose(const Pose& init, std::span<const Correspondence> corrs,
                         const Intrinsics& k, const RefineConfig& cfg) {
  cfg.validate();
  require(!corrs.empty(), "refine_pose: no correspondences");
  require(init.is_finite(), "refine_pose: non-finite initial pose");
  for (const auto& c : corrs) require(!c.candidates.empty(), "refine_pose: empty candidate set");

  RefineResult result;
  result.pose = init;
  Selection sel = select(init, corrs, k, cfg.inlier_threshold_px);
  if (sel.inliers.empty()) {
    result.status = RefineStatus::NoInliers;
    return result;
  }

  Pose pose = init;
  for (int it = 0; it < cfg.max_iterations; ++it) {
    if (it > 0) sel = select(pose, corrs, k, cfg.inlier_threshold_px);
    if (sel.inliers.empty()) break;
    result.iterations = it + 1;

    Eigen::Matrix<double, 6, 6> h = Eigen::Matrix<double, 6, 6>::Zero();
    Vec6 g = Vec6::Zero();
    double cost = 0.0;
    for (std::size_t i : sel.inliers) {
      const WorldPoint& m = corrs[i].candidates[sel.candidate[i]];
      const Vec2 r = *project(m, pose, k) - corrs[i].pixel;
      const auto j = reprojection_jacobian(pose, m, k);
      h.noalias() += j.transpose() * j;
      g.noalias() += j.transpose() * r;
      cost += r.squaredNorm();
    }
    h.diagonal().array() += cfg.damping;
    const Vec6 delta = -h.ldlt().solve(g);
    if (!delta.allFinite()) {
      result.status = RefineStatus::Stalled;
      break;
    }
    const Pose candidate = apply_update(pose, delta);
    const double candidate_cost = selection_cost(candidate, corrs, sel, k);
    if (!(candidate_cost <= cost)) {
      result.status = RefineStatus::Stalled;
      break;
    }
    pose = candidate;
    if (delta.norm() < cfg.convergence_tol) {
      result.status = RefineStatus::Converged;
      break;
    }
  }

  // Never return something worse than the starting point under the final
  // candidate selection.
  const Selection final_sel = select(pose, corrs, k, cfg.inlier_threshold_px);
  result.final_cost = selection_cost(pose, corrs, final_sel, k);
  result.initial_cost = selection_cost(init, corrs, final_sel, k);
  result.inliers = final_sel.inliers.size();
  if (result.initial_cost < result.final_cost) {
    pose = init;
    const Selection init_sel = select(init, corrs, k, cfg.inlier_threshold_px);
    result.final_cost = selection_cost(init, corrs, init_sel, k);
    result.initial_cost = result.final_cost;
    result.inliers = init_sel.inliers.size();
    result.status = RefineStatus::Stalled;
  }
  result.pose = pose;
  return result;
}

}  // namespace fsreloc
