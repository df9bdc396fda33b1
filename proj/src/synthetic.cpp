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


#include "fsreloc/synthetic.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "fsreloc/error.hpp"
#include "fsreloc/rng.hpp"

namespace fsreloc {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

double hash_unit(std::uint64_t seed, std::int64_t x, std::int64_t y) {
  const std::uint64_t h =
      mix64(seed ^ mix64(static_cast<std::uint64_t>(x) * 0x9e3779b97f4a7c15ULL ^
                         static_cast<std::uint64_t>(y) * 0xc2b2ae3d27d4eb4fULL));
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

/// Smooth value noise in [0, 1) on the unit lattice.
double value_noise(std::uint64_t seed, double x, double y) {
  const double fx = std::floor(x), fy = std::floor(y);
  const auto ix = static_cast<std::int64_t>(fx), iy = static_cast<std::int64_t>(fy);
  double tx = x - fx, ty = y - fy;
  tx = tx * tx * (3.0 - 2.0 * tx);
  ty = ty * ty * (3.0 - 2.0 * ty);
  const double a = hash_unit(seed, ix, iy), b = hash_unit(seed, ix + 1, iy);
  const double c = hash_unit(seed, ix, iy + 1), d = hash_unit(seed, ix + 1, iy + 1);
  return (a + (b - a) * tx) + ((c + (d - c) * tx) - (a + (b - a) * tx)) * ty;
}

struct Texture {
  std::uint64_t seed = 0;
  Vec3 c0, c1;
  double shade = 1.0;
  double len_u = 1.0, len_v = 1.0;
};

Vec3 texture_color(const Texture& tex, double s, double t, double freq) {
  const double x = s * tex.len_u * freq, y = t * tex.len_v * freq;
  const double n = 0.65 * value_noise(tex.seed, x, y) + 0.35 * value_noise(tex.seed + 1, 3 * x, 3 * y);
  const double m = value_noise(tex.seed + 2, 2 * x + 17.0, 2 * y - 5.0);
  return (tex.c0 + (tex.c1 - tex.c0) * n) * ((0.75 + 0.25 * m) * tex.shade);
}

void add_box(std::vector<Rectangle>& out, const Vec3& base, double hx, double hy, double h,
             double yaw) {
  const Vec3 ex(std::cos(yaw), std::sin(yaw), 0.0), ey(-std::sin(yaw), std::cos(yaw), 0.0);
  const Vec3 ez = Vec3::UnitZ() * h;
  const Vec3 c00 = base - hx * ex - hy * ey;
  const Vec3 c10 = base + hx * ex - hy * ey;
  const Vec3 c11 = base + hx * ex + hy * ey;
  const Vec3 c01 = base - hx * ex + hy * ey;
  out.push_back({c10, c11 - c10, ez});
  out.push_back({c11, c01 - c11, ez});
  out.push_back({c01, c00 - c01, ez});
  out.push_back({c00, c10 - c00, ez});
  out.push_back({c00 + ez, c10 - c00, c01 - c00});
}

double parse_double(const std::string& key, const std::string& value) {
  double x = 0.0;
  const char* end = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(value.data(), end, x);
  if (ec != std::errc() || ptr != end || !std::isfinite(x)) {
    throw Error(ErrorCode::ConfigError, key + ": expected a number, got '" + value + "'");
  }
  return x;
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
  std::uint64_t x = 0;
  const char* end = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(value.data(), end, x);
  if (ec != std::errc() || ptr != end) {
    throw Error(ErrorCode::ConfigError, key + ": expected a non-negative integer, got '" + value + "'");
  }
  return x;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw Error(ErrorCode::ConfigError, key + ": expected true or false, got '" + value + "'");
}

Vec3 parse_vec3(const std::string& key, const std::string& value) {
  std::string v = value;
  std::replace(v.begin(), v.end(), ',', ' ');
  std::istringstream in(v);
  Vec3 out;
  std::string tok;
  for (int i = 0; i < 3; ++i) {
    if (!(in >> tok)) throw Error(ErrorCode::ConfigError, key + ": expected three numbers");
    out[i] = parse_double(key, tok);
  }
  if (in >> tok) throw Error(ErrorCode::ConfigError, key + ": expected three numbers");
  return out;
}

TrajectoryKind parse_kind(const std::string& key, const std::string& value) {
  if (value == "orbit") return TrajectoryKind::Orbit;
  if (value == "random") return TrajectoryKind::Random;
  if (value == "line") return TrajectoryKind::Line;
  throw Error(ErrorCode::ConfigError, key + ": expected orbit, random or line, got '" + value + "'");
}

bool apply_trajectory_setting(TrajectorySpec& t, const std::string& key, const std::string& name,
                              const std::string& value) {
  if (name == "name") t.name = value;
  else if (name == "kind") t.kind = parse_kind(key, value);
  else if (name == "count") t.count = parse_u64(key, value);
  else if (name == "center") t.center = parse_vec3(key, value);
  else if (name == "radius") t.radius = parse_double(key, value);
  else if (name == "start_deg") t.start_deg = parse_double(key, value);
  else if (name == "arc_deg") t.arc_deg = parse_double(key, value);
  else if (name == "height_jitter") t.height_jitter = parse_double(key, value);
  else if (name == "pitch_jitter_deg") t.pitch_jitter_deg = parse_double(key, value);
  else if (name == "line_from") t.line_from = parse_vec3(key, value);
  else if (name == "line_to") t.line_to = parse_vec3(key, value);
  else if (name == "look") t.look = parse_vec3(key, value);
  else if (name == "seed") t.seed = parse_u64(key, value);
  else return false;
  return true;
}

}  // namespace

std::vector<TrajectorySpec> SyntheticSceneConfig::default_trajectories() {
  TrajectorySpec train;
  train.name = "seq-01";
  train.kind = TrajectoryKind::Orbit;
  train.count = 40;
  train.seed = 1;
  TrajectorySpec test;
  test.name = "seq-02";
  test.kind = TrajectoryKind::Random;
  test.count = 20;
  test.radius = 1.0;
  test.seed = 2;
  return {train, test};
}

void SyntheticSceneConfig::validate() const {
  require(width > 2 * 20 && height > 2 * 20, "synthetic: image must be larger than 41x41");
  require(intrinsics().is_valid(), "synthetic: invalid intrinsics");
  require(room_half > 0.0 && room_height > 0.0, "synthetic: room size must be positive");
  require(room || boxes > 0 || !extra_surfaces.empty(), "synthetic: scene has no surface");
  require(texture_frequency > 0.0, "synthetic: texture frequency must be positive");
  require(depth_noise_m >= 0.0 && pixel_noise >= 0.0, "synthetic: noise must be non-negative");
  require(!trajectories.empty(), "synthetic: no trajectory");
  std::size_t total = 0;
  for (const auto& t : trajectories) {
    require(!t.name.empty(), "synthetic: trajectory without a name");
    total += t.kind == TrajectoryKind::Explicit ? t.poses.size() : t.count;
    if (t.kind == TrajectoryKind::Orbit || t.kind == TrajectoryKind::Random) {
      require(t.radius >= 0.0, "synthetic: trajectory radius must be non-negative");
    }
  }
  require(total > 0, "synthetic: no camera pose");
  for (const auto& r : extra_surfaces) {
    require(std::abs(r.edge_u.dot(r.edge_v)) <= 1e-9 * r.edge_u.norm() * r.edge_v.norm() &&
                r.edge_u.norm() > 0.0 && r.edge_v.norm() > 0.0,
            "synthetic: surface edges must be non-zero and orthogonal");
  }
}

std::optional<GeometryOracle::Hit> GeometryOracle::cast(const Vec3& origin,
                                                        const Vec3& direction) const {
  std::optional<Hit> best;
  double best_t = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < surfaces_.size(); ++i) {
    const Rectangle& r = surfaces_[i];
    const Vec3 n = r.edge_u.cross(r.edge_v);
    const double denom = n.dot(direction);
    if (std::abs(denom) < 1e-15) continue;
    const double t = n.dot(r.origin - origin) / denom;
    if (!(t > 1e-9) || t >= best_t) continue;
    const Vec3 p = origin + t * direction - r.origin;
    const double s = p.dot(r.edge_u) / r.edge_u.squaredNorm();
    const double q = p.dot(r.edge_v) / r.edge_v.squaredNorm();
    if (s < 0.0 || s > 1.0 || q < 0.0 || q > 1.0) continue;
    best_t = t;
    best = Hit{t, i, s, q};
  }
  return best;
}

std::optional<double> GeometryOracle::depth(const Pose& pose, const Intrinsics& k,
                                            const Pixel& pix) const {
  const Vec3 ray_cam((pix.x() - k.cx) / k.fx, (pix.y() - k.cy) / k.fy, 1.0);
  const auto hit = cast(pose.translation, pose.rotation * ray_cam);
  if (!hit) return std::nullopt;
  return hit->distance;  // the camera-frame ray has unit z, so this is z-depth
}

std::optional<WorldPoint> GeometryOracle::world_point(const Pose& pose, const Intrinsics& k,
                                                      const Pixel& pix) const {
  const auto d = depth(pose, k, pix);
  if (!d) return std::nullopt;
  return backproject(pix, *d, pose, k);
}

std::vector<Rectangle> build_surfaces(const SyntheticSceneConfig& cfg) {
  std::vector<Rectangle> out;
  if (cfg.room) {
    const double r = cfg.room_half, h = cfg.room_height;
    out.push_back({Vec3(-r, -r, 0), Vec3(2 * r, 0, 0), Vec3(0, 2 * r, 0)});  // floor
    out.push_back({Vec3(-r, -r, h), Vec3(0, 2 * r, 0), Vec3(2 * r, 0, 0)});  // ceiling
    out.push_back({Vec3(r, -r, 0), Vec3(0, 2 * r, 0), Vec3(0, 0, h)});
    out.push_back({Vec3(r, r, 0), Vec3(-2 * r, 0, 0), Vec3(0, 0, h)});
    out.push_back({Vec3(-r, r, 0), Vec3(0, -2 * r, 0), Vec3(0, 0, h)});
    out.push_back({Vec3(-r, -r, 0), Vec3(2 * r, 0, 0), Vec3(0, 0, h)});
  }
  Rng rng(stage_seed(cfg.seed, "boxes"));
  for (std::size_t i = 0; i < cfg.boxes; ++i) {
    const double angle = (360.0 * static_cast<double>(i) / static_cast<double>(cfg.boxes) +
                          uniform_real(rng, -15.0, 15.0)) * kDegToRad;
    const double dist = cfg.room_half * uniform_real(rng, 0.73, 0.83);
    const double hx = uniform_real(rng, 0.15, 0.4), hy = uniform_real(rng, 0.15, 0.4);
    const double h = uniform_real(rng, 0.3, 1.5);
    const double yaw = uniform_real(rng, 0.0, std::numbers::pi);
    add_box(out, Vec3(dist * std::cos(angle), dist * std::sin(angle), 0.0), hx, hy, h, yaw);
  }
  out.insert(out.end(), cfg.extra_surfaces.begin(), cfg.extra_surfaces.end());
  return out;
}

std::vector<Pose> make_trajectory(const TrajectorySpec& spec) {
  std::vector<Pose> poses;
  switch (spec.kind) {
    case TrajectoryKind::Explicit:
      return spec.poses;
    case TrajectoryKind::Orbit: {
      const bool closed = std::abs(spec.arc_deg) >= 360.0;
      const double steps =
          static_cast<double>(closed ? spec.count : std::max<std::size_t>(spec.count, 2) - 1);
      for (std::size_t i = 0; i < spec.count; ++i) {
        const double a = (spec.start_deg + spec.arc_deg * static_cast<double>(i) / steps) * kDegToRad;
        const Vec3 eye = spec.center + spec.radius * Vec3(std::cos(a), std::sin(a), 0.0);
        poses.push_back(look_at(eye, spec.center));
      }
      break;
    }
    case TrajectoryKind::Random:
      for (std::size_t i = 0; i < spec.count; ++i) {
        Rng rng(stream_seed(spec.seed, i));
        const double r = spec.radius * std::sqrt(uniform_unit(rng));
        const double phi = uniform_real(rng, 0.0, 2.0 * std::numbers::pi);
        const double dz = uniform_real(rng, -spec.height_jitter, spec.height_jitter);
        const double yaw = uniform_real(rng, 0.0, 2.0 * std::numbers::pi);
        const double pitch =
            uniform_real(rng, -spec.pitch_jitter_deg, spec.pitch_jitter_deg) * kDegToRad;
        const Vec3 eye = spec.center + Vec3(r * std::cos(phi), r * std::sin(phi), dz);
        const Vec3 dir(std::cos(pitch) * std::cos(yaw), std::cos(pitch) * std::sin(yaw),
                       std::sin(pitch));
        poses.push_back(look_at(eye, eye + dir));
      }
      break;
    case TrajectoryKind::Line:
      for (std::size_t i = 0; i < spec.count; ++i) {
        const double f = spec.count > 1 ? static_cast<double>(i) / static_cast<double>(spec.count - 1) : 0.0;
        const Vec3 eye = spec.line_from + f * (spec.line_to - spec.line_from);
        poses.push_back(look_at(eye, eye + spec.look));
      }
      break;
  }
  return poses;
}

SyntheticScene generate_synthetic_scene(const SyntheticSceneConfig& cfg) {
  cfg.validate();
  SyntheticScene scene;
  scene.oracle = GeometryOracle(build_surfaces(cfg));
  const auto& surfaces = scene.oracle.surfaces();

  const Vec3 light = Vec3(0.3, 0.5, 0.8).normalized();
  std::vector<Texture> textures(surfaces.size());
  for (std::size_t i = 0; i < surfaces.size(); ++i) {
    Texture& t = textures[i];
    t.seed = stream_seed(stage_seed(cfg.seed, "texture"), i);
    Rng rng(t.seed);
    for (int c = 0; c < 3; ++c) {
      t.c0[c] = uniform_real(rng, 0.1, 0.9);
      t.c1[c] = uniform_real(rng, 0.1, 0.9);
    }
    t.shade = 0.7 + 0.3 * std::abs(surfaces[i].normal().dot(light));
    t.len_u = surfaces[i].edge_u.norm();
    t.len_v = surfaces[i].edge_v.norm();
  }

  const Intrinsics k = cfg.intrinsics();
  const std::uint64_t noise_seed = stage_seed(cfg.seed, "sensor-noise");
  for (const auto& spec : cfg.trajectories) {
    const auto poses = make_trajectory(spec);
    for (std::size_t i = 0; i < poses.size(); ++i) {
      Frame f;
      f.id = FrameId{cfg.name, spec.name, static_cast<int>(i)};
      f.intrinsics = k;
      f.pose = poses[i];
      f.rgb = RgbImage(k.width, k.height);
      DepthMap depth(k.width, k.height);
      Rng rng(stream_seed(noise_seed ^ fnv1a64(spec.name), i));
      std::size_t hits = 0;
      for (int v = 0; v < k.height; ++v) {
        for (int u = 0; u < k.width; ++u) {
          const Vec3 ray_cam((u - k.cx) / k.fx, (v - k.cy) / k.fy, 1.0);
          const auto hit = scene.oracle.cast(poses[i].translation, poses[i].rotation * ray_cam);
          if (!hit) continue;
          ++hits;
          double d = hit->distance;
          if (cfg.depth_noise_m > 0.0) d += cfg.depth_noise_m * standard_normal(rng);
          depth.at(u, v) = d > 0.0 ? static_cast<float>(d) : 0.0f;
          const Vec3 col = texture_color(textures[hit->surface], hit->s, hit->t, cfg.texture_frequency);
          for (int c = 0; c < 3; ++c) {
            double x = col[c] * 255.0;
            if (cfg.pixel_noise > 0.0) x += cfg.pixel_noise * standard_normal(rng);
            f.rgb.at(u, v, c) = static_cast<std::uint8_t>(std::clamp(std::lround(x), 0L, 255L));
          }
        }
      }
      if (hits == 0) scene.empty_views.push_back(scene.frames.size());
      f.depth = std::move(depth);
      scene.frames.push_back(std::move(f));
    }
  }
  return scene;
}

Scene SyntheticScene::to_scene(const std::string& name) const {
  Scene s;
  s.name = name;
  for (const Frame& f : frames) {
    auto it = std::find_if(s.sequences.begin(), s.sequences.end(),
                           [&](const Sequence& q) { return q.name == f.id.sequence; });
    if (it == s.sequences.end()) {
      s.sequences.push_back(Sequence{f.id.sequence, {}});
      it = s.sequences.end() - 1;
    }
    Frame copy = f;
    copy.id.scene = name;
    it->frames.push_back(std::move(copy));
  }
  for (std::size_t i = 0; i < s.sequences.size(); ++i) {
    (i == 0 ? s.train_split : s.test_split).push_back(s.sequences[i].name);
  }
  return s;
}

bool apply_synthetic_setting(SyntheticSceneConfig& cfg, const std::string& key,
                             const std::string& value) {
  if (key == "name") cfg.name = value;
  else if (key == "seed") cfg.seed = parse_u64(key, value);
  else if (key == "width") cfg.width = static_cast<int>(parse_u64(key, value));
  else if (key == "height") cfg.height = static_cast<int>(parse_u64(key, value));
  else if (key == "fx") cfg.fx = parse_double(key, value);
  else if (key == "fy") cfg.fy = parse_double(key, value);
  else if (key == "cx") cfg.cx = parse_double(key, value);
  else if (key == "cy") cfg.cy = parse_double(key, value);
  else if (key == "room") cfg.room = parse_bool(key, value);
  else if (key == "room_half") cfg.room_half = parse_double(key, value);
  else if (key == "room_height") cfg.room_height = parse_double(key, value);
  else if (key == "boxes") cfg.boxes = parse_u64(key, value);
  else if (key == "texture_frequency") cfg.texture_frequency = parse_double(key, value);
  else if (key == "depth_noise") cfg.depth_noise_m = parse_double(key, value);
  else if (key == "pixel_noise") cfg.pixel_noise = parse_double(key, value);
  else {
    const auto dot = key.find('.');
    if (dot == std::string::npos) return false;
    const std::string group = key.substr(0, dot), field = key.substr(dot + 1);
    std::size_t slot;
    if (group == "train") slot = 0;
    else if (group == "test") slot = 1;
    else return false;
    if (cfg.trajectories.size() <= slot) cfg.trajectories.resize(slot + 1);
    return apply_trajectory_setting(cfg.trajectories[slot], key, field, value);
  }
  return true;
}

}  // namespace fsreloc
