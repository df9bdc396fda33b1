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


#include "fsreloc/triplet.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "fsreloc/error.hpp"
#include "fsreloc/rng.hpp"

namespace fsreloc {

void TripletTrainConfig::validate() const {
  require(margin > 0.0, "triplet config: margin must be > 0");
  require(kappa >= 1, "triplet config: kappa must be >= 1");
  require(correspondence_threshold_m > 0.0, "triplet config: threshold must be > 0");
  require(learning_rate > 0.0, "triplet config: learning rate must be > 0");
  require(momentum >= 0.0 && momentum < 1.0, "triplet config: momentum must be in [0, 1)");
  require(batch_size >= 1, "triplet config: batch size must be >= 1");
  require(holdout_fraction >= 0.0 && holdout_fraction < 1.0,
          "triplet config: holdout fraction must be in [0, 1)");
  require(negative_attempts >= 1, "triplet config: negative attempts must be >= 1");
}

namespace {

/// Scene coordinates of every valid-depth pixel; NaN elsewhere.
struct PointMap {
  int width = 0;
  int height = 0;
  std::vector<Eigen::Vector3f> points;
  std::vector<std::uint8_t> valid;

  bool ok(int u, int v) const { return valid[static_cast<std::size_t>(v) * width + u] != 0; }
  const Eigen::Vector3f& at(int u, int v) const {
    return points[static_cast<std::size_t>(v) * width + u];
  }
};

PointMap point_map(const Frame& f) {
  require(f.depth && f.pose, "mine_pairs: frames need depth and pose");
  PointMap m;
  m.width = f.rgb.width;
  m.height = f.rgb.height;
  m.points.assign(static_cast<std::size_t>(m.width) * m.height, Eigen::Vector3f::Zero());
  m.valid.assign(m.points.size(), 0);
  for (int v = 0; v < m.height; ++v) {
    for (int u = 0; u < m.width; ++u) {
      if (!f.depth->valid(u, v)) continue;
      const std::size_t i = static_cast<std::size_t>(v) * m.width + u;
      m.points[i] = backproject(Pixel(u, v), f.depth->at(u, v), *f.pose, f.intrinsics).cast<float>();
      m.valid[i] = 1;
    }
  }
  return m;
}

std::vector<OverlapPixel> overlap(const PointMap& ma, const PointMap& mb, const Frame& b,
                                  double threshold) {
  std::vector<OverlapPixel> out;
  const Pose world_to_b = b.pose->inverse();
  const Intrinsics& k = b.intrinsics;
  for (int v = kPatchRadius; v < ma.height - kPatchRadius; ++v) {
    for (int u = kPatchRadius; u < ma.width - kPatchRadius; ++u) {
      if (!ma.ok(u, v)) continue;
      const Vec3 x = ma.at(u, v).cast<double>();
      const Vec3 c = world_to_b * x;
      const auto pix = project_camera(c, k);
      if (!pix) continue;
      const double ub = std::round(pix->x()), vb = std::round(pix->y());
      if (!(ub >= 0 && vb >= 0 && ub < mb.width && vb < mb.height)) continue;
      const int iu = static_cast<int>(ub), iv = static_cast<int>(vb);
      if (!patch_fits(iu, iv, mb.width, mb.height) || !mb.ok(iu, iv)) continue;
      const double d = (mb.at(iu, iv).cast<double>() - x).norm();
      if (d < threshold) out.push_back({{u, v}, {iu, iv}, d});
    }
  }
  return out;
}

}  // namespace

std::vector<OverlapPixel> compute_overlap(const Frame& a, const Frame& b, double threshold_m) {
  return overlap(point_map(a), point_map(b), b, threshold_m);
}

std::vector<Triplet> mine_pairs(std::span<const SceneFrames> scenes,
                                const TripletTrainConfig& cfg) {
  cfg.validate();
  require(!scenes.empty(), "mine_pairs: no scenes");
  Rng rng(stage_seed(cfg.seed, "mine-pairs"));
  std::vector<Triplet> out;
  for (std::size_t s = 0; s < scenes.size(); ++s) {
    const auto& frames = scenes[s];
    std::vector<PointMap> maps;
    maps.reserve(frames.size());
    for (const auto& f : frames) {
      f.validate();
      maps.push_back(point_map(f));
    }
    for (std::size_t a = 0; a < frames.size(); ++a) {
      for (std::size_t b = 0; b < frames.size(); ++b) {
        if (a == b) continue;
        auto ov = overlap(maps[a], maps[b], frames[b], cfg.correspondence_threshold_m);
        if (ov.size() < cfg.kappa) continue;
        // Candidate negatives: every patch-centre pixel of b with valid depth.
        std::vector<PixelCoord> pool;
        const PointMap& mb = maps[b];
        for (int v = kPatchRadius; v < mb.height - kPatchRadius; ++v)
          for (int u = kPatchRadius; u < mb.width - kPatchRadius; ++u)
            if (mb.ok(u, v)) pool.push_back({u, v});
        // Partial Fisher-Yates: the first kappa entries are a uniform draw.
        for (std::size_t i = 0; i < cfg.kappa; ++i) {
          const std::size_t j = i + uniform_index(rng, ov.size() - i);
          std::swap(ov[i], ov[j]);
        }
        for (std::size_t i = 0; i < cfg.kappa; ++i) {
          const auto& o = ov[i];
          const Eigen::Vector3f& xa = maps[a].at(o.a.u, o.a.v);
          for (std::size_t attempt = 0; attempt < cfg.negative_attempts; ++attempt) {
            const PixelCoord n = pool[uniform_index(rng, pool.size())];
            const double dn = (mb.at(n.u, n.v) - xa).cast<double>().norm();
            if (dn >= cfg.correspondence_threshold_m) {
              out.push_back({s, a, b, o.a, o.b, n, o.distance, dn});
              break;
            }
          }
        }
      }
    }
  }
  if (out.empty()) {
    throw Error(ErrorCode::EmptyOverlap, "no frame pair overlaps by at least kappa pixels");
  }
  if (cfg.max_triplets > 0 && out.size() > cfg.max_triplets) {
    shuffle(out.begin(), out.end(), rng);
    out.resize(cfg.max_triplets);
  }
  return out;
}

std::vector<CorrespondencePair> to_pairs(std::span<const Triplet> triplets) {
  std::vector<CorrespondencePair> out;
  out.reserve(triplets.size() * 2);
  for (const auto& t : triplets) {
    out.push_back({t.scene, t.frame_a, t.anchor, t.frame_b, t.positive, t.positive_distance, true});
    out.push_back(
        {t.scene, t.frame_a, t.anchor, t.frame_b, t.negative, t.negative_distance, false});
  }
  return out;
}

void write_pair_dump(const std::filesystem::path& path, std::span<const Triplet> triplets) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::InvalidArgument, "cannot write " + path.string());
  char line[256];
  for (const auto& p : to_pairs(triplets)) {
    std::snprintf(line, sizeof line, "%zu %zu %d %d %zu %d %d %.6f %s\n", p.scene, p.frame_a,
                  p.pixel_a.u, p.pixel_a.v, p.frame_b, p.pixel_b.u, p.pixel_b.v,
                  p.world_distance, p.positive ? "positive" : "negative");
    out << line;
  }
}

namespace {

struct CroppedTriplet {
  Patch anchor;
  Patch positive;
  Patch negative;
};

CroppedTriplet crop(const Triplet& t, std::span<const SceneFrames> scenes) {
  require(t.scene < scenes.size(), "triplet references a missing scene");
  const auto& frames = scenes[t.scene];
  require(t.frame_a < frames.size() && t.frame_b < frames.size(),
          "triplet references a missing frame");
  return {extract_patch(frames[t.frame_a].rgb, t.anchor.u, t.anchor.v),
          extract_patch(frames[t.frame_b].rgb, t.positive.u, t.positive.v),
          extract_patch(frames[t.frame_b].rgb, t.negative.u, t.negative.v)};
}

double mean_loss(const Network<float>& net, std::span<const Triplet> triplets,
                 std::span<const SceneFrames> scenes, double margin) {
  if (triplets.empty()) return 0.0;
  Network<float>::Tape tape;
  double total = 0.0;
  auto embed = [&](const Patch& p) {
    const auto out = net.forward(p.data, tape);
    return std::vector<float>(out.begin(), out.end());
  };
  for (const auto& t : triplets) {
    const auto c = crop(t, scenes);
    total += triplet_loss(embed(c.anchor), embed(c.positive), embed(c.negative), margin);
  }
  return total / static_cast<double>(triplets.size());
}

}  // namespace

double mean_triplet_loss(const EncoderModel& model, std::span<const Triplet> triplets,
                         std::span<const SceneFrames> scenes, double margin) {
  if (model.variant() == EncoderVariant::Learned) {
    return mean_loss(model.network(), triplets, scenes, margin);
  }
  if (triplets.empty()) return 0.0;
  double total = 0.0;
  for (const auto& t : triplets) {
    const auto& fa = scenes[t.scene][t.frame_a];
    const auto& fb = scenes[t.scene][t.frame_b];
    total += triplet_loss(model.encode(fa, t.anchor.u, t.anchor.v),
                          model.encode(fb, t.positive.u, t.positive.v),
                          model.encode(fb, t.negative.u, t.negative.v), margin);
  }
  return total / static_cast<double>(triplets.size());
}

TrainResult train_encoder(std::span<const Triplet> triplets, std::span<const SceneFrames> scenes,
                          const TripletTrainConfig& cfg, const Architecture& arch) {
  cfg.validate();
  require(!triplets.empty(), "train_encoder: no triplets", ErrorCode::EmptySamples);

  const std::uint64_t init_seed = stage_seed(cfg.seed, "encoder-init");
  Network<float> net(arch);
  net.initialize(init_seed);

  // Held-out split.
  std::vector<std::size_t> order(triplets.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(stage_seed(cfg.seed, "encoder-train"));
  shuffle(order.begin(), order.end(), rng);
  std::size_t heldout_count =
      static_cast<std::size_t>(std::floor(cfg.holdout_fraction * static_cast<double>(order.size())));
  if (cfg.holdout_fraction > 0.0 && heldout_count == 0 && order.size() > 1) heldout_count = 1;
  std::vector<Triplet> heldout, train;
  for (std::size_t i = 0; i < order.size(); ++i) {
    (i < heldout_count ? heldout : train).push_back(triplets[order[i]]);
  }
  // With nothing held out, model selection falls back to the training loss.
  const std::span<const Triplet> selection =
      heldout.empty() ? std::span<const Triplet>(train) : std::span<const Triplet>(heldout);

  TrainResult result{EncoderModel::learned(net, init_seed), 0.0, 0.0, 0, {}, false, 0, 0};
  result.train_triplets = train.size();
  result.heldout_triplets = heldout.size();
  result.initial_heldout_loss = mean_loss(net, selection, scenes, cfg.margin);
  result.best_heldout_loss = result.initial_heldout_loss;

  std::vector<float> best = std::vector<float>(net.parameters().begin(), net.parameters().end());
  std::vector<float> velocity(net.parameter_count(), 0.0f);
  std::vector<float> grad(net.parameter_count(), 0.0f);
  std::vector<CroppedTriplet> crops;
  std::vector<TripletInputs<float>> inputs;

  for (std::size_t epoch = 1; epoch <= cfg.epochs && !train.empty(); ++epoch) {
    shuffle(train.begin(), train.end(), rng);
    for (std::size_t start = 0; start < train.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(train.size(), start + cfg.batch_size);
      crops.clear();
      inputs.clear();
      for (std::size_t i = start; i < end; ++i) crops.push_back(crop(train[i], scenes));
      for (const auto& c : crops) {
        inputs.push_back({c.anchor.data, c.positive.data, c.negative.data});
      }
      std::fill(grad.begin(), grad.end(), 0.0f);
      const double loss =
          triplet_batch_gradient<float>(net, inputs, cfg.margin, std::span<float>(grad));
      bool finite = std::isfinite(loss);
      for (float g : grad) finite = finite && std::isfinite(g);
      if (!finite) {
        result.diverged = true;
        break;
      }
      auto params = net.parameters();
      for (std::size_t i = 0; i < params.size(); ++i) {
        velocity[i] = static_cast<float>(cfg.momentum) * velocity[i] -
                      static_cast<float>(cfg.learning_rate) * grad[i];
        params[i] += velocity[i];
      }
    }
    if (result.diverged) break;
    const double held = mean_loss(net, selection, scenes, cfg.margin);
    result.heldout_history.push_back(held);
    if (!std::isfinite(held)) {
      result.diverged = true;
      break;
    }
    if (held < result.best_heldout_loss) {
      result.best_heldout_loss = held;
      result.best_epoch = epoch;
      best.assign(net.parameters().begin(), net.parameters().end());
    }
  }
  std::copy(best.begin(), best.end(), net.parameters().begin());
  result.model = EncoderModel::learned(std::move(net), init_seed);
  return result;
}

}  // namespace fsreloc
