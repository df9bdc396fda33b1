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
#include <filesystem>
#include <span>
#include <vector>

#include "fsreloc/encoder.hpp"
#include "fsreloc/network.hpp"
#include "fsreloc/scene.hpp"

namespace fsreloc {

struct TripletTrainConfig {
  double margin = 0.4;
  /// Minimum overlap (and anchors drawn) per ordered frame pair.
  std::size_t kappa = 64;
  /// Two pixels correspond when their scene points are closer than this.
  double correspondence_threshold_m = 0.05;
  double learning_rate = 1e-3;
  double momentum = 0.9;
  std::size_t batch_size = 64;
  std::size_t epochs = 20;
  std::uint64_t seed = 0;
  /// Fraction of mined triplets held out for model selection.
  double holdout_fraction = 0.1;
  /// Negative re-sampling attempts per anchor before the anchor is skipped.
  std::size_t negative_attempts = 100;
  /// Upper bound on mined triplets kept for training (0 keeps all).
  std::size_t max_triplets = 0;

  void validate() const;
};

struct PixelCoord {
  int u = 0;
  int v = 0;
  friend bool operator==(const PixelCoord&, const PixelCoord&) = default;
};

/// Anchor in frame_a, positive and negative in frame_b, all within one scene.
struct Triplet {
  std::size_t scene = 0;
  std::size_t frame_a = 0;
  std::size_t frame_b = 0;
  PixelCoord anchor;
  PixelCoord positive;
  PixelCoord negative;
  double positive_distance = 0.0;
  double negative_distance = 0.0;
};

struct CorrespondencePair {
  std::size_t scene = 0;
  std::size_t frame_a = 0;
  PixelCoord pixel_a;
  std::size_t frame_b = 0;
  PixelCoord pixel_b;
  double world_distance = 0.0;
  bool positive = false;
};

/// Posed RGB-D frames of one scene.
using SceneFrames = std::vector<Frame>;

/// Overlap of frame `a` into frame `b`: every patch-centre pixel of `a` with
/// valid depth whose scene point reprojects to a patch-centre pixel of `b`
/// (nearest pixel) lying within `threshold_m` in the world.
struct OverlapPixel {
  PixelCoord a;
  PixelCoord b;
  double distance = 0.0;
};
std::vector<OverlapPixel> compute_overlap(const Frame& a, const Frame& b, double threshold_m);

/// Mines kappa anchor/positive/negative triplets per ordered frame pair whose
/// overlap holds at least kappa pixels. Throws EmptyOverlap when no pair in
/// any scene qualifies.
std::vector<Triplet> mine_pairs(std::span<const SceneFrames> scenes,
                                const TripletTrainConfig& cfg);

std::vector<CorrespondencePair> to_pairs(std::span<const Triplet> triplets);
/// One line per pair: scene frame_a u_a v_a frame_b u_b v_b distance label.
void write_pair_dump(const std::filesystem::path& path, std::span<const Triplet> triplets);

/// Inputs of one triplet, already cropped.
template <class T>
struct TripletInputs {
  std::span<const T> anchor;
  std::span<const T> positive;
  std::span<const T> negative;
};

/// Summed triplet loss over `batch` and its gradient with respect to every
/// network parameter (accumulated into `grad`).
template <class T>
double triplet_batch_gradient(const Network<T>& net, std::span<const TripletInputs<T>> batch,
                              double margin, std::span<T> grad) {
  typename Network<T>::Tape ta, tp, tn;
  double total = 0.0;
  const std::size_t dim = net.output_shape().size();
  std::vector<T> fa(dim), fp(dim), fn(dim), ga(dim), gp(dim), gn(dim);
  for (const auto& t : batch) {
    const auto oa = net.forward(t.anchor, ta);
    fa.assign(oa.begin(), oa.end());
    const auto op = net.forward(t.positive, tp);
    fp.assign(op.begin(), op.end());
    const auto on = net.forward(t.negative, tn);
    fn.assign(on.begin(), on.end());
    double dp = 0.0, dn = 0.0;
    for (std::size_t i = 0; i < dim; ++i) {
      dp += static_cast<double>((fa[i] - fp[i]) * (fa[i] - fp[i]));
      dn += static_cast<double>((fa[i] - fn[i]) * (fa[i] - fn[i]));
    }
    dp = std::sqrt(dp);
    dn = std::sqrt(dn);
    const double loss = dp - dn + margin;
    if (!(loss > 0.0)) continue;
    total += loss;
    // d|a-p|/da = (a-p)/|a-p|; a zero distance contributes a zero subgradient.
    const T ip = dp > 0.0 ? static_cast<T>(1.0 / dp) : T(0);
    const T in = dn > 0.0 ? static_cast<T>(1.0 / dn) : T(0);
    for (std::size_t i = 0; i < dim; ++i) {
      const T up = (fa[i] - fp[i]) * ip;
      const T un = (fa[i] - fn[i]) * in;
      ga[i] = up - un;
      gp[i] = -up;
      gn[i] = un;
    }
    net.backward(ta, ga, grad);
    net.backward(tp, gp, grad);
    net.backward(tn, gn, grad);
  }
  return total;
}

struct TrainResult {
  EncoderModel model;
  double initial_heldout_loss = 0.0;
  double best_heldout_loss = 0.0;
  std::size_t best_epoch = 0;  // 0 = the initialization
  std::vector<double> heldout_history;
  bool diverged = false;
  std::size_t train_triplets = 0;
  std::size_t heldout_triplets = 0;
};

/// Mean held-out triplet loss of a learned model over `triplets`.
double mean_triplet_loss(const EncoderModel& model, std::span<const Triplet> triplets,
                         std::span<const SceneFrames> scenes, double margin);

/// Mini-batch SGD with momentum on the summed triplet loss, starting from a
/// seeded initialization of `arch`. Returns the epoch with the lowest
/// held-out loss; a non-finite loss stops training and keeps the best model
/// seen so far (flagged `diverged`).
TrainResult train_encoder(std::span<const Triplet> triplets, std::span<const SceneFrames> scenes,
                          const TripletTrainConfig& cfg,
                          const Architecture& arch = default_encoder_architecture());

}  // namespace fsreloc
