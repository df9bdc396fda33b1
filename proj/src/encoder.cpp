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


#include "fsreloc/encoder.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include "fsreloc/binary_io.hpp"
#include "fsreloc/error.hpp"
#include "fsreloc/rng.hpp"

namespace fsreloc {

namespace {

constexpr std::uint32_t kModelVersion = 1;
constexpr char kModelMagic[4] = {'F', 'E', 'N', 'C'};

Shape patch_shape() { return {kPatchChannels, kPatchSize, kPatchSize}; }

}  // namespace

Patch::Patch(std::vector<float> values) : data(std::move(values)) {
  require(data.size() == kSize, "Patch: expected 41x41x3 values", ErrorCode::DimensionMismatch);
  for (float x : data) require(x >= 0.0f && x <= 1.0f, "Patch: values must lie in [0, 1]");
}

Patch extract_patch(const RgbImage& image, int u, int v) {
  require(patch_fits(u, v, image.width, image.height),
          "extract_patch: center too close to the border");
  Patch p;
  const int u0 = u - kPatchRadius, v0 = v - kPatchRadius;
  for (int c = 0; c < kPatchChannels; ++c) {
    float* dst = p.data.data() + static_cast<std::size_t>(c) * kPatchSize * kPatchSize;
    for (int y = 0; y < kPatchSize; ++y) {
      for (int x = 0; x < kPatchSize; ++x) {
        dst[y * kPatchSize + x] = static_cast<float>(image.at(u0 + x, v0 + y, c)) / 255.0f;
      }
    }
  }
  return p;
}

const char* to_string(EncoderVariant v) {
  switch (v) {
    case EncoderVariant::Learned: return "learned";
    case EncoderVariant::Baseline: return "baseline";
    case EncoderVariant::Oracle: return "oracle";
  }
  return "unknown";
}

Architecture default_encoder_architecture() {
  Architecture a;
  a.input = patch_shape();
  a.layers = {
      {LayerKind::Conv, 8, 3, 2, true},   {LayerKind::Conv, 16, 3, 2, true},
      {LayerKind::Conv, 32, 3, 2, true},  {LayerKind::Dense, 64, 1, 1, true},
      {LayerKind::Dense, 32, 1, 1, true}, {LayerKind::Dense, kDescriptorDim, 1, 1, false},
  };
  return a;
}

EncoderModel EncoderModel::learned(const Architecture& arch, std::uint64_t seed) {
  Network<float> net(arch);
  net.initialize(seed);
  return learned(std::move(net), seed);
}

EncoderModel EncoderModel::learned(Network<float> net, std::uint64_t seed) {
  require(net.architecture().input == patch_shape(), "learned encoder: input must be 3x41x41",
          ErrorCode::DimensionMismatch);
  require(net.output_shape().size() == kDescriptorDim, "learned encoder: output must be 16-d",
          ErrorCode::DimensionMismatch);
  EncoderModel m;
  m.variant_ = EncoderVariant::Learned;
  m.seed_ = seed;
  m.net_ = std::move(net);
  return m;
}

EncoderModel EncoderModel::baseline(std::uint64_t seed) {
  Architecture arch;
  arch.input = patch_shape();
  arch.layers = {{LayerKind::Dense, kDescriptorDim, 1, 1, false}};
  EncoderModel m;
  m.variant_ = EncoderVariant::Baseline;
  m.seed_ = seed;
  m.net_ = Network<float>(arch);
  Rng rng(seed);
  auto params = m.net_.parameters();
  const std::size_t weights = Patch::kSize * kDescriptorDim;
  const double scale = 1.0 / std::sqrt(static_cast<double>(Patch::kSize));
  for (std::size_t i = 0; i < weights; ++i) {
    params[i] = static_cast<float>(standard_normal(rng) * scale);
  }
  return m;
}

EncoderModel EncoderModel::oracle(double noise_sigma, std::uint64_t seed) {
  require(noise_sigma >= 0.0 && std::isfinite(noise_sigma), "oracle encoder: noise must be >= 0");
  EncoderModel m;
  m.variant_ = EncoderVariant::Oracle;
  m.seed_ = seed;
  m.oracle_noise_ = noise_sigma;
  return m;
}

Descriptor EncoderModel::encode(const Patch& patch) const {
  require(patch.data.size() == Patch::kSize, "encode: wrong patch shape",
          ErrorCode::DimensionMismatch);
  require(variant_ != EncoderVariant::Oracle, "encode: the oracle needs frame geometry");
  require(net_.output_shape().size() == kDescriptorDim, "encode: model has no network",
          ErrorCode::DimensionMismatch);
  thread_local Network<float>::Tape tape;
  std::span<const float> input = patch.data;
  std::vector<float> centered;
  if (variant_ == EncoderVariant::Baseline) {
    centered = patch.data;
    const std::size_t plane = static_cast<std::size_t>(kPatchSize) * kPatchSize;
    for (int c = 0; c < kPatchChannels; ++c) {
      double mean = 0.0;
      for (std::size_t i = 0; i < plane; ++i) mean += centered[c * plane + i];
      mean /= static_cast<double>(plane);
      for (std::size_t i = 0; i < plane; ++i) {
        centered[c * plane + i] -= static_cast<float>(mean);
      }
    }
    input = centered;
  }
  const auto out = net_.forward(input, tape);
  Descriptor d;
  for (int i = 0; i < kDescriptorDim; ++i) d[i] = out[i];
  return d;
}

Descriptor EncoderModel::encode(const Frame& frame, int u, int v) const {
  if (variant_ != EncoderVariant::Oracle) return encode(extract_patch(frame.rgb, u, v));
  require(frame.depth && frame.pose, "oracle encoder: frame needs depth and pose");
  require(u >= 0 && v >= 0 && u < frame.depth->width && v < frame.depth->height,
          "oracle encoder: pixel outside the image");
  require(frame.depth->valid(u, v), "oracle encoder: invalid depth at pixel");
  const WorldPoint p = backproject(Pixel(u, v), frame.depth->at(u, v), *frame.pose,
                                   frame.intrinsics);
  Descriptor d{};
  for (int i = 0; i < 3; ++i) d[i] = static_cast<float>(p[i]);
  if (oracle_noise_ > 0.0) {
    // Noise is a pure function of (seed, frame, pixel).
    std::uint64_t key = stream_seed(seed_, fnv1a64(frame.id.to_string()));
    key = stream_seed(key, static_cast<std::uint64_t>(v) * 65536u + static_cast<std::uint64_t>(u));
    Rng rng(key);
    for (int i = 0; i < 3; ++i) d[i] += static_cast<float>(oracle_noise_ * standard_normal(rng));
  }
  return d;
}

double descriptor_distance(const Descriptor& a, const Descriptor& b) {
  double s = 0.0;
  for (int i = 0; i < kDescriptorDim; ++i) {
    const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    s += d * d;
  }
  return std::sqrt(s);
}

std::vector<std::uint8_t> EncoderModel::serialize() const {
  ByteWriter w;
  w.bytes(kModelMagic, 4);
  w.u32(kModelVersion);
  w.u32(static_cast<std::uint32_t>(variant_));
  w.u64(seed_);
  const Architecture& arch = net_.architecture();
  if (variant_ == EncoderVariant::Oracle) {
    w.u32(0);
    w.u32(0);
    w.u32(0);
    w.u32(0);
    w.u64(1);
    w.f32(static_cast<float>(oracle_noise_));
    return w.take();
  }
  w.u32(static_cast<std::uint32_t>(arch.input.channels));
  w.u32(static_cast<std::uint32_t>(arch.input.height));
  w.u32(static_cast<std::uint32_t>(arch.input.width));
  w.u32(static_cast<std::uint32_t>(arch.layers.size()));
  for (const auto& l : arch.layers) {
    w.u32(static_cast<std::uint32_t>(l.kind));
    w.u32(static_cast<std::uint32_t>(l.outputs));
    w.u32(static_cast<std::uint32_t>(l.kernel));
    w.u32(static_cast<std::uint32_t>(l.stride));
    w.u32(l.elu ? 1u : 0u);
  }
  const auto params = net_.parameters();
  w.u64(params.size());
  for (float p : params) w.f32(p);
  return w.take();
}

EncoderModel EncoderModel::deserialize(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  char magic[4];
  r.bytes(magic, 4);
  if (std::memcmp(magic, kModelMagic, 4) != 0) {
    throw Error(ErrorCode::BadFormat, "model: bad magic (expected FENC)");
  }
  const std::uint32_t version = r.u32();
  if (version != kModelVersion) {
    throw Error(ErrorCode::BadFormat, "model: unsupported version " + std::to_string(version));
  }
  const std::uint32_t variant = r.u32();
  if (variant > 2) throw Error(ErrorCode::BadFormat, "model: unknown variant tag");
  const std::uint64_t seed = r.u64();
  Architecture arch;
  arch.input.channels = static_cast<int>(r.u32());
  arch.input.height = static_cast<int>(r.u32());
  arch.input.width = static_cast<int>(r.u32());
  const std::uint32_t layer_count = r.u32();
  if (layer_count > 64) throw Error(ErrorCode::BadFormat, "model: implausible layer count");
  for (std::uint32_t i = 0; i < layer_count; ++i) {
    LayerSpec l;
    const std::uint32_t kind = r.u32();
    if (kind > 1) throw Error(ErrorCode::BadFormat, "model: unknown layer kind");
    l.kind = static_cast<LayerKind>(kind);
    l.outputs = static_cast<int>(r.u32());
    l.kernel = static_cast<int>(r.u32());
    l.stride = static_cast<int>(r.u32());
    l.elu = r.u32() != 0;
    arch.layers.push_back(l);
  }
  const std::uint64_t count = r.u64();
  if (count > r.remaining() / 4) throw Error(ErrorCode::BadFormat, "model: truncated weights");
  std::vector<float> weights(count);
  for (auto& x : weights) {
    x = r.f32();
    if (!std::isfinite(x)) throw Error(ErrorCode::BadFormat, "model: non-finite weight");
  }
  if (r.remaining() != 0) throw Error(ErrorCode::BadFormat, "model: trailing bytes");

  const auto tag = static_cast<EncoderVariant>(variant);
  if (tag == EncoderVariant::Oracle) {
    if (count != 1) throw Error(ErrorCode::BadFormat, "model: oracle expects one parameter");
    return oracle(weights[0], seed);
  }
  EncoderModel m;
  try {
    Network<float> net(arch);
    if (net.parameter_count() != count) {
      throw Error(ErrorCode::BadFormat, "model: weight count does not match architecture");
    }
    std::copy(weights.begin(), weights.end(), net.parameters().begin());
    if (tag == EncoderVariant::Learned) return learned(std::move(net), seed);
    m = baseline(seed);
    if (!(net.architecture() == m.net_.architecture())) {
      throw Error(ErrorCode::BadFormat, "model: baseline architecture mismatch");
    }
    m.net_ = std::move(net);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::BadFormat) throw;
    throw Error(ErrorCode::BadFormat, std::string("model: ") + e.what());
  }
  return m;
}

void EncoderModel::save(const std::filesystem::path& path) const {
  write_file(path, serialize());
}

EncoderModel EncoderModel::load(const std::filesystem::path& path) {
  return deserialize(read_file(path));
}

}  // namespace fsreloc
