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

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "fsreloc/error.hpp"
#include "fsreloc/rng.hpp"

namespace fsreloc {

/// Channel-major tensor shape.
struct Shape {
  int channels = 0;
  int height = 1;
  int width = 1;

  std::size_t size() const {
    return static_cast<std::size_t>(channels) * static_cast<std::size_t>(height) *
           static_cast<std::size_t>(width);
  }
  friend bool operator==(const Shape&, const Shape&) = default;
};

enum class LayerKind : std::uint32_t { Conv = 0, Dense = 1 };

/// One layer of a feed-forward stack. Convolutions are unpadded ("valid").
struct LayerSpec {
  LayerKind kind = LayerKind::Dense;
  int outputs = 0;  // output channels (conv) or units (dense)
  int kernel = 1;
  int stride = 1;
  bool elu = false;

  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

struct Architecture {
  Shape input;
  std::vector<LayerSpec> layers;

  friend bool operator==(const Architecture&, const Architecture&) = default;
};

/// Small convolutional/dense network with hand-written backpropagation. The
/// scalar type is a template parameter so gradient checks can run the same
/// code in double precision.
template <class T>
class Network {
 public:
  /// Forward activations kept for the backward pass.
  struct Tape {
    std::vector<std::vector<T>> pre;   // pre-activation per layer
    std::vector<std::vector<T>> post;  // post-activation per layer
    std::vector<T> input;
  };

  Network() = default;

  explicit Network(Architecture arch) : arch_(std::move(arch)) {
    require(arch_.input.size() > 0, "Network: empty input shape");
    Shape s = arch_.input;
    std::size_t offset = 0;
    for (const auto& spec : arch_.layers) {
      require(spec.outputs > 0, "Network: layer with no outputs");
      Layer layer;
      layer.spec = spec;
      layer.in = s;
      if (spec.kind == LayerKind::Conv) {
        require(spec.kernel >= 1 && spec.stride >= 1, "Network: bad conv geometry");
        require(s.height >= spec.kernel && s.width >= spec.kernel,
                "Network: conv kernel larger than input");
        layer.out = {spec.outputs, (s.height - spec.kernel) / spec.stride + 1,
                     (s.width - spec.kernel) / spec.stride + 1};
        layer.fan_in = static_cast<std::size_t>(s.channels) * spec.kernel * spec.kernel;
        layer.fan_out = static_cast<std::size_t>(spec.outputs) * spec.kernel * spec.kernel;
      } else {
        layer.out = {spec.outputs, 1, 1};
        layer.fan_in = s.size();
        layer.fan_out = static_cast<std::size_t>(spec.outputs);
      }
      layer.weight_offset = offset;
      layer.weight_count = layer.fan_in * static_cast<std::size_t>(spec.outputs);
      layer.bias_offset = offset + layer.weight_count;
      offset += layer.weight_count + static_cast<std::size_t>(spec.outputs);
      layers_.push_back(layer);
      s = layer.out;
    }
    params_.assign(offset, T(0));
  }

  const Architecture& architecture() const { return arch_; }
  Shape output_shape() const { return layers_.empty() ? arch_.input : layers_.back().out; }
  std::size_t parameter_count() const { return params_.size(); }
  std::span<T> parameters() { return params_; }
  std::span<const T> parameters() const { return params_; }

  /// Glorot-uniform weights, zero biases.
  void initialize(std::uint64_t seed) {
    Rng rng(seed);
    for (const auto& layer : layers_) {
      const double bound = std::sqrt(6.0 / static_cast<double>(layer.fan_in + layer.fan_out));
      for (std::size_t i = 0; i < layer.weight_count; ++i) {
        params_[layer.weight_offset + i] = static_cast<T>(uniform_real(rng, -bound, bound));
      }
      for (int i = 0; i < layer.spec.outputs; ++i) params_[layer.bias_offset + i] = T(0);
    }
  }

  /// Runs the network and records activations in `tape`. Returns the output.
  std::span<const T> forward(std::span<const T> input, Tape& tape) const {
    require(input.size() == arch_.input.size(), "Network: input size mismatch");
    tape.input.assign(input.begin(), input.end());
    tape.pre.resize(layers_.size());
    tape.post.resize(layers_.size());
    const T* x = tape.input.data();
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      const Layer& layer = layers_[l];
      auto& pre = tape.pre[l];
      auto& post = tape.post[l];
      pre.assign(layer.out.size(), T(0));
      if (layer.spec.kind == LayerKind::Conv) {
        conv_forward(layer, x, pre.data());
      } else {
        dense_forward(layer, x, pre.data());
      }
      post.resize(pre.size());
      for (std::size_t i = 0; i < pre.size(); ++i) {
        post[i] = layer.spec.elu ? elu(pre[i]) : pre[i];
      }
      x = post.data();
    }
    if (layers_.empty()) return tape.input;
    return tape.post.back();
  }

  /// Accumulates d(loss)/d(parameters) into `grad_params` given
  /// d(loss)/d(output) for the activations in `tape`.
  void backward(const Tape& tape, std::span<const T> grad_output,
                std::span<T> grad_params) const {
    require(grad_params.size() == params_.size(), "Network: gradient size mismatch");
    if (layers_.empty()) return;
    std::vector<T> grad(grad_output.begin(), grad_output.end());
    std::vector<T> grad_in;
    for (std::size_t l = layers_.size(); l-- > 0;) {
      const Layer& layer = layers_[l];
      const auto& pre = tape.pre[l];
      const auto& post = tape.post[l];
      if (layer.spec.elu) {
        // d elu(x)/dx = 1 for x > 0, exp(x) = elu(x) + 1 otherwise.
        for (std::size_t i = 0; i < grad.size(); ++i) {
          if (pre[i] <= T(0)) grad[i] *= post[i] + T(1);
        }
      }
      const T* x = l == 0 ? tape.input.data() : tape.post[l - 1].data();
      const bool need_input_grad = l > 0;
      grad_in.assign(need_input_grad ? layer.in.size() : 0, T(0));
      if (layer.spec.kind == LayerKind::Conv) {
        conv_backward(layer, x, grad.data(), grad_params.data(),
                      need_input_grad ? grad_in.data() : nullptr);
      } else {
        dense_backward(layer, x, grad.data(), grad_params.data(),
                       need_input_grad ? grad_in.data() : nullptr);
      }
      grad.swap(grad_in);
    }
  }

 private:
  struct Layer {
    LayerSpec spec;
    Shape in;
    Shape out;
    std::size_t fan_in = 0;
    std::size_t fan_out = 0;
    std::size_t weight_offset = 0;
    std::size_t weight_count = 0;
    std::size_t bias_offset = 0;
  };

  static T elu(T x) { return x > T(0) ? x : std::expm1(x); }

  // Conv weights are laid out [out][in][ky][kx].
  void conv_forward(const Layer& L, const T* x, T* y) const {
    const int k = L.spec.kernel, s = L.spec.stride;
    const int ic = L.in.channels, ih = L.in.height, iw = L.in.width;
    const int oh = L.out.height, ow = L.out.width;
    const T* w = params_.data() + L.weight_offset;
    const T* b = params_.data() + L.bias_offset;
    for (int o = 0; o < L.out.channels; ++o) {
      T* yo = y + static_cast<std::size_t>(o) * oh * ow;
      for (int i = 0; i < oh * ow; ++i) yo[i] = b[o];
      for (int c = 0; c < ic; ++c) {
        const T* xc = x + static_cast<std::size_t>(c) * ih * iw;
        const T* wc = w + (static_cast<std::size_t>(o) * ic + c) * k * k;
        for (int ky = 0; ky < k; ++ky) {
          for (int kx = 0; kx < k; ++kx) {
            const T wv = wc[ky * k + kx];
            for (int oy = 0; oy < oh; ++oy) {
              const T* row = xc + static_cast<std::size_t>(oy * s + ky) * iw + kx;
              T* yrow = yo + static_cast<std::size_t>(oy) * ow;
              for (int ox = 0; ox < ow; ++ox) yrow[ox] += wv * row[ox * s];
            }
          }
        }
      }
    }
  }

  void conv_backward(const Layer& L, const T* x, const T* gy, T* gparams, T* gx) const {
    const int k = L.spec.kernel, s = L.spec.stride;
    const int ic = L.in.channels, ih = L.in.height, iw = L.in.width;
    const int oh = L.out.height, ow = L.out.width;
    const T* w = params_.data() + L.weight_offset;
    T* gw = gparams + L.weight_offset;
    T* gb = gparams + L.bias_offset;
    for (int o = 0; o < L.out.channels; ++o) {
      const T* go = gy + static_cast<std::size_t>(o) * oh * ow;
      T bias_grad = T(0);
      for (int i = 0; i < oh * ow; ++i) bias_grad += go[i];
      gb[o] += bias_grad;
      for (int c = 0; c < ic; ++c) {
        const T* xc = x + static_cast<std::size_t>(c) * ih * iw;
        T* gxc = gx ? gx + static_cast<std::size_t>(c) * ih * iw : nullptr;
        const std::size_t wbase = (static_cast<std::size_t>(o) * ic + c) * k * k;
        for (int ky = 0; ky < k; ++ky) {
          for (int kx = 0; kx < k; ++kx) {
            const T wv = w[wbase + ky * k + kx];
            T acc = T(0);
            for (int oy = 0; oy < oh; ++oy) {
              const std::size_t in_row = static_cast<std::size_t>(oy * s + ky) * iw + kx;
              const T* grow = go + static_cast<std::size_t>(oy) * ow;
              const T* row = xc + in_row;
              for (int ox = 0; ox < ow; ++ox) acc += grow[ox] * row[ox * s];
              if (gxc) {
                T* gxrow = gxc + in_row;
                for (int ox = 0; ox < ow; ++ox) gxrow[ox * s] += wv * grow[ox];
              }
            }
            gw[wbase + ky * k + kx] += acc;
          }
        }
      }
    }
  }

  // Dense weights are laid out [out][in].
  void dense_forward(const Layer& L, const T* x, T* y) const {
    const std::size_t n = L.fan_in;
    const T* w = params_.data() + L.weight_offset;
    const T* b = params_.data() + L.bias_offset;
    for (int o = 0; o < L.spec.outputs; ++o) {
      const T* wo = w + static_cast<std::size_t>(o) * n;
      T acc = b[o];
      for (std::size_t i = 0; i < n; ++i) acc += wo[i] * x[i];
      y[o] = acc;
    }
  }

  void dense_backward(const Layer& L, const T* x, const T* gy, T* gparams, T* gx) const {
    const std::size_t n = L.fan_in;
    const T* w = params_.data() + L.weight_offset;
    T* gw = gparams + L.weight_offset;
    T* gb = gparams + L.bias_offset;
    for (int o = 0; o < L.spec.outputs; ++o) {
      const T g = gy[o];
      gb[o] += g;
      if (g == T(0)) continue;
      T* gwo = gw + static_cast<std::size_t>(o) * n;
      const T* wo = w + static_cast<std::size_t>(o) * n;
      for (std::size_t i = 0; i < n; ++i) gwo[i] += g * x[i];
      if (gx) {
        for (std::size_t i = 0; i < n; ++i) gx[i] += g * wo[i];
      }
    }
  }

  Architecture arch_;
  std::vector<Layer> layers_;
  std::vector<T> params_;
};

}  // namespace fsreloc
