// speak/headgen/generator.hpp

// Copyright 2026  The SPEAK Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef SPEAK_HEADGEN_GENERATOR_HPP_
#define SPEAK_HEADGEN_GENERATOR_HPP_

#include <string>
#include <vector>

#include "speak/core/nn.hpp"
#include "speak/core/ops.hpp"

namespace speak {
namespace headgen {

// Per-sample, per-channel normalization over space with external style.
template <class T>
Var<T> adain2d(const Var<T>& x, const Var<T>& gamma, const Var<T>& beta, T eps = T(1e-5)) {
  return ops::add_chanvec(ops::mul_chanvec(ops::instnorm2d(x, eps), gamma), beta);
}

struct DecoderConfig {
  index_t style_dim = 256;
  index_t fused_dim = 0;  // width of the per-frame additive condition, 0 = none
  index_t image = 64;     // output side, power of two >= 32
  index_t base = 16;      // channels at full resolution
  index_t cmax = 128;
};

inline bool power_of_two(index_t v) { return v > 0 && (v & (v - 1)) == 0; }

// Style-based image decoder: a learned 4x4 seed is repeatedly upsampled and
// convolved; every block is modulated by the style vector through adain and
// can take an additive per-channel projection of a second, per-frame
// condition. The sigmoid output keeps frames in [0,1].
template <class T>
class StyleDecoder {
 public:
  StyleDecoder(ParamStore<T>& ps, const std::string& prefix, const DecoderConfig& cfg, Rng& rng)
      : cfg_(cfg) {
    if (!power_of_two(cfg.image) || cfg.image < 32)
      throw ValidationError("decoder image size must be a power of two >= 32, got " +
                            std::to_string(cfg.image));
    index_t c_in = channels(4);
    seed_ = ps.add(prefix + ".seed", Tensor<T>::randn({c_in, 4, 4}, rng));
    for (index_t res = 8; res <= cfg.image; res *= 2) {
      const index_t c_out = channels(res);
      Block b;
      const std::string base = prefix + ".block" + std::to_string(blocks_.size());
      b.conv = nn::Conv2d<T>(ps, base + ".conv", c_in, c_out, 3, 1, 1, rng);
      b.style_w = ps.add(base + ".style.w", Tensor<T>::zeros({2 * c_out, cfg.style_dim}));
      b.style_b = ps.add(base + ".style.b", Tensor<T>::zeros({2 * c_out}));
      if (cfg.fused_dim > 0)
        b.fuse = nn::Linear<T>(ps, base + ".fuse", cfg.fused_dim, c_out, rng, true, T(0.5));
      b.ch = c_out;
      blocks_.push_back(b);
      c_in = c_out;
    }
    to_rgb_ = nn::Conv2d<T>(ps, prefix + ".to_rgb", c_in, 3, 3, 1, 1, rng);
  }

  // style [B, style_dim], fused [B, fused_dim] (empty Var if fused_dim == 0)
  // -> frames [B, 3, image, image] in [0,1]
  Var<T> operator()(const Var<T>& style, const Var<T>& fused = Var<T>()) const {
    if (style.shape().size() != 2 || style.shape()[1] != cfg_.style_dim)
      throw ShapeError("decoder style " + shape_str(style.shape()));
    const index_t B = style.shape()[0];
    if (cfg_.fused_dim > 0 &&
        (!fused.defined() || fused.shape() != Shape{B, cfg_.fused_dim}))
      throw ShapeError("decoder fused condition must be [" + std::to_string(B) + "," +
                       std::to_string(cfg_.fused_dim) + "]");

    Var<T> x = ops::reshape(
        ops::broadcast_rows(ops::reshape(seed_, {1, seed_.numel()}), B),
        {B, seed_.shape()[0], 4, 4});
    for (const auto& b : blocks_) {
      x = b.conv(ops::upsample2x(x));
      Var<T> st = ops::linear(style, b.style_w, b.style_b);
      Var<T> gamma = ops::add_scalar(ops::slice_cols(st, 0, b.ch), T(1));
      Var<T> beta = ops::slice_cols(st, b.ch, 2 * b.ch);
      x = adain2d(x, gamma, beta);
      if (cfg_.fused_dim > 0) x = ops::add_chanvec(x, b.fuse(fused));
      x = ops::silu(x);
    }
    return ops::sigmoid(to_rgb_(x));
  }

  const DecoderConfig& config() const { return cfg_; }

 private:
  struct Block {
    nn::Conv2d<T> conv;
    nn::Linear<T> fuse;
    Var<T> style_w, style_b;
    index_t ch = 0;
  };
  index_t channels(index_t res) const {
    const index_t c = cfg_.base * cfg_.image / res;
    return c > cfg_.cmax ? cfg_.cmax : c;
  }
  DecoderConfig cfg_;
  Var<T> seed_;
  std::vector<Block> blocks_;
  nn::Conv2d<T> to_rgb_;
};

struct DiscConfig {
  index_t in_ch = 6;  // frame and identity frame, channel-concatenated
  index_t base = 16;
  int scales = 3;
};

// Patch discriminator bank: the same stack shape scores the pair at full,
// half, and quarter resolution, each scale with its own weights.
template <class T>
class MultiScaleDisc {
 public:
  MultiScaleDisc(ParamStore<T>& ps, const std::string& prefix, const DiscConfig& cfg, Rng& rng)
      : cfg_(cfg) {
    for (int s = 0; s < cfg.scales; ++s) {
      const std::string base = prefix + ".scale" + std::to_string(s);
      Scale sc;
      sc.c0 = nn::Conv2d<T>(ps, base + ".c0", cfg.in_ch, cfg.base, 4, 2, 1, rng);
      sc.c1 = nn::Conv2d<T>(ps, base + ".c1", cfg.base, 2 * cfg.base, 4, 2, 1, rng);
      sc.c2 = nn::Conv2d<T>(ps, base + ".c2", 2 * cfg.base, 4 * cfg.base, 4, 2, 1, rng);
      sc.out = nn::Conv2d<T>(ps, base + ".out", 4 * cfg.base, 1, 3, 1, 1, rng);
      scales_.push_back(sc);
    }
  }

  // frame and paired identity frame [B,3,H,W] -> one logit map per scale,
  // strictly decreasing spatial size
  std::vector<Var<T>> operator()(const Var<T>& frame, const Var<T>& identity) const {
    if (frame.shape().size() != 4 || frame.shape() != identity.shape())
      throw ShapeError("discriminator pair " + shape_str(frame.shape()) + " vs " +
                       shape_str(identity.shape()));
    Var<T> x = ops::concat_chan(std::vector<Var<T>>{frame, identity});
    std::vector<Var<T>> logits;
    for (const auto& sc : scales_) {
      Var<T> h = ops::lrelu(sc.c0(x));
      h = ops::lrelu(sc.c1(h));
      h = ops::lrelu(sc.c2(h));
      logits.push_back(sc.out(h));
      if (&sc != &scales_.back()) x = ops::avgpool2d2(x);
    }
    return logits;
  }

  const DiscConfig& config() const { return cfg_; }

 private:
  struct Scale {
    nn::Conv2d<T> c0, c1, c2, out;
  };
  DiscConfig cfg_;
  std::vector<Scale> scales_;
};

}  // namespace headgen
}  // namespace speak

#endif  // SPEAK_HEADGEN_GENERATOR_HPP_
