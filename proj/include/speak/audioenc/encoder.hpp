// speak/audioenc/encoder.hpp

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

#ifndef SPEAK_AUDIOENC_ENCODER_HPP_
#define SPEAK_AUDIOENC_ENCODER_HPP_

#include <cmath>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "speak/core/nn.hpp"
#include "speak/core/ops.hpp"

namespace speak {
namespace audioenc {

inline constexpr index_t kSampleRate = 16000;
inline constexpr index_t kTotalStride = 320;  // conv strides 5*4*4*2*2
inline constexpr index_t kMinSamples = 2 * kTotalStride;

// Output length of the stride-320 conv stack followed by pairwise pooling.
// Callers must pass n_samples >= kMinSamples.
inline index_t count_output_frames(index_t n_samples) {
  return (n_samples / kTotalStride) / 2;
}

// Standard sinusoidal position table, [n, d].
template <class T>
Tensor<T> sinusoidal_positions(index_t n, index_t d) {
  Tensor<T> pe = Tensor<T>::zeros({n, d});
  for (index_t p = 0; p < n; ++p)
    for (index_t i = 0; i < d; i += 2) {
      const double f = std::pow(10000.0, -static_cast<double>(i) / static_cast<double>(d));
      pe[p * d + i] = static_cast<T>(std::sin(p * f));
      if (i + 1 < d) pe[p * d + i + 1] = static_cast<T>(std::cos(p * f));
    }
  return pe;
}

template <class T>
struct LayerNorm {
  Var<T> g, b;

  LayerNorm() = default;
  LayerNorm(ParamStore<T>& ps, const std::string& name, index_t dim) {
    g = ps.add(name + ".g", Tensor<T>::full({dim}, T(1)));
    b = ps.add(name + ".b", Tensor<T>::zeros({dim}));
  }

  Var<T> operator()(const Var<T>& x) const {
    return ops::add_rowvec(ops::mul_rowvec(ops::rownorm(x, T(1e-5)), g), b);
  }
};

// Pre-norm encoder block over [T, dim] rows.
template <class T>
struct TransformerBlock {
  nn::Linear<T> qkv, proj, fc1, fc2;
  LayerNorm<T> ln1, ln2;
  int heads = 1;
  index_t dim = 0;

  TransformerBlock() = default;
  TransformerBlock(ParamStore<T>& ps, const std::string& name, index_t d, int nheads,
                   index_t hidden, Rng& rng)
      : qkv(ps, name + ".qkv", d, 3 * d, rng),
        proj(ps, name + ".proj", d, d, rng, true, T(0.5)),
        fc1(ps, name + ".fc1", d, hidden, rng),
        fc2(ps, name + ".fc2", hidden, d, rng, true, T(0.5)),
        ln1(ps, name + ".ln1", d),
        ln2(ps, name + ".ln2", d),
        heads(nheads),
        dim(d) {
    if (d % nheads != 0) throw ValidationError("transformer width not divisible by heads");
  }

  Var<T> operator()(Var<T> x) const {
    const index_t hd = dim / heads;
    Var<T> packed = qkv(ln1(x));
    std::vector<Var<T>> outs;
    for (int a = 0; a < heads; ++a) {
      Var<T> q = ops::slice_cols(packed, a * hd, (a + 1) * hd);
      Var<T> k = ops::slice_cols(packed, dim + a * hd, dim + (a + 1) * hd);
      Var<T> v = ops::slice_cols(packed, 2 * dim + a * hd, 2 * dim + (a + 1) * hd);
      Var<T> att = ops::softmax_rows(
          ops::mul_scalar(ops::matmul(q, ops::transpose(k)), T(1.0 / std::sqrt(double(hd)))));
      outs.push_back(ops::matmul(att, v));
    }
    x = ops::add(x, proj(ops::concat_cols(outs)));
    return ops::add(x, fc2(ops::silu(fc1(ln2(x)))));
  }
};

struct AudioEncoderConfig {
  index_t dim = 128;       // conv channels and transformer width
  int heads = 4;
  int layers = 2;
  index_t mlp_hidden = 0;  // 0 means 4 * dim
};

// Raw waveform -> per-video-frame content vectors. A strided conv stack
// brings 16 kHz samples down to 50 vectors per second, a transformer encoder
// contextualizes them, and averaging consecutive pairs lands on the 25 fps
// video rate. Each conv pads on the left by kernel - stride with edge
// replication, so an output position never looks ahead, stack output length
// is floor(n / 320), and a constant signal stays constant at every frame.
template <class T>
class AudioEncoder {
 public:
  AudioEncoder(ParamStore<T>& ps, const std::string& prefix, const AudioEncoderConfig& cfg,
               Rng& rng)
      : cfg_(cfg) {
    const index_t c = cfg.dim;
    const index_t in[5] = {1, c, c, c, c};
    for (int i = 0; i < 5; ++i)
      conv_[i] = nn::Conv1d<T>(ps, prefix + ".conv" + std::to_string(i), in[i], c, kKernel[i],
                               kStride[i], 0, rng);
    const index_t hidden = cfg.mlp_hidden > 0 ? cfg.mlp_hidden : 4 * cfg.dim;
    for (int i = 0; i < cfg.layers; ++i)
      blocks_.push_back(TransformerBlock<T>(ps, prefix + ".block" + std::to_string(i), cfg.dim,
                                            cfg.heads, hidden, rng));
    ln_out_ = LayerNorm<T>(ps, prefix + ".ln_out", cfg.dim);
  }

  // [n] samples -> [floor(n/320), dim] at 50 vectors/s
  Var<T> tcn(const Var<T>& wave) const {
    if (wave.shape().size() != 1)
      throw ShapeError("tcn expects [n], got " + shape_str(wave.shape()));
    Var<T> x = ops::reshape(wave, {1, 1, wave.numel()});
    for (int i = 0; i < 5; ++i)
      x = ops::silu(conv_[i](ops::replicate_pad_left1d(x, kKernel[i] - kStride[i])));
    const index_t frames = x.shape()[2];
    return ops::transpose(ops::reshape(x, {cfg_.dim, frames}));
  }

  // [n] samples -> [count_output_frames(n), dim] at the video frame rate
  Var<T> operator()(const Var<T>& wave) const {
    if (wave.numel() < kMinSamples)
      throw ValidationError("waveform too short: " + std::to_string(wave.numel()) +
                            " samples, need " + std::to_string(kMinSamples));
    Var<T> x = tcn(wave);
    x = ops::add(x, ops::constant(sinusoidal_positions<T>(x.shape()[0], cfg_.dim)));
    for (const auto& b : blocks_) x = b(x);
    x = ln_out_(x);
    // average consecutive rows: [2m, d] -> [m, 2d] -> mean of the halves
    const index_t m = x.shape()[0] / 2;
    Var<T> pairs = ops::reshape(ops::slice_front(x, 0, 2 * m), {m, 2 * cfg_.dim});
    return ops::mul_scalar(ops::add(ops::slice_cols(pairs, 0, cfg_.dim),
                                    ops::slice_cols(pairs, cfg_.dim, 2 * cfg_.dim)),
                           T(0.5));
  }

  // eval-mode convenience for ingested audio
  Tensor<T> extract_features(const std::vector<T>& samples, int sample_rate) const {
    if (sample_rate != kSampleRate)
      throw ValidationError("audio must be " + std::to_string(kSampleRate) + " Hz, got " +
                            std::to_string(sample_rate));
    if (static_cast<index_t>(samples.size()) < kMinSamples)
      throw ValidationError("waveform too short: " + std::to_string(samples.size()) +
                            " samples, need " + std::to_string(kMinSamples));
    NoGradGuard ng;
    Tensor<T> wave({static_cast<index_t>(samples.size())},
                   std::make_shared<std::vector<T>>(samples));
    return (*this)(Var<T>::leaf(std::move(wave))).val();
  }

  const AudioEncoderConfig& config() const { return cfg_; }

 private:
  static constexpr index_t kKernel[5] = {10, 8, 4, 4, 2};
  static constexpr index_t kStride[5] = {5, 4, 4, 2, 2};
  AudioEncoderConfig cfg_;
  nn::Conv1d<T> conv_[5];
  std::vector<TransformerBlock<T>> blocks_;
  LayerNorm<T> ln_out_;
};

}  // namespace audioenc
}  // namespace speak

#endif  // SPEAK_AUDIOENC_ENCODER_HPP_
