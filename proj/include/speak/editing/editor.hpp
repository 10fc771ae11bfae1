// speak/editing/editor.hpp

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

#ifndef SPEAK_EDITING_EDITOR_HPP_
#define SPEAK_EDITING_EDITOR_HPP_

#include <string>
#include <vector>

#include "speak/core/nn.hpp"
#include "speak/core/ops.hpp"

namespace speak {
namespace editing {

// Per-sample channel normalization with an external style:
// (x - mean) / sqrt(var + eps) * gamma + beta, population variance over
// the channel axis. All three arrays are [B, C].
template <class T>
Var<T> adain(const Var<T>& x, const Var<T>& gamma, const Var<T>& beta, T eps = T(1e-5)) {
  if (x.shape().size() != 2 || gamma.shape() != x.shape() || beta.shape() != x.shape())
    throw ShapeError("adain: x " + shape_str(x.shape()) + " gamma " + shape_str(gamma.shape()) +
                     " beta " + shape_str(beta.shape()));
  return ops::add(ops::mul(ops::rownorm(x, eps), gamma), beta);
}

struct EditorConfig {
  index_t audio_dim = 128;  // per-frame speech feature width
  index_t code_dim = 128;   // width of each facial code
  index_t style_dim = 256;  // fused output width
  index_t trunk = 256;      // fully connected block width
  int blocks = 4;
};

// Fuses per-frame speech content with the emotion code. The emotion code
// rides in the trunk itself (concatenated with the audio vector) so the
// blocks can align it with mouth motion, while identity, pose, and emotion
// together steer each block from the side through adain. Style projections
// start at zero so conditioning is exactly identity at step 0, and the
// per-channel noise scales start at zero so fresh models are deterministic.
template <class T>
class Editor {
 public:
  Editor(ParamStore<T>& ps, const std::string& prefix, const EditorConfig& cfg, Rng& rng)
      : cfg_(cfg) {
    const index_t w = cfg.trunk, cond = 3 * cfg.code_dim;
    index_t in = cfg.audio_dim + cfg.code_dim;
    for (int i = 0; i < cfg.blocks; ++i) {
      const std::string base = prefix + ".block" + std::to_string(i);
      Block b;
      b.fc = nn::Linear<T>(ps, base + ".fc", in, w, rng);
      b.noise_scale = ps.add(base + ".noise", Tensor<T>::zeros({w}));
      b.style_w = ps.add(base + ".style.w", Tensor<T>::zeros({2 * w, cond}));
      b.style_b = ps.add(base + ".style.b", Tensor<T>::zeros({2 * w}));
      blocks_.push_back(b);
      in = w;
    }
    out_ = nn::Linear<T>(ps, prefix + ".out", w, cfg.style_dim, rng);
  }

  // audio [T, audio_dim], emotion [code_dim], condition [T, 3*code_dim]
  // -> fused styles [T, style_dim]. Each frame depends only on its own row.
  Var<T> operator()(const Var<T>& audio, const Var<T>& emotion, const Var<T>& condition,
                    Rng& noise_rng) const {
    if (audio.shape().size() != 2 || audio.shape()[1] != cfg_.audio_dim)
      throw ShapeError("edit: audio " + shape_str(audio.shape()));
    if (emotion.shape() != Shape{cfg_.code_dim})
      throw ShapeError("edit: emotion " + shape_str(emotion.shape()));
    if (condition.shape().size() != 2 || condition.shape()[1] != 3 * cfg_.code_dim)
      throw ShapeError("edit: condition " + shape_str(condition.shape()));
    const index_t frames = audio.shape()[0];
    if (condition.shape()[0] != frames)
      throw ShapeError("edit: " + std::to_string(frames) + " audio frames vs " +
                       std::to_string(condition.shape()[0]) + " condition frames");

    Var<T> emo = ops::broadcast_rows(ops::reshape(emotion, {1, cfg_.code_dim}), frames);
    Var<T> x = ops::concat_cols(std::vector<Var<T>>{audio, emo});
    for (const auto& b : blocks_) {
      x = b.fc(x);
      Var<T> noise = ops::constant(Tensor<T>::randn({frames, cfg_.trunk}, noise_rng));
      x = ops::add(x, ops::mul_rowvec(noise, b.noise_scale));
      Var<T> style = ops::linear(condition, b.style_w, b.style_b);
      Var<T> gamma = ops::add_scalar(ops::slice_cols(style, 0, cfg_.trunk), T(1));
      Var<T> beta = ops::slice_cols(style, cfg_.trunk, 2 * cfg_.trunk);
      x = ops::silu(adain(x, gamma, beta));
    }
    return out_(x);
  }

  const EditorConfig& config() const { return cfg_; }

 private:
  struct Block {
    nn::Linear<T> fc;
    Var<T> noise_scale, style_w, style_b;
  };
  EditorConfig cfg_;
  std::vector<Block> blocks_;
  nn::Linear<T> out_;
};

}  // namespace editing
}  // namespace speak

#endif  // SPEAK_EDITING_EDITOR_HPP_
