// speak/losses/losses.hpp

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

#ifndef SPEAK_LOSSES_LOSSES_HPP_
#define SPEAK_LOSSES_LOSSES_HPP_

#include <string>
#include <vector>

#include "speak/core/nn.hpp"
#include "speak/core/ops.hpp"

namespace speak {
namespace losses {

inline constexpr index_t kWindowFrames = 5;     // sync window, video side
inline constexpr index_t kWindowSamples = 3200; // sync window, audio side (0.2 s)

// Contrastive hinge over embedding distances:
// (1/2N) sum_n [ y_n d_n^2 + (1-y_n) max(margin - d_n, 0)^2 ].
// Differentiable in d; y is a fixed binary label vector.
template <class T>
Var<T> sync_loss(const Var<T>& d, const Tensor<T>& y, T margin = T(2)) {
  if (d.shape().size() != 1 || y.shape != d.shape())
    throw ShapeError("sync_loss: d " + shape_str(d.shape()) + " y " + shape_str(y.shape));
  if (!(margin > T(0))) throw ValidationError("sync_loss margin must be positive");
  const index_t N = d.numel();
  for (index_t i = 0; i < N; ++i) {
    if (d.val()[i] < T(0))
      throw ValidationError("sync_loss distances must be nonnegative");
    if (y[i] != T(0) && y[i] != T(1)) throw ValidationError("sync_loss labels must be binary");
  }
  Tensor<T> inv = Tensor<T>::zeros(y.shape);
  for (index_t i = 0; i < N; ++i) inv[i] = T(1) - y[i];
  Var<T> pos = ops::mul(ops::constant(y.clone()), ops::square(d));
  Var<T> hinge = ops::relu(ops::add_scalar(ops::neg(d), margin));
  Var<T> neg = ops::mul(ops::constant(std::move(inv)), ops::square(hinge));
  return ops::mul_scalar(ops::sum_all(ops::add(pos, neg)), T(1) / (T(2) * static_cast<T>(N)));
}

// Per-row Euclidean distance between two embedding batches [B,E] -> [B].
template <class T>
Var<T> embedding_distance(const Var<T>& a, const Var<T>& b) {
  if (a.shape().size() != 2 || a.shape() != b.shape())
    throw ShapeError("embedding_distance: " + shape_str(a.shape()) + " vs " +
                     shape_str(b.shape()));
  return ops::rows_l2norm(ops::sub(a, b));
}

enum class GanSide { generator, discriminator };

// Non-saturating logistic evaluation of the adversarial objective over a
// bank of score maps, each map reduced by mean, scales averaged.
// discriminator: E[softplus(-real)] + E[softplus(fake)]
// generator:     E[softplus(-fake)]
template <class T>
Var<T> gan_loss(const std::vector<Var<T>>& real, const std::vector<Var<T>>& fake, GanSide side) {
  if (fake.empty()) throw ShapeError("gan_loss: no fake scores");
  if (side == GanSide::discriminator && real.size() != fake.size())
    throw ShapeError("gan_loss: scale count mismatch");
  Var<T> acc;
  for (size_t s = 0; s < fake.size(); ++s) {
    Var<T> term = side == GanSide::discriminator
                      ? ops::add(ops::mean_all(ops::softplus(ops::neg(real[s]))),
                                 ops::mean_all(ops::softplus(fake[s])))
                      : ops::mean_all(ops::softplus(ops::neg(fake[s])));
    acc = acc.defined() ? ops::add(acc, term) : term;
  }
  return ops::mul_scalar(acc, T(1) / static_cast<T>(fake.size()));
}

struct PerceptualConfig {
  std::vector<index_t> widths = {8, 16, 24, 32};
};

// Frozen random conv pyramid standing in for a pretrained feature network:
// the loss is the sum over levels of the mean absolute feature difference.
// Weights live in the store (so checkpoints can carry externally trained
// ones) but are never trainable.
template <class T>
class PerceptualLoss {
 public:
  PerceptualLoss(ParamStore<T>& ps, const std::string& prefix, const PerceptualConfig& cfg,
                 Rng& rng) {
    if (cfg.widths.empty()) throw ValidationError("perceptual loss needs at least one level");
    index_t in = 3;
    for (size_t i = 0; i < cfg.widths.size(); ++i) {
      convs_.push_back(
          nn::Conv2d<T>(ps, prefix + ".level" + std::to_string(i), in, cfg.widths[i], 3, 2, 1,
                        rng));
      in = cfg.widths[i];
    }
    ps.set_trainable(prefix + ".", false);
  }

  Var<T> operator()(Var<T> x, Var<T> y) const {
    if (x.shape().size() != 4 || x.shape() != y.shape())
      throw ShapeError("perceptual_loss: " + shape_str(x.shape()) + " vs " +
                       shape_str(y.shape()));
    Var<T> loss;
    for (size_t i = 0; i < convs_.size(); ++i) {
      x = convs_[i](x);
      y = convs_[i](y);
      Var<T> lvl = ops::l1_loss(x, y);
      loss = loss.defined() ? ops::add(loss, lvl) : lvl;
      if (i + 1 < convs_.size()) {
        x = ops::silu(x);
        y = ops::silu(y);
      }
    }
    return loss;
  }

 private:
  std::vector<nn::Conv2d<T>> convs_;
};

struct SyncNetConfig {
  index_t embed = 128;
  index_t base = 32;
};

// Two towers embedding a 5-frame mouth window and its 0.2 s audio window
// into a shared space; both end in a projection named fc7.
template <class T>
class SyncNet {
 public:
  SyncNet(ParamStore<T>& ps, const std::string& prefix, const SyncNetConfig& cfg, Rng& rng)
      : cfg_(cfg) {
    const index_t b = cfg.base;
    v0_ = nn::Conv2d<T>(ps, prefix + ".video.c0", 3 * kWindowFrames, b, 3, 2, 1, rng);
    v1_ = nn::Conv2d<T>(ps, prefix + ".video.c1", b, 2 * b, 3, 2, 1, rng);
    v2_ = nn::Conv2d<T>(ps, prefix + ".video.c2", 2 * b, 2 * b, 3, 2, 1, rng);
    vfc_ = nn::Linear<T>(ps, prefix + ".video.fc7", 2 * b, cfg.embed, rng);
    a0_ = nn::Conv1d<T>(ps, prefix + ".audio.c0", 1, b, 10, 5, 0, rng);
    a1_ = nn::Conv1d<T>(ps, prefix + ".audio.c1", b, 2 * b, 8, 4, 0, rng);
    a2_ = nn::Conv1d<T>(ps, prefix + ".audio.c2", 2 * b, 2 * b, 4, 4, 0, rng);
    a3_ = nn::Conv1d<T>(ps, prefix + ".audio.c3", 2 * b, 2 * b, 4, 2, 0, rng);
    afc_ = nn::Linear<T>(ps, prefix + ".audio.fc7", 2 * b, cfg.embed, rng);
  }

  // video [B, 15, Hm, Wm] (5 frames channel-stacked) -> [B,E]
  Var<T> embed_video(const Var<T>& video) const {
    if (video.shape().size() != 4 || video.shape()[1] != 3 * kWindowFrames)
      throw ShapeError("sync video window " + shape_str(video.shape()));
    Var<T> v = ops::silu(v0_(video));
    v = ops::silu(v1_(v));
    v = ops::silu(v2_(v));
    return vfc_(ops::global_avgpool2d(v));
  }

  // audio [B, 3200] -> [B,E]
  Var<T> embed_audio(const Var<T>& audio) const {
    if (audio.shape().size() != 2 || audio.shape()[1] != kWindowSamples)
      throw ShapeError("sync audio window " + shape_str(audio.shape()));
    const index_t B = audio.shape()[0];
    Var<T> a = ops::reshape(audio, {B, 1, kWindowSamples});
    a = ops::silu(a0_(a));
    a = ops::silu(a1_(a));
    a = ops::silu(a2_(a));
    a = ops::silu(a3_(a));
    // [B,C,L] -> [B,C,L,1] so the 2-d pooling reduces over L
    a = ops::reshape(a, {B, a.shape()[1], a.shape()[2], 1});
    return afc_(ops::global_avgpool2d(a));
  }

  // paired windows -> (audio_emb [B,E], video_emb [B,E])
  std::pair<Var<T>, Var<T>> operator()(const Var<T>& video, const Var<T>& audio) const {
    if (video.shape().size() == 4 && audio.shape().size() == 2 &&
        video.shape()[0] != audio.shape()[0])
      throw ShapeError("sync window batches disagree");
    return {embed_audio(audio), embed_video(video)};
  }

  const SyncNetConfig& config() const { return cfg_; }

 private:
  SyncNetConfig cfg_;
  nn::Conv2d<T> v0_, v1_, v2_;
  nn::Linear<T> vfc_;
  nn::Conv1d<T> a0_, a1_, a2_, a3_;
  nn::Linear<T> afc_;
};

// Lower-half crop of 5 consecutive frames, channel-stacked: the synthetic
// mouth always sits in the lower half of the face frame.
template <class T>
Var<T> mouth_window(const Var<T>& frames, index_t t0) {
  if (frames.shape().size() != 4 || frames.shape()[1] != 3)
    throw ShapeError("mouth_window expects [T,3,H,W], got " + shape_str(frames.shape()));
  const index_t H = frames.shape()[2], W = frames.shape()[3];
  Var<T> win = ops::slice_front(frames, t0, t0 + kWindowFrames);
  win = ops::slice_h(win, H / 2, H);
  return ops::reshape(win, {1, 3 * kWindowFrames, H - H / 2, W});
}

template <class T>
struct LossWeights {
  T gan = T(1);
  T sync = T(1);
  T vgg = T(1);
};

// Components are stored already weighted; the invariant is total being the
// plain sum of what is stored.
template <class T>
struct LossReport {
  T gan = T(0);
  T sync = T(0);
  T vgg = T(0);
  T total = T(0);
};

template <class T>
LossReport<T> make_report(T gan, T sync, T vgg) {
  LossReport<T> r;
  r.gan = gan;
  r.sync = sync;
  r.vgg = vgg;
  r.total = gan + sync + vgg;
  return r;
}

}  // namespace losses
}  // namespace speak

#endif  // SPEAK_LOSSES_LOSSES_HPP_
