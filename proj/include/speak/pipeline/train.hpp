// speak/pipeline/train.hpp

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

#ifndef SPEAK_PIPELINE_TRAIN_HPP_
#define SPEAK_PIPELINE_TRAIN_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "speak/core/adam.hpp"
#include "speak/core/checkpoint.hpp"
#include "speak/core/nn.hpp"
#include "speak/core/ops.hpp"
#include "speak/headgen/generator.hpp"
#include "speak/irfd/model.hpp"
#include "speak/irfd/swap_oracle.hpp"
#include "speak/losses/losses.hpp"
#include "speak/pipeline/config.hpp"
#include "speak/pipeline/data.hpp"
#include "speak/pipeline/model.hpp"
#include "speak/synthface/scene.hpp"

namespace speak {
namespace pipeline {

enum class Stage { syncnet, irfd, speak };

inline const char* stage_name(Stage s) {
  switch (s) {
    case Stage::syncnet: return "syncnet";
    case Stage::irfd: return "irfd";
    case Stage::speak: return "speak";
  }
  return "?";
}

inline Stage parse_stage(const std::string& s) {
  if (s == "syncnet") return Stage::syncnet;
  if (s == "irfd") return Stage::irfd;
  if (s == "speak") return Stage::speak;
  throw ValidationError("unknown stage '" + s + "', expected syncnet, irfd or speak");
}

// Prerequisite and resume checkpoints. Stage speak needs irfd + syncnet
// unless resuming (a resume checkpoint already carries the frozen towers).
template <class T>
struct StageInputs {
  const Checkpoint<T>* irfd = nullptr;
  const Checkpoint<T>* syncnet = nullptr;
  const Checkpoint<T>* resume = nullptr;
};

template <class T>
struct TrainResult {
  Checkpoint<T> checkpoint;
  std::vector<losses::LossReport<T>> trace;  // one entry per step actually run
};

namespace detail {

// stream salts keep the three stages' sampling decorrelated under one seed
inline constexpr uint64_t kSyncInit = 0x73796e632d696e69ULL;
inline constexpr uint64_t kSyncData = 0x73796e632d646174ULL;
inline constexpr uint64_t kIrfdInit = 0x697266642d696e69ULL;
inline constexpr uint64_t kIrfdData = 0x697266642d646174ULL;
inline constexpr uint64_t kSpeakData = 0x737065616b2d6461ULL;

template <class T>
Tensor<T> to_tensor(const Tensor<float>& f) {
  Tensor<T> out = Tensor<T>::zeros(f.shape);
  for (index_t i = 0; i < f.numel(); ++i) out[i] = static_cast<T>(f[i]);
  return out;
}

// contiguous row block [r0, r1) along the leading axis
template <class T>
Tensor<T> rows(const Tensor<T>& x, index_t r0, index_t r1) {
  Shape s = x.shape;
  const index_t stride = x.numel() / s[0];
  s[0] = r1 - r0;
  auto d = std::make_shared<std::vector<T>>(x.data() + r0 * stride, x.data() + r1 * stride);
  return Tensor<T>(s, d);
}

template <class T>
void check_finite(T v, int64_t step) {
  if (!std::isfinite(static_cast<double>(v)))
    throw NumericError("non-finite loss at step " + std::to_string(step));
}

template <class T>
void log_step(std::ostream* log, const char* stage, int64_t step, int64_t steps,
              const losses::LossReport<T>& r) {
  if (!log) return;
  if (step % 100 != 0 && step + 1 != steps) return;
  (*log) << stage << " step " << step << "/" << steps << " total " << r.total << " gan " << r.gan
         << " sync " << r.sync << " vgg " << r.vgg << "\n";
}

template <class T>
void expect_stage(const Checkpoint<T>& ck, const char* want) {
  if (ck.stage != want)
    throw ValidationError("checkpoint holds stage '" + ck.stage + "', expected '" + want + "'");
}

template <class T>
Checkpoint<T> finish_checkpoint(const char* stage, const RunConfig& cfg, int64_t step,
                                uint64_t rng_state, const ParamStore<T>& ps,
                                std::type_identity_t<const Adam<T>*> g,
                                std::type_identity_t<const Adam<T>*> d) {
  Checkpoint<T> ck;
  ck.stage = stage;
  ck.config_json = config_to_string(cfg);
  ck.step = step;
  ck.rng_state = rng_state;
  pack_params(ck, ps);
  if (g) pack_adam(ck, *g, "g");
  if (d) pack_adam(ck, *d, "d");
  return ck;
}

}  // namespace detail

// Stage 0: the sync scorer alone, contrastive over mouth/audio windows cut
// from the same clip. Even batch slots are aligned pairs, odd slots take the
// audio window from a different time in the same clip, which is the kind of
// negative the confidence scan later has to reject.
template <class T>
TrainResult<T> train_syncnet(const RunConfig& cfg, const SynthClipset& data,
                             const StageInputs<T>& inputs = {}, std::ostream* log = nullptr) {
  validate_config(cfg);
  const index_t nwin = cfg.clip_frames - losses::kWindowFrames + 1;
  if (nwin < 2)
    throw ValidationError("syncnet stage needs clip_frames of at least " +
                          std::to_string(losses::kWindowFrames + 1));
  if (data.image() != cfg.image_size)
    throw ValidationError("dataset image size does not match the config");

  ParamStore<T> ps;
  Rng init(mix64(cfg.seed ^ detail::kSyncInit));
  losses::SyncNetConfig sc;
  sc.base = cfg.sync_base;
  sc.embed = cfg.sync_embed;
  losses::SyncNet<T> net(ps, "syncnet", sc, init);
  auto tparams = ps.trainable();
  Adam<T> opt(tparams, T(cfg.lr), T(cfg.beta1_sync), T(cfg.beta2_sync));

  Rng base(mix64(cfg.seed ^ detail::kSyncData));
  int64_t start = 0;
  if (inputs.resume) {
    detail::expect_stage(*inputs.resume, "syncnet");
    restore_params(ps, *inputs.resume, true);
    restore_adam(opt, *inputs.resume, "g");
    start = inputs.resume->step;
    base.set_state(inputs.resume->rng_state);
  }

  const int64_t steps = cfg.steps_syncnet;
  TrainResult<T> out;
  for (int64_t step = start; step < steps; ++step) {
    Rng r = base.fork(static_cast<uint64_t>(step));
    const index_t B = cfg.batch_size;
    Tensor<T> audio = Tensor<T>::zeros({B, losses::kWindowSamples});
    Tensor<T> y = Tensor<T>::zeros({B});
    std::vector<Var<T>> vws;
    vws.reserve(static_cast<size_t>(B));
    for (index_t s = 0; s < B; ++s) {
      const auto& clip = data.clip(static_cast<int>(r.below(static_cast<uint64_t>(data.size()))));
      const index_t t = static_cast<index_t>(r.below(static_cast<uint64_t>(nwin)));
      index_t ta = t;
      if (s % 2 == 0) {
        y[s] = T(1);
      } else {
        ta = (t + 1 + static_cast<index_t>(r.below(static_cast<uint64_t>(nwin - 1)))) % nwin;
      }
      vws.push_back(
          losses::mouth_window(Var<T>::leaf(detail::to_tensor<T>(clip.frames)), t));
      for (index_t i = 0; i < losses::kWindowSamples; ++i)
        audio[s * losses::kWindowSamples + i] =
            static_cast<T>(clip.audio.samples[static_cast<size_t>(
                ta * synthface::kSamplesPerFrame + i)]);
    }
    Var<T> aemb = net.embed_audio(Var<T>::leaf(std::move(audio)));
    Var<T> vemb = net.embed_video(ops::concat_front(vws));
    Var<T> loss =
        losses::sync_loss(losses::embedding_distance(aemb, vemb), y, static_cast<T>(cfg.margin));
    const T lv = loss.val()[0];
    detail::check_finite(lv, step);

    opt.zero_grad();
    backward(loss);
    clip_grad_norm(tparams, static_cast<T>(cfg.grad_clip));
    opt.step();

    out.trace.push_back(losses::make_report(T(0), lv, T(0)));
    detail::log_step(log, "syncnet", step, steps, out.trace.back());
  }

  out.checkpoint = detail::finish_checkpoint("syncnet", cfg, std::max(start, steps), base.state(),
                                             ps, &opt, nullptr);
  return out;
}

// Stage 1: factor disentanglement by swap training on single-frame pairs.
// Every step draws fresh scene pairs, exchanges one factor, and supervises
// both the straight and the crossed reconstructions with oracle renders of
// the swapped scene parameters, plus a code round-trip and an adversarial
// term on the reconstructions.
template <class T>
TrainResult<T> train_irfd(const RunConfig& cfg, const SynthClipset& data,
                          const StageInputs<T>& inputs = {}, std::ostream* log = nullptr) {
  validate_config(cfg);
  if (data.image() != cfg.image_size)
    throw ValidationError("dataset image size does not match the config");

  ParamStore<T> ps;
  Rng init(mix64(cfg.seed ^ detail::kIrfdInit));
  irfd::IrfdConfig ic;
  ic.code_dim = cfg.latent_dim;
  ic.image = cfg.image_size;
  ic.stages = cfg.enc_stages;
  ic.mlp_hidden = cfg.mlp_hidden;
  ic.style_dim = cfg.style_dim;
  ic.dec_base = cfg.dec_base;
  ic.dec_cmax = cfg.dec_cmax;
  irfd::IrfdModel<T> m(ps, "irfd", ic, init);
  headgen::DiscConfig dc;
  dc.base = cfg.disc_base;
  dc.scales = cfg.disc_scales;
  headgen::MultiScaleDisc<T> disc(ps, "disc", dc, init);

  auto gparams = ps.trainable("irfd.");
  auto dparams = ps.trainable("disc.");
  Adam<T> gopt(gparams, T(cfg.lr), T(cfg.beta1_gan), T(cfg.beta2_gan));
  Adam<T> dopt(dparams, T(cfg.lr), T(cfg.beta1_gan), T(cfg.beta2_gan));

  Rng base(mix64(cfg.seed ^ detail::kIrfdData));
  int64_t start = 0;
  if (inputs.resume) {
    detail::expect_stage(*inputs.resume, "irfd");
    restore_params(ps, *inputs.resume, true);
    restore_adam(gopt, *inputs.resume, "g");
    restore_adam(dopt, *inputs.resume, "d");
    start = inputs.resume->step;
    base.set_state(inputs.resume->rng_state);
  }

  // a disabled encoder contributes an all-zero code everywhere
  auto encode = [&](const Var<T>& x) {
    irfd::CodeTriple<T> c = m.encode(x);
    auto zero = [&](Var<T>& v) { v = Var<T>::leaf(Tensor<T>::zeros(v.shape())); };
    if (cfg.ablate.disable_identity_enc) zero(c.identity);
    if (cfg.ablate.disable_pose_enc) zero(c.pose);
    if (cfg.ablate.disable_emotion_enc) zero(c.emotion);
    return c;
  };

  const int64_t steps = cfg.steps_irfd;
  const index_t S = cfg.image_size;
  TrainResult<T> out;
  for (int64_t step = start; step < steps; ++step) {
    Rng r = base.fork(static_cast<uint64_t>(step));
    const index_t B = cfg.batch_size;
    const auto factor = static_cast<irfd::Factor>(r.below(3));

    Tensor<T> fa = Tensor<T>::zeros({B, 3, S, S});
    Tensor<T> fb = Tensor<T>::zeros({B, 3, S, S});
    Tensor<T> oa = Tensor<T>::zeros({B, 3, S, S});
    Tensor<T> ob = Tensor<T>::zeros({B, 3, S, S});
    const index_t chw = 3 * S * S;
    for (index_t s = 0; s < B; ++s) {
      const uint64_t key = (static_cast<uint64_t>(step) * static_cast<uint64_t>(B) +
                            static_cast<uint64_t>(s)) * 2;
      const synthface::SynthScene sa = data.frame_scene(key);
      const synthface::SynthScene sb = data.frame_scene(key + 1);
      auto put = [&](Tensor<T>& dst, const synthface::SynthScene& sc) {
        const Tensor<float> img = synthface::render_scene(sc, S).frames;
        for (index_t i = 0; i < chw; ++i) dst[s * chw + i] = static_cast<T>(img[i]);
      };
      put(fa, sa);
      put(fb, sb);
      put(oa, irfd::swap_scene_factor(sa, sb, factor));
      put(ob, irfd::swap_scene_factor(sb, sa, factor));
    }
    Var<T> la = Var<T>::leaf(std::move(fa));
    Var<T> lb = Var<T>::leaf(std::move(fb));
    Var<T> loa = Var<T>::leaf(std::move(oa));
    Var<T> lob = Var<T>::leaf(std::move(ob));

    irfd::CodeTriple<T> ca = encode(la);
    irfd::CodeTriple<T> cb = encode(lb);
    auto crossed = irfd::swap_codes(ca, cb, factor);
    Var<T> rec_a = m.generate(ca);
    Var<T> rec_b = m.generate(cb);
    Var<T> swap_a = m.generate(crossed.first);
    Var<T> swap_b = m.generate(crossed.second);

    Var<T> pix = ops::add(ops::add(ops::l1_loss(rec_a, la), ops::l1_loss(rec_b, lb)),
                          ops::add(ops::l1_loss(swap_a, loa), ops::l1_loss(swap_b, lob)));

    irfd::CodeTriple<T> rea = encode(swap_a);
    irfd::CodeTriple<T> reb = encode(swap_b);
    Var<T> code = ops::add(
        ops::add(ops::mse_loss(rea.identity, crossed.first.identity),
                 ops::add(ops::mse_loss(rea.pose, crossed.first.pose),
                          ops::mse_loss(rea.emotion, crossed.first.emotion))),
        ops::add(ops::mse_loss(reb.identity, crossed.second.identity),
                 ops::add(ops::mse_loss(reb.pose, crossed.second.pose),
                          ops::mse_loss(reb.emotion, crossed.second.emotion))));

    Var<T> total = ops::add(ops::mul_scalar(pix, static_cast<T>(cfg.w_l1)),
                            ops::mul_scalar(code, static_cast<T>(cfg.w_code)));
    T ganv = T(0);
    if (!cfg.ablate.disable_gan_loss) {
      std::vector<Var<T>> fake;
      for (auto& v : disc(rec_a, la)) fake.push_back(v);
      for (auto& v : disc(swap_a, loa)) fake.push_back(v);
      Var<T> g = ops::mul_scalar(
          losses::gan_loss(std::vector<Var<T>>{}, fake, losses::GanSide::generator),
          static_cast<T>(cfg.w_gan));
      ganv = g.val()[0];
      total = ops::add(total, g);
    }
    const T tv = total.val()[0];
    detail::check_finite(tv, step);

    gopt.zero_grad();
    dopt.zero_grad();
    backward(total);
    clip_grad_norm(gparams, static_cast<T>(cfg.grad_clip));
    gopt.step();

    if (!cfg.ablate.disable_gan_loss) {
      Var<T> da = Var<T>::leaf(rec_a.val().clone());
      Var<T> ds = Var<T>::leaf(swap_a.val().clone());
      std::vector<Var<T>> real, fake;
      for (auto& v : disc(la, la)) real.push_back(v);
      for (auto& v : disc(loa, loa)) real.push_back(v);
      for (auto& v : disc(da, la)) fake.push_back(v);
      for (auto& v : disc(ds, loa)) fake.push_back(v);
      Var<T> dl = losses::gan_loss(real, fake, losses::GanSide::discriminator);
      detail::check_finite(dl.val()[0], step);
      dopt.zero_grad();
      backward(dl);
      clip_grad_norm(dparams, static_cast<T>(cfg.grad_clip));
      dopt.step();
    }

    losses::LossReport<T> rep = losses::make_report(ganv, T(0), tv - ganv);
    out.trace.push_back(rep);
    detail::log_step(log, "irfd", step, steps, rep);
  }

  out.checkpoint =
      detail::finish_checkpoint("irfd", cfg, std::max(start, steps), base.state(), ps, &gopt, &dopt);
  return out;
}

// Stage 2: the full system. Factor encoders come from the irfd checkpoint
// and stay frozen, as does the sync scorer; the head generator, the audio
// encoder and the editing module train jointly against clip windows.
template <class T>
TrainResult<T> train_speak(const RunConfig& cfg, const SynthClipset& data,
                           const StageInputs<T>& inputs = {}, std::ostream* log = nullptr) {
  validate_config(cfg);
  if (data.image() != cfg.image_size)
    throw ValidationError("dataset image size does not match the config");
  if (!inputs.resume && (!inputs.irfd || !inputs.syncnet))
    throw DependencyError("stage speak needs irfd and syncnet checkpoints");

  SpeakModel<T> model(cfg);
  ParamStore<T>& ps = model.params();
  if (!inputs.resume) {
    detail::expect_stage(*inputs.irfd, "irfd");
    detail::expect_stage(*inputs.syncnet, "syncnet");
    restore_params(ps, *inputs.irfd, true, "irfd.enc_");
    restore_params(ps, *inputs.syncnet, true, "syncnet.");
  }
  ps.set_trainable("irfd.", false);
  ps.set_trainable("syncnet.", false);

  std::vector<std::pair<std::string, Var<T>>> gparams = ps.trainable("gg.");
  for (auto& p : ps.trainable("audioenc.")) gparams.push_back(p);
  for (auto& p : ps.trainable("editor.")) gparams.push_back(p);
  auto dparams = ps.trainable("disc.");
  Adam<T> gopt(gparams, T(cfg.lr), T(cfg.beta1_gan), T(cfg.beta2_gan));
  Adam<T> dopt(dparams, T(cfg.lr), T(cfg.beta1_gan), T(cfg.beta2_gan));

  Rng base(mix64(cfg.seed ^ detail::kSpeakData));
  int64_t start = 0;
  if (inputs.resume) {
    detail::expect_stage(*inputs.resume, "speak");
    restore_params(ps, *inputs.resume, true);
    restore_adam(gopt, *inputs.resume, "g");
    restore_adam(dopt, *inputs.resume, "d");
    start = inputs.resume->step;
    base.set_state(inputs.resume->rng_state);
  }

  const index_t W = losses::kWindowFrames;
  const index_t Tn = cfg.clip_frames;
  const index_t S = cfg.image_size;
  const index_t D = cfg.latent_dim;

  // frozen per-clip precomputation: factor codes, clip-level emotion vector,
  // converted frames, raw wave, and the identity frame repeated for the
  // discriminator condition
  struct ClipCache {
    Tensor<T> frames, fi, fp, fe, emo, id_rep;
    std::vector<T> wave;
  };
  std::vector<std::optional<ClipCache>> cache(static_cast<size_t>(data.size()));
  auto cached = [&](int i) -> const ClipCache& {
    auto& slot = cache[static_cast<size_t>(i)];
    if (!slot) {
      const synthface::VideoSample& clip = data.clip(i);
      ClipCache c;
      c.frames = detail::to_tensor<T>(clip.frames);
      c.wave.assign(clip.audio.samples.begin(), clip.audio.samples.end());
      NoGradGuard ng;
      Var<T> all = Var<T>::leaf(c.frames);
      c.fi = model.identity_code(ops::slice_front(all, 0, 1)).val().clone();
      c.fp = model.pose_code(all).val().clone();
      c.fe = model.emotion_code(all).val().clone();
      c.emo = Tensor<T>::zeros({D});
      for (index_t t = 0; t < Tn; ++t)
        for (index_t j = 0; j < D; ++j) c.emo[j] += c.fe[t * D + j] / static_cast<T>(Tn);
      c.id_rep = Tensor<T>::zeros({W, 3, S, S});
      const index_t chw = 3 * S * S;
      for (index_t t = 0; t < W; ++t)
        for (index_t i2 = 0; i2 < chw; ++i2) c.id_rep[t * chw + i2] = c.frames[i2];
      slot = std::move(c);
    }
    return *slot;
  };

  const int64_t steps = cfg.steps_speak;
  TrainResult<T> out;
  for (int64_t step = start; step < steps; ++step) {
    Rng r = base.fork(static_cast<uint64_t>(step));
    const ClipCache& c = cached(static_cast<int>(r.below(static_cast<uint64_t>(data.size()))));
    const index_t tw = static_cast<index_t>(r.below(static_cast<uint64_t>(Tn - W + 1)));

    Var<T> wave = Var<T>::leaf(
        Tensor<T>(Shape{static_cast<index_t>(c.wave.size())},
                  std::make_shared<std::vector<T>>(c.wave)));
    Var<T> f_a = ops::slice_front(model.audio()(wave), tw, tw + W);

    Var<T> fi = Var<T>::leaf(c.fi);
    Var<T> fpw = Var<T>::leaf(detail::rows(c.fp, tw, tw + W));
    Var<T> few = Var<T>::leaf(detail::rows(c.fe, tw, tw + W));
    Var<T> cond = ops::concat_cols(std::vector<Var<T>>{ops::broadcast_rows(fi, W), fpw, few});
    Var<T> fused = model.editor()(f_a, Var<T>::leaf(c.emo), cond, r);
    Var<T> gen = model.generate_frames(fi, fpw, fused);
    Var<T> target = Var<T>::leaf(detail::rows(c.frames, tw, tw + W));
    Var<T> id_rep = Var<T>::leaf(c.id_rep);

    Var<T> total;
    auto accum = [&](const Var<T>& term) {
      total = total.defined() ? ops::add(total, term) : term;
    };
    T ganv = T(0), syncv = T(0), vggv = T(0);
    if (!cfg.ablate.disable_gan_loss) {
      Var<T> g = ops::mul_scalar(
          losses::gan_loss(std::vector<Var<T>>{}, model.disc()(gen, id_rep),
                           losses::GanSide::generator),
          static_cast<T>(cfg.w_gan));
      ganv = g.val()[0];
      accum(g);
    }
    if (!cfg.ablate.disable_sync_loss) {
      Tensor<T> aw = Tensor<T>::zeros({1, losses::kWindowSamples});
      for (index_t i = 0; i < losses::kWindowSamples; ++i)
        aw[i] = c.wave[static_cast<size_t>(tw * synthface::kSamplesPerFrame + i)];
      Var<T> d = losses::embedding_distance(model.syncnet().embed_audio(Var<T>::leaf(std::move(aw))),
                                            model.syncnet().embed_video(losses::mouth_window(gen, 0)));
      Var<T> s = ops::mul_scalar(
          losses::sync_loss(d, Tensor<T>::full({1}, T(1)), static_cast<T>(cfg.margin)),
          static_cast<T>(cfg.w_sync));
      syncv = s.val()[0];
      accum(s);
    }
    if (!cfg.ablate.disable_vgg_loss) {
      Var<T> v = ops::mul_scalar(model.vgg()(gen, target), static_cast<T>(cfg.w_vgg));
      vggv = v.val()[0];
      accum(v);
    }

    losses::LossReport<T> rep = losses::make_report(ganv, syncv, vggv);
    detail::check_finite(rep.total, step);
    if (total.defined()) {
      gopt.zero_grad();
      dopt.zero_grad();
      backward(total);
      clip_grad_norm(gparams, static_cast<T>(cfg.grad_clip));
      gopt.step();
    }

    if (!cfg.ablate.disable_gan_loss) {
      Var<T> dgen = Var<T>::leaf(gen.val().clone());
      Var<T> dl = losses::gan_loss(model.disc()(target, id_rep), model.disc()(dgen, id_rep),
                                   losses::GanSide::discriminator);
      detail::check_finite(dl.val()[0], step);
      dopt.zero_grad();
      backward(dl);
      clip_grad_norm(dparams, static_cast<T>(cfg.grad_clip));
      dopt.step();
    }

    out.trace.push_back(rep);
    detail::log_step(log, "speak", step, steps, rep);
  }

  out.checkpoint = detail::finish_checkpoint("speak", cfg, std::max(start, steps), base.state(),
                                             ps, &gopt, &dopt);
  return out;
}

template <class T>
TrainResult<T> train_stage(Stage stage, const RunConfig& cfg, const SynthClipset& data,
                           const StageInputs<T>& inputs = {}, std::ostream* log = nullptr) {
  switch (stage) {
    case Stage::syncnet: return train_syncnet(cfg, data, inputs, log);
    case Stage::irfd: return train_irfd(cfg, data, inputs, log);
    case Stage::speak: return train_speak(cfg, data, inputs, log);
  }
  throw ValidationError("unknown stage");
}

}  // namespace pipeline
}  // namespace speak

#endif  // SPEAK_PIPELINE_TRAIN_HPP_
