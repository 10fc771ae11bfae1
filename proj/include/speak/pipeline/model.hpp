// speak/pipeline/model.hpp

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

#ifndef SPEAK_PIPELINE_MODEL_HPP_
#define SPEAK_PIPELINE_MODEL_HPP_

#include <algorithm>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "speak/audioenc/encoder.hpp"
#include "speak/core/nn.hpp"
#include "speak/core/ops.hpp"
#include "speak/editing/editor.hpp"
#include "speak/headgen/generator.hpp"
#include "speak/irfd/model.hpp"
#include "speak/losses/losses.hpp"
#include "speak/metrics/metrics.hpp"
#include "speak/pipeline/config.hpp"
#include "speak/synthface/landmarks.hpp"
#include "speak/synthface/scene.hpp"

namespace speak {
namespace pipeline {

// The full talking-head model. The three factor encoders keep the names they
// had during swap pretraining so that checkpoint warm-starts them; the head
// generator is a fresh style decoder whose style comes from identity and
// pose codes only, with the edited audio-emotion features injected per block.
template <class T>
class SpeakModel {
 public:
  explicit SpeakModel(const RunConfig& cfg) : cfg_(cfg) {
    validate_config(cfg);
    Rng rng(cfg.seed);
    irfd::EncoderConfig ec;
    ec.image = cfg.image_size;
    ec.code_dim = cfg.latent_dim;
    ec.stages = cfg.enc_stages;
    enc_identity_.emplace(ps_, "irfd.enc_identity", ec, rng);
    enc_pose_.emplace(ps_, "irfd.enc_pose", ec, rng);
    enc_emotion_.emplace(ps_, "irfd.enc_emotion", ec, rng);

    mlp_.emplace(ps_, "gg.mlp",
                 std::vector<index_t>{2 * cfg.latent_dim, cfg.mlp_hidden, cfg.style_dim}, rng);
    headgen::DecoderConfig dc{cfg.style_dim, cfg.style_dim, cfg.image_size, cfg.dec_base,
                              cfg.dec_cmax};
    dec_.emplace(ps_, "gg.dec", dc, rng);

    audioenc::AudioEncoderConfig ac;
    ac.dim = cfg.audio_dim;
    ac.heads = cfg.audio_heads;
    ac.layers = cfg.audio_layers;
    audio_.emplace(ps_, "audioenc", ac, rng);

    editing::EditorConfig edc;
    edc.audio_dim = cfg.audio_dim;
    edc.code_dim = cfg.latent_dim;
    edc.style_dim = cfg.style_dim;
    edc.trunk = cfg.editor_trunk;
    edc.blocks = cfg.editor_blocks;
    editor_.emplace(ps_, "editor", edc, rng);

    losses::SyncNetConfig sc;
    sc.base = cfg.sync_base;
    sc.embed = cfg.sync_embed;
    syncnet_.emplace(ps_, "syncnet", sc, rng);

    losses::PerceptualConfig pc;
    pc.widths = cfg.vgg_widths;
    vgg_.emplace(ps_, "perceptual", pc, rng);

    headgen::DiscConfig dcfg;
    dcfg.base = cfg.disc_base;
    dcfg.scales = cfg.disc_scales;
    disc_.emplace(ps_, "disc", dcfg, rng);
  }

  const RunConfig& config() const { return cfg_; }
  ParamStore<T>& params() { return ps_; }
  const ParamStore<T>& params() const { return ps_; }

  const irfd::FaceEncoder<T>& enc_identity() const { return *enc_identity_; }
  const irfd::FaceEncoder<T>& enc_pose() const { return *enc_pose_; }
  const irfd::FaceEncoder<T>& enc_emotion() const { return *enc_emotion_; }
  const audioenc::AudioEncoder<T>& audio() const { return *audio_; }
  const editing::Editor<T>& editor() const { return *editor_; }
  const losses::SyncNet<T>& syncnet() const { return *syncnet_; }
  const losses::PerceptualLoss<T>& vgg() const { return *vgg_; }
  const headgen::MultiScaleDisc<T>& disc() const { return *disc_; }

  // Factor codes with ablation flags applied: a disabled encoder contributes
  // an all-zero code, the generation path stays intact.
  Var<T> identity_code(const Var<T>& frames) const {
    Var<T> c = (*enc_identity_)(frames);
    return cfg_.ablate.disable_identity_enc ? zeros_like(c) : c;
  }
  Var<T> pose_code(const Var<T>& frames) const {
    Var<T> c = (*enc_pose_)(frames);
    return cfg_.ablate.disable_pose_enc ? zeros_like(c) : c;
  }
  Var<T> emotion_code(const Var<T>& frames) const {
    Var<T> c = (*enc_emotion_)(frames);
    return cfg_.ablate.disable_emotion_enc ? zeros_like(c) : c;
  }

  // identity [1,D] broadcast against pose rows [K,D], fused [K,style_dim]
  // -> frames [K,3,image,image]
  Var<T> generate_frames(const Var<T>& identity, const Var<T>& pose, const Var<T>& fused) const {
    if (identity.shape() != Shape{1, cfg_.latent_dim})
      throw ShapeError("generate_frames: identity code " + shape_str(identity.shape()));
    if (pose.shape().size() != 2 || pose.shape()[1] != cfg_.latent_dim)
      throw ShapeError("generate_frames: pose codes " + shape_str(pose.shape()));
    const index_t K = pose.shape()[0];
    Var<T> id_rows = ops::broadcast_rows(identity, K);
    Var<T> style = (*mlp_)(ops::concat_cols(std::vector<Var<T>>{id_rows, pose}));
    return (*dec_)(style, fused);
  }

 private:
  static Var<T> zeros_like(const Var<T>& v) { return Var<T>::leaf(Tensor<T>::zeros(v.shape())); }

  RunConfig cfg_;
  ParamStore<T> ps_;
  std::optional<irfd::FaceEncoder<T>> enc_identity_, enc_pose_, enc_emotion_;
  std::optional<nn::Mlp<T>> mlp_;
  std::optional<headgen::StyleDecoder<T>> dec_;
  std::optional<audioenc::AudioEncoder<T>> audio_;
  std::optional<editing::Editor<T>> editor_;
  std::optional<losses::SyncNet<T>> syncnet_;
  std::optional<losses::PerceptualLoss<T>> vgg_;
  std::optional<headgen::MultiScaleDisc<T>> disc_;
};

// Drives the model from the four sources. Output length is the shortest of
// the audio, pose, and emotion streams; identity is a single frame.
template <class T>
synthface::VideoSample generate_video(const SpeakModel<T>& model, const Tensor<float>& identity,
                                      const synthface::AudioClip& audio,
                                      const Tensor<float>& pose_frames,
                                      const Tensor<float>& emotion_frames, uint64_t noise_seed) {
  const RunConfig& cfg = model.config();
  const index_t S = cfg.image_size;
  auto check_frames = [&](const Tensor<float>& f, const char* which) {
    if (f.shape.size() != 4 || f.shape[1] != 3 || f.shape[2] != S || f.shape[3] != S)
      throw ShapeError(std::string("generate_video: ") + which + " frames must be [T,3," +
                       std::to_string(S) + "," + std::to_string(S) + "], got " +
                       shape_str(f.shape));
  };
  if (identity.shape != Shape{3, S, S})
    throw ShapeError("generate_video: identity image must be [3," + std::to_string(S) + "," +
                     std::to_string(S) + "], got " + shape_str(identity.shape));
  check_frames(pose_frames, "pose");
  check_frames(emotion_frames, "emotion");
  if (audio.sample_rate != synthface::kSampleRate)
    throw ValidationError("generate_video: audio must be " +
                          std::to_string(synthface::kSampleRate) + " Hz");

  const index_t audio_frames = audioenc::count_output_frames(
      static_cast<index_t>(audio.samples.size()));
  const index_t len = std::min({audio_frames, pose_frames.shape[0], emotion_frames.shape[0]});
  if (len < 1)
    throw ValidationError("generate_video: sources too short, shortest stream has no frames");

  NoGradGuard ng;
  auto to_t = [](const Tensor<float>& f) {
    Tensor<T> out = Tensor<T>::zeros(f.shape);
    for (index_t i = 0; i < f.numel(); ++i) out[i] = static_cast<T>(f[i]);
    return Var<T>::leaf(std::move(out));
  };

  Tensor<float> id4 = identity.clone();
  id4.shape = {1, 3, S, S};
  Var<T> f_i = model.identity_code(to_t(id4));
  Var<T> f_p = model.pose_code(to_t(pose_frames));
  Var<T> f_e = model.emotion_code(to_t(emotion_frames));
  f_p = ops::slice_front(f_p, 0, len);
  f_e = ops::slice_front(f_e, 0, len);

  std::vector<T> wave(audio.samples.size());
  for (size_t i = 0; i < wave.size(); ++i) wave[i] = static_cast<T>(audio.samples[i]);
  Var<T> f_a = Var<T>::leaf(model.audio().extract_features(wave, audio.sample_rate));
  f_a = ops::slice_front(f_a, 0, len);

  Var<T> id_rows = ops::broadcast_rows(f_i, len);
  Var<T> condition = ops::concat_cols(std::vector<Var<T>>{id_rows, f_p, f_e});
  Var<T> emo = ops::mul_scalar(ops::matmul(ops::transpose(f_e),
                                           Var<T>::leaf(Tensor<T>::full({len, 1}, T(1)))),
                               T(1) / static_cast<T>(len));
  emo = ops::reshape(emo, {model.config().latent_dim});

  Rng noise(noise_seed);
  Var<T> fused = model.editor()(f_a, emo, condition, noise);
  Var<T> gen = model.generate_frames(f_i, f_p, fused);

  synthface::VideoSample out;
  out.frames = Tensor<float>::zeros({len, 3, S, S});
  const Tensor<T>& g = gen.val();
  for (index_t i = 0; i < g.numel(); ++i) out.frames[i] = static_cast<float>(g[i]);
  out.audio.samples.assign(audio.samples.begin(),
                           audio.samples.begin() +
                               std::min(audio.samples.size(),
                                        static_cast<size_t>(len) * synthface::kSamplesPerFrame));
  out.audio.sample_rate = synthface::kSampleRate;
  return out;
}

// Scores a generated clip against its reference. Landmarks come from the
// synthetic pixel detector; when a landmark set cannot be produced the lmd
// fields stay absent rather than zero. Sync confidence needs the sync
// towers and a clip long enough for the offset scan.
template <class T>
metrics::MetricReport<float> evaluate(const synthface::VideoSample& generated,
                                      const synthface::VideoSample& reference,
                                      const losses::SyncNet<T>* syncnet = nullptr,
                                      const synthface::LandmarkProvider* provider = nullptr) {
  if (!generated.frames.defined() || !reference.frames.defined())
    throw ValidationError("evaluate: both clips need frames");
  if (generated.frames.shape != reference.frames.shape)
    throw ShapeError("evaluate: clip shapes disagree, " + shape_str(generated.frames.shape) +
                     " vs " + shape_str(reference.frames.shape));

  metrics::MetricReport<float> rep;
  rep.psnr = metrics::psnr(generated.frames, reference.frames);

  const index_t frames = generated.frames.shape[0];
  const index_t chw = generated.frames.numel() / frames;
  double ssim_acc = 0;
  for (index_t t = 0; t < frames; ++t) {
    Tensor<float> g(Shape{3, generated.frames.shape[2], generated.frames.shape[3]},
                    std::make_shared<std::vector<float>>(
                        generated.frames.data() + t * chw, generated.frames.data() + (t + 1) * chw));
    Tensor<float> r(Shape{3, reference.frames.shape[2], reference.frames.shape[3]},
                    std::make_shared<std::vector<float>>(
                        reference.frames.data() + t * chw, reference.frames.data() + (t + 1) * chw));
    ssim_acc += metrics::ssim(g, r);
  }
  rep.ssim = static_cast<float>(ssim_acc / frames);

  Tensor<float> gen_lm = generated.landmarks;
  Tensor<float> ref_lm = reference.landmarks;
  if (provider) {
    gen_lm = provider->detect_video(generated.frames);
    ref_lm = provider->detect_video(reference.frames);
  }
  if (gen_lm.defined() && ref_lm.defined()) {
    rep.f_lmd = metrics::lmd(gen_lm, ref_lm,
                             metrics::all_landmarks(synthface::kNumLandmarks));
    std::vector<index_t> mouth;
    for (index_t i = synthface::kMouthLandmarkBegin; i < synthface::kMouthLandmarkEnd; ++i)
      mouth.push_back(i);
    rep.m_lmd = metrics::lmd(gen_lm, ref_lm, mouth);
  }

  if (syncnet) {
    metrics::ConfidenceConfig cc;
    if (frames >= 2 * cc.max_offset + losses::kWindowFrames &&
        static_cast<index_t>(generated.audio.samples.size()) >=
            frames * synthface::kSamplesPerFrame) {
      std::vector<T> wave(generated.audio.samples.begin(), generated.audio.samples.end());
      Tensor<T> ft = Tensor<T>::zeros(generated.frames.shape);
      for (index_t i = 0; i < ft.numel(); ++i) ft[i] = static_cast<T>(generated.frames[i]);
      rep.sync_conf = static_cast<float>(metrics::sync_confidence(ft, wave, *syncnet, cc));
    }
  }
  return rep;
}

}  // namespace pipeline
}  // namespace speak

#endif  // SPEAK_PIPELINE_MODEL_HPP_
