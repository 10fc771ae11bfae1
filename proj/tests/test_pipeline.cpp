// tests/test_pipeline.cpp

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

#include "speak/pipeline/train.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "testing.hpp"

using namespace speak;
using namespace speak::pipeline;

namespace {

// widths small enough that a full three-stage run takes well under a second
RunConfig tiny_config() {
  RunConfig c;
  c.image_size = 32;
  c.latent_dim = 12;
  c.style_dim = 16;
  c.audio_dim = 8;
  c.audio_heads = 2;
  c.audio_layers = 1;
  c.enc_stages = {4, 8, 8};
  c.mlp_hidden = 16;
  c.dec_base = 2;
  c.dec_cmax = 8;
  c.sync_base = 4;
  c.sync_embed = 8;
  c.disc_base = 4;
  c.disc_scales = 2;
  c.vgg_widths = {4, 6};
  c.editor_trunk = 12;
  c.editor_blocks = 2;
  c.batch_size = 2;
  c.num_clips = 3;
  c.clip_frames = 25;
  c.steps_syncnet = 8;
  c.steps_irfd = 8;
  c.steps_speak = 8;
  return c;
}

struct Prereqs {
  Checkpoint<float> syncnet, irfd;
};

Prereqs make_prereqs(const RunConfig& cfg, const SynthClipset& data) {
  Prereqs p;
  p.syncnet = train_syncnet<float>(cfg, data).checkpoint;
  p.irfd = train_irfd<float>(cfg, data).checkpoint;
  return p;
}

bool same_array(const Tensor<float>& a, const Tensor<float>& b) {
  if (a.shape != b.shape) return false;
  for (index_t i = 0; i < a.numel(); ++i)
    if (a[i] != b[i]) return false;
  return true;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("synthetic clipset sampling is deterministic") {
  SynthClipset a(32, 25, 3, 11);
  SynthClipset b(32, 25, 3, 11);
  SynthClipset c(32, 25, 3, 12);

  REQUIRE(a.size() == 3);
  const auto& fa = a.clip(1).frames;
  REQUIRE(fa.shape == Shape{25, 3, 32, 32});
  REQUIRE(a.clip(1).audio.samples.size() == 25 * synthface::kSamplesPerFrame);
  REQUIRE(same_array(fa, b.clip(1).frames));
  REQUIRE_FALSE(same_array(fa, c.clip(1).frames));

  REQUIRE(a.scene(2).identity.hue == b.scene(2).identity.hue);
  REQUIRE(a.clip(2).scene.has_value());
  REQUIRE(a.clip(2).scene->identity.hue == a.scene(2).identity.hue);

  // single-frame scenes for swap pairs: deterministic per key, varied across keys
  REQUIRE(a.frame_scene(5).identity.hue == b.frame_scene(5).identity.hue);
  bool varied = false;
  for (uint64_t k = 1; k < 4; ++k)
    varied = varied || a.frame_scene(k).identity.hue != a.frame_scene(0).identity.hue;
  REQUIRE(varied);

  REQUIRE_THROWS_AS(a.clip(3), ValidationError);
  REQUIRE_THROWS_AS(a.clip(-1), ValidationError);
  REQUIRE_THROWS_AS(a.scene(3), ValidationError);
}

TEST_CASE("stage names parse both ways") {
  REQUIRE(parse_stage("syncnet") == Stage::syncnet);
  REQUIRE(parse_stage("irfd") == Stage::irfd);
  REQUIRE(parse_stage("speak") == Stage::speak);
  REQUIRE(std::string(stage_name(Stage::irfd)) == "irfd");
  REQUIRE_THROWS_AS(parse_stage("warmup"), ValidationError);
}

TEST_CASE("fixed seed training repeats bitwise") {
  RunConfig cfg = tiny_config();
  cfg.steps_speak = 50;
  SynthClipset data(cfg.image_size, cfg.clip_frames, cfg.num_clips, cfg.seed);
  const Prereqs pre = make_prereqs(cfg, data);
  StageInputs<float> in;
  in.irfd = &pre.irfd;
  in.syncnet = &pre.syncnet;

  const auto r1 = train_speak<float>(cfg, data, in);
  const auto r2 = train_speak<float>(cfg, data, in);
  REQUIRE(r1.trace.size() == 50);
  REQUIRE(r2.trace.size() == 50);
  for (size_t i = 0; i < r1.trace.size(); ++i) {
    REQUIRE(r1.trace[i].total == r2.trace[i].total);
    REQUIRE(r1.trace[i].gan == r2.trace[i].gan);
    REQUIRE(r1.trace[i].sync == r2.trace[i].sync);
    REQUIRE(r1.trace[i].vgg == r2.trace[i].vgg);
  }

  // the serialized checkpoints agree byte for byte
  save_checkpoint("pipe_det_a.ckpt", r1.checkpoint);
  save_checkpoint("pipe_det_b.ckpt", r2.checkpoint);
  REQUIRE(slurp("pipe_det_a.ckpt") == slurp("pipe_det_b.ckpt"));
  std::remove("pipe_det_a.ckpt");
  std::remove("pipe_det_b.ckpt");
}

TEST_CASE("loss ablation flags zero their components") {
  RunConfig cfg = tiny_config();
  SynthClipset data(cfg.image_size, cfg.clip_frames, cfg.num_clips, cfg.seed);
  const Prereqs pre = make_prereqs(cfg, data);
  StageInputs<float> in;
  in.irfd = &pre.irfd;
  in.syncnet = &pre.syncnet;

  SECTION("disable_sync_loss") {
    cfg.ablate.disable_sync_loss = true;
    const auto r = train_speak<float>(cfg, data, in);
    for (const auto& rep : r.trace) {
      REQUIRE(rep.sync == 0.0f);
      REQUIRE(rep.gan != 0.0f);
      REQUIRE(rep.vgg != 0.0f);
      REQUIRE(rep.total == rep.gan + rep.sync + rep.vgg);
    }
  }
  SECTION("disable_gan_loss") {
    cfg.ablate.disable_gan_loss = true;
    const auto r = train_speak<float>(cfg, data, in);
    for (const auto& rep : r.trace) REQUIRE(rep.gan == 0.0f);
  }
  SECTION("disable_vgg_loss") {
    cfg.ablate.disable_vgg_loss = true;
    const auto r = train_speak<float>(cfg, data, in);
    for (const auto& rep : r.trace) REQUIRE(rep.vgg == 0.0f);
  }
}

TEST_CASE("factor encoder ablations produce all-zero codes") {
  RunConfig cfg = tiny_config();
  SynthClipset data(cfg.image_size, cfg.clip_frames, cfg.num_clips, cfg.seed);
  Tensor<float> frame(Shape{1, 3, 32, 32},
                      std::make_shared<std::vector<float>>(
                          data.clip(0).frames.data(), data.clip(0).frames.data() + 3 * 32 * 32));

  auto all_zero = [](const Var<float>& v) {
    for (index_t i = 0; i < v.numel(); ++i)
      if (v.val()[i] != 0.0f) return false;
    return true;
  };

  SpeakModel<float> full(cfg);
  Var<float> x = Var<float>::leaf(frame);
  REQUIRE_FALSE(all_zero(full.identity_code(x)));
  REQUIRE_FALSE(all_zero(full.pose_code(x)));
  REQUIRE_FALSE(all_zero(full.emotion_code(x)));

  cfg.ablate.disable_identity_enc = true;
  cfg.ablate.disable_pose_enc = true;
  cfg.ablate.disable_emotion_enc = true;
  SpeakModel<float> cut(cfg);
  REQUIRE(all_zero(cut.identity_code(x)));
  REQUIRE(all_zero(cut.pose_code(x)));
  REQUIRE(all_zero(cut.emotion_code(x)));
}

TEST_CASE("stage two keeps the warm-started towers frozen") {
  RunConfig cfg = tiny_config();
  SynthClipset data(cfg.image_size, cfg.clip_frames, cfg.num_clips, cfg.seed);
  const Prereqs pre = make_prereqs(cfg, data);
  StageInputs<float> in;
  in.irfd = &pre.irfd;
  in.syncnet = &pre.syncnet;
  const auto r = train_speak<float>(cfg, data, in);

  size_t enc_arrays = 0, sync_arrays = 0;
  for (const auto& [name, t] : r.checkpoint.arrays) {
    if (name.rfind("param.irfd.enc_", 0) == 0) {
      REQUIRE(same_array(t, pre.irfd.arrays.at(name)));
      ++enc_arrays;
    }
    if (name.rfind("param.syncnet.", 0) == 0) {
      REQUIRE(same_array(t, pre.syncnet.arrays.at(name)));
      ++sync_arrays;
    }
  }
  REQUIRE(enc_arrays > 0);
  REQUIRE(sync_arrays > 0);

  // the trained parts did move
  bool moved = false;
  SpeakModel<float> fresh(cfg);
  for (const auto& [name, v] : fresh.params().trainable("gg."))
    moved = moved || !same_array(r.checkpoint.arrays.at("param." + name), v.val());
  REQUIRE(moved);
}

TEST_CASE("resuming matches uninterrupted training") {
  RunConfig cfg = tiny_config();
  SynthClipset data(cfg.image_size, cfg.clip_frames, cfg.num_clips, cfg.seed);

  SECTION("sync stage") {
    cfg.steps_syncnet = 24;
    const auto full = train_syncnet<float>(cfg, data);

    RunConfig half = cfg;
    half.steps_syncnet = 12;
    const auto part = train_syncnet<float>(half, data);
    StageInputs<float> in;
    in.resume = &part.checkpoint;
    const auto resumed = train_syncnet<float>(cfg, data, in);

    REQUIRE(resumed.trace.size() == 12);
    REQUIRE(resumed.checkpoint.step == 24);
    for (size_t i = 0; i < 12; ++i)
      REQUIRE(std::abs(resumed.trace[i].total - full.trace[12 + i].total) <= 1e-5f);
    for (const auto& [name, t] : full.checkpoint.arrays) {
      const Tensor<float>& rt = resumed.checkpoint.arrays.at(name);
      for (index_t i = 0; i < t.numel(); ++i)
        REQUIRE(std::abs(rt[i] - t[i]) <= 1e-6f);
    }
  }
  SECTION("speak stage") {
    const Prereqs pre = make_prereqs(cfg, data);
    StageInputs<float> in;
    in.irfd = &pre.irfd;
    in.syncnet = &pre.syncnet;
    cfg.steps_speak = 16;
    const auto full = train_speak<float>(cfg, data, in);

    RunConfig half = cfg;
    half.steps_speak = 8;
    const auto part = train_speak<float>(half, data, in);
    StageInputs<float> rin;
    rin.resume = &part.checkpoint;
    const auto resumed = train_speak<float>(cfg, data, rin);

    REQUIRE(resumed.trace.size() == 8);
    for (size_t i = 0; i < 8; ++i)
      REQUIRE(std::abs(resumed.trace[i].total - full.trace[8 + i].total) <= 1e-5f);
  }
}

TEST_CASE("stage two demands its prerequisites") {
  RunConfig cfg = tiny_config();
  SynthClipset data(cfg.image_size, cfg.clip_frames, cfg.num_clips, cfg.seed);
  const Prereqs pre = make_prereqs(cfg, data);

  SECTION("nothing supplied") {
    REQUIRE_THROWS_AS(train_speak<float>(cfg, data), DependencyError);
  }
  SECTION("only irfd") {
    StageInputs<float> in;
    in.irfd = &pre.irfd;
    REQUIRE_THROWS_AS(train_speak<float>(cfg, data, in), DependencyError);
  }
  SECTION("only syncnet") {
    StageInputs<float> in;
    in.syncnet = &pre.syncnet;
    REQUIRE_THROWS_AS(train_speak<float>(cfg, data, in), DependencyError);
  }
  SECTION("swapped stages are caught") {
    StageInputs<float> in;
    in.irfd = &pre.syncnet;
    in.syncnet = &pre.irfd;
    REQUIRE_THROWS_AS(train_speak<float>(cfg, data, in), ValidationError);
  }
  SECTION("resume checkpoint must come from the same stage") {
    StageInputs<float> in;
    in.resume = &pre.irfd;
    REQUIRE_THROWS_AS(train_syncnet<float>(cfg, data, in), ValidationError);
  }
}

TEST_CASE("diverging training aborts with the failing step") {
  RunConfig cfg = tiny_config();
  cfg.lr = 1e12;  // adam updates scale with lr, so weights leave float range fast
  cfg.steps_syncnet = 50;
  SynthClipset data(cfg.image_size, cfg.clip_frames, cfg.num_clips, cfg.seed);
  try {
    train_syncnet<float>(cfg, data);
    FAIL("expected a numeric abort");
  } catch (const NumericError& e) {
    REQUIRE(std::string(e.what()).find("step") != std::string::npos);
  }
}

TEST_CASE("generated clip length follows the shortest source") {
  RunConfig cfg = tiny_config();
  SynthClipset data(cfg.image_size, cfg.clip_frames, cfg.num_clips, cfg.seed);
  SpeakModel<float> model(cfg);
  const auto& clip = data.clip(0);
  Tensor<float> id0(Shape{3, 32, 32},
                    std::make_shared<std::vector<float>>(
                        clip.frames.data(), clip.frames.data() + 3 * 32 * 32));

  SECTION("one second of audio and 25-frame sources give 25 frames") {
    const auto out = generate_video(model, id0, clip.audio, clip.frames, clip.frames, 7);
    REQUIRE(out.frames.shape == Shape{25, 3, 32, 32});
    REQUIRE(out.audio.samples.size() == 25 * synthface::kSamplesPerFrame);
    REQUIRE(out.audio.sample_rate == synthface::kSampleRate);
  }
  SECTION("a shorter emotion source truncates the clip") {
    Tensor<float> emo(Shape{20, 3, 32, 32},
                      std::make_shared<std::vector<float>>(
                          clip.frames.data(), clip.frames.data() + 20 * 3 * 32 * 32));
    const auto out = generate_video(model, id0, clip.audio, clip.frames, emo, 7);
    REQUIRE(out.frames.shape[0] == 20);
  }
  SECTION("shorter audio truncates the clip and the attached track") {
    synthface::AudioClip a = clip.audio;
    a.samples.resize(12800);
    const auto out = generate_video(model, id0, a, clip.frames, clip.frames, 7);
    REQUIRE(out.frames.shape[0] == 20);
    REQUIRE(out.audio.samples.size() == 12800);
  }
  SECTION("reruns with one noise seed are bit-identical") {
    const auto o1 = generate_video(model, id0, clip.audio, clip.frames, clip.frames, 7);
    const auto o2 = generate_video(model, id0, clip.audio, clip.frames, clip.frames, 7);
    REQUIRE(same_array(o1.frames, o2.frames));
  }
  SECTION("rejections") {
    Tensor<float> small = Tensor<float>::zeros({3, 16, 16});
    REQUIRE_THROWS_AS(generate_video(model, small, clip.audio, clip.frames, clip.frames, 7),
                      ShapeError);
    synthface::AudioClip bad = clip.audio;
    bad.sample_rate = 8000;
    REQUIRE_THROWS_AS(generate_video(model, id0, bad, clip.frames, clip.frames, 7),
                      ValidationError);
    synthface::AudioClip tiny = clip.audio;
    tiny.samples.resize(500);  // rounds down to zero output frames
    REQUIRE_THROWS_AS(generate_video(model, id0, tiny, clip.frames, clip.frames, 7),
                      ValidationError);
  }
}

TEST_CASE("evaluation reports self-comparison and absent fields honestly") {
  RunConfig cfg = tiny_config();
  SynthClipset data(cfg.image_size, cfg.clip_frames, cfg.num_clips, cfg.seed);
  const auto& clip = data.clip(0);
  synthface::SyntheticPixelProvider prov;

  SECTION("a clip against itself") {
    const auto rep = evaluate<float>(clip, clip, nullptr, &prov);
    REQUIRE_THAT(rep.ssim, Catch::Matchers::WithinAbs(1.0, 1e-6));
    REQUIRE(std::isinf(rep.psnr));
    REQUIRE(rep.f_lmd.has_value());
    REQUIRE(*rep.f_lmd == 0.0f);
    REQUIRE(*rep.m_lmd == 0.0f);
    REQUIRE_FALSE(rep.sync_conf.has_value());  // no sync scorer supplied
  }
  SECTION("landmarks stay absent without a detector or stored points") {
    SpeakModel<float> model(cfg);
    Tensor<float> id0(Shape{3, 32, 32},
                      std::make_shared<std::vector<float>>(
                          clip.frames.data(), clip.frames.data() + 3 * 32 * 32));
    const auto gen = generate_video(model, id0, clip.audio, clip.frames, clip.frames, 7);
    const auto rep = evaluate<float>(gen, clip, nullptr, nullptr);
    REQUIRE_FALSE(rep.f_lmd.has_value());
    REQUIRE_FALSE(rep.m_lmd.has_value());
    const auto rep2 = evaluate<float>(gen, clip, nullptr, &prov);
    REQUIRE(rep2.f_lmd.has_value());
  }
  SECTION("sync confidence appears once the clip covers the offset scan") {
    SynthClipset longer(32, 40, 2, 3);
    const auto& lc = longer.clip(0);
    ParamStore<float> ps;
    Rng rng(2);
    losses::SyncNetConfig sc;
    sc.base = 4;
    sc.embed = 8;
    losses::SyncNet<float> net(ps, "syncnet", sc, rng);
    const auto with = evaluate<float>(lc, lc, &net, &prov);
    REQUIRE(with.sync_conf.has_value());
    const auto& sc25 = data.clip(0);  // 25 frames cannot host a +/-15 scan
    const auto without = evaluate<float>(sc25, sc25, &net, &prov);
    REQUIRE_FALSE(without.sync_conf.has_value());
  }
  SECTION("shape disagreement is rejected") {
    SynthClipset other(32, 24, 2, 3);
    REQUIRE_THROWS_AS(evaluate<float>(clip, other.clip(0), nullptr, nullptr), ShapeError);
  }
}
