// speak/pipeline/config.hpp

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

#ifndef SPEAK_PIPELINE_CONFIG_HPP_
#define SPEAK_PIPELINE_CONFIG_HPP_

#include <cstdlib>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "speak/core/errors.hpp"
#include "speak/core/tensor.hpp"

namespace speak {
namespace pipeline {

struct AblationFlags {
  bool disable_identity_enc = false;
  bool disable_pose_enc = false;
  bool disable_emotion_enc = false;
  bool disable_sync_loss = false;
  bool disable_vgg_loss = false;
  bool disable_gan_loss = false;
};

struct RunConfig {
  index_t image_size = 64;
  index_t latent_dim = 128;  // factor code width
  index_t style_dim = 256;   // generator style width and editor output width
  index_t audio_dim = 128;

  double margin = 2.0;
  double w_gan = 1.0;
  double w_sync = 1.0;
  double w_vgg = 1.0;
  double w_l1 = 1.0;    // swap-training pixel term
  double w_code = 0.1;  // swap-training code consistency term

  double lr = 2e-4;
  double beta1_gan = 0.5;  // adversarial stages
  double beta2_gan = 0.999;
  double beta1_sync = 0.9;  // sync tower stage
  double beta2_sync = 0.999;
  double grad_clip = 10.0;

  index_t batch_size = 4;
  index_t steps_syncnet = 2000;
  index_t steps_irfd = 5000;
  index_t steps_speak = 5000;
  uint64_t seed = 1;

  AblationFlags ablate;

  // model widths, shrinkable for small runs
  std::vector<index_t> enc_stages = {16, 32, 64, 64};
  index_t mlp_hidden = 256;
  index_t dec_base = 16;
  index_t dec_cmax = 128;
  index_t editor_trunk = 256;
  index_t editor_blocks = 4;
  int audio_heads = 4;
  int audio_layers = 2;
  index_t sync_base = 32;
  index_t sync_embed = 128;
  index_t disc_base = 16;
  int disc_scales = 3;
  std::vector<index_t> vgg_widths = {8, 16, 24, 32};

  // synthetic data
  index_t clip_frames = 25;
  int num_clips = 32;
};

inline void validate_config(const RunConfig& c) {
  auto positive = [](index_t v, const char* field) {
    if (v <= 0) throw ValidationError(std::string("config: ") + field + " must be positive");
  };
  positive(c.latent_dim, "latent_dim");
  positive(c.style_dim, "style_dim");
  positive(c.audio_dim, "audio_dim");
  positive(c.batch_size, "batch_size");
  positive(c.mlp_hidden, "mlp_hidden");
  positive(c.dec_base, "dec_base");
  positive(c.dec_cmax, "dec_cmax");
  positive(c.editor_trunk, "editor_trunk");
  positive(c.editor_blocks, "editor_blocks");
  positive(c.sync_base, "sync_base");
  positive(c.sync_embed, "sync_embed");
  positive(c.disc_base, "disc_base");
  if (c.image_size < 32 || (c.image_size & (c.image_size - 1)) != 0)
    throw ValidationError("config: image_size must be a power of two >= 32, got " +
                          std::to_string(c.image_size));
  if (!(c.margin > 0)) throw ValidationError("config: margin must be positive");
  if (c.w_gan < 0 || c.w_sync < 0 || c.w_vgg < 0 || c.w_l1 < 0 || c.w_code < 0)
    throw ValidationError("config: loss weights must be nonnegative");
  if (!(c.lr > 0)) throw ValidationError("config: lr must be positive");
  if (c.steps_syncnet < 0 || c.steps_irfd < 0 || c.steps_speak < 0)
    throw ValidationError("config: step counts must be nonnegative");
  if (c.enc_stages.empty()) throw ValidationError("config: enc_stages must not be empty");
  if (c.vgg_widths.empty()) throw ValidationError("config: vgg_widths must not be empty");
  if (c.clip_frames < 5)
    throw ValidationError("config: clip_frames must cover at least one sync window");
  if (c.num_clips < 2) throw ValidationError("config: num_clips must be at least 2");
  if (c.audio_heads <= 0 || c.audio_layers <= 0 || c.disc_scales <= 0)
    throw ValidationError("config: audio_heads, audio_layers, disc_scales must be positive");
}

inline nlohmann::json config_to_json(const RunConfig& c) {
  return nlohmann::json{
      {"image_size", c.image_size},
      {"latent_dim", c.latent_dim},
      {"style_dim", c.style_dim},
      {"audio_dim", c.audio_dim},
      {"margin", c.margin},
      {"w_gan", c.w_gan},
      {"w_sync", c.w_sync},
      {"w_vgg", c.w_vgg},
      {"w_l1", c.w_l1},
      {"w_code", c.w_code},
      {"lr", c.lr},
      {"beta1_gan", c.beta1_gan},
      {"beta2_gan", c.beta2_gan},
      {"beta1_sync", c.beta1_sync},
      {"beta2_sync", c.beta2_sync},
      {"grad_clip", c.grad_clip},
      {"batch_size", c.batch_size},
      {"steps_syncnet", c.steps_syncnet},
      {"steps_irfd", c.steps_irfd},
      {"steps_speak", c.steps_speak},
      {"seed", c.seed},
      {"ablate",
       {{"disable_identity_enc", c.ablate.disable_identity_enc},
        {"disable_pose_enc", c.ablate.disable_pose_enc},
        {"disable_emotion_enc", c.ablate.disable_emotion_enc},
        {"disable_sync_loss", c.ablate.disable_sync_loss},
        {"disable_vgg_loss", c.ablate.disable_vgg_loss},
        {"disable_gan_loss", c.ablate.disable_gan_loss}}},
      {"enc_stages", c.enc_stages},
      {"mlp_hidden", c.mlp_hidden},
      {"dec_base", c.dec_base},
      {"dec_cmax", c.dec_cmax},
      {"editor_trunk", c.editor_trunk},
      {"editor_blocks", c.editor_blocks},
      {"audio_heads", c.audio_heads},
      {"audio_layers", c.audio_layers},
      {"sync_base", c.sync_base},
      {"sync_embed", c.sync_embed},
      {"disc_base", c.disc_base},
      {"disc_scales", c.disc_scales},
      {"vgg_widths", c.vgg_widths},
      {"clip_frames", c.clip_frames},
      {"num_clips", c.num_clips},
  };
}

inline std::string config_to_string(const RunConfig& c) { return config_to_json(c).dump(2); }

// Strict parse: every key must be known, so typos fail loudly instead of
// silently training with a default.
inline RunConfig config_from_json(const nlohmann::json& j) {
  RunConfig c;
  const nlohmann::json defaults = config_to_json(c);
  for (const auto& [key, value] : j.items()) {
    if (key == "ablate") {
      if (!value.is_object()) throw ValidationError("config: 'ablate' must be an object");
      for (const auto& [fk, fv] : value.items()) {
        if (!fv.is_boolean()) throw ValidationError("config: ablate." + fk + " must be boolean");
        if (fk == "disable_identity_enc")
          c.ablate.disable_identity_enc = fv.get<bool>();
        else if (fk == "disable_pose_enc")
          c.ablate.disable_pose_enc = fv.get<bool>();
        else if (fk == "disable_emotion_enc")
          c.ablate.disable_emotion_enc = fv.get<bool>();
        else if (fk == "disable_sync_loss")
          c.ablate.disable_sync_loss = fv.get<bool>();
        else if (fk == "disable_vgg_loss")
          c.ablate.disable_vgg_loss = fv.get<bool>();
        else if (fk == "disable_gan_loss")
          c.ablate.disable_gan_loss = fv.get<bool>();
        else
          throw ValidationError("config: unknown ablation flag '" + fk + "'");
      }
      continue;
    }
    if (!defaults.contains(key)) throw ValidationError("config: unknown key '" + key + "'");
    try {
      if (key == "image_size") c.image_size = value.get<index_t>();
      else if (key == "latent_dim") c.latent_dim = value.get<index_t>();
      else if (key == "style_dim") c.style_dim = value.get<index_t>();
      else if (key == "audio_dim") c.audio_dim = value.get<index_t>();
      else if (key == "margin") c.margin = value.get<double>();
      else if (key == "w_gan") c.w_gan = value.get<double>();
      else if (key == "w_sync") c.w_sync = value.get<double>();
      else if (key == "w_vgg") c.w_vgg = value.get<double>();
      else if (key == "w_l1") c.w_l1 = value.get<double>();
      else if (key == "w_code") c.w_code = value.get<double>();
      else if (key == "lr") c.lr = value.get<double>();
      else if (key == "beta1_gan") c.beta1_gan = value.get<double>();
      else if (key == "beta2_gan") c.beta2_gan = value.get<double>();
      else if (key == "beta1_sync") c.beta1_sync = value.get<double>();
      else if (key == "beta2_sync") c.beta2_sync = value.get<double>();
      else if (key == "grad_clip") c.grad_clip = value.get<double>();
      else if (key == "batch_size") c.batch_size = value.get<index_t>();
      else if (key == "steps_syncnet") c.steps_syncnet = value.get<index_t>();
      else if (key == "steps_irfd") c.steps_irfd = value.get<index_t>();
      else if (key == "steps_speak") c.steps_speak = value.get<index_t>();
      else if (key == "seed") c.seed = value.get<uint64_t>();
      else if (key == "enc_stages") c.enc_stages = value.get<std::vector<index_t>>();
      else if (key == "mlp_hidden") c.mlp_hidden = value.get<index_t>();
      else if (key == "dec_base") c.dec_base = value.get<index_t>();
      else if (key == "dec_cmax") c.dec_cmax = value.get<index_t>();
      else if (key == "editor_trunk") c.editor_trunk = value.get<index_t>();
      else if (key == "editor_blocks") c.editor_blocks = value.get<index_t>();
      else if (key == "audio_heads") c.audio_heads = value.get<int>();
      else if (key == "audio_layers") c.audio_layers = value.get<int>();
      else if (key == "sync_base") c.sync_base = value.get<index_t>();
      else if (key == "sync_embed") c.sync_embed = value.get<index_t>();
      else if (key == "disc_base") c.disc_base = value.get<index_t>();
      else if (key == "disc_scales") c.disc_scales = value.get<int>();
      else if (key == "vgg_widths") c.vgg_widths = value.get<std::vector<index_t>>();
      else if (key == "clip_frames") c.clip_frames = value.get<index_t>();
      else if (key == "num_clips") c.num_clips = value.get<int>();
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError("config: bad value for '" + key + "': " + e.what());
    }
  }
  return c;
}

inline RunConfig config_from_string(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const std::exception& e) {
    throw ValidationError(std::string("config parse error: ") + e.what());
  }
  return config_from_json(j);
}

// SPEAK_SEED in the environment beats the config file's seed.
inline void apply_env_overrides(RunConfig& c) {
  const char* env = std::getenv("SPEAK_SEED");
  if (!env) return;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(env, &end, 10);
  if (end == env || *end != '\0')
    throw ValidationError(std::string("SPEAK_SEED must be an unsigned integer, got '") + env +
                          "'");
  c.seed = static_cast<uint64_t>(v);
}

inline RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config: " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  RunConfig c = config_from_string(text);
  apply_env_overrides(c);
  validate_config(c);
  return c;
}

inline void save_run_config(const std::string& path, const RunConfig& c) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write config: " + path);
  out << config_to_string(c) << "\n";
}

}  // namespace pipeline
}  // namespace speak

#endif  // SPEAK_PIPELINE_CONFIG_HPP_
