// tests/test_config.cpp

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

#include "speak/pipeline/config.hpp"

#include <cstdio>
#include <cstdlib>
#include <string>

#include "testing.hpp"

using namespace speak;
using namespace speak::pipeline;

TEST_CASE("default config validates") {
  RunConfig c;
  REQUIRE_NOTHROW(validate_config(c));
}

TEST_CASE("config serialization round-trips exactly") {
  RunConfig c;
  c.image_size = 128;
  c.latent_dim = 12;
  c.margin = 1.5;
  c.w_code = 0.25;
  c.seed = 0xFFFFFFFFFFFFFFFFULL;  // full 64-bit range survives
  c.ablate.disable_pose_enc = true;
  c.ablate.disable_gan_loss = true;
  c.enc_stages = {4, 8};
  c.vgg_widths = {2, 3, 5};
  c.audio_heads = 2;

  const std::string s1 = config_to_string(c);
  const RunConfig back = config_from_string(s1);
  const std::string s2 = config_to_string(back);
  REQUIRE(s1 == s2);
  REQUIRE(back.image_size == 128);
  REQUIRE(back.seed == 0xFFFFFFFFFFFFFFFFULL);
  REQUIRE(back.ablate.disable_pose_enc);
  REQUIRE(back.ablate.disable_gan_loss);
  REQUIRE_FALSE(back.ablate.disable_sync_loss);
  REQUIRE(back.enc_stages == std::vector<index_t>{4, 8});
  REQUIRE(back.vgg_widths == std::vector<index_t>{2, 3, 5});
}

TEST_CASE("config parser is strict") {
  SECTION("unknown key") {
    REQUIRE_THROWS_AS(config_from_string("{\"image_sizee\": 64}"), ValidationError);
  }
  SECTION("unknown ablation flag") {
    REQUIRE_THROWS_AS(config_from_string("{\"ablate\": {\"disable_magic\": true}}"),
                      ValidationError);
  }
  SECTION("ablate must be an object") {
    REQUIRE_THROWS_AS(config_from_string("{\"ablate\": 3}"), ValidationError);
  }
  SECTION("ablation flag must be boolean") {
    REQUIRE_THROWS_AS(config_from_string("{\"ablate\": {\"disable_sync_loss\": 1}}"),
                      ValidationError);
  }
  SECTION("wrong value type") {
    REQUIRE_THROWS_AS(config_from_string("{\"latent_dim\": \"big\"}"), ValidationError);
  }
  SECTION("broken json") {
    REQUIRE_THROWS_AS(config_from_string("{\"seed\": "), ValidationError);
  }
  SECTION("partial configs keep defaults elsewhere") {
    const RunConfig c = config_from_string("{\"batch_size\": 2}");
    REQUIRE(c.batch_size == 2);
    REQUIRE(c.image_size == 64);
    REQUIRE(c.lr == 2e-4);
  }
}

TEST_CASE("config validation rejections") {
  auto reject = [](void (*mut)(RunConfig&)) {
    RunConfig c;
    mut(c);
    REQUIRE_THROWS_AS(validate_config(c), ValidationError);
  };
  reject([](RunConfig& c) { c.image_size = 48; });   // not a power of two
  reject([](RunConfig& c) { c.image_size = 16; });   // too small
  reject([](RunConfig& c) { c.latent_dim = 0; });
  reject([](RunConfig& c) { c.style_dim = -1; });
  reject([](RunConfig& c) { c.margin = 0; });
  reject([](RunConfig& c) { c.w_sync = -0.5; });
  reject([](RunConfig& c) { c.lr = 0; });
  reject([](RunConfig& c) { c.steps_irfd = -1; });
  reject([](RunConfig& c) { c.batch_size = 0; });
  reject([](RunConfig& c) { c.enc_stages.clear(); });
  reject([](RunConfig& c) { c.vgg_widths.clear(); });
  reject([](RunConfig& c) { c.clip_frames = 4; });
  reject([](RunConfig& c) { c.num_clips = 1; });
  reject([](RunConfig& c) { c.disc_scales = 0; });
  reject([](RunConfig& c) { c.audio_heads = 0; });
}

TEST_CASE("SPEAK_SEED environment override") {
  RunConfig c;
  c.seed = 5;

  SECTION("unset leaves the config seed") {
    unsetenv("SPEAK_SEED");
    apply_env_overrides(c);
    REQUIRE(c.seed == 5);
  }
  SECTION("numeric value wins") {
    setenv("SPEAK_SEED", "777", 1);
    apply_env_overrides(c);
    REQUIRE(c.seed == 777);
    unsetenv("SPEAK_SEED");
  }
  SECTION("garbage is rejected") {
    setenv("SPEAK_SEED", "12x", 1);
    REQUIRE_THROWS_AS(apply_env_overrides(c), ValidationError);
    unsetenv("SPEAK_SEED");
  }
  SECTION("empty is rejected") {
    setenv("SPEAK_SEED", "", 1);
    REQUIRE_THROWS_AS(apply_env_overrides(c), ValidationError);
    unsetenv("SPEAK_SEED");
  }
}

TEST_CASE("config file save and load") {
  const std::string path = "config_test_tmp.json";
  RunConfig c;
  c.num_clips = 6;
  c.seed = 42;
  save_run_config(path, c);

  SECTION("load restores the saved values") {
    unsetenv("SPEAK_SEED");
    const RunConfig back = load_run_config(path);
    REQUIRE(back.num_clips == 6);
    REQUIRE(back.seed == 42);
  }
  SECTION("load applies the env override") {
    setenv("SPEAK_SEED", "99", 1);
    const RunConfig back = load_run_config(path);
    REQUIRE(back.seed == 99);
    unsetenv("SPEAK_SEED");
  }
  SECTION("missing file") {
    REQUIRE_THROWS_AS(load_run_config("no_such_config.json"), IoError);
  }
  std::remove(path.c_str());
}
