// tests/test_editing.cpp

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

#include "speak/editing/editor.hpp"

#include <cmath>
#include <cstring>
#include <vector>

#include "testing.hpp"

using namespace speak;
using Catch::Matchers::WithinAbs;

namespace {

template <class T>
Var<T> filled(Shape s, std::vector<T> v) {
  return Var<T>::leaf(Tensor<T>(std::move(s), std::make_shared<std::vector<T>>(std::move(v))));
}

editing::EditorConfig small_cfg() {
  editing::EditorConfig cfg;
  cfg.audio_dim = 8;
  cfg.code_dim = 6;
  cfg.style_dim = 10;
  cfg.trunk = 12;
  cfg.blocks = 2;
  return cfg;
}

}  // namespace

TEST_CASE("channel normalization matches the hand-computed example") {
  Var<double> x = filled<double>({1, 3}, {1, 2, 3});
  Var<double> g = filled<double>({1, 3}, {2, 2, 2});
  Var<double> b = filled<double>({1, 3}, {1, 1, 1});
  Tensor<double> y = editing::adain(x, g, b, 1e-12).val();
  REQUIRE_THAT(y[0], WithinAbs(-1.44949, 1e-4));
  REQUIRE_THAT(y[1], WithinAbs(1.0, 1e-4));
  REQUIRE_THAT(y[2], WithinAbs(3.44949, 1e-4));
}

TEST_CASE("identity style passes normalized data through") {
  Rng rng(21);
  Tensor<float> raw = Tensor<float>::randn({4, 16}, rng);
  // pre-normalize rows so identity style should be a no-op
  for (index_t r = 0; r < 4; ++r) {
    float mu = 0, var = 0;
    for (index_t c = 0; c < 16; ++c) mu += raw[r * 16 + c];
    mu /= 16;
    for (index_t c = 0; c < 16; ++c) var += (raw[r * 16 + c] - mu) * (raw[r * 16 + c] - mu);
    var /= 16;
    for (index_t c = 0; c < 16; ++c) raw[r * 16 + c] = (raw[r * 16 + c] - mu) / std::sqrt(var);
  }
  Var<float> x = Var<float>::leaf(raw.clone());
  Var<float> g = Var<float>::leaf(Tensor<float>::full({4, 16}, 1.0f));
  Var<float> b = Var<float>::leaf(Tensor<float>::zeros({4, 16}));
  Tensor<float> y = editing::adain(x, g, b).val();
  for (index_t i = 0; i < y.numel(); ++i) REQUIRE_THAT(y[i], WithinAbs(raw[i], 1e-4));
}

TEST_CASE("constant channels collapse to beta") {
  Var<float> x = Var<float>::leaf(Tensor<float>::full({2, 5}, 7.25f));
  Var<float> g = Var<float>::leaf(Tensor<float>::full({2, 5}, 3.0f));
  Rng rng(22);
  Tensor<float> beta = Tensor<float>::randn({2, 5}, rng);
  Var<float> b = Var<float>::leaf(beta.clone());
  Tensor<float> y = editing::adain(x, g, b).val();
  for (index_t i = 0; i < y.numel(); ++i) REQUIRE(y[i] == beta[i]);
}

TEST_CASE("normalized statistics follow the style") {
  Rng rng(23);
  const index_t R = 8, C = 64;
  Var<double> x = Var<double>::leaf(Tensor<double>::randn({R, C}, rng, 2.5));
  Tensor<double> gt = Tensor<double>::zeros({R, C});
  Tensor<double> bt = Tensor<double>::zeros({R, C});
  for (index_t r = 0; r < R; ++r)
    for (index_t c = 0; c < C; ++c) {
      gt[r * C + c] = 0.5 + 0.25 * static_cast<double>(r) * (r % 2 ? 1.0 : -1.0);
      bt[r * C + c] = static_cast<double>(r) - 3.0;
    }
  Tensor<double> y = editing::adain(Var<double>::leaf(x.val().clone()), Var<double>::leaf(gt.clone()),
                                    Var<double>::leaf(bt.clone()))
                         .val();
  for (index_t r = 0; r < R; ++r) {
    double mu = 0, var = 0;
    for (index_t c = 0; c < C; ++c) mu += y[r * C + c];
    mu /= C;
    for (index_t c = 0; c < C; ++c) var += (y[r * C + c] - mu) * (y[r * C + c] - mu);
    var /= C;
    REQUIRE_THAT(mu, WithinAbs(bt[r * C], 1e-4));
    REQUIRE_THAT(std::sqrt(var), WithinAbs(std::abs(gt[r * C]), 1e-3 * std::abs(gt[r * C])));
  }
}

TEST_CASE("fused styles have one row per frame") {
  ParamStore<float> ps;
  Rng rng(24);
  editing::Editor<float> ed(ps, "editing", {}, rng);

  Rng data(25);
  Var<float> audio = Var<float>::leaf(Tensor<float>::randn({25, 128}, data));
  Var<float> emotion = Var<float>::leaf(Tensor<float>::randn({128}, data));
  Var<float> cond = Var<float>::leaf(Tensor<float>::randn({25, 384}, data));
  Rng noise(1);
  Tensor<float> out = ed(audio, emotion, cond, noise).val();
  REQUIRE(out.shape == Shape{25, 256});
  for (index_t i = 0; i < out.numel(); ++i) REQUIRE(std::isfinite(out[i]));
}

TEST_CASE("editing is deterministic given a seed") {
  ParamStore<float> ps;
  Rng rng(26);
  editing::Editor<float> ed(ps, "editing", small_cfg(), rng);

  Rng data(27);
  Var<float> audio = Var<float>::leaf(Tensor<float>::randn({7, 8}, data));
  Var<float> emotion = Var<float>::leaf(Tensor<float>::randn({6}, data));
  Var<float> cond = Var<float>::leaf(Tensor<float>::randn({7, 18}, data));

  auto run = [&](uint64_t seed) {
    Rng noise(seed);
    return ed(audio, emotion, cond, noise).val();
  };

  // fresh model: noise scales are zero, so even the seed is irrelevant
  Tensor<float> a = run(7), b = run(7), c = run(8);
  REQUIRE(std::memcmp(a.data(), b.data(), sizeof(float) * a.numel()) == 0);
  REQUIRE(std::memcmp(a.data(), c.data(), sizeof(float) * a.numel()) == 0);

  for (int i = 0; i < 2; ++i) {
    Tensor<float>& s = ps.at("editing.block" + std::to_string(i) + ".noise").value_mut();
    for (index_t k = 0; k < s.numel(); ++k) s[k] = 0.5f;
  }
  Tensor<float> d = run(7), e = run(7), f = run(8);
  REQUIRE(std::memcmp(d.data(), e.data(), sizeof(float) * d.numel()) == 0);
  bool any_diff = false;
  for (index_t i = 0; i < d.numel(); ++i) any_diff = any_diff || d[i] != f[i];
  REQUIRE(any_diff);
  // and the injected noise actually moved the output
  bool moved = false;
  for (index_t i = 0; i < d.numel(); ++i) moved = moved || d[i] != a[i];
  REQUIRE(moved);
}

TEST_CASE("identity conditioning at start ignores the facial codes") {
  ParamStore<float> ps;
  Rng rng(28);
  editing::Editor<float> ed(ps, "editing", small_cfg(), rng);

  Rng data(29);
  Var<float> audio = Var<float>::leaf(Tensor<float>::randn({5, 8}, data));
  Var<float> emotion = Var<float>::leaf(Tensor<float>::randn({6}, data));
  Var<float> cond1 = Var<float>::leaf(Tensor<float>::randn({5, 18}, data));
  Var<float> cond2 = Var<float>::leaf(Tensor<float>::randn({5, 18}, data));

  Rng n1(3), n2(3);
  Tensor<float> y1 = ed(audio, emotion, cond1, n1).val();
  Tensor<float> y2 = ed(audio, emotion, cond2, n2).val();
  REQUIRE(std::memcmp(y1.data(), y2.data(), sizeof(float) * y1.numel()) == 0);
}

TEST_CASE("permuting frames permutes the fused styles") {
  ParamStore<double> ps;
  Rng rng(30);
  editing::Editor<double> ed(ps, "editing", small_cfg(), rng);

  const index_t frames = 9;
  Rng data(31);
  Tensor<double> audio = Tensor<double>::randn({frames, 8}, data);
  Tensor<double> cond = Tensor<double>::randn({frames, 18}, data);
  Var<double> emotion = Var<double>::leaf(Tensor<double>::randn({6}, data));

  Tensor<double> raudio = Tensor<double>::zeros({frames, 8});
  Tensor<double> rcond = Tensor<double>::zeros({frames, 18});
  for (index_t t = 0; t < frames; ++t) {
    std::copy(audio.data() + t * 8, audio.data() + (t + 1) * 8,
              raudio.data() + (frames - 1 - t) * 8);
    std::copy(cond.data() + t * 18, cond.data() + (t + 1) * 18,
              rcond.data() + (frames - 1 - t) * 18);
  }

  Rng n1(4), n2(4);
  Tensor<double> y = ed(Var<double>::leaf(audio), emotion, Var<double>::leaf(cond), n1).val();
  Tensor<double> ry = ed(Var<double>::leaf(raudio), emotion, Var<double>::leaf(rcond), n2).val();
  const index_t d = y.shape[1];
  for (index_t t = 0; t < frames; ++t)
    for (index_t c = 0; c < d; ++c)
      REQUIRE_THAT(ry[(frames - 1 - t) * d + c], WithinAbs(y[t * d + c], 1e-12));
}

TEST_CASE("editing gradients match finite differences") {
  ParamStore<double> ps;
  Rng rng(32);
  editing::Editor<double> ed(ps, "editing", small_cfg(), rng);

  Rng data(33);
  Var<double> audio = Var<double>::leaf(Tensor<double>::randn({4, 8}, data));
  Var<double> emotion = Var<double>::leaf(Tensor<double>::randn({6}, data));
  emotion.set_requires_grad(true);
  Var<double> cond = Var<double>::leaf(Tensor<double>::randn({4, 18}, data));

  auto makeloss = [&]() {
    Rng noise(55);
    return testing::project(ed(audio, emotion, cond, noise));
  };
  testing::gradcheck(makeloss,
                     {emotion, ps.at("editing.block0.fc.w"), ps.at("editing.block0.style.w"),
                      ps.at("editing.block1.noise"), ps.at("editing.out.w")},
                     1e-5, 1e-3, 3);
}

TEST_CASE("mismatched editing inputs are rejected") {
  ParamStore<float> ps;
  Rng rng(34);
  editing::Editor<float> ed(ps, "editing", small_cfg(), rng);

  Rng data(35), noise(1);
  Var<float> audio = Var<float>::leaf(Tensor<float>::randn({10, 8}, data));
  Var<float> emotion = Var<float>::leaf(Tensor<float>::randn({6}, data));
  Var<float> cond9 = Var<float>::leaf(Tensor<float>::randn({9, 18}, data));
  REQUIRE_THROWS_AS(ed(audio, emotion, cond9, noise), ShapeError);

  Var<float> cond_wide = Var<float>::leaf(Tensor<float>::randn({10, 20}, data));
  REQUIRE_THROWS_AS(ed(audio, emotion, cond_wide, noise), ShapeError);

  Var<float> audio_wide = Var<float>::leaf(Tensor<float>::randn({10, 9}, data));
  Var<float> cond = Var<float>::leaf(Tensor<float>::randn({10, 18}, data));
  REQUIRE_THROWS_AS(ed(audio_wide, emotion, cond, noise), ShapeError);

  Var<float> emotion_bad = Var<float>::leaf(Tensor<float>::randn({7}, data));
  REQUIRE_THROWS_AS(ed(audio, emotion_bad, cond, noise), ShapeError);

  Var<float> g_bad = Var<float>::leaf(Tensor<float>::zeros({2, 3}));
  Var<float> x = Var<float>::leaf(Tensor<float>::zeros({2, 4}));
  REQUIRE_THROWS_AS(editing::adain(x, g_bad, g_bad), ShapeError);
}

TEST_CASE("editing parameters live under one prefix") {
  ParamStore<float> ps;
  Rng rng(36);
  editing::Editor<float> ed(ps, "editing", {}, rng);
  REQUIRE(ps.size() == 22);
  REQUIRE(ps.names_with_prefix("editing.").size() == ps.size());
  REQUIRE(ps.has("editing.block3.style.w"));
  REQUIRE(ps.has("editing.block0.noise"));
  REQUIRE(ps.has("editing.out.b"));
}
