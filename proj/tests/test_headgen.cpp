// tests/test_headgen.cpp

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

#include "speak/headgen/generator.hpp"

#include <cstring>
#include <vector>

#include "testing.hpp"

using namespace speak;
using Catch::Matchers::WithinAbs;

namespace {

headgen::DecoderConfig small_dec() {
  headgen::DecoderConfig cfg;
  cfg.style_dim = 32;
  cfg.fused_dim = 24;
  cfg.image = 64;
  cfg.base = 8;
  cfg.cmax = 32;
  return cfg;
}

}  // namespace

TEST_CASE("generated frames have the right shape and range") {
  ParamStore<float> ps;
  Rng rng(61);
  headgen::StyleDecoder<float> dec(ps, "headgen.gen", small_dec(), rng);

  Rng data(62);
  Var<float> style = Var<float>::leaf(Tensor<float>::randn({2, 32}, data));
  Var<float> fused = Var<float>::leaf(Tensor<float>::randn({2, 24}, data));
  Tensor<float> img = dec(style, fused).val();
  REQUIRE(img.shape == Shape{2, 3, 64, 64});
  for (index_t i = 0; i < img.numel(); ++i) {
    REQUIRE(img[i] >= 0.0f);
    REQUIRE(img[i] <= 1.0f);
  }

  headgen::DecoderConfig c32 = small_dec();
  c32.image = 32;
  c32.fused_dim = 0;
  ParamStore<float> ps2;
  headgen::StyleDecoder<float> dec32(ps2, "g", c32, rng);
  REQUIRE(dec32(Var<float>::leaf(Tensor<float>::randn({1, 32}, data))).shape() ==
          Shape{1, 3, 32, 32});
}

TEST_CASE("decoder rejects bad configurations and inputs") {
  ParamStore<float> ps;
  Rng rng(63);
  headgen::DecoderConfig cfg = small_dec();

  cfg.image = 48;
  REQUIRE_THROWS_AS(headgen::StyleDecoder<float>(ps, "a", cfg, rng), ValidationError);
  cfg.image = 16;
  REQUIRE_THROWS_AS(headgen::StyleDecoder<float>(ps, "b", cfg, rng), ValidationError);

  cfg = small_dec();
  headgen::StyleDecoder<float> dec(ps, "c", cfg, rng);
  Rng data(64);
  Var<float> style_bad = Var<float>::leaf(Tensor<float>::randn({2, 31}, data));
  REQUIRE_THROWS_AS(dec(style_bad, Var<float>::leaf(Tensor<float>::randn({2, 24}, data))),
                    ShapeError);
  Var<float> style = Var<float>::leaf(Tensor<float>::randn({2, 32}, data));
  REQUIRE_THROWS_AS(dec(style), ShapeError);  // fused condition required but missing
  REQUIRE_THROWS_AS(dec(style, Var<float>::leaf(Tensor<float>::randn({1, 24}, data))), ShapeError);
}

TEST_CASE("identical generator inputs decode identically") {
  ParamStore<float> ps;
  Rng rng(65);
  headgen::StyleDecoder<float> dec(ps, "g", small_dec(), rng);

  Rng data(66);
  Var<float> style = Var<float>::leaf(Tensor<float>::randn({1, 32}, data));
  Var<float> fused = Var<float>::leaf(Tensor<float>::randn({1, 24}, data));
  Tensor<float> a = dec(style, fused).val();
  Tensor<float> b = dec(style, fused).val();
  REQUIRE(std::memcmp(a.data(), b.data(), sizeof(float) * a.numel()) == 0);
}

TEST_CASE("decoded frames stay bounded over many random inputs") {
  headgen::DecoderConfig cfg;
  cfg.style_dim = 8;
  cfg.fused_dim = 0;
  cfg.image = 32;
  cfg.base = 2;
  cfg.cmax = 8;
  ParamStore<float> ps;
  Rng rng(67);
  headgen::StyleDecoder<float> dec(ps, "g", cfg, rng);

  NoGradGuard ng;
  Rng data(68);
  for (int i = 0; i < 1000; ++i) {
    Tensor<float> img = dec(Var<float>::leaf(Tensor<float>::randn({1, 8}, data, 3.0f))).val();
    for (index_t k = 0; k < img.numel(); ++k) {
      REQUIRE(std::isfinite(img[k]));
      REQUIRE(img[k] >= 0.0f);
      REQUIRE(img[k] <= 1.0f);
    }
  }
}

TEST_CASE("style gradients reach the pixels") {
  headgen::DecoderConfig cfg;
  cfg.style_dim = 12;
  cfg.fused_dim = 6;
  cfg.image = 32;
  cfg.base = 4;
  cfg.cmax = 16;
  ParamStore<double> ps;
  Rng rng(69);
  headgen::StyleDecoder<double> dec(ps, "g", cfg, rng);

  Rng data(70);
  Var<double> style = Var<double>::leaf(Tensor<double>::randn({2, 12}, data));
  style.set_requires_grad(true);
  Var<double> fused = Var<double>::leaf(Tensor<double>::randn({2, 6}, data));
  fused.set_requires_grad(true);

  auto makeloss = [&]() { return ops::mean_all(dec(style, fused)); };
  testing::gradcheck(makeloss,
                     {style, fused, ps.at("g.seed"), ps.at("g.block0.conv.w"),
                      ps.at("g.block2.style.w")},
                     1e-5, 1e-3, 3);
}

TEST_CASE("discriminator returns three shrinking maps") {
  ParamStore<float> ps;
  Rng rng(71);
  headgen::MultiScaleDisc<float> disc(ps, "headgen.disc", {}, rng);

  Rng data(72);
  Var<float> frame = Var<float>::leaf(Tensor<float>::randn({2, 3, 64, 64}, data));
  Var<float> ident = Var<float>::leaf(Tensor<float>::randn({2, 3, 64, 64}, data));
  std::vector<Var<float>> logits = disc(frame, ident);
  REQUIRE(logits.size() == 3);
  REQUIRE(logits[0].shape() == Shape{2, 1, 8, 8});
  REQUIRE(logits[1].shape() == Shape{2, 1, 4, 4});
  REQUIRE(logits[2].shape() == Shape{2, 1, 2, 2});
  for (const auto& m : logits)
    for (index_t i = 0; i < m.numel(); ++i) REQUIRE(std::isfinite(m.val()[i]));
}

TEST_CASE("discriminator scores are batch-equivariant") {
  ParamStore<double> ps;
  Rng rng(73);
  headgen::DiscConfig dcfg;
  dcfg.base = 4;
  headgen::MultiScaleDisc<double> disc(ps, "d", dcfg, rng);

  Rng data(74);
  Tensor<double> f = Tensor<double>::randn({2, 3, 64, 64}, data);
  Tensor<double> id = Tensor<double>::randn({2, 3, 64, 64}, data);
  const index_t n = 3 * 64 * 64;
  Tensor<double> fr = Tensor<double>::zeros({2, 3, 64, 64});
  Tensor<double> idr = Tensor<double>::zeros({2, 3, 64, 64});
  for (int b = 0; b < 2; ++b) {
    std::copy(f.data() + b * n, f.data() + (b + 1) * n, fr.data() + (1 - b) * n);
    std::copy(id.data() + b * n, id.data() + (b + 1) * n, idr.data() + (1 - b) * n);
  }

  auto a = disc(Var<double>::leaf(f), Var<double>::leaf(id));
  auto r = disc(Var<double>::leaf(fr), Var<double>::leaf(idr));
  for (size_t s = 0; s < a.size(); ++s) {
    const index_t per = a[s].numel() / 2;
    for (index_t i = 0; i < per; ++i) {
      REQUIRE_THAT(r[s].val()[per + i], WithinAbs(a[s].val()[i], 1e-12));
      REQUIRE_THAT(r[s].val()[i], WithinAbs(a[s].val()[per + i], 1e-12));
    }
  }
}

TEST_CASE("discriminator rejects mismatched pairs") {
  ParamStore<float> ps;
  Rng rng(75);
  headgen::MultiScaleDisc<float> disc(ps, "d", {}, rng);
  Rng data(76);
  Var<float> frame = Var<float>::leaf(Tensor<float>::randn({1, 3, 64, 64}, data));
  Var<float> small = Var<float>::leaf(Tensor<float>::randn({1, 3, 32, 32}, data));
  REQUIRE_THROWS_AS(disc(frame, small), ShapeError);
}

TEST_CASE("generator and discriminator parameters live under their prefixes") {
  ParamStore<float> ps;
  Rng rng(77);
  headgen::StyleDecoder<float> dec(ps, "headgen.gen", small_dec(), rng);
  headgen::MultiScaleDisc<float> disc(ps, "headgen.disc", {}, rng);

  // decoder: seed + 4 blocks x (conv w/b, style w/b, fuse w/b) + to_rgb w/b
  REQUIRE(ps.names_with_prefix("headgen.gen.").size() == 27);
  // disc: 3 scales x 4 convs x w/b
  REQUIRE(ps.names_with_prefix("headgen.disc.").size() == 24);
  REQUIRE(ps.has("headgen.gen.seed"));
  REQUIRE(ps.has("headgen.gen.block3.fuse.w"));
  REQUIRE(ps.has("headgen.disc.scale2.out.b"));
}
