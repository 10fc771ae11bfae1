// speak/irfd/model.hpp

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

#ifndef SPEAK_IRFD_MODEL_HPP_
#define SPEAK_IRFD_MODEL_HPP_

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "speak/core/nn.hpp"
#include "speak/core/ops.hpp"
#include "speak/headgen/generator.hpp"

namespace speak {
namespace irfd {

enum class Factor { identity, pose, emotion };

inline const char* factor_name(Factor f) {
  switch (f) {
    case Factor::identity: return "identity";
    case Factor::pose: return "pose";
    default: return "emotion";
  }
}

inline Factor parse_factor(const std::string& s) {
  if (s == "identity") return Factor::identity;
  if (s == "pose") return Factor::pose;
  if (s == "emotion") return Factor::emotion;
  throw ValidationError("unknown factor: " + s);
}

// One row per batched frame, [B, D] each.
template <class T>
struct CodeTriple {
  Var<T> identity, pose, emotion;
};

struct EncoderConfig {
  index_t image = 64;
  index_t code_dim = 128;
  std::vector<index_t> stages = {16, 32, 64, 64};  // stem channels, then stage outputs
};

// Small residual classifier trunk: strided stem, stride-2 residual stages,
// global average pooling, one projection to the code.
template <class T>
class FaceEncoder {
 public:
  FaceEncoder(ParamStore<T>& ps, const std::string& prefix, const EncoderConfig& cfg, Rng& rng)
      : cfg_(cfg) {
    if (cfg.stages.size() < 2) throw ValidationError("encoder needs at least one stage");
    stem_ = nn::Conv2d<T>(ps, prefix + ".stem", 3, cfg.stages[0], 3, 2, 1, rng);
    for (size_t i = 0; i + 1 < cfg.stages.size(); ++i) {
      const std::string base = prefix + ".stage" + std::to_string(i);
      Stage s;
      s.c1 = nn::Conv2d<T>(ps, base + ".c1", cfg.stages[i], cfg.stages[i + 1], 3, 2, 1, rng);
      s.c2 = nn::Conv2d<T>(ps, base + ".c2", cfg.stages[i + 1], cfg.stages[i + 1], 3, 1, 1, rng,
                           true, T(0.5));
      s.skip = nn::Conv2d<T>(ps, base + ".skip", cfg.stages[i], cfg.stages[i + 1], 1, 2, 0, rng);
      stages_.push_back(s);
    }
    fc_ = nn::Linear<T>(ps, prefix + ".fc", cfg.stages.back(), cfg.code_dim, rng);
  }

  Var<T> operator()(const Var<T>& frame) const {
    if (frame.shape().size() != 4 || frame.shape()[1] != 3 ||
        frame.shape()[2] != cfg_.image || frame.shape()[3] != cfg_.image)
      throw ShapeError("encoder expects [B,3," + std::to_string(cfg_.image) + "," +
                       std::to_string(cfg_.image) + "], got " + shape_str(frame.shape()));
    Var<T> x = ops::silu(stem_(frame));
    for (const auto& s : stages_)
      x = ops::silu(ops::add(s.c2(ops::silu(s.c1(x))), s.skip(x)));
    return fc_(ops::global_avgpool2d(x));
  }

 private:
  struct Stage {
    nn::Conv2d<T> c1, c2, skip;
  };
  EncoderConfig cfg_;
  nn::Conv2d<T> stem_;
  std::vector<Stage> stages_;
  nn::Linear<T> fc_;
};

struct IrfdConfig {
  index_t code_dim = 128;
  index_t image = 64;
  std::vector<index_t> stages = {16, 32, 64, 64};
  index_t mlp_hidden = 256;
  index_t style_dim = 256;
  index_t dec_base = 16;
  index_t dec_cmax = 128;
};

// Three independent facial factor encoders plus a reconstruction decoder.
// The decoder is the same style-based architecture the head generator uses,
// driven purely by the mlp of the concatenated codes.
template <class T>
class IrfdModel {
 public:
  IrfdModel(ParamStore<T>& ps, const std::string& prefix, const IrfdConfig& cfg, Rng& rng)
      : cfg_(cfg),
        enc_identity_(ps, prefix + ".enc_identity", enc_cfg(cfg), rng),
        enc_pose_(ps, prefix + ".enc_pose", enc_cfg(cfg), rng),
        enc_emotion_(ps, prefix + ".enc_emotion", enc_cfg(cfg), rng),
        mlp_(ps, prefix + ".gen.mlp",
             {3 * cfg.code_dim, cfg.mlp_hidden, cfg.style_dim}, rng),
        dec_(ps, prefix + ".gen.dec",
             headgen::DecoderConfig{cfg.style_dim, 0, cfg.image, cfg.dec_base, cfg.dec_cmax},
             rng) {}

  CodeTriple<T> encode(const Var<T>& frame) const {
    return {enc_identity_(frame), enc_pose_(frame), enc_emotion_(frame)};
  }

  Var<T> generate(const CodeTriple<T>& codes) const {
    const Shape want{codes.identity.shape()[0], cfg_.code_dim};
    if (codes.identity.shape() != want || codes.pose.shape() != want ||
        codes.emotion.shape() != want)
      throw ShapeError("code triple batches disagree: " + shape_str(codes.identity.shape()) +
                       " / " + shape_str(codes.pose.shape()) + " / " +
                       shape_str(codes.emotion.shape()));
    Var<T> style = mlp_(
        ops::concat_cols(std::vector<Var<T>>{codes.identity, codes.pose, codes.emotion}));
    return dec_(style);
  }

  const IrfdConfig& config() const { return cfg_; }

 private:
  static EncoderConfig enc_cfg(const IrfdConfig& c) { return {c.image, c.code_dim, c.stages}; }
  IrfdConfig cfg_;
  FaceEncoder<T> enc_identity_, enc_pose_, enc_emotion_;
  nn::Mlp<T> mlp_;
  headgen::StyleDecoder<T> dec_;
};

// Exchange one factor's codes between two triples.
template <class T>
std::pair<CodeTriple<T>, CodeTriple<T>> swap_codes(const CodeTriple<T>& a, const CodeTriple<T>& b,
                                                   Factor f) {
  CodeTriple<T> ca = a, cb = b;
  switch (f) {
    case Factor::identity: ca.identity = b.identity; cb.identity = a.identity; break;
    case Factor::pose: ca.pose = b.pose; cb.pose = a.pose; break;
    case Factor::emotion: ca.emotion = b.emotion; cb.emotion = a.emotion; break;
  }
  return {ca, cb};
}

template <class T>
struct SwapOut {
  CodeTriple<T> codes_a, codes_b;  // straight encodings
  CodeTriple<T> cross_a, cross_b;  // with one factor exchanged
  Var<T> rec_a, rec_b;             // reconstructions from straight triples
  Var<T> swap_a, swap_b;           // reconstructions from crossed triples
  Factor factor = Factor::identity;
};

// One swap-training step's forward pass over a pair of frame batches,
// row i of a paired with row i of b. When no factor is given the rng picks.
template <class T>
SwapOut<T> swap_step(const IrfdModel<T>& m, const Var<T>& frame_a, const Var<T>& frame_b,
                     std::optional<Factor> factor, Rng& rng) {
  SwapOut<T> out;
  out.factor = factor ? *factor : static_cast<Factor>(static_cast<int>(rng.uniform() * 3.0));
  out.codes_a = m.encode(frame_a);
  out.codes_b = m.encode(frame_b);
  auto crossed = swap_codes(out.codes_a, out.codes_b, out.factor);
  out.cross_a = crossed.first;
  out.cross_b = crossed.second;
  out.rec_a = m.generate(out.codes_a);
  out.rec_b = m.generate(out.codes_b);
  out.swap_a = m.generate(out.cross_a);
  out.swap_b = m.generate(out.cross_b);
  return out;
}

}  // namespace irfd
}  // namespace speak

#endif  // SPEAK_IRFD_MODEL_HPP_
