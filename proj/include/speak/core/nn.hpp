// speak/core/nn.hpp

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

#ifndef SPEAK_CORE_NN_HPP_
#define SPEAK_CORE_NN_HPP_

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "speak/core/ops.hpp"

namespace speak {

// Flat registry of named parameter leaves. Names are dotted paths
// ("irfd.enc_pose.stem.w") so checkpoints and freeze masks can address
// parameters by prefix.
template <class T>
class ParamStore {
 public:
  Var<T> add(const std::string& name, Tensor<T> init) {
    if (map_.count(name)) throw ValidationError("duplicate parameter name: " + name);
    Var<T> v = Var<T>::leaf(std::move(init), false);
    v.set_requires_grad(true);
    map_.emplace(name, v);
    return v;
  }

  bool has(const std::string& name) const { return map_.count(name) != 0; }

  Var<T>& at(const std::string& name) {
    auto it = map_.find(name);
    if (it == map_.end()) throw ValidationError("unknown parameter: " + name);
    return it->second;
  }

  const Var<T>& at(const std::string& name) const {
    auto it = map_.find(name);
    if (it == map_.end()) throw ValidationError("unknown parameter: " + name);
    return it->second;
  }

  // Names in lexicographic order (std::map iteration).
  std::vector<std::string> names() const {
    std::vector<std::string> out;
    out.reserve(map_.size());
    for (const auto& kv : map_) out.push_back(kv.first);
    return out;
  }

  std::vector<std::string> names_with_prefix(const std::string& prefix) const {
    std::vector<std::string> out;
    for (const auto& kv : map_)
      if (kv.first.compare(0, prefix.size(), prefix) == 0) out.push_back(kv.first);
    return out;
  }

  void set_trainable(const std::string& prefix, bool on) {
    for (auto& kv : map_)
      if (kv.first.compare(0, prefix.size(), prefix) == 0) kv.second.set_requires_grad(on);
  }

  std::vector<std::pair<std::string, Var<T>>> trainable(const std::string& prefix = "") {
    std::vector<std::pair<std::string, Var<T>>> out;
    for (auto& kv : map_)
      if (kv.second.requires_grad() && kv.first.compare(0, prefix.size(), prefix) == 0)
        out.emplace_back(kv.first, kv.second);
    return out;
  }

  void zero_grads() {
    for (auto& kv : map_) kv.second.clear_grad();
  }

  size_t size() const { return map_.size(); }

  index_t total_numel() const {
    index_t n = 0;
    for (const auto& kv : map_) n += kv.second.numel();
    return n;
  }

 private:
  std::map<std::string, Var<T>> map_;
};

namespace nn {

// He-style fan-in init, scaled by an extra gain.
template <class T>
Tensor<T> init_weight(Shape s, index_t fan_in, Rng& rng, T gain) {
  const T stddev = gain * std::sqrt(T(2) / static_cast<T>(fan_in));
  return Tensor<T>::randn(std::move(s), rng, stddev);
}

template <class T>
struct Linear {
  Var<T> w, b;

  Linear() = default;
  Linear(ParamStore<T>& ps, const std::string& name, index_t in, index_t out, Rng& rng,
         bool bias = true, T gain = T(1)) {
    w = ps.add(name + ".w", init_weight<T>({out, in}, in, rng, gain));
    if (bias) b = ps.add(name + ".b", Tensor<T>::zeros({out}));
  }

  Var<T> operator()(const Var<T>& x) const { return ops::linear(x, w, b); }
};

template <class T>
struct Conv2d {
  Var<T> w, b;
  index_t stride = 1, pad = 0;

  Conv2d() = default;
  Conv2d(ParamStore<T>& ps, const std::string& name, index_t in_ch, index_t out_ch, index_t k,
         index_t stride_, index_t pad_, Rng& rng, bool bias = true, T gain = T(1))
      : stride(stride_), pad(pad_) {
    w = ps.add(name + ".w", init_weight<T>({out_ch, in_ch, k, k}, in_ch * k * k, rng, gain));
    if (bias) b = ps.add(name + ".b", Tensor<T>::zeros({out_ch}));
  }

  Var<T> operator()(const Var<T>& x) const { return ops::conv2d(x, w, b, stride, pad); }
};

template <class T>
struct Conv1d {
  Var<T> w, b;
  index_t stride = 1, pad_left = 0;

  Conv1d() = default;
  Conv1d(ParamStore<T>& ps, const std::string& name, index_t in_ch, index_t out_ch, index_t k,
         index_t stride_, index_t pad_left_, Rng& rng, bool bias = true, T gain = T(1))
      : stride(stride_), pad_left(pad_left_) {
    w = ps.add(name + ".w", init_weight<T>({out_ch, in_ch, k}, in_ch * k, rng, gain));
    if (bias) b = ps.add(name + ".b", Tensor<T>::zeros({out_ch}));
  }

  Var<T> operator()(const Var<T>& x) const { return ops::conv1d(x, w, b, stride, pad_left); }
};

// Fully connected stack with SiLU between layers (none after the last).
template <class T>
struct Mlp {
  std::vector<Linear<T>> layers;

  Mlp() = default;
  Mlp(ParamStore<T>& ps, const std::string& name, const std::vector<index_t>& widths, Rng& rng,
      T final_gain = T(1)) {
    if (widths.size() < 2) throw ValidationError("Mlp needs at least one layer: " + name);
    for (size_t i = 0; i + 1 < widths.size(); ++i) {
      const bool last = (i + 2 == widths.size());
      layers.emplace_back(ps, name + ".fc" + std::to_string(i), widths[i], widths[i + 1], rng,
                          true, last ? final_gain : T(1));
    }
  }

  Var<T> operator()(Var<T> x) const {
    for (size_t i = 0; i < layers.size(); ++i) {
      x = layers[i](x);
      if (i + 1 < layers.size()) x = ops::silu(x);
    }
    return x;
  }
};

}  // namespace nn
}  // namespace speak

#endif  // SPEAK_CORE_NN_HPP_
