// speak/core/adam.hpp

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

#ifndef SPEAK_CORE_ADAM_HPP_
#define SPEAK_CORE_ADAM_HPP_

#include <string>
#include <utility>
#include <vector>

#include "speak/core/nn.hpp"

namespace speak {

// Adam with bias correction. Parameters without a gradient in a given step
// are skipped entirely (their moments and step counts do not advance).
template <class T>
class Adam {
 public:
  struct Entry {
    std::string name;
    Var<T> param;
    Tensor<T> m, v;
    int64_t t = 0;
  };

  Adam(std::vector<std::pair<std::string, Var<T>>> params, T lr, T beta1, T beta2, T eps = T(1e-8))
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {
    entries_.reserve(params.size());
    for (auto& [name, p] : params) {
      Entry e;
      e.name = name;
      e.param = p;
      e.m = Tensor<T>::zeros(p.shape());
      e.v = Tensor<T>::zeros(p.shape());
      entries_.push_back(std::move(e));
    }
  }

  void step() {
    for (auto& e : entries_) {
      if (!e.param.has_grad()) continue;
      e.t += 1;
      const Tensor<T>& g = e.param.grad();
      Tensor<T>& x = e.param.value_mut();
      const T bc1 = T(1) - std::pow(beta1_, static_cast<T>(e.t));
      const T bc2 = T(1) - std::pow(beta2_, static_cast<T>(e.t));
      T* pm = e.m.data();
      T* pv = e.v.data();
      T* px = x.data();
      const T* pg = g.data();
      for (index_t i = 0, n = x.numel(); i < n; ++i) {
        pm[i] = beta1_ * pm[i] + (T(1) - beta1_) * pg[i];
        pv[i] = beta2_ * pv[i] + (T(1) - beta2_) * pg[i] * pg[i];
        const T mhat = pm[i] / bc1;
        const T vhat = pv[i] / bc2;
        px[i] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
      }
    }
  }

  void zero_grad() {
    for (auto& e : entries_) e.param.clear_grad();
  }

  std::vector<Entry>& entries() { return entries_; }
  const std::vector<Entry>& entries() const { return entries_; }
  T lr() const { return lr_; }
  void set_lr(T lr) { lr_ = lr; }

 private:
  std::vector<Entry> entries_;
  T lr_, beta1_, beta2_, eps_;
};

// Scales all gradients so their global Euclidean norm is at most max_norm.
// Returns the pre-clip norm.
template <class T>
T clip_grad_norm(std::vector<std::pair<std::string, Var<T>>>& params, T max_norm) {
  T sq = T(0);
  for (auto& [name, p] : params) {
    if (!p.has_grad()) continue;
    const Tensor<T>& g = p.grad();
    const T* pg = g.data();
    for (index_t i = 0, n = g.numel(); i < n; ++i) sq += pg[i] * pg[i];
  }
  const T norm = std::sqrt(sq);
  if (norm > max_norm && norm > T(0)) {
    const T scale = max_norm / norm;
    for (auto& [name, p] : params) {
      if (!p.has_grad()) continue;
      Tensor<T>& g = p.grad();
      T* pg = g.data();
      for (index_t i = 0, n = g.numel(); i < n; ++i) pg[i] *= scale;
    }
  }
  return norm;
}

}  // namespace speak

#endif  // SPEAK_CORE_ADAM_HPP_
