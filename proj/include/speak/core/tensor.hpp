// speak/core/tensor.hpp

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

#ifndef SPEAK_CORE_TENSOR_HPP_
#define SPEAK_CORE_TENSOR_HPP_

#include <cstdint>
#include <memory>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "speak/core/errors.hpp"
#include "speak/core/rng.hpp"

namespace speak {

using index_t = int64_t;
using Shape = std::vector<index_t>;

inline std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << "[";
  for (size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
  os << "]";
  return os.str();
}

inline index_t shape_numel(const Shape& s) {
  index_t n = 1;
  for (index_t d : s) n *= d;
  return n;
}

// Dense row-major tensor. Copies share the underlying buffer; every op
// allocates a fresh output, so shared buffers are never written twice.
template <class T>
struct Tensor {
  Shape shape;
  std::shared_ptr<std::vector<T>> store;

  Tensor() = default;
  Tensor(Shape s, std::shared_ptr<std::vector<T>> d) : shape(std::move(s)), store(std::move(d)) {}

  static Tensor zeros(Shape s) {
    auto d = std::make_shared<std::vector<T>>(static_cast<size_t>(shape_numel(s)), T(0));
    return Tensor(std::move(s), std::move(d));
  }
  static Tensor full(Shape s, T v) {
    auto d = std::make_shared<std::vector<T>>(static_cast<size_t>(shape_numel(s)), v);
    return Tensor(std::move(s), std::move(d));
  }
  static Tensor scalar(T v) { return full({1}, v); }
  static Tensor from(Shape s, std::vector<T> v) {
    if (shape_numel(s) != static_cast<index_t>(v.size()))
      throw ShapeError("tensor data size does not match shape " + shape_str(s));
    return Tensor(std::move(s), std::make_shared<std::vector<T>>(std::move(v)));
  }
  static Tensor randn(Shape s, Rng& rng, T stddev = T(1)) {
    Tensor t = zeros(s);
    for (auto& x : *t.store) x = static_cast<T>(rng.normal()) * stddev;
    return t;
  }
  static Tensor rand_uniform(Shape s, Rng& rng, T lo, T hi) {
    Tensor t = zeros(s);
    for (auto& x : *t.store) x = static_cast<T>(rng.uniform(static_cast<double>(lo), static_cast<double>(hi)));
    return t;
  }

  bool defined() const { return static_cast<bool>(store); }
  index_t numel() const { return store ? static_cast<index_t>(store->size()) : 0; }
  int ndim() const { return static_cast<int>(shape.size()); }
  index_t dim(int i) const { return shape[static_cast<size_t>(i)]; }

  T* data() { return store->data(); }
  const T* data() const { return store->data(); }

  T& operator[](index_t i) { return (*store)[static_cast<size_t>(i)]; }
  const T& operator[](index_t i) const { return (*store)[static_cast<size_t>(i)]; }

  T& at(index_t i, index_t j) { return (*store)[static_cast<size_t>(i * shape[1] + j)]; }
  const T& at(index_t i, index_t j) const { return (*store)[static_cast<size_t>(i * shape[1] + j)]; }
  T& at(index_t b, index_t c, index_t h, index_t w) {
    return (*store)[static_cast<size_t>(((b * shape[1] + c) * shape[2] + h) * shape[3] + w)];
  }
  const T& at(index_t b, index_t c, index_t h, index_t w) const {
    return (*store)[static_cast<size_t>(((b * shape[1] + c) * shape[2] + h) * shape[3] + w)];
  }

  // Deep copy.
  Tensor clone() const {
    if (!store) return Tensor();
    return Tensor(shape, std::make_shared<std::vector<T>>(*store));
  }

  template <class U>
  Tensor<U> cast() const {
    Tensor<U> out = Tensor<U>::zeros(shape);
    for (index_t i = 0; i < numel(); ++i) out[i] = static_cast<U>((*store)[static_cast<size_t>(i)]);
    return out;
  }

  bool same_shape(const Tensor& o) const { return shape == o.shape; }
};

template <class T>
inline void check_shape(const Tensor<T>& t, const Shape& want, const char* what) {
  if (t.shape != want)
    throw ShapeError(std::string(what) + ": expected shape " + shape_str(want) + ", got " + shape_str(t.shape));
}

}  // namespace speak

#endif  // SPEAK_CORE_TENSOR_HPP_
