// speak/core/ops.hpp

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

#ifndef SPEAK_CORE_OPS_HPP_
#define SPEAK_CORE_OPS_HPP_

#include <Eigen/Core>
#include <cmath>
#include <vector>

#include "speak/core/autodiff.hpp"

namespace speak {
namespace ops {

namespace detail {

template <class T>
using CMat = Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
template <class T>
using MMat = Eigen::Map<Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

// C[MxN] (+)= op(A) * op(B), row-major buffers.
template <class T>
void gemm(bool ta, bool tb, index_t M, index_t N, index_t K, const T* A, const T* B, T* C, bool accum) {
  CMat<T> a(A, ta ? K : M, ta ? M : K);
  CMat<T> b(B, tb ? N : K, tb ? K : N);
  MMat<T> c(C, M, N);
  if (!ta && !tb) {
    if (accum) c.noalias() += a * b; else c.noalias() = a * b;
  } else if (ta && !tb) {
    if (accum) c.noalias() += a.transpose() * b; else c.noalias() = a.transpose() * b;
  } else if (!ta && tb) {
    if (accum) c.noalias() += a * b.transpose(); else c.noalias() = a * b.transpose();
  } else {
    if (accum) c.noalias() += a.transpose() * b.transpose(); else c.noalias() = a.transpose() * b.transpose();
  }
}

inline void add_into(auto& dst, const auto& src, index_t n) {
  for (index_t i = 0; i < n; ++i) dst[i] += src[i];
}

template <class T>
void accumulate(Node<T>& parent, const Tensor<T>& g) {
  if (!parent.requires_grad) return;
  parent.ensure_grad();
  T* d = parent.grad.data();
  const T* s = g.data();
  for (index_t i = 0, n = g.numel(); i < n; ++i) d[i] += s[i];
}

}  // namespace detail

// ---------------------------------------------------------------------------
// elementwise

template <class T>
Var<T> add(const Var<T>& a, const Var<T>& b) {
  if (a.shape() != b.shape()) throw ShapeError("add: " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  Tensor<T> out = Tensor<T>::zeros(a.shape());
  const T* pa = a.val().data();
  const T* pb = b.val().data();
  T* po = out.data();
  for (index_t i = 0, n = out.numel(); i < n; ++i) po[i] = pa[i] + pb[i];
  return make_op(std::move(out), {a, b}, [](Node<T>& n) {
    detail::accumulate(*n.parents[0], n.grad);
    detail::accumulate(*n.parents[1], n.grad);
  });
}

template <class T>
Var<T> sub(const Var<T>& a, const Var<T>& b) {
  if (a.shape() != b.shape()) throw ShapeError("sub: " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  Tensor<T> out = Tensor<T>::zeros(a.shape());
  const T* pa = a.val().data();
  const T* pb = b.val().data();
  T* po = out.data();
  for (index_t i = 0, n = out.numel(); i < n; ++i) po[i] = pa[i] - pb[i];
  return make_op(std::move(out), {a, b}, [](Node<T>& n) {
    detail::accumulate(*n.parents[0], n.grad);
    auto& p1 = *n.parents[1];
    if (p1.requires_grad) {
      p1.ensure_grad();
      T* d = p1.grad.data();
      const T* g = n.grad.data();
      for (index_t i = 0, k = n.grad.numel(); i < k; ++i) d[i] -= g[i];
    }
  });
}

template <class T>
Var<T> mul(const Var<T>& a, const Var<T>& b) {
  if (a.shape() != b.shape()) throw ShapeError("mul: " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  Tensor<T> out = Tensor<T>::zeros(a.shape());
  const T* pa = a.val().data();
  const T* pb = b.val().data();
  T* po = out.data();
  for (index_t i = 0, n = out.numel(); i < n; ++i) po[i] = pa[i] * pb[i];
  return make_op(std::move(out), {a, b}, [](Node<T>& n) {
    const T* g = n.grad.data();
    auto& pa = *n.parents[0];
    auto& pb = *n.parents[1];
    if (pa.requires_grad) {
      pa.ensure_grad();
      T* d = pa.grad.data();
      const T* vb = pb.val.data();
      for (index_t i = 0, k = n.grad.numel(); i < k; ++i) d[i] += g[i] * vb[i];
    }
    if (pb.requires_grad) {
      pb.ensure_grad();
      T* d = pb.grad.data();
      const T* va = pa.val.data();
      for (index_t i = 0, k = n.grad.numel(); i < k; ++i) d[i] += g[i] * va[i];
    }
  });
}

template <class T>
Var<T> neg(const Var<T>& a) {
  Tensor<T> out = Tensor<T>::zeros(a.shape());
  const T* pa = a.val().data();
  T* po = out.data();
  for (index_t i = 0, n = out.numel(); i < n; ++i) po[i] = -pa[i];
  return make_op(std::move(out), {a}, [](Node<T>& n) {
    auto& p = *n.parents[0];
    if (!p.requires_grad) return;
    p.ensure_grad();
    T* d = p.grad.data();
    const T* g = n.grad.data();
    for (index_t i = 0, k = n.grad.numel(); i < k; ++i) d[i] -= g[i];
  });
}

template <class T>
Var<T> add_scalar(const Var<T>& a, T c) {
  Tensor<T> out = Tensor<T>::zeros(a.shape());
  const T* pa = a.val().data();
  T* po = out.data();
  for (index_t i = 0, n = out.numel(); i < n; ++i) po[i] = pa[i] + c;
  return make_op(std::move(out), {a}, [](Node<T>& n) { detail::accumulate(*n.parents[0], n.grad); });
}

template <class T>
Var<T> mul_scalar(const Var<T>& a, T c) {
  Tensor<T> out = Tensor<T>::zeros(a.shape());
  const T* pa = a.val().data();
  T* po = out.data();
  for (index_t i = 0, n = out.numel(); i < n; ++i) po[i] = pa[i] * c;
  return make_op(std::move(out), {a}, [c](Node<T>& n) {
    auto& p = *n.parents[0];
    if (!p.requires_grad) return;
    p.ensure_grad();
    T* d = p.grad.data();
    const T* g = n.grad.data();
    for (index_t i = 0, k = n.grad.numel(); i < k; ++i) d[i] += g[i] * c;
  });
}

template <class T>
Var<T> square(const Var<T>& a) {
  Tensor<T> out = Tensor<T>::zeros(a.shape());
  const T* pa = a.val().data();
  T* po = out.data();
  for (index_t i = 0, n = out.numel(); i < n; ++i) po[i] = pa[i] * pa[i];
  return make_op(std::move(out), {a}, [](Node<T>& n) {
    auto& p = *n.parents[0];
    if (!p.requires_grad) return;
    p.ensure_grad();
    T* d = p.grad.data();
    const T* g = n.grad.data();
    const T* x = p.val.data();
    for (index_t i = 0, k = n.grad.numel(); i < k; ++i) d[i] += T(2) * x[i] * g[i];
  });
}

template <class T>
Var<T> abs_op(const Var<T>& a) {
  Tensor<T> out = Tensor<T>::zeros(a.shape());
  const T* pa = a.val().data();
  T* po = out.data();
  for (index_t i = 0, n = out.numel(); i < n; ++i) po[i] = std::abs(pa[i]);
  return make_op(std::move(out), {a}, [](Node<T>& n) {
    auto& p = *n.parents[0];
    if (!p.requires_grad) return;
    p.ensure_grad();
    T* d = p.grad.data();
    const T* g = n.grad.data();
    const T* x = p.val.data();
    for (index_t i = 0, k = n.grad.numel(); i < k; ++i) d[i] += (x[i] >= T(0) ? g[i] : -g[i]);
  });
}

template <class T>
Var<T> relu(const Var<T>& a) {
  Tensor<T> out = Tensor<T>::zeros(a.shape());
  const T* pa = a.val().data();
  T* po = out.data();
  for (index_t i = 0, n = out.numel(); i < n; ++i) po[i] = pa[i] > T(0) ? pa[i] : T(0);
  return make_op(std::move(out), {a}, [](Node<T>& n) {
    auto& p = *n.parents[0];
    if (!p.requires_grad) return;
    p.ensure_grad();
    T* d = p.grad.data();
    const T* g = n.grad.data();
    const T* x = p.val.data();
    for (index_t i = 0, k = n.grad.numel(); i < k; ++i) d[i] += x[i] > T(0) ? g[i] : T(0);
  });
}

template <class T>
Var<T> lrelu(const Var<T>& a, T slope = T(0.2)) {
  Tensor<T> out = Tensor<T>::zeros(a.shape());
  const T* pa = a.val().data();
  T* po = out.data();
  for (index_t i = 0, n = out.numel(); i < n; ++i) po[i] = pa[i] > T(0) ? pa[i] : slope * pa[i];
  return make_op(std::move(out), {a}, [slope](Node<T>& n) {
    auto& p = *n.parents[0];
    if (!p.requires_grad) return;
    p.ensure_grad();
    T* d = p.grad.data();
    const T* g = n.grad.data();
    const T* x = p.val.data();
    for (index_t i = 0, k = n.grad.numel(); i < k; ++i) d[i] += x[i] > T(0) ? g[i] : slope * g[i];
  });
}

template <class T>
Var<T> silu(const Var<T>& a) {
  Tensor<T> out = Tensor<T>::zeros(a.shape());
  const T* pa = a.val().data();
  T* po = out.data();
  for (index_t i = 0, n = out.numel(); i < n; ++i) {
    T s = T(1) / (T(1) + std::exp(-pa[i]));
    po[i] = pa[i] * s;
  }
  return make_op(std::move(out), {a}, [](Node<T>& n) {
    auto& p = *n.parents[0];
    if (!p.requires_grad) return;
    p.ensure_grad();
    T* d = p.grad.data();
    const T* g = n.grad.data();
    const T* x = p.val.data();
    for (index_t i = 0, k = n.grad.numel(); i < k; ++i) {
      T s = T(1) / (T(1) + std::exp(-x[i]));
      d[i] += g[i] * s * (T(1) + x[i] * (T(1) - s));
    }
  });
}

template <class T>
Var<T> sigmoid(const Var<T>& a) {
  Tensor<T> out = Tensor<T>::zeros(a.shape());
  const T* pa = a.val().data();
  T* po = out.data();
  for (index_t i = 0, n = out.numel(); i < n; ++i) po[i] = T(1) / (T(1) + std::exp(-pa[i]));
  Tensor<T> saved = out;  // shares the buffer
  return make_op(std::move(out), {a}, [saved](Node<T>& n) {
    auto& p = *n.parents[0];
    if (!p.requires_grad) return;
    p.ensure_grad();
    T* d = p.grad.data();
    const T* g = n.grad.data();
    const T* y = saved.data();
    for (index_t i = 0, k = n.grad.numel(); i < k; ++i) d[i] += g[i] * y[i] * (T(1) - y[i]);
  });
}

template <class T>
Var<T> tanh_op(const Var<T>& a) {
  Tensor<T> out = Tensor<T>::zeros(a.shape());
  const T* pa = a.val().data();
  T* po = out.data();
  for (index_t i = 0, n = out.numel(); i < n; ++i) po[i] = std::tanh(pa[i]);
  Tensor<T> saved = out;
  return make_op(std::move(out), {a}, [saved](Node<T>& n) {
    auto& p = *n.parents[0];
    if (!p.requires_grad) return;
    p.ensure_grad();
    T* d = p.grad.data();
    const T* g = n.grad.data();
    const T* y = saved.data();
    for (index_t i = 0, k = n.grad.numel(); i < k; ++i) d[i] += g[i] * (T(1) - y[i] * y[i]);
  });
}

// log(1 + exp(x)), stable for large |x|
template <class T>
Var<T> softplus(const Var<T>& a) {
  Tensor<T> out = Tensor<T>::zeros(a.shape());
  const T* pa = a.val().data();
  T* po = out.data();
  for (index_t i = 0, n = out.numel(); i < n; ++i) {
    T x = pa[i];
    po[i] = x > T(20) ? x : (x < T(-20) ? std::exp(x) : std::log1p(std::exp(x)));
  }
  return make_op(std::move(out), {a}, [](Node<T>& n) {
    auto& p = *n.parents[0];
    if (!p.requires_grad) return;
    p.ensure_grad();
    T* d = p.grad.data();
    const T* g = n.grad.data();
    const T* x = p.val.data();
    for (index_t i = 0, k = n.grad.numel(); i < k; ++i) d[i] += g[i] / (T(1) + std::exp(-x[i]));
  });
}

// ---------------------------------------------------------------------------
// broadcasts

// x[R,C] + b[C]
template <class T>
Var<T> add_rowvec(const Var<T>& x, const Var<T>& b) {
  if (x.shape().size() != 2 || b.shape() != Shape{x.shape()[1]})
    throw ShapeError("add_rowvec: " + shape_str(x.shape()) + " vs " + shape_str(b.shape()));
  const index_t R = x.shape()[0], C = x.shape()[1];
  Tensor<T> out = Tensor<T>::zeros(x.shape());
  const T* px = x.val().data();
  const T* pb = b.val().data();
  T* po = out.data();
  for (index_t r = 0; r < R; ++r)
    for (index_t c = 0; c < C; ++c) po[r * C + c] = px[r * C + c] + pb[c];
  return make_op(std::move(out), {x, b}, [R, C](Node<T>& n) {
    detail::accumulate(*n.parents[0], n.grad);
    auto& pb = *n.parents[1];
    if (pb.requires_grad) {
      pb.ensure_grad();
      T* d = pb.grad.data();
      const T* g = n.grad.data();
      for (index_t r = 0; r < R; ++r)
        for (index_t c = 0; c < C; ++c) d[c] += g[r * C + c];
    }
  });
}

// x[R,C] * s[C]
template <class T>
Var<T> mul_rowvec(const Var<T>& x, const Var<T>& s) {
  if (x.shape().size() != 2 || s.shape() != Shape{x.shape()[1]})
    throw ShapeError("mul_rowvec: " + shape_str(x.shape()) + " vs " + shape_str(s.shape()));
  const index_t R = x.shape()[0], C = x.shape()[1];
  Tensor<T> out = Tensor<T>::zeros(x.shape());
  const T* px = x.val().data();
  const T* ps = s.val().data();
  T* po = out.data();
  for (index_t r = 0; r < R; ++r)
    for (index_t c = 0; c < C; ++c) po[r * C + c] = px[r * C + c] * ps[c];
  return make_op(std::move(out), {x, s}, [R, C](Node<T>& n) {
    const T* g = n.grad.data();
    auto& px = *n.parents[0];
    auto& ps = *n.parents[1];
    if (px.requires_grad) {
      px.ensure_grad();
      T* d = px.grad.data();
      const T* sv = ps.val.data();
      for (index_t r = 0; r < R; ++r)
        for (index_t c = 0; c < C; ++c) d[r * C + c] += g[r * C + c] * sv[c];
    }
    if (ps.requires_grad) {
      ps.ensure_grad();
      T* d = ps.grad.data();
      const T* xv = px.val.data();
      for (index_t r = 0; r < R; ++r)
        for (index_t c = 0; c < C; ++c) d[c] += g[r * C + c] * xv[r * C + c];
    }
  });
}

// x[B,C,H,W] + v[B,C]  (broadcast over spatial dims)
template <class T>
Var<T> add_chanvec(const Var<T>& x, const Var<T>& v) {
  if (x.shape().size() != 4 || v.shape() != Shape{x.shape()[0], x.shape()[1]})
    throw ShapeError("add_chanvec: " + shape_str(x.shape()) + " vs " + shape_str(v.shape()));
  const index_t B = x.shape()[0], C = x.shape()[1], HW = x.shape()[2] * x.shape()[3];
  Tensor<T> out = Tensor<T>::zeros(x.shape());
  const T* px = x.val().data();
  const T* pv = v.val().data();
  T* po = out.data();
  for (index_t bc = 0; bc < B * C; ++bc) {
    const T a = pv[bc];
    for (index_t i = 0; i < HW; ++i) po[bc * HW + i] = px[bc * HW + i] + a;
  }
  return make_op(std::move(out), {x, v}, [B, C, HW](Node<T>& n) {
    detail::accumulate(*n.parents[0], n.grad);
    auto& pv = *n.parents[1];
    if (pv.requires_grad) {
      pv.ensure_grad();
      T* d = pv.grad.data();
      const T* g = n.grad.data();
      for (index_t bc = 0; bc < B * C; ++bc) {
        T acc = T(0);
        for (index_t i = 0; i < HW; ++i) acc += g[bc * HW + i];
        d[bc] += acc;
      }
    }
  });
}

// x[B,C,H,W] * v[B,C]
template <class T>
Var<T> mul_chanvec(const Var<T>& x, const Var<T>& v) {
  if (x.shape().size() != 4 || v.shape() != Shape{x.shape()[0], x.shape()[1]})
    throw ShapeError("mul_chanvec: " + shape_str(x.shape()) + " vs " + shape_str(v.shape()));
  const index_t B = x.shape()[0], C = x.shape()[1], HW = x.shape()[2] * x.shape()[3];
  Tensor<T> out = Tensor<T>::zeros(x.shape());
  const T* px = x.val().data();
  const T* pv = v.val().data();
  T* po = out.data();
  for (index_t bc = 0; bc < B * C; ++bc) {
    const T a = pv[bc];
    for (index_t i = 0; i < HW; ++i) po[bc * HW + i] = px[bc * HW + i] * a;
  }
  return make_op(std::move(out), {x, v}, [B, C, HW](Node<T>& n) {
    const T* g = n.grad.data();
    auto& px = *n.parents[0];
    auto& pv = *n.parents[1];
    if (px.requires_grad) {
      px.ensure_grad();
      T* d = px.grad.data();
      const T* vv = pv.val.data();
      for (index_t bc = 0; bc < B * C; ++bc)
        for (index_t i = 0; i < HW; ++i) d[bc * HW + i] += g[bc * HW + i] * vv[bc];
    }
    if (pv.requires_grad) {
      pv.ensure_grad();
      T* d = pv.grad.data();
      const T* xv = px.val.data();
      for (index_t bc = 0; bc < B * C; ++bc) {
        T acc = T(0);
        for (index_t i = 0; i < HW; ++i) acc += g[bc * HW + i] * xv[bc * HW + i];
        d[bc] += acc;
      }
    }
  });
}

// x[1,C] replicated to [R,C]
template <class T>
Var<T> broadcast_rows(const Var<T>& x, index_t R) {
  if (x.shape().size() != 2 || x.shape()[0] != 1) throw ShapeError("broadcast_rows expects [1,C], got " + shape_str(x.shape()));
  const index_t C = x.shape()[1];
  Tensor<T> out = Tensor<T>::zeros({R, C});
  const T* px = x.val().data();
  T* po = out.data();
  for (index_t r = 0; r < R; ++r)
    for (index_t c = 0; c < C; ++c) po[r * C + c] = px[c];
  return make_op(std::move(out), {x}, [R, C](Node<T>& n) {
    auto& p = *n.parents[0];
    if (!p.requires_grad) return;
    p.ensure_grad();
    T* d = p.grad.data();
    const T* g = n.grad.data();
    for (index_t r = 0; r < R; ++r)
      for (index_t c = 0; c < C; ++c) d[c] += g[r * C + c];
  });
}

// ---------------------------------------------------------------------------
// linear algebra

template <class T>
Var<T> matmul(const Var<T>& a, const Var<T>& b) {
  if (a.shape().size() != 2 || b.shape().size() != 2 || a.shape()[1] != b.shape()[0])
    throw ShapeError("matmul: " + shape_str(a.shape()) + " x " + shape_str(b.shape()));
  const index_t M = a.shape()[0], K = a.shape()[1], N = b.shape()[1];
  Tensor<T> out = Tensor<T>::zeros({M, N});
  detail::gemm(false, false, M, N, K, a.val().data(), b.val().data(), out.data(), false);
  return make_op(std::move(out), {a, b}, [M, K, N](Node<T>& n) {
    auto& pa = *n.parents[0];
    auto& pb = *n.parents[1];
    if (pa.requires_grad) {
      pa.ensure_grad();
      detail::gemm(false, true, M, K, N, n.grad.data(), pb.val.data(), pa.grad.data(), true);
    }
    if (pb.requires_grad) {
      pb.ensure_grad();
      detail::gemm(true, false, K, N, M, pa.val.data(), n.grad.data(), pb.grad.data(), true);
    }
  });
}

template <class T>
Var<T> transpose(const Var<T>& a) {
  if (a.shape().size() != 2) throw ShapeError("transpose expects 2-d, got " + shape_str(a.shape()));
  const index_t M = a.shape()[0], N = a.shape()[1];
  Tensor<T> out = Tensor<T>::zeros({N, M});
  const T* pa = a.val().data();
  T* po = out.data();
  for (index_t i = 0; i < M; ++i)
    for (index_t j = 0; j < N; ++j) po[j * M + i] = pa[i * N + j];
  return make_op(std::move(out), {a}, [M, N](Node<T>& n) {
    auto& p = *n.parents[0];
    if (!p.requires_grad) return;
    p.ensure_grad();
    T* d = p.grad.data();
    const T* g = n.grad.data();
    for (index_t i = 0; i < M; ++i)
      for (index_t j = 0; j < N; ++j) d[i * N + j] += g[j * M + i];
  });
}

// y[B,O] = x[B,K] * w[O,K]^T (+ b[O])
template <class T>
Var<T> linear(const Var<T>& x, const Var<T>& w, const Var<T>& b = Var<T>()) {
  if (x.shape().size() != 2 || w.shape().size() != 2 || x.shape()[1] != w.shape()[1])
    throw ShapeError("linear: x " + shape_str(x.shape()) + " w " + shape_str(w.shape()));
  const index_t B = x.shape()[0], K = x.shape()[1], O = w.shape()[0];
  Tensor<T> out = Tensor<T>::zeros({B, O});
  detail::gemm(false, true, B, O, K, x.val().data(), w.val().data(), out.data(), false);
  if (b.defined()) {
    if (b.shape() != Shape{O}) throw ShapeError("linear bias shape " + shape_str(b.shape()));
    const T* pb = b.val().data();
    T* po = out.data();
    for (index_t r = 0; r < B; ++r)
      for (index_t c = 0; c < O; ++c) po[r * O + c] += pb[c];
  }
  std::vector<Var<T>> parents = b.defined() ? std::vector<Var<T>>{x, w, b} : std::vector<Var<T>>{x, w};
  return make_op(std::move(out), parents, [B, K, O](Node<T>& n) {
    auto& px = *n.parents[0];
    auto& pw = *n.parents[1];
    if (px.requires_grad) {
      px.ensure_grad();
      detail::gemm(false, false, B, K, O, n.grad.data(), pw.val.data(), px.grad.data(), true);
    }
    if (pw.requires_grad) {
      pw.ensure_grad();
      detail::gemm(true, false, O, K, B, n.grad.data(), px.val.data(), pw.grad.data(), true);
    }
    if (n.parents.size() > 2 && n.parents[2]->requires_grad) {
      auto& pb = *n.parents[2];
      pb.ensure_grad();
      T* d = pb.grad.data();
      const T* g = n.grad.data();
      for (index_t r = 0; r < B; ++r)
        for (index_t c = 0; c < O; ++c) d[c] += g[r * O + c];
    }
  });
}

// ---------------------------------------------------------------------------
// convolutions

namespace detail {

template <class T>
void im2col2d(const T* x, index_t C, index_t H, index_t W, index_t kh, index_t kw, index_t stride, index_t pad,
              index_t Ho, index_t Wo, T* cols) {
  // cols[(c*kh+ki)*kw+kj][oh*Wo+ow]
  for (index_t c = 0; c < C; ++c) {
    for (index_t ki = 0; ki < kh; ++ki) {
      for (index_t kj = 0; kj < kw; ++kj) {
        T* row = cols + ((c * kh + ki) * kw + kj) * (Ho * Wo);
        for (index_t oh = 0; oh < Ho; ++oh) {
          const index_t ih = oh * stride - pad + ki;
          if (ih < 0 || ih >= H) {
            for (index_t ow = 0; ow < Wo; ++ow) row[oh * Wo + ow] = T(0);
            continue;
          }
          const T* xr = x + (c * H + ih) * W;
          for (index_t ow = 0; ow < Wo; ++ow) {
            const index_t iw = ow * stride - pad + kj;
            row[oh * Wo + ow] = (iw >= 0 && iw < W) ? xr[iw] : T(0);
          }
        }
      }
    }
  }
}

template <class T>
void col2im2d_add(const T* cols, index_t C, index_t H, index_t W, index_t kh, index_t kw, index_t stride, index_t pad,
                  index_t Ho, index_t Wo, T* dx) {
  for (index_t c = 0; c < C; ++c) {
    for (index_t ki = 0; ki < kh; ++ki) {
      for (index_t kj = 0; kj < kw; ++kj) {
        const T* row = cols + ((c * kh + ki) * kw + kj) * (Ho * Wo);
        for (index_t oh = 0; oh < Ho; ++oh) {
          const index_t ih = oh * stride - pad + ki;
          if (ih < 0 || ih >= H) continue;
          T* xr = dx + (c * H + ih) * W;
          for (index_t ow = 0; ow < Wo; ++ow) {
            const index_t iw = ow * stride - pad + kj;
            if (iw >= 0 && iw < W) xr[iw] += row[oh * Wo + ow];
          }
        }
      }
    }
  }
}

template <class T>
void im2col1d(const T* x, index_t C, index_t L, index_t k, index_t stride, index_t pad_left, index_t Lo, T* cols) {
  for (index_t c = 0; c < C; ++c) {
    for (index_t ki = 0; ki < k; ++ki) {
      T* row = cols + (c * k + ki) * Lo;
      for (index_t o = 0; o < Lo; ++o) {
        const index_t i = o * stride - pad_left + ki;
        row[o] = (i >= 0 && i < L) ? x[c * L + i] : T(0);
      }
    }
  }
}

template <class T>
void col2im1d_add(const T* cols, index_t C, index_t L, index_t k, index_t stride, index_t pad_left, index_t Lo, T* dx) {
  for (index_t c = 0; c < C; ++c) {
    for (index_t ki = 0; ki < k; ++ki) {
      const T* row = cols + (c * k + ki) * Lo;
      for (index_t o = 0; o < Lo; ++o) {
        const index_t i = o * stride - pad_left + ki;
        if (i >= 0 && i < L) dx[c * L + i] += row[o];
      }
    }
  }
}

}  // namespace detail

// x[B,C,H,W], w[O,C,kh,kw], b[O] optional; symmetric zero padding.
template <class T>
Var<T> conv2d(const Var<T>& x, const Var<T>& w, const Var<T>& b, index_t stride, index_t pad) {
  if (x.shape().size() != 4 || w.shape().size() != 4 || x.shape()[1] != w.shape()[1])
    throw ShapeError("conv2d: x " + shape_str(x.shape()) + " w " + shape_str(w.shape()));
  const index_t B = x.shape()[0], C = x.shape()[1], H = x.shape()[2], W = x.shape()[3];
  const index_t O = w.shape()[0], kh = w.shape()[2], kw = w.shape()[3];
  const index_t Ho = (H + 2 * pad - kh) / stride + 1;
  const index_t Wo = (W + 2 * pad - kw) / stride + 1;
  if (Ho <= 0 || Wo <= 0) throw ShapeError("conv2d: kernel larger than padded input");
  const index_t K = C * kh * kw, N = Ho * Wo;

  Tensor<T> out = Tensor<T>::zeros({B, O, Ho, Wo});
  const bool keep_cols = grad_mode() && (x.requires_grad() || w.requires_grad() || (b.defined() && b.requires_grad()));
  std::vector<Tensor<T>> cols_store;
  Tensor<T> scratch = Tensor<T>::zeros({K, N});
  for (index_t bi = 0; bi < B; ++bi) {
    Tensor<T>& cols = keep_cols ? cols_store.emplace_back(Tensor<T>::zeros({K, N})) : scratch;
    detail::im2col2d(x.val().data() + bi * C * H * W, C, H, W, kh, kw, stride, pad, Ho, Wo, cols.data());
    detail::gemm(false, false, O, N, K, w.val().data(), cols.data(), out.data() + bi * O * N, false);
    if (b.defined()) {
      T* po = out.data() + bi * O * N;
      const T* pb = b.val().data();
      for (index_t o = 0; o < O; ++o)
        for (index_t i = 0; i < N; ++i) po[o * N + i] += pb[o];
    }
  }

  std::vector<Var<T>> parents = b.defined() ? std::vector<Var<T>>{x, w, b} : std::vector<Var<T>>{x, w};
  auto back = [B, C, H, W, O, kh, kw, stride, pad, Ho, Wo, K, N, cols = std::move(cols_store)](Node<T>& n) {
    auto& px = *n.parents[0];
    auto& pw = *n.parents[1];
    if (pw.requires_grad) {
      pw.ensure_grad();
      for (index_t bi = 0; bi < B; ++bi)
        detail::gemm(false, true, O, K, N, n.grad.data() + bi * O * N, cols[static_cast<size_t>(bi)].data(),
                     pw.grad.data(), true);
    }
    if (n.parents.size() > 2 && n.parents[2]->requires_grad) {
      auto& pb = *n.parents[2];
      pb.ensure_grad();
      T* d = pb.grad.data();
      const T* g = n.grad.data();
      for (index_t bi = 0; bi < B; ++bi)
        for (index_t o = 0; o < O; ++o) {
          T acc = T(0);
          const T* gr = g + (bi * O + o) * N;
          for (index_t i = 0; i < N; ++i) acc += gr[i];
          d[o] += acc;
        }
    }
    if (px.requires_grad) {
      px.ensure_grad();
      Tensor<T> dcols = Tensor<T>::zeros({K, N});
      for (index_t bi = 0; bi < B; ++bi) {
        detail::gemm(true, false, K, N, O, pw.val.data(), n.grad.data() + bi * O * N, dcols.data(), false);
        detail::col2im2d_add(dcols.data(), C, H, W, kh, kw, stride, pad, Ho, Wo, px.grad.data() + bi * C * H * W);
      }
    }
  };
  return make_op(std::move(out), parents, std::move(back));
}

// Prepends p copies of the first element along the last axis of [B,C,L].
// Keeps constant signals constant, which zero padding does not.
template <class T>
Var<T> replicate_pad_left1d(const Var<T>& x, index_t p) {
  if (x.shape().size() != 3 || p < 0)
    throw ShapeError("replicate_pad_left1d: " + shape_str(x.shape()));
  const index_t B = x.shape()[0], C = x.shape()[1], L = x.shape()[2];
  Tensor<T> out = Tensor<T>::zeros({B, C, L + p});
  const T* px = x.val().data();
  T* po = out.data();
  for (index_t bc = 0; bc < B * C; ++bc) {
    for (index_t i = 0; i < p; ++i) po[bc * (L + p) + i] = px[bc * L];
    std::copy(px + bc * L, px + (bc + 1) * L, po + bc * (L + p) + p);
  }
  return make_op(std::move(out), {x}, [B, C, L, p](Node<T>& n) {
    auto& pa = *n.parents[0];
    if (!pa.requires_grad) return;
    pa.ensure_grad();
    T* d = pa.grad.data();
    const T* g = n.grad.data();
    for (index_t bc = 0; bc < B * C; ++bc) {
      for (index_t i = 0; i < p; ++i) d[bc * L] += g[bc * (L + p) + i];
      for (index_t i = 0; i < L; ++i) d[bc * L + i] += g[bc * (L + p) + p + i];
    }
  });
}

// x[B,C,L], w[O,C,k], left zero padding only.
template <class T>
Var<T> conv1d(const Var<T>& x, const Var<T>& w, const Var<T>& b, index_t stride, index_t pad_left) {
  if (x.shape().size() != 3 || w.shape().size() != 3 || x.shape()[1] != w.shape()[1])
    throw ShapeError("conv1d: x " + shape_str(x.shape()) + " w " + shape_str(w.shape()));
  const index_t B = x.shape()[0], C = x.shape()[1], L = x.shape()[2];
  const index_t O = w.shape()[0], k = w.shape()[2];
  const index_t Lo = (L + pad_left - k) / stride + 1;
  if (Lo <= 0) throw ShapeError("conv1d: input shorter than kernel window");
  const index_t K = C * k;

  Tensor<T> out = Tensor<T>::zeros({B, O, Lo});
  const bool keep_cols = grad_mode() && (x.requires_grad() || w.requires_grad() || (b.defined() && b.requires_grad()));
  std::vector<Tensor<T>> cols_store;
  Tensor<T> scratch = Tensor<T>::zeros({K, Lo});
  for (index_t bi = 0; bi < B; ++bi) {
    Tensor<T>& cols = keep_cols ? cols_store.emplace_back(Tensor<T>::zeros({K, Lo})) : scratch;
    detail::im2col1d(x.val().data() + bi * C * L, C, L, k, stride, pad_left, Lo, cols.data());
    detail::gemm(false, false, O, Lo, K, w.val().data(), cols.data(), out.data() + bi * O * Lo, false);
    if (b.defined()) {
      T* po = out.data() + bi * O * Lo;
      const T* pb = b.val().data();
      for (index_t o = 0; o < O; ++o)
        for (index_t i = 0; i < Lo; ++i) po[o * Lo + i] += pb[o];
    }
  }

  std::vector<Var<T>> parents = b.defined() ? std::vector<Var<T>>{x, w, b} : std::vector<Var<T>>{x, w};
  auto back = [B, C, L, O, k, stride, pad_left, Lo, K, cols = std::move(cols_store)](Node<T>& n) {
    auto& px = *n.parents[0];
    auto& pw = *n.parents[1];
    if (pw.requires_grad) {
      pw.ensure_grad();
      for (index_t bi = 0; bi < B; ++bi)
        detail::gemm(false, true, O, K, Lo, n.grad.data() + bi * O * Lo, cols[static_cast<size_t>(bi)].data(),
                     pw.grad.data(), true);
    }
    if (n.parents.size() > 2 && n.parents[2]->requires_grad) {
      auto& pb = *n.parents[2];
      pb.ensure_grad();
      T* d = pb.grad.data();
      const T* g = n.grad.data();
      for (index_t bi = 0; bi < B; ++bi)
        for (index_t o = 0; o < O; ++o) {
          T acc = T(0);
          for (index_t i = 0; i < Lo; ++i) acc += g[(bi * O + o) * Lo + i];
          d[o] += acc;
        }
    }
    if (px.requires_grad) {
      px.ensure_grad();
      Tensor<T> dcols = Tensor<T>::zeros({K, Lo});
      for (index_t bi = 0; bi < B; ++bi) {
        detail::gemm(true, false, K, Lo, O, pw.val.data(), n.grad.data() + bi * O * Lo, dcols.data(), false);
        detail::col2im1d_add(dcols.data(), C, L, k, stride, pad_left, Lo, px.grad.data() + bi * C * L);
      }
    }
  };
  return make_op(std::move(out), parents, std::move(back));
}

// ---------------------------------------------------------------------------
// pooling / resampling

template <class T>
Var<T> upsample2x(const Var<T>& x) {
  if (x.shape().size() != 4) throw ShapeError("upsample2x expects 4-d, got " + shape_str(x.shape()));
  const index_t B = x.shape()[0], C = x.shape()[1], H = x.shape()[2], W = x.shape()[3];
  Tensor<T> out = Tensor<T>::zeros({B, C, H * 2, W * 2});
  const T* px = x.val().data();
  T* po = out.data();
  for (index_t bc = 0; bc < B * C; ++bc)
    for (index_t h = 0; h < H; ++h)
      for (index_t w = 0; w < W; ++w) {
        const T v = px[(bc * H + h) * W + w];
        T* o = po + (bc * 2 * H + 2 * h) * 2 * W + 2 * w;
        o[0] = v;
        o[1] = v;
        o[2 * W] = v;
        o[2 * W + 1] = v;
      }
  return make_op(std::move(out), {x}, [B, C, H, W](Node<T>& n) {
    auto& p = *n.parents[0];
    if (!p.requires_grad) return;
    p.ensure_grad();
    T* d = p.grad.data();
    const T* g = n.grad.data();
    for (index_t bc = 0; bc < B * C; ++bc)
      for (index_t h = 0; h < H; ++h)
        for (index_t w = 0; w < W; ++w) {
          const T* gr = g + (bc * 2 * H + 2 * h) * 2 * W + 2 * w;
          d[(bc * H + h) * W + w] += gr[0] + gr[1] + gr[2 * W] + gr[2 * W + 1];
        }
  });
}

template <class T>
Var<T> avgpool2d2(const Var<T>& x) {
  if (x.shape().size() != 4 || x.shape()[2] % 2 || x.shape()[3] % 2)
    throw ShapeError("avgpool2d2 expects even 4-d spatial dims, got " + shape_str(x.shape()));
  const index_t B = x.shape()[0], C = x.shape()[1], H = x.shape()[2], W = x.shape()[3];
  Tensor<T> out = Tensor<T>::zeros({B, C, H / 2, W / 2});
  const T* px = x.val().data();
  T* po = out.data();
  for (index_t bc = 0; bc < B * C; ++bc)
    for (index_t h = 0; h < H / 2; ++h)
      for (index_t w = 0; w < W / 2; ++w) {
        const T* i = px + (bc * H + 2 * h) * W + 2 * w;
        po[(bc * (H / 2) + h) * (W / 2) + w] = (i[0] + i[1] + i[W] + i[W + 1]) * T(0.25);
      }
  return make_op(std::move(out), {x}, [B, C, H, W](Node<T>& n) {
    auto& p = *n.parents[0];
    if (!p.requires_grad) return;
    p.ensure_grad();
    T* d = p.grad.data();
    const T* g = n.grad.data();
    for (index_t bc = 0; bc < B * C; ++bc)
      for (index_t h = 0; h < H / 2; ++h)
        for (index_t w = 0; w < W / 2; ++w) {
          const T gv = g[(bc * (H / 2) + h) * (W / 2) + w] * T(0.25);
          T* o = d + (bc * H + 2 * h) * W + 2 * w;
          o[0] += gv;
          o[1] += gv;
          o[W] += gv;
          o[W + 1] += gv;
        }
  });
}

template <class T>
Var<T> global_avgpool2d(const Var<T>& x) {
  if (x.shape().size() != 4) throw ShapeError("global_avgpool2d expects 4-d, got " + shape_str(x.shape()));
  const index_t B = x.shape()[0], C = x.shape()[1], HW = x.shape()[2] * x.shape()[3];
  Tensor<T> out = Tensor<T>::zeros({B, C});
  const T* px = x.val().data();
  T* po = out.data();
  for (index_t bc = 0; bc < B * C; ++bc) {
    T acc = T(0);
    for (index_t i = 0; i < HW; ++i) acc += px[bc * HW + i];
    po[bc] = acc / static_cast<T>(HW);
  }
  return make_op(std::move(out), {x}, [B, C, HW](Node<T>& n) {
    auto& p = *n.parents[0];
    if (!p.requires_grad) return;
    p.ensure_grad();
    T* d = p.grad.data();
    const T* g = n.grad.data();
    for (index_t bc = 0; bc < B * C; ++bc) {
      const T gv = g[bc] / static_cast<T>(HW);
      for (index_t i = 0; i < HW; ++i) d[bc * HW + i] += gv;
    }
  });
}

// [B,C,L] -> [B,C,floor(L/2)], averaging consecutive pairs; odd tail dropped.
template <class T>
Var<T> avgpool1d_pairs(const Var<T>& x) {
  if (x.shape().size() != 3) throw ShapeError("avgpool1d_pairs expects 3-d, got " + shape_str(x.shape()));
  const index_t B = x.shape()[0], C = x.shape()[1], L = x.shape()[2], Lo = L / 2;
  if (Lo <= 0) throw ShapeError("avgpool1d_pairs: sequence too short " + shape_str(x.shape()));
  Tensor<T> out = Tensor<T>::zeros({B, C, Lo});
  const T* px = x.val().data();
  T* po = out.data();
  for (index_t bc = 0; bc < B * C; ++bc)
    for (index_t i = 0; i < Lo; ++i)
      po[bc * Lo + i] = (px[bc * L + 2 * i] + px[bc * L + 2 * i + 1]) * T(0.5);
  return make_op(std::move(out), {x}, [B, C, L, Lo](Node<T>& n) {
    auto& p = *n.parents[0];
    if (!p.requires_grad) return;
    p.ensure_grad();
    T* d = p.grad.data();
    const T* g = n.grad.data();
    for (index_t bc = 0; bc < B * C; ++bc)
      for (index_t i = 0; i < Lo; ++i) {
        const T gv = g[bc * Lo + i] * T(0.5);
        d[bc * L + 2 * i] += gv;
        d[bc * L + 2 * i + 1] += gv;
      }
  });
}

// ---------------------------------------------------------------------------
// shape ops

template <class T>
Var<T> reshape(const Var<T>& x, Shape s) {
  if (shape_numel(s) != x.numel())
    throw ShapeError("reshape: " + shape_str(x.shape()) + " -> " + shape_str(s));
  Tensor<T> out(s, x.val().store);  // same buffer, new shape
  return make_op(std::move(out), {x}, [](Node<T>& n) {
    auto& p = *n.parents[0];
    if (!p.requires_grad) return;
    p.ensure_grad();
    T* d = p.grad.data();
    const T* g = n.grad.data();
    for (index_t i = 0, k = n.grad.numel(); i < k; ++i) d[i] += g[i];
  });
}

// Slice along dim 0 (contiguous).
template <class T>
Var<T> slice_front(const Var<T>& x, index_t i0, index_t i1) {
  if (x.shape().empty() || i0 < 0 || i1 > x.shape()[0] || i0 >= i1)
    throw ShapeError("slice_front: bad range on " + shape_str(x.shape()));
  Shape s = x.shape();
  const index_t inner = x.numel() / s[0];
  s[0] = i1 - i0;
  Tensor<T> out = Tensor<T>::zeros(s);
  std::copy(x.val().data() + i0 * inner, x.val().data() + i1 * inner, out.data());
  return make_op(std::move(out), {x}, [i0, inner](Node<T>& n) {
    auto& p = *n.parents[0];
    if (!p.requires_grad) return;
    p.ensure_grad();
    T* d = p.grad.data() + i0 * inner;
    const T* g = n.grad.data();
    for (index_t i = 0, k = n.grad.numel(); i < k; ++i) d[i] += g[i];
  });
}

// Concatenate along dim 0 (contiguous).
template <class T>
Var<T> concat_front(const std::vector<Var<T>>& xs) {
  if (xs.empty()) throw ShapeError("concat_front: empty input");
  Shape s = xs[0].shape();
  index_t total = 0;
  for (const auto& x : xs) {
    if (x.shape().size() != s.size()) throw ShapeError("concat_front: rank mismatch");
    for (size_t i = 1; i < s.size(); ++i)
      if (x.shape()[i] != s[i]) throw ShapeError("concat_front: inner shape mismatch");
    total += x.shape()[0];
  }
  const index_t inner = shape_numel(s) / s[0];
  s[0] = total;
  Tensor<T> out = Tensor<T>::zeros(s);
  index_t off = 0;
  for (const auto& x : xs) {
    std::copy(x.val().data(), x.val().data() + x.numel(), out.data() + off);
    off += x.numel();
  }
  return make_op(std::move(out), xs, [inner](Node<T>& n) {
    index_t off = 0;
    for (auto& pp : n.parents) {
      const index_t k = pp->val.numel();
      if (pp->requires_grad) {
        pp->ensure_grad();
        T* d = pp->grad.data();
        const T* g = n.grad.data() + off;
        for (index_t i = 0; i < k; ++i) d[i] += g[i];
      }
      off += k;
    }
    (void)inner;
  });
}

template <class T>
Var<T> slice_cols(const Var<T>& x, index_t c0, index_t c1) {
  if (x.shape().size() != 2 || c0 < 0 || c1 > x.shape()[1] || c0 >= c1)
    throw ShapeError("slice_cols: bad range on " + shape_str(x.shape()));
  const index_t R = x.shape()[0], C = x.shape()[1], Co = c1 - c0;
  Tensor<T> out = Tensor<T>::zeros({R, Co});
  const T* px = x.val().data();
  T* po = out.data();
  for (index_t r = 0; r < R; ++r)
    std::copy(px + r * C + c0, px + r * C + c1, po + r * Co);
  return make_op(std::move(out), {x}, [R, C, c0, Co](Node<T>& n) {
    auto& p = *n.parents[0];
    if (!p.requires_grad) return;
    p.ensure_grad();
    T* d = p.grad.data();
    const T* g = n.grad.data();
    for (index_t r = 0; r < R; ++r)
      for (index_t c = 0; c < Co; ++c) d[r * C + c0 + c] += g[r * Co + c];
  });
}

template <class T>
Var<T> concat_cols(const std::vector<Var<T>>& xs) {
  if (xs.empty()) throw ShapeError("concat_cols: empty input");
  const index_t R = xs[0].shape()[0];
  index_t C = 0;
  for (const auto& x : xs) {
    if (x.shape().size() != 2 || x.shape()[0] != R) throw ShapeError("concat_cols: row mismatch");
    C += x.shape()[1];
  }
  Tensor<T> out = Tensor<T>::zeros({R, C});
  T* po = out.data();
  index_t off = 0;
  for (const auto& x : xs) {
    const index_t Ci = x.shape()[1];
    const T* px = x.val().data();
    for (index_t r = 0; r < R; ++r)
      std::copy(px + r * Ci, px + (r + 1) * Ci, po + r * C + off);
    off += Ci;
  }
  return make_op(std::move(out), xs, [R, C](Node<T>& n) {
    index_t off = 0;
    for (auto& pp : n.parents) {
      const index_t Ci = pp->val.shape[1];
      if (pp->requires_grad) {
        pp->ensure_grad();
        T* d = pp->grad.data();
        const T* g = n.grad.data();
        for (index_t r = 0; r < R; ++r)
          for (index_t c = 0; c < Ci; ++c) d[r * Ci + c] += g[r * C + off + c];
      }
      off += Ci;
    }
  });
}

template <class T>
Var<T> slice_chan(const Var<T>& x, index_t c0, index_t c1) {
  if (x.shape().size() != 4 || c0 < 0 || c1 > x.shape()[1] || c0 >= c1)
    throw ShapeError("slice_chan: bad range on " + shape_str(x.shape()));
  const index_t B = x.shape()[0], C = x.shape()[1], HW = x.shape()[2] * x.shape()[3], Co = c1 - c0;
  Tensor<T> out = Tensor<T>::zeros({B, Co, x.shape()[2], x.shape()[3]});
  const T* px = x.val().data();
  T* po = out.data();
  for (index_t b = 0; b < B; ++b)
    std::copy(px + (b * C + c0) * HW, px + (b * C + c1) * HW, po + b * Co * HW);
  return make_op(std::move(out), {x}, [B, C, HW, c0, Co](Node<T>& n) {
    auto& p = *n.parents[0];
    if (!p.requires_grad) return;
    p.ensure_grad();
    T* d = p.grad.data();
    const T* g = n.grad.data();
    for (index_t b = 0; b < B; ++b) {
      T* db = d + (b * C + c0) * HW;
      const T* gb = g + b * Co * HW;
      for (index_t i = 0; i < Co * HW; ++i) db[i] += gb[i];
    }
  });
}

template <class T>
Var<T> concat_chan(const std::vector<Var<T>>& xs) {
  if (xs.empty()) throw ShapeError("concat_chan: empty input");
  const index_t B = xs[0].shape()[0], H = xs[0].shape()[2], W = xs[0].shape()[3];
  index_t C = 0;
  for (const auto& x : xs) {
    if (x.shape().size() != 4 || x.shape()[0] != B || x.shape()[2] != H || x.shape()[3] != W)
      throw ShapeError("concat_chan: shape mismatch");
    C += x.shape()[1];
  }
  const index_t HW = H * W;
  Tensor<T> out = Tensor<T>::zeros({B, C, H, W});
  T* po = out.data();
  index_t coff = 0;
  for (const auto& x : xs) {
    const index_t Ci = x.shape()[1];
    const T* px = x.val().data();
    for (index_t b = 0; b < B; ++b)
      std::copy(px + b * Ci * HW, px + (b + 1) * Ci * HW, po + (b * C + coff) * HW);
    coff += Ci;
  }
  return make_op(std::move(out), xs, [B, C, HW](Node<T>& n) {
    index_t coff = 0;
    for (auto& pp : n.parents) {
      const index_t Ci = pp->val.shape[1];
      if (pp->requires_grad) {
        pp->ensure_grad();
        T* d = pp->grad.data();
        const T* g = n.grad.data();
        for (index_t b = 0; b < B; ++b) {
          const T* gb = g + (b * C + coff) * HW;
          T* db = d + b * Ci * HW;
          for (index_t i = 0; i < Ci * HW; ++i) db[i] += gb[i];
        }
      }
      coff += Ci;
    }
  });
}

// Crop rows [h0,h1) of the spatial H axis.
template <class T>
Var<T> slice_h(const Var<T>& x, index_t h0, index_t h1) {
  if (x.shape().size() != 4 || h0 < 0 || h1 > x.shape()[2] || h0 >= h1)
    throw ShapeError("slice_h: bad range on " + shape_str(x.shape()));
  const index_t B = x.shape()[0], C = x.shape()[1], H = x.shape()[2], W = x.shape()[3], Ho = h1 - h0;
  Tensor<T> out = Tensor<T>::zeros({B, C, Ho, W});
  const T* px = x.val().data();
  T* po = out.data();
  for (index_t bc = 0; bc < B * C; ++bc)
    std::copy(px + (bc * H + h0) * W, px + (bc * H + h1) * W, po + bc * Ho * W);
  return make_op(std::move(out), {x}, [B, C, H, W, h0, Ho](Node<T>& n) {
    auto& p = *n.parents[0];
    if (!p.requires_grad) return;
    p.ensure_grad();
    T* d = p.grad.data();
    const T* g = n.grad.data();
    for (index_t bc = 0; bc < B * C; ++bc) {
      T* db = d + (bc * H + h0) * W;
      const T* gb = g + bc * Ho * W;
      for (index_t i = 0; i < Ho * W; ++i) db[i] += gb[i];
    }
  });
}

// ---------------------------------------------------------------------------
// normalization / softmax

namespace detail {

// Shared instance-norm kernel over contiguous groups of size N.
template <class T>
void groupnorm_fwd(const T* x, index_t groups, index_t N, T eps, T* y, T* inv_std) {
  for (index_t gidx = 0; gidx < groups; ++gidx) {
    const T* xg = x + gidx * N;
    T* yg = y + gidx * N;
    T mu = T(0);
    for (index_t i = 0; i < N; ++i) mu += xg[i];
    mu /= static_cast<T>(N);
    T var = T(0);
    for (index_t i = 0; i < N; ++i) {
      const T d = xg[i] - mu;
      var += d * d;
    }
    var /= static_cast<T>(N);
    const T is = T(1) / std::sqrt(var + eps);
    inv_std[gidx] = is;
    for (index_t i = 0; i < N; ++i) yg[i] = (xg[i] - mu) * is;
  }
}

template <class T>
void groupnorm_bwd(const T* y, const T* inv_std, const T* g, index_t groups, index_t N, T* dx) {
  for (index_t gidx = 0; gidx < groups; ++gidx) {
    const T* yg = y + gidx * N;
    const T* gg = g + gidx * N;
    T* dg = dx + gidx * N;
    T gsum = T(0), gysum = T(0);
    for (index_t i = 0; i < N; ++i) {
      gsum += gg[i];
      gysum += gg[i] * yg[i];
    }
    const T gmean = gsum / static_cast<T>(N);
    const T gymean = gysum / static_cast<T>(N);
    const T is = inv_std[gidx];
    for (index_t i = 0; i < N; ++i) dg[i] += is * (gg[i] - gmean - yg[i] * gymean);
  }
}

}  // namespace detail

// Per-row normalization over the last axis of [R,C] (population variance).
template <class T>
Var<T> rownorm(const Var<T>& x, T eps) {
  if (x.shape().size() != 2) throw ShapeError("rownorm expects 2-d, got " + shape_str(x.shape()));
  const index_t R = x.shape()[0], C = x.shape()[1];
  Tensor<T> out = Tensor<T>::zeros(x.shape());
  Tensor<T> inv_std = Tensor<T>::zeros({R});
  detail::groupnorm_fwd(x.val().data(), R, C, eps, out.data(), inv_std.data());
  Tensor<T> saved = out;
  return make_op(std::move(out), {x}, [saved, inv_std, R, C](Node<T>& n) {
    auto& p = *n.parents[0];
    if (!p.requires_grad) return;
    p.ensure_grad();
    detail::groupnorm_bwd(saved.data(), inv_std.data(), n.grad.data(), R, C, p.grad.data());
  });
}

// Per-(sample,channel) normalization over spatial dims of [B,C,H,W].
template <class T>
Var<T> instnorm2d(const Var<T>& x, T eps) {
  if (x.shape().size() != 4) throw ShapeError("instnorm2d expects 4-d, got " + shape_str(x.shape()));
  const index_t G = x.shape()[0] * x.shape()[1], N = x.shape()[2] * x.shape()[3];
  Tensor<T> out = Tensor<T>::zeros(x.shape());
  Tensor<T> inv_std = Tensor<T>::zeros({G});
  detail::groupnorm_fwd(x.val().data(), G, N, eps, out.data(), inv_std.data());
  Tensor<T> saved = out;
  return make_op(std::move(out), {x}, [saved, inv_std, G, N](Node<T>& n) {
    auto& p = *n.parents[0];
    if (!p.requires_grad) return;
    p.ensure_grad();
    detail::groupnorm_bwd(saved.data(), inv_std.data(), n.grad.data(), G, N, p.grad.data());
  });
}

template <class T>
Var<T> softmax_rows(const Var<T>& x) {
  if (x.shape().size() != 2) throw ShapeError("softmax_rows expects 2-d, got " + shape_str(x.shape()));
  const index_t R = x.shape()[0], C = x.shape()[1];
  Tensor<T> out = Tensor<T>::zeros(x.shape());
  const T* px = x.val().data();
  T* po = out.data();
  for (index_t r = 0; r < R; ++r) {
    const T* xr = px + r * C;
    T* yr = po + r * C;
    T mx = xr[0];
    for (index_t c = 1; c < C; ++c) mx = std::max(mx, xr[c]);
    T sum = T(0);
    for (index_t c = 0; c < C; ++c) {
      yr[c] = std::exp(xr[c] - mx);
      sum += yr[c];
    }
    for (index_t c = 0; c < C; ++c) yr[c] /= sum;
  }
  Tensor<T> saved = out;
  return make_op(std::move(out), {x}, [saved, R, C](Node<T>& n) {
    auto& p = *n.parents[0];
    if (!p.requires_grad) return;
    p.ensure_grad();
    T* d = p.grad.data();
    const T* g = n.grad.data();
    const T* y = saved.data();
    for (index_t r = 0; r < R; ++r) {
      T dot = T(0);
      for (index_t c = 0; c < C; ++c) dot += g[r * C + c] * y[r * C + c];
      for (index_t c = 0; c < C; ++c) d[r * C + c] += y[r * C + c] * (g[r * C + c] - dot);
    }
  });
}

// ---------------------------------------------------------------------------
// reductions

template <class T>
Var<T> sum_all(const Var<T>& x) {
  T acc = T(0);
  const T* px = x.val().data();
  for (index_t i = 0, n = x.numel(); i < n; ++i) acc += px[i];
  return make_op(Tensor<T>::scalar(acc), {x}, [](Node<T>& n) {
    auto& p = *n.parents[0];
    if (!p.requires_grad) return;
    p.ensure_grad();
    T* d = p.grad.data();
    const T g = n.grad[0];
    for (index_t i = 0, k = p.val.numel(); i < k; ++i) d[i] += g;
  });
}

template <class T>
Var<T> mean_all(const Var<T>& x) {
  const index_t n = x.numel();
  T acc = T(0);
  const T* px = x.val().data();
  for (index_t i = 0; i < n; ++i) acc += px[i];
  acc /= static_cast<T>(n);
  return make_op(Tensor<T>::scalar(acc), {x}, [n](Node<T>& nd) {
    auto& p = *nd.parents[0];
    if (!p.requires_grad) return;
    p.ensure_grad();
    T* d = p.grad.data();
    const T g = nd.grad[0] / static_cast<T>(n);
    for (index_t i = 0; i < n; ++i) d[i] += g;
  });
}

// Euclidean norm per row of [R,C] -> [R].
template <class T>
Var<T> rows_l2norm(const Var<T>& x) {
  if (x.shape().size() != 2) throw ShapeError("rows_l2norm expects 2-d, got " + shape_str(x.shape()));
  const index_t R = x.shape()[0], C = x.shape()[1];
  Tensor<T> out = Tensor<T>::zeros({R});
  const T* px = x.val().data();
  for (index_t r = 0; r < R; ++r) {
    T acc = T(0);
    for (index_t c = 0; c < C; ++c) acc += px[r * C + c] * px[r * C + c];
    out[r] = std::sqrt(acc);
  }
  Tensor<T> saved = out;
  return make_op(std::move(out), {x}, [saved, R, C](Node<T>& n) {
    auto& p = *n.parents[0];
    if (!p.requires_grad) return;
    p.ensure_grad();
    T* d = p.grad.data();
    const T* g = n.grad.data();
    const T* x = p.val.data();
    for (index_t r = 0; r < R; ++r) {
      const T dn = std::max(saved[r], static_cast<T>(1e-12));
      for (index_t c = 0; c < C; ++c) d[r * C + c] += g[r] * x[r * C + c] / dn;
    }
  });
}

// mean(|a-b|)
template <class T>
Var<T> l1_loss(const Var<T>& a, const Var<T>& b) {
  return mean_all(abs_op(sub(a, b)));
}

// mean((a-b)^2)
template <class T>
Var<T> mse_loss(const Var<T>& a, const Var<T>& b) {
  return mean_all(square(sub(a, b)));
}

template <class T>
Var<T> constant(Tensor<T> t) {
  return Var<T>::leaf(std::move(t), false);
}

}  // namespace ops
}  // namespace speak

#endif  // SPEAK_CORE_OPS_HPP_
