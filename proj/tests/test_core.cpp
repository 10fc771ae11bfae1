// tests/test_core.cpp

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

#include "testing.hpp"

#include <algorithm>
#include <array>

#include "speak/core/adam.hpp"
#include "speak/core/nn.hpp"

using namespace speak;
using namespace speak::ops;
using speak::testing::gradcheck;
using speak::testing::project;

namespace {

Var<double> leafr(Shape s, uint64_t seed, double scale = 1.0) {
  Rng rng(seed);
  return Var<double>::leaf(Tensor<double>::randn(std::move(s), rng, scale), true);
}

// Direct convolution used as the oracle for the im2col path.
Tensor<double> conv2d_naive(const Tensor<double>& x, const Tensor<double>& w, const Tensor<double>& b,
                            index_t stride, index_t pad) {
  const index_t B = x.shape[0], C = x.shape[1], H = x.shape[2], W = x.shape[3];
  const index_t O = w.shape[0], kh = w.shape[2], kw = w.shape[3];
  const index_t Ho = (H + 2 * pad - kh) / stride + 1;
  const index_t Wo = (W + 2 * pad - kw) / stride + 1;
  Tensor<double> y = Tensor<double>::zeros({B, O, Ho, Wo});
  for (index_t bi = 0; bi < B; ++bi)
    for (index_t o = 0; o < O; ++o)
      for (index_t oh = 0; oh < Ho; ++oh)
        for (index_t ow = 0; ow < Wo; ++ow) {
          double acc = b.defined() ? b[o] : 0.0;
          for (index_t c = 0; c < C; ++c)
            for (index_t ki = 0; ki < kh; ++ki)
              for (index_t kj = 0; kj < kw; ++kj) {
                const index_t ih = oh * stride - pad + ki;
                const index_t iw = ow * stride - pad + kj;
                if (ih >= 0 && ih < H && iw >= 0 && iw < W)
                  acc += x.at(bi, c, ih, iw) * w.at(o, c, ki, kj);
              }
          y.at(bi, o, oh, ow) = acc;
        }
  return y;
}

Tensor<double> conv1d_naive(const Tensor<double>& x, const Tensor<double>& w, const Tensor<double>& b,
                            index_t stride, index_t pad_left) {
  const index_t B = x.shape[0], C = x.shape[1], L = x.shape[2];
  const index_t O = w.shape[0], k = w.shape[2];
  const index_t Lo = (L + pad_left - k) / stride + 1;
  Tensor<double> y = Tensor<double>::zeros({B, O, Lo});
  for (index_t bi = 0; bi < B; ++bi)
    for (index_t o = 0; o < O; ++o)
      for (index_t t = 0; t < Lo; ++t) {
        double acc = b.defined() ? b[o] : 0.0;
        for (index_t c = 0; c < C; ++c)
          for (index_t ki = 0; ki < k; ++ki) {
            const index_t i = t * stride - pad_left + ki;
            if (i >= 0 && i < L) acc += x[(bi * C + c) * L + i] * w[(o * C + c) * k + ki];
          }
        y[(bi * O + o) * Lo + t] = acc;
      }
  return y;
}

}  // namespace

TEST_CASE("rng is deterministic and forkable", "[core][rng]") {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) REQUIRE(a.next_u64() == b.next_u64());

  Rng c(42);
  Rng f1 = c.fork(1);
  Rng f2 = c.fork(2);
  REQUIRE(f1.next_u64() != f2.next_u64());

  // forking twice with the same key gives the same stream
  Rng d(42);
  Rng f1b = d.fork(1);
  Rng f1c = d.fork(1);
  REQUIRE(f1b.next_u64() == f1c.next_u64());

  // state round trip
  Rng e(7);
  e.next_u64();
  const uint64_t s = e.state();
  const uint64_t expect = e.next_u64();
  Rng e2(0);
  e2.set_state(s);
  REQUIRE(e2.next_u64() == expect);
}

TEST_CASE("rng uniform and normal ranges", "[core][rng]") {
  Rng r(3);
  double mean = 0, m2 = 0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const double u = r.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    mean += u;
  }
  mean /= n;
  REQUIRE(std::abs(mean - 0.5) < 0.01);

  mean = 0;
  for (int i = 0; i < n; ++i) {
    const double g = r.normal();
    mean += g;
    m2 += g * g;
  }
  mean /= n;
  m2 /= n;
  REQUIRE(std::abs(mean) < 0.03);
  REQUIRE(std::abs(m2 - 1.0) < 0.05);
}

TEST_CASE("tensor shape checks", "[core][tensor]") {
  REQUIRE_THROWS_AS(Tensor<float>::from({2, 3}, std::vector<float>(5)), ValidationError);
  Tensor<double> t = Tensor<double>::zeros({2, 3});
  REQUIRE(t.numel() == 6);
  Tensor<double> u = t;  // shares the buffer
  u[0] = 5;
  REQUIRE(t[0] == 5);
  Tensor<double> c = t.clone();
  c[0] = 9;
  REQUIRE(t[0] == 5);
}

TEST_CASE("elementwise forward values", "[core][ops]") {
  auto x = Var<double>::leaf(Tensor<double>::from({4}, {-2.0, -0.5, 0.0, 1.5}), false);
  auto sp = softplus(x);
  auto sg = sigmoid(x);
  auto th = tanh_op(x);
  auto si = silu(x);
  for (index_t i = 0; i < 4; ++i) {
    const double v = x.val()[i];
    REQUIRE(sp.val()[i] == Catch::Approx(std::log1p(std::exp(v))).epsilon(1e-12));
    REQUIRE(sg.val()[i] == Catch::Approx(1.0 / (1.0 + std::exp(-v))).epsilon(1e-12));
    REQUIRE(th.val()[i] == Catch::Approx(std::tanh(v)).epsilon(1e-12));
    REQUIRE(si.val()[i] == Catch::Approx(v / (1.0 + std::exp(-v))).epsilon(1e-12));
  }
  REQUIRE(relu(x).val()[0] == 0.0);
  REQUIRE(relu(x).val()[3] == 1.5);
  REQUIRE(lrelu(x, 0.2).val()[0] == Catch::Approx(-0.4));
  REQUIRE(abs_op(x).val()[0] == 2.0);
}

TEST_CASE("elementwise gradients", "[core][grad]") {
  auto x = leafr({3, 4}, 11);
  auto y = leafr({3, 4}, 12);
  gradcheck([&] { return project(add(x, y)); }, {x, y});
  gradcheck([&] { return project(sub(x, y)); }, {x, y});
  gradcheck([&] { return project(mul(x, y)); }, {x, y});
  gradcheck([&] { return project(neg(x)); }, {x});
  gradcheck([&] { return project(square(x)); }, {x});
  gradcheck([&] { return project(silu(x)); }, {x});
  gradcheck([&] { return project(sigmoid(x)); }, {x});
  gradcheck([&] { return project(tanh_op(x)); }, {x});
  gradcheck([&] { return project(softplus(x)); }, {x});
  gradcheck([&] { return project(mul_scalar(add_scalar(x, 0.3), -1.7)); }, {x});
}

TEST_CASE("broadcast gradients", "[core][grad]") {
  auto x = leafr({5, 3}, 21);
  auto b = leafr({3}, 22);
  gradcheck([&] { return project(add_rowvec(x, b)); }, {x, b});
  gradcheck([&] { return project(mul_rowvec(x, b)); }, {x, b});

  auto img = leafr({2, 3, 4, 4}, 23);
  auto v = leafr({2, 3}, 24);
  gradcheck([&] { return project(add_chanvec(img, v)); }, {img, v});
  gradcheck([&] { return project(mul_chanvec(img, v)); }, {img, v});

  auto row = leafr({1, 6}, 25);
  gradcheck([&] { return project(broadcast_rows(row, 4)); }, {row});
}

TEST_CASE("matmul and linear match naive loops", "[core][ops]") {
  Rng rng(31);
  auto a = Var<double>::leaf(Tensor<double>::randn({3, 5}, rng), true);
  auto b = Var<double>::leaf(Tensor<double>::randn({5, 4}, rng), true);
  auto y = matmul(a, b);
  for (index_t i = 0; i < 3; ++i)
    for (index_t j = 0; j < 4; ++j) {
      double acc = 0;
      for (index_t k = 0; k < 5; ++k) acc += a.val().at(i, k) * b.val().at(k, j);
      REQUIRE(y.val().at(i, j) == Catch::Approx(acc).epsilon(1e-12));
    }
  gradcheck([&] { return project(matmul(a, b)); }, {a, b});

  auto x = leafr({4, 5}, 32);
  auto w = leafr({3, 5}, 33);
  auto bias = leafr({3}, 34);
  auto z = linear(x, w, bias);
  for (index_t i = 0; i < 4; ++i)
    for (index_t j = 0; j < 3; ++j) {
      double acc = bias.val()[j];
      for (index_t k = 0; k < 5; ++k) acc += x.val().at(i, k) * w.val().at(j, k);
      REQUIRE(z.val().at(i, j) == Catch::Approx(acc).epsilon(1e-12));
    }
  gradcheck([&] { return project(linear(x, w, bias)); }, {x, w, bias});
  gradcheck([&] { return project(transpose(x)); }, {x});
}

TEST_CASE("conv2d matches direct convolution", "[core][ops][conv]") {
  for (auto [stride, pad] : std::vector<std::pair<index_t, index_t>>{{1, 0}, {1, 1}, {2, 1}, {2, 0}}) {
    auto x = leafr({2, 3, 6, 6}, 41 + stride * 10 + pad);
    auto w = leafr({4, 3, 3, 3}, 42, 0.5);
    auto b = leafr({4}, 43);
    auto y = conv2d(x, w, b, stride, pad);
    Tensor<double> ref = conv2d_naive(x.val(), w.val(), b.val(), stride, pad);
    REQUIRE(y.shape() == ref.shape);
    for (index_t i = 0; i < ref.numel(); ++i)
      REQUIRE(y.val()[i] == Catch::Approx(ref[i]).margin(1e-11));
    gradcheck([&, s = stride, p = pad] { return project(conv2d(x, w, b, s, p)); }, {x, w, b});
  }
}

TEST_CASE("conv1d matches direct convolution", "[core][ops][conv]") {
  for (auto [stride, padl] : std::vector<std::pair<index_t, index_t>>{{1, 0}, {2, 1}, {3, 2}, {5, 5}}) {
    auto x = leafr({2, 3, 20}, 51 + stride);
    auto w = leafr({4, 3, 5}, 52, 0.5);
    auto b = leafr({4}, 53);
    auto y = conv1d(x, w, b, stride, padl);
    Tensor<double> ref = conv1d_naive(x.val(), w.val(), b.val(), stride, padl);
    REQUIRE(y.shape() == ref.shape);
    for (index_t i = 0; i < ref.numel(); ++i)
      REQUIRE(y.val()[i] == Catch::Approx(ref[i]).margin(1e-11));
    gradcheck([&, s = stride, p = padl] { return project(conv1d(x, w, b, s, p)); }, {x, w, b});
  }
}

TEST_CASE("causal conv1d output length", "[core][ops][conv]") {
  // with pad_left = k - s the output length is floor(L / s)
  for (auto [k, s, L] : std::vector<std::array<index_t, 3>>{
           {10, 5, 640}, {8, 4, 128}, {4, 4, 32}, {4, 2, 8}, {2, 2, 4}, {10, 5, 643}}) {
    auto x = leafr({1, 1, L}, 61);
    auto w = leafr({1, 1, k}, 62);
    auto y = conv1d(x, w, Var<double>(), s, k - s);
    REQUIRE(y.shape()[2] == L / s);
  }
}

TEST_CASE("pooling and upsampling", "[core][ops]") {
  auto x = leafr({2, 3, 4, 4}, 71);
  auto up = upsample2x(x);
  REQUIRE(up.shape() == Shape{2, 3, 8, 8});
  REQUIRE(up.val().at(0, 0, 0, 0) == x.val().at(0, 0, 0, 0));
  REQUIRE(up.val().at(0, 0, 1, 1) == x.val().at(0, 0, 0, 0));
  REQUIRE(up.val().at(0, 0, 2, 3) == x.val().at(0, 0, 1, 1));
  gradcheck([&] { return project(upsample2x(x)); }, {x});

  auto dn = avgpool2d2(x);
  REQUIRE(dn.shape() == Shape{2, 3, 2, 2});
  REQUIRE(dn.val().at(0, 0, 0, 0) ==
          Catch::Approx(0.25 * (x.val().at(0, 0, 0, 0) + x.val().at(0, 0, 0, 1) +
                                x.val().at(0, 0, 1, 0) + x.val().at(0, 0, 1, 1))));
  gradcheck([&] { return project(avgpool2d2(x)); }, {x});

  auto g = global_avgpool2d(x);
  REQUIRE(g.shape() == Shape{2, 3});
  double acc = 0;
  for (index_t h = 0; h < 4; ++h)
    for (index_t w = 0; w < 4; ++w) acc += x.val().at(1, 2, h, w);
  REQUIRE(g.val().at(1, 2) == Catch::Approx(acc / 16));
  gradcheck([&] { return project(global_avgpool2d(x)); }, {x});

  auto seq = leafr({2, 3, 7}, 72);
  auto p = avgpool1d_pairs(seq);
  REQUIRE(p.shape() == Shape{2, 3, 3});
  REQUIRE(p.val()[0] == Catch::Approx(0.5 * (seq.val()[0] + seq.val()[1])));
  gradcheck([&] { return project(avgpool1d_pairs(seq)); }, {seq});
}

TEST_CASE("shape ops round trip", "[core][ops]") {
  auto x = leafr({2, 3, 4}, 81);
  auto r = reshape(x, {6, 4});
  REQUIRE(r.shape() == Shape{6, 4});
  for (index_t i = 0; i < 24; ++i) REQUIRE(r.val()[i] == x.val()[i]);
  gradcheck([&] { return project(reshape(x, {4, 6})); }, {x});

  auto m = leafr({5, 8}, 82);
  auto s = slice_cols(m, 2, 6);
  REQUIRE(s.shape() == Shape{5, 4});
  REQUIRE(s.val().at(1, 0) == m.val().at(1, 2));
  gradcheck([&] { return project(slice_cols(m, 2, 6)); }, {m});

  auto m2 = leafr({5, 3}, 83);
  auto cat = concat_cols<double>({slice_cols(m, 0, 2), m2, slice_cols(m, 6, 8)});
  REQUIRE(cat.shape() == Shape{5, 7});
  REQUIRE(cat.val().at(2, 2) == m2.val().at(2, 0));
  gradcheck([&] { return project(concat_cols<double>({m, m2})); }, {m, m2});

  gradcheck([&] { return project(slice_front(m, 1, 4)); }, {m});
  gradcheck([&] { return project(concat_front<double>({m, m})); }, {m});

  auto img = leafr({2, 5, 4, 4}, 84);
  auto ch = slice_chan(img, 1, 3);
  REQUIRE(ch.shape() == Shape{2, 2, 4, 4});
  REQUIRE(ch.val().at(0, 0, 2, 2) == img.val().at(0, 1, 2, 2));
  gradcheck([&] { return project(slice_chan(img, 1, 3)); }, {img});

  auto img2 = leafr({2, 3, 4, 4}, 85);
  auto cc = concat_chan<double>({slice_chan(img, 0, 2), img2});
  REQUIRE(cc.shape() == Shape{2, 5, 4, 4});
  gradcheck([&] { return project(concat_chan<double>({img, img2})); }, {img, img2});

  auto sh = slice_h(img, 1, 3);
  REQUIRE(sh.shape() == Shape{2, 5, 2, 4});
  REQUIRE(sh.val().at(1, 2, 0, 3) == img.val().at(1, 2, 1, 3));
  gradcheck([&] { return project(slice_h(img, 1, 3)); }, {img});
}

TEST_CASE("normalization forward matches formula", "[core][ops]") {
  auto x = Var<double>::leaf(Tensor<double>::from({1, 3}, {1.0, 2.0, 3.0}), false);
  // mean 2, population var 2/3
  auto y = rownorm(x, 1e-12);
  const double is = 1.0 / std::sqrt(2.0 / 3.0 + 1e-12);
  REQUIRE(y.val()[0] == Catch::Approx(-1.0 * is).epsilon(1e-9));
  REQUIRE(y.val()[1] == Catch::Approx(0.0).margin(1e-12));
  REQUIRE(y.val()[2] == Catch::Approx(1.0 * is).epsilon(1e-9));

  auto xr = leafr({4, 6}, 91);
  gradcheck([&] { return project(rownorm(xr, 1e-5)); }, {xr}, 1e-5, 1e-6);

  auto img = leafr({2, 3, 4, 4}, 92);
  auto z = instnorm2d(img, 1e-5);
  // each (b,c) plane has ~zero mean and ~unit variance
  for (index_t b = 0; b < 2; ++b)
    for (index_t c = 0; c < 3; ++c) {
      double mu = 0, var = 0;
      for (index_t h = 0; h < 4; ++h)
        for (index_t w = 0; w < 4; ++w) mu += z.val().at(b, c, h, w);
      mu /= 16;
      for (index_t h = 0; h < 4; ++h)
        for (index_t w = 0; w < 4; ++w) {
          const double d = z.val().at(b, c, h, w) - mu;
          var += d * d;
        }
      var /= 16;
      REQUIRE(mu == Catch::Approx(0.0).margin(1e-9));
      REQUIRE(var == Catch::Approx(1.0).epsilon(1e-3));
    }
  gradcheck([&] { return project(instnorm2d(img, 1e-5)); }, {img}, 1e-5, 1e-6);
}

TEST_CASE("softmax rows", "[core][ops]") {
  auto x = leafr({3, 5}, 101);
  auto y = softmax_rows(x);
  for (index_t r = 0; r < 3; ++r) {
    double sum = 0;
    for (index_t c = 0; c < 5; ++c) {
      REQUIRE(y.val().at(r, c) > 0);
      sum += y.val().at(r, c);
    }
    REQUIRE(sum == Catch::Approx(1.0).epsilon(1e-12));
  }
  gradcheck([&] { return project(softmax_rows(x)); }, {x});
}

TEST_CASE("reductions", "[core][ops]") {
  auto x = Var<double>::leaf(Tensor<double>::from({2, 2}, {1.0, 2.0, 3.0, 4.0}), true);
  REQUIRE(sum_all(x).val()[0] == 10.0);
  REQUIRE(mean_all(x).val()[0] == 2.5);
  auto xr = leafr({3, 4}, 111);
  gradcheck([&] { return sum_all(square(xr)); }, {xr});
  gradcheck([&] { return mean_all(silu(xr)); }, {xr});

  auto d = rows_l2norm(x);
  REQUIRE(d.shape() == Shape{2});
  REQUIRE(d.val()[0] == Catch::Approx(std::sqrt(5.0)));
  REQUIRE(d.val()[1] == Catch::Approx(5.0));
  gradcheck([&] { return project(rows_l2norm(xr)); }, {xr});

  auto a = leafr({4, 4}, 112);
  auto b = leafr({4, 4}, 113);
  gradcheck([&] { return l1_loss(a, b); }, {a, b});
  gradcheck([&] { return mse_loss(a, b); }, {a, b});
}

TEST_CASE("gradients accumulate through shared subexpressions", "[core][grad]") {
  auto x = leafr({3, 3}, 121);
  // y = x * x + x reused three times
  gradcheck([&] { return mean_all(add(mul(x, x), add(x, silu(x)))); }, {x});
}

TEST_CASE("detach blocks gradient flow", "[core][grad]") {
  auto x = Var<double>::leaf(Tensor<double>::from({2}, {3.0, 4.0}), true);
  auto y = mul(detach(square(x)), x);  // d/dx = x^2 only
  backward(mean_all(y));
  REQUIRE(x.grad()[0] == Catch::Approx(9.0 / 2));
  REQUIRE(x.grad()[1] == Catch::Approx(16.0 / 2));
}

TEST_CASE("no-grad mode builds no graph", "[core][grad]") {
  auto x = leafr({2, 2}, 131);
  {
    NoGradGuard ng;
    auto y = mean_all(square(x));
    REQUIRE_FALSE(y.requires_grad());
    backward(y);  // no-op
    REQUIRE_FALSE(x.has_grad());
  }
}

TEST_CASE("repeated backward accumulates until cleared", "[core][grad]") {
  auto x = Var<double>::leaf(Tensor<double>::from({1}, {2.0}), true);
  auto make = [&] { return square(x); };
  backward(make());
  REQUIRE(x.grad()[0] == Catch::Approx(4.0));
  backward(make());
  REQUIRE(x.grad()[0] == Catch::Approx(8.0));
  x.clear_grad();
  backward(make());
  REQUIRE(x.grad()[0] == Catch::Approx(4.0));
}

TEST_CASE("param store registers, freezes and lists", "[core][nn]") {
  ParamStore<double> ps;
  Rng rng(1);
  nn::Linear<double> l1(ps, "m.a", 4, 3, rng);
  nn::Conv2d<double> c1(ps, "m.b.conv", 3, 8, 3, 1, 1, rng);
  REQUIRE(ps.size() == 4);
  REQUIRE(ps.has("m.a.w"));
  REQUIRE(ps.has("m.b.conv.b"));
  REQUIRE_THROWS_AS(ps.add("m.a.w", Tensor<double>::zeros({1})), ValidationError);

  auto names = ps.names();
  REQUIRE(std::is_sorted(names.begin(), names.end()));

  ps.set_trainable("m.a", false);
  REQUIRE_FALSE(ps.at("m.a.w").requires_grad());
  REQUIRE(ps.at("m.b.conv.w").requires_grad());
  REQUIRE(ps.trainable().size() == 2);
  ps.set_trainable("m.a", true);
  REQUIRE(ps.trainable().size() == 4);

  // frozen params do not receive gradients
  ps.set_trainable("m.a", false);
  auto x = leafr({2, 4}, 141);
  backward(mean_all(l1(x)));
  REQUIRE_FALSE(ps.at("m.a.w").has_grad());
}

TEST_CASE("mlp builds the right shapes", "[core][nn]") {
  ParamStore<double> ps;
  Rng rng(2);
  nn::Mlp<double> mlp(ps, "head", {6, 16, 3}, rng);
  auto x = leafr({5, 6}, 151);
  auto y = mlp(x);
  REQUIRE(y.shape() == Shape{5, 3});
  std::vector<Var<double>> leaves{x};
  gradcheck([&] { return project(mlp(x)); }, leaves);
}

TEST_CASE("adam takes the expected first step", "[core][adam]") {
  ParamStore<double> ps;
  auto p = ps.add("w", Tensor<double>::from({2}, {1.0, -2.0}));
  Adam<double> opt(ps.trainable(), 0.1, 0.9, 0.999, 1e-8);

  // L = 0.5 * sum(w^2), grad = w
  backward(mul_scalar(sum_all(square(p)), 0.5));
  opt.step();
  // first step moves by lr * g / (|g| + eps) ~= lr * sign(g)
  REQUIRE(p.val()[0] == Catch::Approx(1.0 - 0.1).epsilon(1e-4));
  REQUIRE(p.val()[1] == Catch::Approx(-2.0 + 0.1).epsilon(1e-4));
}

TEST_CASE("adam minimizes a quadratic", "[core][adam]") {
  ParamStore<double> ps;
  auto p = ps.add("w", Tensor<double>::from({3}, {3.0, -1.5, 0.7}));
  Adam<double> opt(ps.trainable(), 0.05, 0.9, 0.999);
  for (int i = 0; i < 500; ++i) {
    opt.zero_grad();
    backward(sum_all(square(p)));
    opt.step();
  }
  for (index_t i = 0; i < 3; ++i) REQUIRE(std::abs(p.val()[i]) < 1e-2);
}

TEST_CASE("grad clipping rescales the global norm", "[core][adam]") {
  ParamStore<double> ps;
  auto a = ps.add("a", Tensor<double>::from({2}, {0.0, 0.0}));
  auto b = ps.add("b", Tensor<double>::from({1}, {0.0}));
  a.grad()[0] = 3.0;
  a.grad()[1] = 0.0;
  b.grad()[0] = 4.0;
  auto params = ps.trainable();
  const double norm = clip_grad_norm(params, 1.0);
  REQUIRE(norm == Catch::Approx(5.0));
  REQUIRE(a.grad()[0] == Catch::Approx(0.6));
  REQUIRE(b.grad()[0] == Catch::Approx(0.8));
}

TEST_CASE("attention-style composite graph", "[core][grad]") {
  // exercises transpose, matmul, softmax and concat in one graph
  auto q = leafr({4, 6}, 161, 0.5);
  auto k = leafr({4, 6}, 162, 0.5);
  auto v = leafr({4, 6}, 163, 0.5);
  auto attn = [&] {
    auto scores = mul_scalar(matmul(q, transpose(k)), 1.0 / std::sqrt(6.0));
    return project(matmul(softmax_rows(scores), v));
  };
  gradcheck(attn, {q, k, v}, 1e-5, 1e-6);
}
