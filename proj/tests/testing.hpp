// tests/testing.hpp

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

#ifndef SPEAK_TESTS_TESTING_HPP_
#define SPEAK_TESTS_TESTING_HPP_

#include <cmath>
#include <functional>
#include <vector>

#include "catch2/catch_amalgamated.hpp"
#include "speak/core/ops.hpp"

namespace speak {
namespace testing {

// Compares analytic directional derivatives against central finite
// differences. `makeloss` must rebuild the scalar loss from the leaf values
// on every call; leaves are perturbed in place between calls.
inline void gradcheck(const std::function<Var<double>()>& makeloss, std::vector<Var<double>> leaves,
                      double h = 1e-5, double tol = 1e-7, int ndirs = 2, uint64_t seed = 99) {
  for (auto& l : leaves) l.clear_grad();
  Var<double> loss = makeloss();
  REQUIRE(loss.numel() == 1);
  backward(loss);

  std::vector<Tensor<double>> grads;
  grads.reserve(leaves.size());
  for (auto& l : leaves) {
    REQUIRE(l.has_grad());
    grads.push_back(l.grad().clone());
  }

  Rng rng(seed);
  for (size_t li = 0; li < leaves.size(); ++li) {
    Tensor<double>& x = leaves[li].value_mut();
    const index_t n = x.numel();
    for (int dir = 0; dir < ndirs; ++dir) {
      Tensor<double> v = Tensor<double>::randn({n}, rng);
      double vn = 0;
      for (index_t i = 0; i < n; ++i) vn += v[i] * v[i];
      vn = std::sqrt(vn);
      for (index_t i = 0; i < n; ++i) v[i] /= vn;

      double analytic = 0;
      for (index_t i = 0; i < n; ++i) analytic += grads[li][i] * v[i];

      Tensor<double> saved = x.clone();
      double lp, lm;
      {
        NoGradGuard ng;
        for (index_t i = 0; i < n; ++i) x[i] = saved[i] + h * v[i];
        lp = makeloss().val()[0];
        for (index_t i = 0; i < n; ++i) x[i] = saved[i] - h * v[i];
        lm = makeloss().val()[0];
        for (index_t i = 0; i < n; ++i) x[i] = saved[i];
      }
      const double numeric = (lp - lm) / (2 * h);
      const double scale = std::max({1.0, std::abs(numeric), std::abs(analytic)});
      INFO("leaf " << li << " dir " << dir << " analytic " << analytic << " numeric " << numeric);
      REQUIRE(std::abs(numeric - analytic) <= tol * scale);
    }
  }
}

// Random scalar projection head: makes the upstream gradient of `y` generic.
inline Var<double> project(const Var<double>& y, uint64_t seed = 7) {
  Rng rng(seed);
  return ops::mean_all(ops::mul(y, ops::constant(Tensor<double>::randn(y.shape(), rng))));
}

}  // namespace testing
}  // namespace speak

#endif  // SPEAK_TESTS_TESTING_HPP_
