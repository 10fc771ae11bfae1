// speak/core/autodiff.hpp

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

#ifndef SPEAK_CORE_AUTODIFF_HPP_
#define SPEAK_CORE_AUTODIFF_HPP_

#include <algorithm>
#include <atomic>
#include <functional>
#include <memory>
#include <unordered_set>
#include <vector>

#include "speak/core/tensor.hpp"

namespace speak {

// Reverse-mode tape built on the fly. Every op returns a fresh node holding
// its value; when gradients are enabled and at least one parent requires
// them, the node also carries a closure that scatters the node's gradient
// into its parents. Graphs are freed when the last Var referencing the root
// goes out of scope.

inline bool& grad_mode() {
  thread_local bool mode = true;
  return mode;
}

struct NoGradGuard {
  bool prev;
  NoGradGuard() : prev(grad_mode()) { grad_mode() = false; }
  ~NoGradGuard() { grad_mode() = prev; }
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;
};

inline uint64_t next_node_seq() {
  static std::atomic<uint64_t> n{0};
  return ++n;
}

template <class T>
struct Node {
  Tensor<T> val;
  Tensor<T> grad;  // materialized lazily during backward
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node<T>>> parents;
  std::function<void(Node<T>&)> backfn;
  uint64_t seq = 0;

  void ensure_grad() {
    if (!grad.defined()) grad = Tensor<T>::zeros(val.shape);
  }
};

template <class T>
class Var {
 public:
  Var() = default;
  explicit Var(std::shared_ptr<Node<T>> n) : n_(std::move(n)) {}

  static Var leaf(Tensor<T> t, bool requires_grad = false) {
    auto n = std::make_shared<Node<T>>();
    n->val = std::move(t);
    n->requires_grad = requires_grad && grad_mode();
    n->seq = next_node_seq();
    return Var(std::move(n));
  }

  bool defined() const { return static_cast<bool>(n_); }
  const Tensor<T>& val() const { return n_->val; }
  Tensor<T>& value_mut() { return n_->val; }
  Tensor<T>& grad() const {
    n_->ensure_grad();
    return n_->grad;
  }
  bool has_grad() const { return n_->grad.defined(); }
  void clear_grad() { n_->grad = Tensor<T>(); }
  bool requires_grad() const { return n_ && n_->requires_grad; }
  void set_requires_grad(bool rg) { n_->requires_grad = rg; }
  const Shape& shape() const { return n_->val.shape; }
  index_t numel() const { return n_->val.numel(); }
  std::shared_ptr<Node<T>> node() const { return n_; }

 private:
  std::shared_ptr<Node<T>> n_;
};

// Wires up a node for an op result. `back` receives the result node; parent
// gradients are reachable through node.parents in the order given here.
template <class T, class F>
Var<T> make_op(Tensor<T> out, const std::vector<Var<T>>& parents, F&& back) {
  auto n = std::make_shared<Node<T>>();
  n->val = std::move(out);
  n->seq = next_node_seq();
  bool need = false;
  if (grad_mode()) {
    for (const auto& p : parents)
      if (p.defined() && p.requires_grad()) {
        need = true;
        break;
      }
  }
  if (need) {
    n->requires_grad = true;
    n->parents.reserve(parents.size());
    for (const auto& p : parents) n->parents.push_back(p.node());
    n->backfn = std::forward<F>(back);
  }
  return Var<T>(std::move(n));
}

// Value-only op result (used by ops on the no-grad path).
template <class T>
Var<T> make_value(Tensor<T> out) {
  auto n = std::make_shared<Node<T>>();
  n->val = std::move(out);
  n->seq = next_node_seq();
  return Var<T>(std::move(n));
}

template <class T>
void backward(const Var<T>& root, Tensor<T> seed = Tensor<T>()) {
  if (!root.defined() || !root.requires_grad()) return;
  if (!seed.defined()) {
    seed = Tensor<T>::full(root.shape(), T(1));
  } else if (seed.shape != root.shape()) {
    throw ShapeError("backward seed shape " + shape_str(seed.shape) + " != root shape " + shape_str(root.shape()));
  }

  // Collect the reachable grad-requiring subgraph.
  std::vector<Node<T>*> order;
  std::unordered_set<Node<T>*> seen;
  std::vector<Node<T>*> stack{root.node().get()};
  seen.insert(root.node().get());
  while (!stack.empty()) {
    Node<T>* n = stack.back();
    stack.pop_back();
    order.push_back(n);
    for (auto& p : n->parents) {
      if (p->requires_grad && seen.insert(p.get()).second) stack.push_back(p.get());
    }
  }
  std::sort(order.begin(), order.end(), [](const Node<T>* a, const Node<T>* b) { return a->seq > b->seq; });

  root.node()->grad = std::move(seed);
  for (Node<T>* n : order) {
    if (n->backfn && n->grad.defined()) n->backfn(*n);
  }
}

template <class T>
Var<T> detach(const Var<T>& x) {
  return Var<T>::leaf(x.val(), false);
}

}  // namespace speak

#endif  // SPEAK_CORE_AUTODIFF_HPP_
