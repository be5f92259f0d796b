#pragma once

#include <functional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "pqa/core/tensor.hpp"

namespace pqa::nn {

template <typename T>
struct Var {
  int32_t id = -1;
  bool defined() const { return id >= 0; }
};

// Reverse-mode tape. Nodes are appended in topological order, so walking the
// list backwards visits every consumer before its producers. A node's
// backward closure reads the node's own gradient and accumulates into its
// inputs' gradients; closures are only stored when some input needs a
// gradient, which is what makes frozen subgraphs (the backbone) cheap.
template <typename T>
class Tape {
 public:
  using BackFn = std::function<void(Tape&, int32_t)>;

  Var<T> leaf(Tensor<T> value, bool requires_grad = false) {
    nodes_.push_back(Node{std::move(value), Tensor<T>(), nullptr, requires_grad});
    return {static_cast<int32_t>(nodes_.size() - 1)};
  }

  Var<T> make(Tensor<T> value, std::initializer_list<Var<T>> inputs, BackFn bw) {
    bool rg = false;
    for (Var<T> v : inputs) rg = rg || requires_grad(v);
    nodes_.push_back(Node{std::move(value), Tensor<T>(), rg ? std::move(bw) : nullptr, rg});
    return {static_cast<int32_t>(nodes_.size() - 1)};
  }

  Var<T> make(Tensor<T> value, const std::vector<Var<T>>& inputs, BackFn bw) {
    bool rg = false;
    for (Var<T> v : inputs) rg = rg || requires_grad(v);
    nodes_.push_back(Node{std::move(value), Tensor<T>(), rg ? std::move(bw) : nullptr, rg});
    return {static_cast<int32_t>(nodes_.size() - 1)};
  }

  const Tensor<T>& val(Var<T> v) const { return node(v).value; }
  bool requires_grad(Var<T> v) const { return node(v).requires_grad; }
  bool has_grad(Var<T> v) const { return node(v).grad.defined(); }

  // Allocates a zero gradient on first access.
  Tensor<T>& grad(Var<T> v) {
    Node& n = node(v);
    if (!n.grad.defined()) n.grad = Tensor<T>(n.value.shape());
    return n.grad;
  }

  void backward(Var<T> root, const Tensor<T>& seed) {
    Node& r = node(root);
    if (!seed.same_shape(r.value)) throw std::invalid_argument("tape: seed shape mismatch");
    if (!r.requires_grad) throw std::invalid_argument("tape: root does not require grad");
    Tensor<T>& g = grad(root);
    for (int64_t i = 0; i < seed.numel(); ++i) g[i] += seed[i];
    for (int32_t i = root.id; i >= 0; --i) {
      Node& n = nodes_[static_cast<size_t>(i)];
      if (n.backward && n.grad.defined()) n.backward(*this, i);
    }
  }

  // Convenience for scalar ([1]-shaped) roots.
  void backward_scalar(Var<T> root, T seed = T(1)) {
    Tensor<T> s({1});
    s[0] = seed;
    backward(root, s);
  }

  size_t size() const { return nodes_.size(); }

  Var<T> self(int32_t id) const { return {id}; }

 private:
  struct Node {
    Tensor<T> value;
    Tensor<T> grad;
    BackFn backward;
    bool requires_grad = false;
  };

  Node& node(Var<T> v) {
    if (v.id < 0 || static_cast<size_t>(v.id) >= nodes_.size()) throw std::out_of_range("tape: bad var");
    return nodes_[static_cast<size_t>(v.id)];
  }
  const Node& node(Var<T> v) const {
    if (v.id < 0 || static_cast<size_t>(v.id) >= nodes_.size()) throw std::out_of_range("tape: bad var");
    return nodes_[static_cast<size_t>(v.id)];
  }

  std::vector<Node> nodes_;
};

}  // namespace pqa::nn
