#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "pqa/core/rng.hpp"
#include "pqa/core/tensor.hpp"
#include "pqa/nn/tape.hpp"

namespace pqa::nn {

template <typename T>
struct Param {
  std::string name;
  Tensor<T> value;
  bool trainable = true;
};

// Named parameter registry in registration order. The order is the contract
// for optimizer state, gradient accumulators, and checkpoint layout.
template <typename T>
class ParamStore {
 public:
  size_t add(std::string name, Tensor<T> value, bool trainable = true) {
    if (index_.count(name)) throw std::invalid_argument("param already registered: " + name);
    index_[name] = params_.size();
    params_.push_back(Param<T>{std::move(name), std::move(value), trainable});
    return params_.size() - 1;
  }

  size_t size() const { return params_.size(); }
  Param<T>& operator[](size_t i) { return params_[i]; }
  const Param<T>& operator[](size_t i) const { return params_[i]; }

  bool has(const std::string& name) const { return index_.count(name) != 0; }

  Param<T>& at(const std::string& name) {
    auto it = index_.find(name);
    if (it == index_.end()) throw std::out_of_range("no such param: " + name);
    return params_[it->second];
  }
  const Param<T>& at(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw std::out_of_range("no such param: " + name);
    return params_[it->second];
  }

 private:
  std::vector<Param<T>> params_;
  std::unordered_map<std::string, size_t> index_;
};

// Exposes every store parameter as a tape leaf for one forward pass. Leaves
// share storage with the store (tensors are shallow), so no copying happens
// and optimizer updates are visible to the next binding.
template <typename T>
class Binding {
 public:
  Binding(Tape<T>& t, const ParamStore<T>& store, bool with_grads) {
    vars_.reserve(store.size());
    for (size_t i = 0; i < store.size(); ++i) vars_.push_back(t.leaf(store[i].value, with_grads && store[i].trainable));
  }
  Var<T> operator[](size_t i) const { return vars_.at(i); }
  size_t size() const { return vars_.size(); }

 private:
  std::vector<Var<T>> vars_;
};

// Init helpers (all draw from the caller's RNG stream in a fixed order).

template <typename T>
Tensor<T> init_uniform(Rng& rng, std::vector<int64_t> shape, double limit) {
  Tensor<T> t(std::move(shape));
  for (int64_t i = 0; i < t.numel(); ++i) t[i] = static_cast<T>(rng.uniform(-limit, limit));
  return t;
}

template <typename T>
Tensor<T> init_normal(Rng& rng, std::vector<int64_t> shape, double stddev = 1.0) {
  Tensor<T> t(std::move(shape));
  for (int64_t i = 0; i < t.numel(); ++i) t[i] = static_cast<T>(rng.normal(0.0, stddev));
  return t;
}

// He-style fan-in bound for conv/linear weights feeding a rectified unit.
inline double he_limit(int64_t fan_in) { return std::sqrt(6.0 / static_cast<double>(fan_in)); }
inline double xavier_limit(int64_t fan_in, int64_t fan_out) {
  return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
}

// Adam with bias correction. State is indexed like the store; non-trainable
// entries stay empty.
template <typename T>
class Adam {
 public:
  Adam(T lr = T(1e-4), T beta1 = T(0.9), T beta2 = T(0.999), T eps = T(1e-8))
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

  void init(const ParamStore<T>& store) {
    m_.assign(store.size(), Tensor<T>());
    v_.assign(store.size(), Tensor<T>());
    for (size_t i = 0; i < store.size(); ++i) {
      if (!store[i].trainable) continue;
      m_[i] = Tensor<T>(store[i].value.shape());
      v_[i] = Tensor<T>(store[i].value.shape());
    }
    step_ = 0;
  }

  // grads[i] may be undefined (no gradient reached the parameter this step).
  void step(ParamStore<T>& store, const std::vector<Tensor<T>>& grads) {
    if (m_.size() != store.size()) throw std::logic_error("adam: not initialized for this store");
    ++step_;
    const T bc1 = T(1) - std::pow(beta1_, static_cast<T>(step_));
    const T bc2 = T(1) - std::pow(beta2_, static_cast<T>(step_));
    for (size_t i = 0; i < store.size(); ++i) {
      if (!store[i].trainable || !grads[i].defined()) continue;
      Tensor<T>& p = store[i].value;
      Tensor<T>& m = m_[i];
      Tensor<T>& v = v_[i];
      const Tensor<T>& g = grads[i];
      for (int64_t j = 0; j < p.numel(); ++j) {
        m[j] = beta1_ * m[j] + (T(1) - beta1_) * g[j];
        v[j] = beta2_ * v[j] + (T(1) - beta2_) * g[j] * g[j];
        const T mhat = m[j] / bc1;
        const T vhat = v[j] / bc2;
        p[j] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
      }
    }
  }

  int64_t steps() const { return step_; }

 private:
  T lr_, beta1_, beta2_, eps_;
  int64_t step_ = 0;
  std::vector<Tensor<T>> m_, v_;
};

// Per-parameter gradient accumulator for multi-tape batches: each image gets
// its own tape, and the seeded backward results are summed here before the
// optimizer step.
template <typename T>
class GradAccum {
 public:
  explicit GradAccum(size_t n) : grads_(n) {}

  void add(const ParamStore<T>& store, Tape<T>& tape, const Binding<T>& bind) {
    for (size_t i = 0; i < store.size(); ++i) {
      if (!store[i].trainable || !tape.has_grad(bind[i])) continue;
      const Tensor<T>& g = tape.grad(bind[i]);
      if (!grads_[i].defined()) grads_[i] = Tensor<T>(g.shape());
      for (int64_t j = 0; j < g.numel(); ++j) grads_[i][j] += g[j];
    }
  }

  const std::vector<Tensor<T>>& grads() const { return grads_; }

 private:
  std::vector<Tensor<T>> grads_;
};

}  // namespace pqa::nn
