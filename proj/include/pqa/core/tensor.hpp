#pragma once

#include <cstdint>
#include <memory>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace pqa {

// Dense row-major tensor. Copies are shallow (shared storage); ops never
// mutate their inputs, so sharing is safe. Use clone() for a deep copy.
template <typename T>
class Tensor {
 public:
  Tensor() = default;

  explicit Tensor(std::vector<int64_t> shape) : shape_(std::move(shape)) {
    data_ = std::make_shared<std::vector<T>>(checked_numel(shape_), T(0));
  }

  Tensor(std::vector<int64_t> shape, std::vector<T> values) : shape_(std::move(shape)) {
    if (static_cast<int64_t>(values.size()) != checked_numel(shape_)) {
      throw std::invalid_argument("tensor: value count does not match shape");
    }
    data_ = std::make_shared<std::vector<T>>(std::move(values));
  }

  static Tensor zeros(std::vector<int64_t> shape) { return Tensor(std::move(shape)); }

  static Tensor full(std::vector<int64_t> shape, T v) {
    Tensor t(std::move(shape));
    t.fill(v);
    return t;
  }

  bool defined() const { return data_ != nullptr; }
  int ndim() const { return static_cast<int>(shape_.size()); }
  const std::vector<int64_t>& shape() const { return shape_; }

  int64_t dim(int i) const {
    if (i < 0 || i >= ndim()) throw std::out_of_range("tensor: dim index");
    return shape_[static_cast<size_t>(i)];
  }

  int64_t numel() const { return data_ ? static_cast<int64_t>(data_->size()) : 0; }

  T* data() { return data_->data(); }
  const T* data() const { return data_->data(); }

  T& operator[](int64_t i) { return (*data_)[static_cast<size_t>(i)]; }
  const T& operator[](int64_t i) const { return (*data_)[static_cast<size_t>(i)]; }

  void fill(T v) { std::fill(data_->begin(), data_->end(), v); }

  Tensor clone() const {
    Tensor t;
    t.shape_ = shape_;
    t.data_ = data_ ? std::make_shared<std::vector<T>>(*data_) : nullptr;
    return t;
  }

  // Shares storage; only the shape changes.
  Tensor reshaped(std::vector<int64_t> shape) const {
    if (checked_numel(shape) != numel()) throw std::invalid_argument("tensor: reshape numel mismatch");
    Tensor t;
    t.shape_ = std::move(shape);
    t.data_ = data_;
    return t;
  }

  bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

  std::string shape_str() const {
    std::ostringstream os;
    os << "[";
    for (size_t i = 0; i < shape_.size(); ++i) os << (i ? "x" : "") << shape_[i];
    os << "]";
    return os.str();
  }

  static int64_t checked_numel(const std::vector<int64_t>& shape) {
    int64_t n = 1;
    for (int64_t d : shape) {
      if (d < 0) throw std::invalid_argument("tensor: negative dimension");
      n *= d;
    }
    return n;
  }

 private:
  std::vector<int64_t> shape_;
  std::shared_ptr<std::vector<T>> data_;
};

}  // namespace pqa
