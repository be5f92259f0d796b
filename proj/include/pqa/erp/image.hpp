#pragma once

#include "pqa/core/tensor.hpp"

namespace pqa::erp {

// Raster with shape [C, H, W], values in [0, 1]. The longitude (width) axis
// is periodic for ERP content; that topology is applied by the sampling
// helpers, not stored here.
struct Image {
  Tensor<float> data;

  Image() : data(Tensor<float>::zeros({1, 1, 1})) {}
  Image(int64_t channels, int64_t height, int64_t width) : data(Tensor<float>::zeros({channels, height, width})) {}
  explicit Image(Tensor<float> t) : data(std::move(t)) {}

  int64_t channels() const { return data.dim(0); }
  int64_t height() const { return data.dim(1); }
  int64_t width() const { return data.dim(2); }

  float& at(int64_t c, int64_t y, int64_t x) { return data[(c * height() + y) * width() + x]; }
  float at(int64_t c, int64_t y, int64_t x) const { return data[(c * height() + y) * width() + x]; }
};

}  // namespace pqa::erp
