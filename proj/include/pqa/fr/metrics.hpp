#pragma once

#include <cstdint>

#include "pqa/erp/image.hpp"

namespace pqa::fr {

// PSNR family reports dB over [0,1] rasters (dynamic range 1.0) and caps at
// 100 dB only when the error is exactly zero; WS-SSIM reports [-1, 1].
struct MetricResult {
  double value = 0.0;
  int64_t sample_count = 0;
  bool capped = false;
};

MetricResult ws_psnr(const erp::Image& ref, const erp::Image& dist);
MetricResult s_psnr(const erp::Image& ref, const erp::Image& dist, int64_t n_points = 10000);
MetricResult cpp_psnr(const erp::Image& ref, const erp::Image& dist, int64_t grid_w = 1024);
MetricResult ws_ssim(const erp::Image& ref, const erp::Image& dist);

}  // namespace pqa::fr
