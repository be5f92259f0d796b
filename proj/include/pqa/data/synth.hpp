#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pqa/core/rng.hpp"
#include "pqa/data/manifest.hpp"
#include "pqa/erp/image.hpp"

namespace pqa::data {

struct SynthConfig {
  int64_t n_contents = 4;
  int64_t height = 512;  // ERP is 2:1, so width = 2 * height
  uint64_t seed = 7;
};

struct SynthResult {
  DatasetManifest manifest;
  std::string manifest_path;
};

// Procedural ERP content: smooth low-frequency gradients, band-limited
// noise, and a handful of geometric primitives.
erp::Image make_content(int64_t height, Rng& rng);

// Distortion primitives. Blur wraps horizontally (ERP longitude is
// periodic) and clamps vertically.
erp::Image gaussian_blur(const erp::Image& img, double sigma);
erp::Image add_gaussian_noise(const erp::Image& img, double sigma, Rng& rng);
erp::Image quantize_levels(const erp::Image& img, int levels);

// Distortion ladder used by the generator: per type, four strengths with
// pseudo-MOS 5 - level_index (level_index 1..4). References score 5.
std::vector<double> blur_sigmas();
std::vector<double> noise_sigmas();
std::vector<int> quant_levels();

// Writes n_contents references plus 3 distortions x 4 levels each as 16-bit
// PNGs under out_dir, plus manifest.csv (split column `auto`). Returns the
// manifest with resolved paths.
SynthResult synth_dataset(const std::string& out_dir, const SynthConfig& cfg);

}  // namespace pqa::data
