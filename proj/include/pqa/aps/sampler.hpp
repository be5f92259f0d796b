#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "pqa/core/rng.hpp"
#include "pqa/core/tensor.hpp"
#include "pqa/erp/image.hpp"

namespace pqa::aps {

// Prior-equator distribution over colatitude [0, 180]. The density family is
// a truncated Gaussian by default; Laplace is available as a config
// alternative with the same location/scale parameters.
struct PriorEquatorParams {
  double mu = 91.3;            // colatitude degrees
  double lambda_scale = 18.58; // scale, degrees
  double theta_t = 23.0;       // latitude division factor, degrees
  enum class Family { gaussian, laplace } family = Family::gaussian;
};

struct SamplerConfig {
  int64_t k = 10;
  double kappa_w = 0.1;
  double kappa_h = 0.2;
  int64_t network_side = 224;
  PriorEquatorParams pe;
  // uniform_grid is the planar-image mode where the equatorial prior is
  // meaningless; prior_equator is the ERP default.
  enum class Mode { prior_equator, uniform_grid } mode = Mode::prior_equator;
};

// Block rectangle in (colatitude, longitude) degrees.
struct Block {
  double colat_lo, colat_hi;
  double lon_lo, lon_hi;
};

struct PatchGrid {
  int64_t k_low = 0;
  int64_t k_high = 0;
  std::vector<Block> blocks;  // low band first, then north, then south
};

struct PatchCenter {
  double colat_deg = 0.0;
  double lon_deg = 0.0;
  int64_t block_index = -1;
};

struct PatchSet {
  std::vector<Tensor<float>> patches;  // each [C, side, side]
  std::vector<PatchCenter> centers;
  int64_t p_w = 0, p_h = 0;  // source crop dims before resize
};

double pe_density(double theta_deg, const PriorEquatorParams& params);
double equator_mass(const PriorEquatorParams& params);

// K_low = Floor(K * m), K_high = K - K_low.
std::pair<int64_t, int64_t> split_counts(int64_t k, double m);

// Returns (P_w, P_h) = (max(2, Floor(E_w*kappa_w)), max(2, Floor(E_h*kappa_h))).
std::pair<int64_t, int64_t> patch_dims(int64_t e_w, int64_t e_h, double kappa_w, double kappa_h);

PatchGrid build_grid(int64_t k_low, int64_t k_high, double theta_t);

// One center per block, uniform over the block rectangle.
std::vector<PatchCenter> sample_patch_coords(const PatchGrid& grid, Rng& rng);

// Near-square grid of K centers for planar images.
std::vector<PatchCenter> uniform_grid_coords(int64_t e_w, int64_t e_h, int64_t k);

// Axis-aligned P_h x P_w crops (columns wrap, rows shifted inward to fit),
// bilinearly resized to network_side squares.
PatchSet extract_patches(const erp::Image& img, const std::vector<PatchCenter>& centers, int64_t p_w, int64_t p_h,
                         int64_t network_side);

// Full pipeline: dims, grid, coords, crops. Pure given (img, cfg, rng state).
PatchSet sample_image(const erp::Image& img, const SamplerConfig& cfg, Rng& rng);

}  // namespace pqa::aps
