#include "pqa/aps/sampler.hpp"

#include <cmath>
#include <stdexcept>

#include "pqa/erp/geometry.hpp"

namespace pqa::aps {
namespace {

double gaussian_cdf(double x, double mu, double sigma) {
  return 0.5 * (1.0 + std::erf((x - mu) / (sigma * std::sqrt(2.0))));
}

double laplace_cdf(double x, double mu, double b) {
  if (x < mu) return 0.5 * std::exp((x - mu) / b);
  return 1.0 - 0.5 * std::exp(-(x - mu) / b);
}

double cdf(double x, const PriorEquatorParams& p) {
  return p.family == PriorEquatorParams::Family::gaussian ? gaussian_cdf(x, p.mu, p.lambda_scale)
                                                          : laplace_cdf(x, p.mu, p.lambda_scale);
}

double truncation_mass(const PriorEquatorParams& p) { return cdf(180.0, p) - cdf(0.0, p); }

}  // namespace

double pe_density(double theta_deg, const PriorEquatorParams& params) {
  if (theta_deg < 0.0 || theta_deg > 180.0) throw std::invalid_argument("pe_density: colatitude outside [0, 180]");
  const double z = truncation_mass(params);
  if (params.family == PriorEquatorParams::Family::gaussian) {
    const double s = params.lambda_scale;
    const double t = (theta_deg - params.mu) / s;
    const double dens = std::exp(-0.5 * t * t) / (s * std::sqrt(2.0 * erp::kPi));
    return dens / z;
  }
  const double b = params.lambda_scale;
  return std::exp(-std::abs(theta_deg - params.mu) / b) / (2.0 * b * z);
}

double equator_mass(const PriorEquatorParams& params) {
  const double lo = 90.0 - params.theta_t;
  const double hi = 90.0 + params.theta_t;
  return (cdf(hi, params) - cdf(lo, params)) / truncation_mass(params);
}

std::pair<int64_t, int64_t> split_counts(int64_t k, double m) {
  if (k < 0) throw std::invalid_argument("split_counts: negative K");
  if (m < 0.0) m = 0.0;
  if (m > 1.0) m = 1.0;
  const int64_t k_low = static_cast<int64_t>(std::floor(static_cast<double>(k) * m));
  return {k_low, k - k_low};
}

std::pair<int64_t, int64_t> patch_dims(int64_t e_w, int64_t e_h, double kappa_w, double kappa_h) {
  if (kappa_w <= 0.0 || kappa_h <= 0.0) throw std::invalid_argument("patch_dims: sampling factors must be positive");
  if (e_w < 2 || e_h < 2) throw std::invalid_argument("patch_dims: image too small");
  const int64_t p_w = std::max<int64_t>(2, static_cast<int64_t>(std::floor(static_cast<double>(e_w) * kappa_w)));
  const int64_t p_h = std::max<int64_t>(2, static_cast<int64_t>(std::floor(static_cast<double>(e_h) * kappa_h)));
  return {p_w, p_h};
}

PatchGrid build_grid(int64_t k_low, int64_t k_high, double theta_t) {
  if (k_low + k_high < 1) throw std::invalid_argument("build_grid: need at least one block");
  PatchGrid grid;
  grid.k_low = k_low;
  grid.k_high = k_high;
  auto add_band = [&grid](double colat_lo, double colat_hi, int64_t count) {
    if (count <= 0) return;
    const double span = 360.0 / static_cast<double>(count);
    for (int64_t i = 0; i < count; ++i) {
      grid.blocks.push_back({colat_lo, colat_hi, -180.0 + span * static_cast<double>(i),
                             -180.0 + span * static_cast<double>(i + 1)});
    }
  };
  add_band(90.0 - theta_t, 90.0 + theta_t, k_low);
  const int64_t north = (k_high + 1) / 2;  // Ceil, north first
  const int64_t south = k_high / 2;
  add_band(0.0, 90.0 - theta_t, north);
  add_band(90.0 + theta_t, 180.0, south);
  return grid;
}

std::vector<PatchCenter> sample_patch_coords(const PatchGrid& grid, Rng& rng) {
  std::vector<PatchCenter> centers;
  centers.reserve(grid.blocks.size());
  for (size_t i = 0; i < grid.blocks.size(); ++i) {
    const Block& b = grid.blocks[i];
    PatchCenter c;
    c.colat_deg = rng.uniform(b.colat_lo, b.colat_hi);
    c.lon_deg = rng.uniform(b.lon_lo, b.lon_hi);
    c.block_index = static_cast<int64_t>(i);
    centers.push_back(c);
  }
  return centers;
}

std::vector<PatchCenter> uniform_grid_coords(int64_t e_w, int64_t e_h, int64_t k) {
  (void)e_w;
  (void)e_h;
  if (k < 1) throw std::invalid_argument("uniform_grid_coords: K must be >= 1");
  const int64_t rows = std::max<int64_t>(1, static_cast<int64_t>(std::floor(std::sqrt(static_cast<double>(k)))));
  std::vector<PatchCenter> centers;
  centers.reserve(static_cast<size_t>(k));
  const int64_t base = k / rows, extra = k % rows;
  int64_t idx = 0;
  for (int64_t r = 0; r < rows; ++r) {
    const int64_t cols = base + (r < extra ? 1 : 0);
    const double colat = (static_cast<double>(r) + 0.5) / static_cast<double>(rows) * 180.0;
    for (int64_t c = 0; c < cols; ++c) {
      const double lon = (static_cast<double>(c) + 0.5) / static_cast<double>(cols) * 360.0 - 180.0;
      centers.push_back({colat, lon, idx++});
    }
  }
  return centers;
}

PatchSet extract_patches(const erp::Image& img, const std::vector<PatchCenter>& centers, int64_t p_w, int64_t p_h,
                         int64_t network_side) {
  const int64_t e_h = img.height(), e_w = img.width(), ch = img.channels();
  if (p_h > e_h || p_w > e_w) throw std::invalid_argument("extract_patches: patch larger than image");
  PatchSet out;
  out.centers = centers;
  out.p_w = p_w;
  out.p_h = p_h;
  erp::Image crop(ch, p_h, p_w);
  for (const PatchCenter& c : centers) {
    const double lat = 90.0 - c.colat_deg;
    const double rowf = erp::lat_to_rowf(lat, e_h);
    const double colf = erp::lon_to_colf(c.lon_deg, e_w);
    int64_t r0 = static_cast<int64_t>(std::llround(rowf - static_cast<double>(p_h - 1) / 2.0));
    if (r0 < 0) r0 = 0;
    if (r0 + p_h > e_h) r0 = e_h - p_h;
    const int64_t c0 = static_cast<int64_t>(std::llround(colf - static_cast<double>(p_w - 1) / 2.0));
    for (int64_t cc = 0; cc < ch; ++cc)
      for (int64_t y = 0; y < p_h; ++y)
        for (int64_t x = 0; x < p_w; ++x) crop.at(cc, y, x) = img.at(cc, r0 + y, erp::wrap_col(c0 + x, e_w));

    // Resize the detached crop (clamped edges on both axes; no wrap here).
    Tensor<float> patch({ch, network_side, network_side});
    auto clampi = [](int64_t v, int64_t n) { return v < 0 ? 0 : (v >= n ? n - 1 : v); };
    for (int64_t ty = 0; ty < network_side; ++ty) {
      const double sy = (static_cast<double>(ty) + 0.5) * static_cast<double>(p_h) / static_cast<double>(network_side) - 0.5;
      const double fy = std::floor(sy);
      const double ay = sy - fy;
      const int64_t y0 = clampi(static_cast<int64_t>(fy), p_h), y1 = clampi(static_cast<int64_t>(fy) + 1, p_h);
      for (int64_t tx = 0; tx < network_side; ++tx) {
        const double sx = (static_cast<double>(tx) + 0.5) * static_cast<double>(p_w) / static_cast<double>(network_side) - 0.5;
        const double fx = std::floor(sx);
        const double ax = sx - fx;
        const int64_t x0 = clampi(static_cast<int64_t>(fx), p_w), x1 = clampi(static_cast<int64_t>(fx) + 1, p_w);
        for (int64_t cc = 0; cc < ch; ++cc) {
          const double v = (1 - ay) * (1 - ax) * crop.at(cc, y0, x0) + (1 - ay) * ax * crop.at(cc, y0, x1) +
                           ay * (1 - ax) * crop.at(cc, y1, x0) + ay * ax * crop.at(cc, y1, x1);
          patch[(cc * network_side + ty) * network_side + tx] = static_cast<float>(v);
        }
      }
    }
    out.patches.push_back(std::move(patch));
  }
  return out;
}

PatchSet sample_image(const erp::Image& img, const SamplerConfig& cfg, Rng& rng) {
  auto [p_w, p_h] = patch_dims(img.width(), img.height(), cfg.kappa_w, cfg.kappa_h);
  std::vector<PatchCenter> centers;
  if (cfg.mode == SamplerConfig::Mode::uniform_grid) {
    centers = uniform_grid_coords(img.width(), img.height(), cfg.k);
  } else {
    auto [k_low, k_high] = split_counts(cfg.k, equator_mass(cfg.pe));
    centers = sample_patch_coords(build_grid(k_low, k_high, cfg.pe.theta_t), rng);
  }
  return extract_patches(img, centers, p_w, p_h, cfg.network_side);
}

}  // namespace pqa::aps
