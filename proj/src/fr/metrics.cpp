#include "pqa/fr/metrics.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

#include "pqa/erp/geometry.hpp"

namespace pqa::fr {
namespace {

void require_same_dims(const erp::Image& a, const erp::Image& b, const char* who) {
  if (a.channels() != b.channels() || a.height() != b.height() || a.width() != b.width())
    throw std::invalid_argument(std::string(who) + ": dimension mismatch");
}

MetricResult psnr_from_mse(double mse, int64_t samples) {
  MetricResult r;
  r.sample_count = samples;
  if (mse == 0.0) {
    r.value = 100.0;
    r.capped = true;
  } else {
    r.value = 10.0 * std::log10(1.0 / mse);
  }
  return r;
}

// Luminance plane: Rec.601 for RGB, the single channel otherwise.
std::vector<double> luma(const erp::Image& img) {
  const int64_t h = img.height(), w = img.width();
  std::vector<double> out(static_cast<size_t>(h * w));
  if (img.channels() == 3) {
    for (int64_t y = 0; y < h; ++y)
      for (int64_t x = 0; x < w; ++x)
        out[static_cast<size_t>(y * w + x)] =
            0.299 * img.at(0, y, x) + 0.587 * img.at(1, y, x) + 0.114 * img.at(2, y, x);
  } else {
    for (int64_t y = 0; y < h; ++y)
      for (int64_t x = 0; x < w; ++x) out[static_cast<size_t>(y * w + x)] = img.at(0, y, x);
  }
  return out;
}

// Valid-region separable Gaussian filter; output is (h-2r) x (w-2r).
std::vector<double> gauss_valid(const std::vector<double>& src, int64_t h, int64_t w, const std::vector<double>& k) {
  const int64_t r = static_cast<int64_t>(k.size()) / 2;
  const int64_t ow = w - 2 * r;
  std::vector<double> tmp(static_cast<size_t>(h * ow));
  for (int64_t y = 0; y < h; ++y)
    for (int64_t x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (int64_t i = 0; i < static_cast<int64_t>(k.size()); ++i)
        acc += k[static_cast<size_t>(i)] * src[static_cast<size_t>(y * w + x + i)];
      tmp[static_cast<size_t>(y * ow + x)] = acc;
    }
  const int64_t oh = h - 2 * r;
  std::vector<double> out(static_cast<size_t>(oh * ow));
  for (int64_t y = 0; y < oh; ++y)
    for (int64_t x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (int64_t i = 0; i < static_cast<int64_t>(k.size()); ++i)
        acc += k[static_cast<size_t>(i)] * tmp[static_cast<size_t>((y + i) * ow + x)];
      out[static_cast<size_t>(y * ow + x)] = acc;
    }
  return out;
}

}  // namespace

MetricResult ws_psnr(const erp::Image& ref, const erp::Image& dist) {
  require_same_dims(ref, dist, "ws_psnr");
  const int64_t h = ref.height(), w = ref.width(), c = ref.channels();
  double num = 0.0, den = 0.0;
  for (int64_t y = 0; y < h; ++y) {
    const double wt = erp::latitude_weight(y, h);
    double row_err = 0.0;
    for (int64_t x = 0; x < w; ++x)
      for (int64_t ch = 0; ch < c; ++ch) {
        const double d = static_cast<double>(ref.at(ch, y, x)) - static_cast<double>(dist.at(ch, y, x));
        row_err += d * d;
      }
    num += wt * row_err;
    den += wt * static_cast<double>(w * c);
  }
  return psnr_from_mse(num / den, h * w * c);
}

MetricResult s_psnr(const erp::Image& ref, const erp::Image& dist, int64_t n_points) {
  require_same_dims(ref, dist, "s_psnr");
  if (n_points < 1) throw std::invalid_argument("s_psnr: n_points must be >= 1");
  const int64_t c = ref.channels();
  std::vector<float> a(static_cast<size_t>(c)), b(static_cast<size_t>(c));
  double acc = 0.0;
  for (const erp::SphericalPoint& p : erp::sphere_uniform_points(n_points)) {
    const double rowf = erp::lat_to_rowf(p.lat_deg, ref.height());
    const double colf = erp::lon_to_colf(p.lon_deg, ref.width());
    erp::bilinear_sample(ref, rowf, colf, a.data());
    erp::bilinear_sample(dist, rowf, colf, b.data());
    for (int64_t ch = 0; ch < c; ++ch) {
      const double d = static_cast<double>(a[static_cast<size_t>(ch)]) - static_cast<double>(b[static_cast<size_t>(ch)]);
      acc += d * d;
    }
  }
  return psnr_from_mse(acc / static_cast<double>(n_points * c), n_points);
}

MetricResult cpp_psnr(const erp::Image& ref, const erp::Image& dist, int64_t grid_w) {
  require_same_dims(ref, dist, "cpp_psnr");
  if (grid_w < 2) throw std::invalid_argument("cpp_psnr: grid_w must be >= 2");
  const int64_t grid_h = grid_w / 2;
  const double half_w = erp::cpp_half_width(), half_h = erp::cpp_half_height();
  const int64_t c = ref.channels();
  std::vector<float> a(static_cast<size_t>(c)), b(static_cast<size_t>(c));
  double acc = 0.0;
  int64_t valid = 0;
  for (int64_t gy = 0; gy < grid_h; ++gy) {
    const double y = half_h - (static_cast<double>(gy) + 0.5) * (2.0 * half_h) / static_cast<double>(grid_h);
    for (int64_t gx = 0; gx < grid_w; ++gx) {
      const double x = (static_cast<double>(gx) + 0.5) * (2.0 * half_w) / static_cast<double>(grid_w) - half_w;
      erp::SphericalPoint p;
      if (!erp::cpp_unproject(x, y, p)) continue;
      ++valid;
      const double rowf = erp::lat_to_rowf(p.lat_deg, ref.height());
      const double colf = erp::lon_to_colf(p.lon_deg, ref.width());
      erp::bilinear_sample(ref, rowf, colf, a.data());
      erp::bilinear_sample(dist, rowf, colf, b.data());
      for (int64_t ch = 0; ch < c; ++ch) {
        const double d = static_cast<double>(a[static_cast<size_t>(ch)]) - static_cast<double>(b[static_cast<size_t>(ch)]);
        acc += d * d;
      }
    }
  }
  if (valid == 0) throw std::invalid_argument("cpp_psnr: no valid grid cells");
  return psnr_from_mse(acc / static_cast<double>(valid * c), valid);
}

MetricResult ws_ssim(const erp::Image& ref, const erp::Image& dist) {
  require_same_dims(ref, dist, "ws_ssim");
  const int64_t h = ref.height(), w = ref.width();
  constexpr int64_t kWin = 11;
  constexpr double kSigma = 1.5;
  constexpr double kC1 = 0.01 * 0.01;  // (K1 * L)^2, L = 1
  constexpr double kC2 = 0.03 * 0.03;
  if (h < kWin || w < kWin) throw std::invalid_argument("ws_ssim: image smaller than the 11x11 window");

  std::vector<double> kernel(kWin);
  double ksum = 0.0;
  for (int64_t i = 0; i < kWin; ++i) {
    const double d = static_cast<double>(i) - (kWin - 1) / 2.0;
    kernel[static_cast<size_t>(i)] = std::exp(-d * d / (2.0 * kSigma * kSigma));
    ksum += kernel[static_cast<size_t>(i)];
  }
  for (double& v : kernel) v /= ksum;

  const std::vector<double> x = luma(ref), y = luma(dist);
  std::vector<double> xx(x.size()), yy(x.size()), xy(x.size());
  for (size_t i = 0; i < x.size(); ++i) {
    xx[i] = x[i] * x[i];
    yy[i] = y[i] * y[i];
    xy[i] = x[i] * y[i];
  }
  const auto mu_x = gauss_valid(x, h, w, kernel);
  const auto mu_y = gauss_valid(y, h, w, kernel);
  const auto m_xx = gauss_valid(xx, h, w, kernel);
  const auto m_yy = gauss_valid(yy, h, w, kernel);
  const auto m_xy = gauss_valid(xy, h, w, kernel);

  const int64_t r = kWin / 2;
  const int64_t oh = h - 2 * r, ow = w - 2 * r;
  double num = 0.0, den = 0.0;
  for (int64_t oy = 0; oy < oh; ++oy) {
    const double wt = erp::latitude_weight(oy + r, h);
    for (int64_t ox = 0; ox < ow; ++ox) {
      const size_t i = static_cast<size_t>(oy * ow + ox);
      const double sxx = m_xx[i] - mu_x[i] * mu_x[i];
      const double syy = m_yy[i] - mu_y[i] * mu_y[i];
      const double sxy = m_xy[i] - mu_x[i] * mu_y[i];
      const double ssim = ((2.0 * mu_x[i] * mu_y[i] + kC1) * (2.0 * sxy + kC2)) /
                          ((mu_x[i] * mu_x[i] + mu_y[i] * mu_y[i] + kC1) * (sxx + syy + kC2));
      num += wt * ssim;
      den += wt;
    }
  }
  MetricResult res;
  res.value = num / den;
  res.sample_count = oh * ow;
  res.capped = false;
  return res;
}

}  // namespace pqa::fr
