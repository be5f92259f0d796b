#include "pqa/erp/geometry.hpp"

#include <stdexcept>

namespace pqa::erp {

SphericalPoint pixel_to_latlon(int64_t row, int64_t col, int64_t e_h, int64_t e_w) {
  if (row < 0 || row >= e_h || col < 0 || col >= e_w) throw std::out_of_range("pixel_to_latlon: index out of range");
  return {row_to_lat(row, e_h), col_to_lon(col, e_w)};
}

void bilinear_sample(const Image& img, double rowf, double colf, float* out) {
  const int64_t h = img.height(), w = img.width(), c = img.channels();
  const double fy = std::floor(rowf), fx = std::floor(colf);
  const double ay = rowf - fy, ax = colf - fx;
  const int64_t r0 = clamp_row(static_cast<int64_t>(fy), h);
  const int64_t r1 = clamp_row(static_cast<int64_t>(fy) + 1, h);
  const int64_t c0 = wrap_col(static_cast<int64_t>(fx), w);
  const int64_t c1 = wrap_col(static_cast<int64_t>(fx) + 1, w);
  const double w00 = (1 - ay) * (1 - ax), w01 = (1 - ay) * ax, w10 = ay * (1 - ax), w11 = ay * ax;
  for (int64_t ch = 0; ch < c; ++ch) {
    out[ch] = static_cast<float>(w00 * img.at(ch, r0, c0) + w01 * img.at(ch, r0, c1) + w10 * img.at(ch, r1, c0) +
                                 w11 * img.at(ch, r1, c1));
  }
}

float bilinear_sample_1(const Image& img, int64_t channel, double rowf, double colf) {
  const int64_t h = img.height(), w = img.width();
  const double fy = std::floor(rowf), fx = std::floor(colf);
  const double ay = rowf - fy, ax = colf - fx;
  const int64_t r0 = clamp_row(static_cast<int64_t>(fy), h);
  const int64_t r1 = clamp_row(static_cast<int64_t>(fy) + 1, h);
  const int64_t c0 = wrap_col(static_cast<int64_t>(fx), w);
  const int64_t c1 = wrap_col(static_cast<int64_t>(fx) + 1, w);
  return static_cast<float>((1 - ay) * (1 - ax) * img.at(channel, r0, c0) + (1 - ay) * ax * img.at(channel, r0, c1) +
                            ay * (1 - ax) * img.at(channel, r1, c0) + ay * ax * img.at(channel, r1, c1));
}

std::vector<SphericalPoint> sphere_uniform_points(int64_t n) {
  if (n < 1) throw std::invalid_argument("sphere_uniform_points: n must be >= 1");
  std::vector<SphericalPoint> pts;
  pts.reserve(static_cast<size_t>(n));
  const double golden_angle = kPi * (3.0 - std::sqrt(5.0));
  for (int64_t i = 0; i < n; ++i) {
    const double z = 1.0 - 2.0 * (static_cast<double>(i) + 0.5) / static_cast<double>(n);
    const double lat = std::asin(z) * kRadToDeg;
    const double lon = wrap_lon_deg(static_cast<double>(i) * golden_angle * kRadToDeg);
    pts.push_back({lat, lon});
  }
  return pts;
}

CppPoint cpp_project(const SphericalPoint& p) {
  const double phi = p.lat_deg * kDegToRad;
  const double lam = p.lon_deg * kDegToRad;
  CppPoint out;
  out.x = std::sqrt(3.0 / kPi) * lam * (2.0 * std::cos(2.0 * phi / 3.0) - 1.0);
  out.y = std::sqrt(3.0 * kPi) * std::sin(phi / 3.0);
  return out;
}

bool cpp_unproject(double x, double y, SphericalPoint& out) {
  const double sy = y / std::sqrt(3.0 * kPi);
  if (sy < -0.5 || sy > 0.5) return false;
  const double phi = 3.0 * std::asin(sy);
  const double denom = std::sqrt(3.0 / kPi) * (2.0 * std::cos(2.0 * phi / 3.0) - 1.0);
  if (denom <= 1e-12) {
    // Pole rows: the parabola degenerates to a point at x = 0.
    if (std::abs(x) > 1e-12) return false;
    out = {phi * kRadToDeg, 0.0};
    return true;
  }
  const double lam = x / denom;
  if (lam < -kPi || lam > kPi) return false;
  out = {phi * kRadToDeg, lam * kRadToDeg};
  return true;
}

}  // namespace pqa::erp
