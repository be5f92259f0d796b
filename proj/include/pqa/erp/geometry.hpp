#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "pqa/erp/image.hpp"

namespace pqa::erp {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kDegToRad = kPi / 180.0;
inline constexpr double kRadToDeg = 180.0 / kPi;

// Latitude in [-90, 90], longitude normalized to [-180, 180).
struct SphericalPoint {
  double lat_deg = 0.0;
  double lon_deg = 0.0;
};

inline double wrap_lon_deg(double lon) {
  lon = std::fmod(lon + 180.0, 360.0);
  if (lon < 0) lon += 360.0;
  return lon - 180.0;
}

// Pixel-center convention: row/col index maps to the center of the cell.
inline double row_to_lat(int64_t row, int64_t e_h) { return 90.0 - (static_cast<double>(row) + 0.5) * 180.0 / static_cast<double>(e_h); }
inline double col_to_lon(int64_t col, int64_t e_w) { return (static_cast<double>(col) + 0.5) * 360.0 / static_cast<double>(e_w) - 180.0; }

SphericalPoint pixel_to_latlon(int64_t row, int64_t col, int64_t e_h, int64_t e_w);

// Fractional results; exact inverse of pixel_to_latlon on pixel centers.
inline double lat_to_rowf(double lat_deg, int64_t e_h) { return (90.0 - lat_deg) * static_cast<double>(e_h) / 180.0 - 0.5; }
inline double lon_to_colf(double lon_deg, int64_t e_w) {
  return (wrap_lon_deg(lon_deg) + 180.0) * static_cast<double>(e_w) / 360.0 - 0.5;
}

inline int64_t wrap_col(int64_t col, int64_t e_w) {
  col %= e_w;
  return col < 0 ? col + e_w : col;
}

inline int64_t clamp_row(int64_t row, int64_t e_h) { return row < 0 ? 0 : (row >= e_h ? e_h - 1 : row); }

// Bilinear interpolation with periodic columns and clamped rows. Writes
// img.channels() values to `out`.
void bilinear_sample(const Image& img, double rowf, double colf, float* out);
float bilinear_sample_1(const Image& img, int64_t channel, double rowf, double colf);

// w(row) = cos((row + 0.5 - h/2) * pi / h), always positive.
inline double latitude_weight(int64_t row, int64_t e_h) {
  return std::cos((static_cast<double>(row) + 0.5 - static_cast<double>(e_h) / 2.0) * kPi / static_cast<double>(e_h));
}

// Deterministic spherical Fibonacci lattice; near-uniform area coverage.
std::vector<SphericalPoint> sphere_uniform_points(int64_t n);

// Craster parabolic projection. x ∈ [-sqrt(3*pi), sqrt(3*pi)],
// y ∈ [-sqrt(3*pi)/2, sqrt(3*pi)/2]; the valid (on-sphere) region covers 2/3
// of that bounding box.
struct CppPoint {
  double x = 0.0;
  double y = 0.0;
};

CppPoint cpp_project(const SphericalPoint& p);
// False when (x, y) lies outside the parabolic region.
bool cpp_unproject(double x, double y, SphericalPoint& out);

inline double cpp_half_width() { return std::sqrt(3.0 * kPi); }
inline double cpp_half_height() { return std::sqrt(3.0 * kPi) / 2.0; }

}  // namespace pqa::erp
