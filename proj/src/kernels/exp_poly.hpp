#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>

// Polynomial exp for f32 elementwise kernels. The scalar and SIMD paths run
// the exact same algorithm (range reduction with a Cody-Waite ln2 split plus
// a degree-6 polynomial) so their outputs agree to a few ulps and the
// equivalence tests can use a tight tolerance. f64 variants just call
// std::exp; they only run in the double-precision gradient checks where
// accuracy matters more than speed.

namespace pqa::kernels::detail {

inline constexpr float kExpLo = -87.0f;
inline constexpr float kExpHi = 88.0f;
inline constexpr float kLog2e = 1.442695040888963f;
inline constexpr float kLn2Hi = 0.693359375f;
inline constexpr float kLn2Lo = -2.12194440e-4f;
// Taylor coefficients 1/k! for k = 2..6.
inline constexpr float kExpC2 = 0.5f;
inline constexpr float kExpC3 = 1.0f / 6.0f;
inline constexpr float kExpC4 = 1.0f / 24.0f;
inline constexpr float kExpC5 = 1.0f / 120.0f;
inline constexpr float kExpC6 = 1.0f / 720.0f;

inline float exp_poly_f32(float x) {
  x = x < kExpLo ? kExpLo : (x > kExpHi ? kExpHi : x);
  float kf = std::nearbyintf(x * kLog2e);
  float r = x - kf * kLn2Hi;
  r = r - kf * kLn2Lo;
  float p = kExpC6;
  p = p * r + kExpC5;
  p = p * r + kExpC4;
  p = p * r + kExpC3;
  p = p * r + kExpC2;
  p = p * r + 1.0f;
  p = p * r + 1.0f;
  // Scale by 2^k through the exponent bits.
  int32_t ki = static_cast<int32_t>(kf);
  int32_t bits = (ki + 127) << 23;
  float scale;
  std::memcpy(&scale, &bits, sizeof(scale));
  return p * scale;
}

inline float sigmoid_f32(float x) {
  float t = exp_poly_f32(x >= 0.0f ? -x : x);  // exp(-|x|) in (0, 1]
  return x >= 0.0f ? 1.0f / (1.0f + t) : t / (1.0f + t);
}

inline double sigmoid_f64(double x) {
  double t = std::exp(x >= 0.0 ? -x : x);
  return x >= 0.0 ? 1.0 / (1.0 + t) : t / (1.0 + t);
}

}  // namespace pqa::kernels::detail
