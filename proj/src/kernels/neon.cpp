#if defined(__aarch64__)

#include <arm_neon.h>

#include "exp_poly.hpp"
#include "table.hpp"

// NEON backend for aarch64. Mirrors the AVX2 structure with 128-bit lanes:
// 4x8 f32 blocks and 4x4 f64 blocks for the saxpy-form GEMM.

namespace pqa::kernels::detail {
namespace {

void gemm_saxpy_f32(int64_t m, int64_t n, int64_t k, const float* a, int64_t ars, int64_t acs, const float* b,
                    int64_t ldb, float* c, int64_t ldc) {
  const int64_t m_main = m & ~int64_t(3);
  const int64_t n_main = n & ~int64_t(7);
  for (int64_t i0 = 0; i0 < m_main; i0 += 4) {
    const float* a0 = a + (i0 + 0) * ars;
    const float* a1 = a + (i0 + 1) * ars;
    const float* a2 = a + (i0 + 2) * ars;
    const float* a3 = a + (i0 + 3) * ars;
    for (int64_t j0 = 0; j0 < n_main; j0 += 8) {
      float* c0 = c + (i0 + 0) * ldc + j0;
      float* c1 = c + (i0 + 1) * ldc + j0;
      float* c2 = c + (i0 + 2) * ldc + j0;
      float* c3 = c + (i0 + 3) * ldc + j0;
      float32x4_t acc00 = vld1q_f32(c0), acc01 = vld1q_f32(c0 + 4);
      float32x4_t acc10 = vld1q_f32(c1), acc11 = vld1q_f32(c1 + 4);
      float32x4_t acc20 = vld1q_f32(c2), acc21 = vld1q_f32(c2 + 4);
      float32x4_t acc30 = vld1q_f32(c3), acc31 = vld1q_f32(c3 + 4);
      const float* bp = b + j0;
      for (int64_t p = 0; p < k; ++p, bp += ldb) {
        float32x4_t b0 = vld1q_f32(bp);
        float32x4_t b1 = vld1q_f32(bp + 4);
        float32x4_t av = vdupq_n_f32(a0[p * acs]);
        acc00 = vfmaq_f32(acc00, av, b0);
        acc01 = vfmaq_f32(acc01, av, b1);
        av = vdupq_n_f32(a1[p * acs]);
        acc10 = vfmaq_f32(acc10, av, b0);
        acc11 = vfmaq_f32(acc11, av, b1);
        av = vdupq_n_f32(a2[p * acs]);
        acc20 = vfmaq_f32(acc20, av, b0);
        acc21 = vfmaq_f32(acc21, av, b1);
        av = vdupq_n_f32(a3[p * acs]);
        acc30 = vfmaq_f32(acc30, av, b0);
        acc31 = vfmaq_f32(acc31, av, b1);
      }
      vst1q_f32(c0, acc00);
      vst1q_f32(c0 + 4, acc01);
      vst1q_f32(c1, acc10);
      vst1q_f32(c1 + 4, acc11);
      vst1q_f32(c2, acc20);
      vst1q_f32(c2 + 4, acc21);
      vst1q_f32(c3, acc30);
      vst1q_f32(c3 + 4, acc31);
    }
  }
  for (int64_t i = m_main; i < m; ++i) {
    const float* ai = a + i * ars;
    for (int64_t j0 = 0; j0 < n_main; j0 += 8) {
      float* ci = c + i * ldc + j0;
      float32x4_t acc0 = vld1q_f32(ci);
      float32x4_t acc1 = vld1q_f32(ci + 4);
      const float* bp = b + j0;
      for (int64_t p = 0; p < k; ++p, bp += ldb) {
        float32x4_t av = vdupq_n_f32(ai[p * acs]);
        acc0 = vfmaq_f32(acc0, av, vld1q_f32(bp));
        acc1 = vfmaq_f32(acc1, av, vld1q_f32(bp + 4));
      }
      vst1q_f32(ci, acc0);
      vst1q_f32(ci + 4, acc1);
    }
  }
  if (n_main < n) {
    for (int64_t i = 0; i < m; ++i) {
      const float* ai = a + i * ars;
      float* ci = c + i * ldc;
      for (int64_t p = 0; p < k; ++p) {
        float av = ai[p * acs];
        const float* bp = b + p * ldb;
        for (int64_t j = n_main; j < n; ++j) ci[j] += av * bp[j];
      }
    }
  }
}

void gemm_saxpy_f64(int64_t m, int64_t n, int64_t k, const double* a, int64_t ars, int64_t acs, const double* b,
                    int64_t ldb, double* c, int64_t ldc) {
  const int64_t m_main = m & ~int64_t(3);
  const int64_t n_main = n & ~int64_t(3);
  for (int64_t i0 = 0; i0 < m_main; i0 += 4) {
    const double* a0 = a + (i0 + 0) * ars;
    const double* a1 = a + (i0 + 1) * ars;
    const double* a2 = a + (i0 + 2) * ars;
    const double* a3 = a + (i0 + 3) * ars;
    for (int64_t j0 = 0; j0 < n_main; j0 += 4) {
      double* c0 = c + (i0 + 0) * ldc + j0;
      double* c1 = c + (i0 + 1) * ldc + j0;
      double* c2 = c + (i0 + 2) * ldc + j0;
      double* c3 = c + (i0 + 3) * ldc + j0;
      float64x2_t acc00 = vld1q_f64(c0), acc01 = vld1q_f64(c0 + 2);
      float64x2_t acc10 = vld1q_f64(c1), acc11 = vld1q_f64(c1 + 2);
      float64x2_t acc20 = vld1q_f64(c2), acc21 = vld1q_f64(c2 + 2);
      float64x2_t acc30 = vld1q_f64(c3), acc31 = vld1q_f64(c3 + 2);
      const double* bp = b + j0;
      for (int64_t p = 0; p < k; ++p, bp += ldb) {
        float64x2_t b0 = vld1q_f64(bp);
        float64x2_t b1 = vld1q_f64(bp + 2);
        float64x2_t av = vdupq_n_f64(a0[p * acs]);
        acc00 = vfmaq_f64(acc00, av, b0);
        acc01 = vfmaq_f64(acc01, av, b1);
        av = vdupq_n_f64(a1[p * acs]);
        acc10 = vfmaq_f64(acc10, av, b0);
        acc11 = vfmaq_f64(acc11, av, b1);
        av = vdupq_n_f64(a2[p * acs]);
        acc20 = vfmaq_f64(acc20, av, b0);
        acc21 = vfmaq_f64(acc21, av, b1);
        av = vdupq_n_f64(a3[p * acs]);
        acc30 = vfmaq_f64(acc30, av, b0);
        acc31 = vfmaq_f64(acc31, av, b1);
      }
      vst1q_f64(c0, acc00);
      vst1q_f64(c0 + 2, acc01);
      vst1q_f64(c1, acc10);
      vst1q_f64(c1 + 2, acc11);
      vst1q_f64(c2, acc20);
      vst1q_f64(c2 + 2, acc21);
      vst1q_f64(c3, acc30);
      vst1q_f64(c3 + 2, acc31);
    }
  }
  for (int64_t i = m_main; i < m; ++i) {
    const double* ai = a + i * ars;
    for (int64_t j0 = 0; j0 < n_main; j0 += 4) {
      double* ci = c + i * ldc + j0;
      float64x2_t acc0 = vld1q_f64(ci);
      float64x2_t acc1 = vld1q_f64(ci + 2);
      const double* bp = b + j0;
      for (int64_t p = 0; p < k; ++p, bp += ldb) {
        float64x2_t av = vdupq_n_f64(ai[p * acs]);
        acc0 = vfmaq_f64(acc0, av, vld1q_f64(bp));
        acc1 = vfmaq_f64(acc1, av, vld1q_f64(bp + 2));
      }
      vst1q_f64(ci, acc0);
      vst1q_f64(ci + 2, acc1);
    }
  }
  if (n_main < n) {
    for (int64_t i = 0; i < m; ++i) {
      const double* ai = a + i * ars;
      double* ci = c + i * ldc;
      for (int64_t p = 0; p < k; ++p) {
        double av = ai[p * acs];
        const double* bp = b + p * ldb;
        for (int64_t j = n_main; j < n; ++j) ci[j] += av * bp[j];
      }
    }
  }
}

void gemm_nn_f32(int64_t m, int64_t n, int64_t k, const float* a, int64_t lda, const float* b, int64_t ldb, float* c,
                 int64_t ldc) {
  gemm_saxpy_f32(m, n, k, a, lda, 1, b, ldb, c, ldc);
}

void gemm_nn_f64(int64_t m, int64_t n, int64_t k, const double* a, int64_t lda, const double* b, int64_t ldb,
                 double* c, int64_t ldc) {
  gemm_saxpy_f64(m, n, k, a, lda, 1, b, ldb, c, ldc);
}

void gemm_tn_f32(int64_t m, int64_t n, int64_t k, const float* a, int64_t lda, const float* b, int64_t ldb, float* c,
                 int64_t ldc) {
  gemm_saxpy_f32(m, n, k, a, 1, lda, b, ldb, c, ldc);
}

void gemm_tn_f64(int64_t m, int64_t n, int64_t k, const double* a, int64_t lda, const double* b, int64_t ldb,
                 double* c, int64_t ldc) {
  gemm_saxpy_f64(m, n, k, a, 1, lda, b, ldb, c, ldc);
}

void gemm_nt_f32(int64_t m, int64_t n, int64_t k, const float* a, int64_t lda, const float* b, int64_t ldb, float* c,
                 int64_t ldc) {
  const int64_t k_main = k & ~int64_t(3);
  for (int64_t i = 0; i < m; ++i) {
    const float* ai = a + i * lda;
    for (int64_t j = 0; j < n; ++j) {
      const float* bj = b + j * ldb;
      float32x4_t s = vdupq_n_f32(0.0f);
      for (int64_t p = 0; p < k_main; p += 4) s = vfmaq_f32(s, vld1q_f32(ai + p), vld1q_f32(bj + p));
      float r = vaddvq_f32(s);
      for (int64_t p = k_main; p < k; ++p) r += ai[p] * bj[p];
      c[i * ldc + j] += r;
    }
  }
}

void gemm_nt_f64(int64_t m, int64_t n, int64_t k, const double* a, int64_t lda, const double* b, int64_t ldb,
                 double* c, int64_t ldc) {
  const int64_t k_main = k & ~int64_t(1);
  for (int64_t i = 0; i < m; ++i) {
    const double* ai = a + i * lda;
    for (int64_t j = 0; j < n; ++j) {
      const double* bj = b + j * ldb;
      float64x2_t s = vdupq_n_f64(0.0);
      for (int64_t p = 0; p < k_main; p += 2) s = vfmaq_f64(s, vld1q_f64(ai + p), vld1q_f64(bj + p));
      double r = vaddvq_f64(s);
      for (int64_t p = k_main; p < k; ++p) r += ai[p] * bj[p];
      c[i * ldc + j] += r;
    }
  }
}

void axpy_f32(int64_t n, float alpha, const float* x, float* y) {
  const int64_t n_main = n & ~int64_t(3);
  float32x4_t va = vdupq_n_f32(alpha);
  for (int64_t i = 0; i < n_main; i += 4) vst1q_f32(y + i, vfmaq_f32(vld1q_f32(y + i), va, vld1q_f32(x + i)));
  for (int64_t i = n_main; i < n; ++i) y[i] += alpha * x[i];
}

void axpy_f64(int64_t n, double alpha, const double* x, double* y) {
  const int64_t n_main = n & ~int64_t(1);
  float64x2_t va = vdupq_n_f64(alpha);
  for (int64_t i = 0; i < n_main; i += 2) vst1q_f64(y + i, vfmaq_f64(vld1q_f64(y + i), va, vld1q_f64(x + i)));
  for (int64_t i = n_main; i < n; ++i) y[i] += alpha * x[i];
}

void vmadd_f32(int64_t n, const float* x, const float* y, float* z) {
  const int64_t n_main = n & ~int64_t(3);
  for (int64_t i = 0; i < n_main; i += 4)
    vst1q_f32(z + i, vfmaq_f32(vld1q_f32(z + i), vld1q_f32(x + i), vld1q_f32(y + i)));
  for (int64_t i = n_main; i < n; ++i) z[i] += x[i] * y[i];
}

void vmadd_f64(int64_t n, const double* x, const double* y, double* z) {
  const int64_t n_main = n & ~int64_t(1);
  for (int64_t i = 0; i < n_main; i += 2)
    vst1q_f64(z + i, vfmaq_f64(vld1q_f64(z + i), vld1q_f64(x + i), vld1q_f64(y + i)));
  for (int64_t i = n_main; i < n; ++i) z[i] += x[i] * y[i];
}

float dot_f32(int64_t n, const float* x, const float* y) {
  const int64_t n_main = n & ~int64_t(3);
  float32x4_t s = vdupq_n_f32(0.0f);
  for (int64_t i = 0; i < n_main; i += 4) s = vfmaq_f32(s, vld1q_f32(x + i), vld1q_f32(y + i));
  float r = vaddvq_f32(s);
  for (int64_t i = n_main; i < n; ++i) r += x[i] * y[i];
  return r;
}

double dot_f64(int64_t n, const double* x, const double* y) {
  const int64_t n_main = n & ~int64_t(1);
  float64x2_t s = vdupq_n_f64(0.0);
  for (int64_t i = 0; i < n_main; i += 2) s = vfmaq_f64(s, vld1q_f64(x + i), vld1q_f64(y + i));
  double r = vaddvq_f64(s);
  for (int64_t i = n_main; i < n; ++i) r += x[i] * y[i];
  return r;
}

}  // namespace

Table neon_table() {
  Table t = scalar_table();  // elementwise transcendentals stay scalar
  t.gemm_nn_f32 = gemm_nn_f32;
  t.gemm_nn_f64 = gemm_nn_f64;
  t.gemm_nt_f32 = gemm_nt_f32;
  t.gemm_nt_f64 = gemm_nt_f64;
  t.gemm_tn_f32 = gemm_tn_f32;
  t.gemm_tn_f64 = gemm_tn_f64;
  t.axpy_f32 = axpy_f32;
  t.axpy_f64 = axpy_f64;
  t.vmadd_f32 = vmadd_f32;
  t.vmadd_f64 = vmadd_f64;
  t.dot_f32 = dot_f32;
  t.dot_f64 = dot_f64;
  return t;
}

}  // namespace pqa::kernels::detail

#endif  // aarch64
