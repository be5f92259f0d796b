#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

#include "exp_poly.hpp"
#include "table.hpp"

// AVX2+FMA backend. This TU is compiled with -mavx2 -mfma and must only be
// reached through the dispatch table after a cpuid check.
//
// The saxpy-form GEMM (used by NN and TN) is register-blocked 4x16 so each
// B row loaded from memory feeds four C rows; that is what keeps the conv
// layers compute-bound instead of memory-bound.

namespace pqa::kernels::detail {
namespace {

inline float hsum8(__m256 v) {
  __m128 lo = _mm256_castps256_ps128(v);
  __m128 hi = _mm256_extractf128_ps(v, 1);
  lo = _mm_add_ps(lo, hi);
  lo = _mm_add_ps(lo, _mm_movehl_ps(lo, lo));
  lo = _mm_add_ss(lo, _mm_shuffle_ps(lo, lo, 1));
  return _mm_cvtss_f32(lo);
}

inline double hsum4(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(lo) + _mm_cvtsd_f64(_mm_unpackhi_pd(lo, lo));
}

// C[M x N] += sum_k a(i,k) * B[k, :] with a(i,k) = A[i*ars + k*acs].
// ars/acs = (lda, 1) gives NN, (1, lda) gives TN.
void gemm_saxpy_f32(int64_t m, int64_t n, int64_t k, const float* a, int64_t ars, int64_t acs, const float* b,
                    int64_t ldb, float* c, int64_t ldc) {
  const int64_t m_main = m & ~int64_t(3);
  const int64_t n_main = n & ~int64_t(15);
  for (int64_t i0 = 0; i0 < m_main; i0 += 4) {
    const float* a0 = a + (i0 + 0) * ars;
    const float* a1 = a + (i0 + 1) * ars;
    const float* a2 = a + (i0 + 2) * ars;
    const float* a3 = a + (i0 + 3) * ars;
    for (int64_t j0 = 0; j0 < n_main; j0 += 16) {
      float* c0 = c + (i0 + 0) * ldc + j0;
      float* c1 = c + (i0 + 1) * ldc + j0;
      float* c2 = c + (i0 + 2) * ldc + j0;
      float* c3 = c + (i0 + 3) * ldc + j0;
      __m256 acc00 = _mm256_loadu_ps(c0), acc01 = _mm256_loadu_ps(c0 + 8);
      __m256 acc10 = _mm256_loadu_ps(c1), acc11 = _mm256_loadu_ps(c1 + 8);
      __m256 acc20 = _mm256_loadu_ps(c2), acc21 = _mm256_loadu_ps(c2 + 8);
      __m256 acc30 = _mm256_loadu_ps(c3), acc31 = _mm256_loadu_ps(c3 + 8);
      const float* bp = b + j0;
      for (int64_t p = 0; p < k; ++p, bp += ldb) {
        __m256 b0 = _mm256_loadu_ps(bp);
        __m256 b1 = _mm256_loadu_ps(bp + 8);
        __m256 av = _mm256_set1_ps(a0[p * acs]);
        acc00 = _mm256_fmadd_ps(av, b0, acc00);
        acc01 = _mm256_fmadd_ps(av, b1, acc01);
        av = _mm256_set1_ps(a1[p * acs]);
        acc10 = _mm256_fmadd_ps(av, b0, acc10);
        acc11 = _mm256_fmadd_ps(av, b1, acc11);
        av = _mm256_set1_ps(a2[p * acs]);
        acc20 = _mm256_fmadd_ps(av, b0, acc20);
        acc21 = _mm256_fmadd_ps(av, b1, acc21);
        av = _mm256_set1_ps(a3[p * acs]);
        acc30 = _mm256_fmadd_ps(av, b0, acc30);
        acc31 = _mm256_fmadd_ps(av, b1, acc31);
      }
      _mm256_storeu_ps(c0, acc00);
      _mm256_storeu_ps(c0 + 8, acc01);
      _mm256_storeu_ps(c1, acc10);
      _mm256_storeu_ps(c1 + 8, acc11);
      _mm256_storeu_ps(c2, acc20);
      _mm256_storeu_ps(c2 + 8, acc21);
      _mm256_storeu_ps(c3, acc30);
      _mm256_storeu_ps(c3 + 8, acc31);
    }
  }
  // Leftover rows, full-width columns.
  for (int64_t i = m_main; i < m; ++i) {
    const float* ai = a + i * ars;
    for (int64_t j0 = 0; j0 < n_main; j0 += 16) {
      float* ci = c + i * ldc + j0;
      __m256 acc0 = _mm256_loadu_ps(ci);
      __m256 acc1 = _mm256_loadu_ps(ci + 8);
      const float* bp = b + j0;
      for (int64_t p = 0; p < k; ++p, bp += ldb) {
        __m256 av = _mm256_set1_ps(ai[p * acs]);
        acc0 = _mm256_fmadd_ps(av, _mm256_loadu_ps(bp), acc0);
        acc1 = _mm256_fmadd_ps(av, _mm256_loadu_ps(bp + 8), acc1);
      }
      _mm256_storeu_ps(ci, acc0);
      _mm256_storeu_ps(ci + 8, acc1);
    }
  }
  // Leftover columns, all rows.
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
  const int64_t n_main = n & ~int64_t(7);
  for (int64_t i0 = 0; i0 < m_main; i0 += 4) {
    const double* a0 = a + (i0 + 0) * ars;
    const double* a1 = a + (i0 + 1) * ars;
    const double* a2 = a + (i0 + 2) * ars;
    const double* a3 = a + (i0 + 3) * ars;
    for (int64_t j0 = 0; j0 < n_main; j0 += 8) {
      double* c0 = c + (i0 + 0) * ldc + j0;
      double* c1 = c + (i0 + 1) * ldc + j0;
      double* c2 = c + (i0 + 2) * ldc + j0;
      double* c3 = c + (i0 + 3) * ldc + j0;
      __m256d acc00 = _mm256_loadu_pd(c0), acc01 = _mm256_loadu_pd(c0 + 4);
      __m256d acc10 = _mm256_loadu_pd(c1), acc11 = _mm256_loadu_pd(c1 + 4);
      __m256d acc20 = _mm256_loadu_pd(c2), acc21 = _mm256_loadu_pd(c2 + 4);
      __m256d acc30 = _mm256_loadu_pd(c3), acc31 = _mm256_loadu_pd(c3 + 4);
      const double* bp = b + j0;
      for (int64_t p = 0; p < k; ++p, bp += ldb) {
        __m256d b0 = _mm256_loadu_pd(bp);
        __m256d b1 = _mm256_loadu_pd(bp + 4);
        __m256d av = _mm256_set1_pd(a0[p * acs]);
        acc00 = _mm256_fmadd_pd(av, b0, acc00);
        acc01 = _mm256_fmadd_pd(av, b1, acc01);
        av = _mm256_set1_pd(a1[p * acs]);
        acc10 = _mm256_fmadd_pd(av, b0, acc10);
        acc11 = _mm256_fmadd_pd(av, b1, acc11);
        av = _mm256_set1_pd(a2[p * acs]);
        acc20 = _mm256_fmadd_pd(av, b0, acc20);
        acc21 = _mm256_fmadd_pd(av, b1, acc21);
        av = _mm256_set1_pd(a3[p * acs]);
        acc30 = _mm256_fmadd_pd(av, b0, acc30);
        acc31 = _mm256_fmadd_pd(av, b1, acc31);
      }
      _mm256_storeu_pd(c0, acc00);
      _mm256_storeu_pd(c0 + 4, acc01);
      _mm256_storeu_pd(c1, acc10);
      _mm256_storeu_pd(c1 + 4, acc11);
      _mm256_storeu_pd(c2, acc20);
      _mm256_storeu_pd(c2 + 4, acc21);
      _mm256_storeu_pd(c3, acc30);
      _mm256_storeu_pd(c3 + 4, acc31);
    }
  }
  for (int64_t i = m_main; i < m; ++i) {
    const double* ai = a + i * ars;
    for (int64_t j0 = 0; j0 < n_main; j0 += 8) {
      double* ci = c + i * ldc + j0;
      __m256d acc0 = _mm256_loadu_pd(ci);
      __m256d acc1 = _mm256_loadu_pd(ci + 4);
      const double* bp = b + j0;
      for (int64_t p = 0; p < k; ++p, bp += ldb) {
        __m256d av = _mm256_set1_pd(ai[p * acs]);
        acc0 = _mm256_fmadd_pd(av, _mm256_loadu_pd(bp), acc0);
        acc1 = _mm256_fmadd_pd(av, _mm256_loadu_pd(bp + 4), acc1);
      }
      _mm256_storeu_pd(ci, acc0);
      _mm256_storeu_pd(ci + 4, acc1);
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

// Dot form: C[i,j] += A[i,:] . B[j,:], vectorized along the shared K axis.
void gemm_nt_f32(int64_t m, int64_t n, int64_t k, const float* a, int64_t lda, const float* b, int64_t ldb, float* c,
                 int64_t ldc) {
  const int64_t k_main = k & ~int64_t(7);
  const int64_t m_main = m & ~int64_t(1);
  const int64_t n_main = n & ~int64_t(1);
  for (int64_t i0 = 0; i0 < m_main; i0 += 2) {
    const float* a0 = a + (i0 + 0) * lda;
    const float* a1 = a + (i0 + 1) * lda;
    for (int64_t j0 = 0; j0 < n_main; j0 += 2) {
      const float* b0 = b + (j0 + 0) * ldb;
      const float* b1 = b + (j0 + 1) * ldb;
      __m256 s00 = _mm256_setzero_ps(), s01 = _mm256_setzero_ps();
      __m256 s10 = _mm256_setzero_ps(), s11 = _mm256_setzero_ps();
      for (int64_t p = 0; p < k_main; p += 8) {
        __m256 va0 = _mm256_loadu_ps(a0 + p);
        __m256 va1 = _mm256_loadu_ps(a1 + p);
        __m256 vb0 = _mm256_loadu_ps(b0 + p);
        __m256 vb1 = _mm256_loadu_ps(b1 + p);
        s00 = _mm256_fmadd_ps(va0, vb0, s00);
        s01 = _mm256_fmadd_ps(va0, vb1, s01);
        s10 = _mm256_fmadd_ps(va1, vb0, s10);
        s11 = _mm256_fmadd_ps(va1, vb1, s11);
      }
      float r00 = hsum8(s00), r01 = hsum8(s01), r10 = hsum8(s10), r11 = hsum8(s11);
      for (int64_t p = k_main; p < k; ++p) {
        r00 += a0[p] * b0[p];
        r01 += a0[p] * b1[p];
        r10 += a1[p] * b0[p];
        r11 += a1[p] * b1[p];
      }
      c[(i0 + 0) * ldc + j0 + 0] += r00;
      c[(i0 + 0) * ldc + j0 + 1] += r01;
      c[(i0 + 1) * ldc + j0 + 0] += r10;
      c[(i0 + 1) * ldc + j0 + 1] += r11;
    }
  }
  // Remainder rows/columns via single dots.
  auto dot1 = [k, k_main](const float* x, const float* y) {
    __m256 s = _mm256_setzero_ps();
    for (int64_t p = 0; p < k_main; p += 8) s = _mm256_fmadd_ps(_mm256_loadu_ps(x + p), _mm256_loadu_ps(y + p), s);
    float r = hsum8(s);
    for (int64_t p = k_main; p < k; ++p) r += x[p] * y[p];
    return r;
  };
  for (int64_t i = m_main; i < m; ++i)
    for (int64_t j = 0; j < n; ++j) c[i * ldc + j] += dot1(a + i * lda, b + j * ldb);
  for (int64_t i = 0; i < m_main; ++i)
    for (int64_t j = n_main; j < n; ++j) c[i * ldc + j] += dot1(a + i * lda, b + j * ldb);
}

void gemm_nt_f64(int64_t m, int64_t n, int64_t k, const double* a, int64_t lda, const double* b, int64_t ldb,
                 double* c, int64_t ldc) {
  const int64_t k_main = k & ~int64_t(3);
  auto dot1 = [k, k_main](const double* x, const double* y) {
    __m256d s = _mm256_setzero_pd();
    for (int64_t p = 0; p < k_main; p += 4) s = _mm256_fmadd_pd(_mm256_loadu_pd(x + p), _mm256_loadu_pd(y + p), s);
    double r = hsum4(s);
    for (int64_t p = k_main; p < k; ++p) r += x[p] * y[p];
    return r;
  };
  for (int64_t i = 0; i < m; ++i)
    for (int64_t j = 0; j < n; ++j) c[i * ldc + j] += dot1(a + i * lda, b + j * ldb);
}

void axpy_f32(int64_t n, float alpha, const float* x, float* y) {
  const int64_t n_main = n & ~int64_t(7);
  __m256 va = _mm256_set1_ps(alpha);
  for (int64_t i = 0; i < n_main; i += 8)
    _mm256_storeu_ps(y + i, _mm256_fmadd_ps(va, _mm256_loadu_ps(x + i), _mm256_loadu_ps(y + i)));
  for (int64_t i = n_main; i < n; ++i) y[i] += alpha * x[i];
}

void axpy_f64(int64_t n, double alpha, const double* x, double* y) {
  const int64_t n_main = n & ~int64_t(3);
  __m256d va = _mm256_set1_pd(alpha);
  for (int64_t i = 0; i < n_main; i += 4)
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  for (int64_t i = n_main; i < n; ++i) y[i] += alpha * x[i];
}

void vmadd_f32(int64_t n, const float* x, const float* y, float* z) {
  const int64_t n_main = n & ~int64_t(7);
  for (int64_t i = 0; i < n_main; i += 8)
    _mm256_storeu_ps(z + i, _mm256_fmadd_ps(_mm256_loadu_ps(x + i), _mm256_loadu_ps(y + i), _mm256_loadu_ps(z + i)));
  for (int64_t i = n_main; i < n; ++i) z[i] += x[i] * y[i];
}

void vmadd_f64(int64_t n, const double* x, const double* y, double* z) {
  const int64_t n_main = n & ~int64_t(3);
  for (int64_t i = 0; i < n_main; i += 4)
    _mm256_storeu_pd(z + i, _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), _mm256_loadu_pd(z + i)));
  for (int64_t i = n_main; i < n; ++i) z[i] += x[i] * y[i];
}

float dot_f32(int64_t n, const float* x, const float* y) {
  const int64_t n_main = n & ~int64_t(15);
  __m256 s0 = _mm256_setzero_ps(), s1 = _mm256_setzero_ps();
  for (int64_t i = 0; i < n_main; i += 16) {
    s0 = _mm256_fmadd_ps(_mm256_loadu_ps(x + i), _mm256_loadu_ps(y + i), s0);
    s1 = _mm256_fmadd_ps(_mm256_loadu_ps(x + i + 8), _mm256_loadu_ps(y + i + 8), s1);
  }
  float r = hsum8(_mm256_add_ps(s0, s1));
  for (int64_t i = n_main; i < n; ++i) r += x[i] * y[i];
  return r;
}

double dot_f64(int64_t n, const double* x, const double* y) {
  const int64_t n_main = n & ~int64_t(3);
  __m256d s = _mm256_setzero_pd();
  for (int64_t i = 0; i < n_main; i += 4)
    s = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), s);
  double r = hsum4(s);
  for (int64_t i = n_main; i < n; ++i) r += x[i] * y[i];
  return r;
}

// Same range reduction and polynomial as exp_poly_f32 in exp_poly.hpp.
inline __m256 exp_poly8(__m256 x) {
  x = _mm256_max_ps(x, _mm256_set1_ps(kExpLo));
  x = _mm256_min_ps(x, _mm256_set1_ps(kExpHi));
  __m256 kf = _mm256_round_ps(_mm256_mul_ps(x, _mm256_set1_ps(kLog2e)),
                              _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  __m256 r = _mm256_fnmadd_ps(kf, _mm256_set1_ps(kLn2Hi), x);
  r = _mm256_fnmadd_ps(kf, _mm256_set1_ps(kLn2Lo), r);
  __m256 p = _mm256_set1_ps(kExpC6);
  p = _mm256_fmadd_ps(p, r, _mm256_set1_ps(kExpC5));
  p = _mm256_fmadd_ps(p, r, _mm256_set1_ps(kExpC4));
  p = _mm256_fmadd_ps(p, r, _mm256_set1_ps(kExpC3));
  p = _mm256_fmadd_ps(p, r, _mm256_set1_ps(kExpC2));
  p = _mm256_fmadd_ps(p, r, _mm256_set1_ps(1.0f));
  p = _mm256_fmadd_ps(p, r, _mm256_set1_ps(1.0f));
  __m256i ki = _mm256_cvtps_epi32(kf);
  __m256i bits = _mm256_slli_epi32(_mm256_add_epi32(ki, _mm256_set1_epi32(127)), 23);
  return _mm256_mul_ps(p, _mm256_castsi256_ps(bits));
}

inline __m256 sigmoid8(__m256 x) {
  __m256 zero = _mm256_setzero_ps();
  __m256 neg_abs = _mm256_min_ps(x, _mm256_sub_ps(zero, x));
  __m256 t = exp_poly8(neg_abs);
  __m256 denom = _mm256_add_ps(_mm256_set1_ps(1.0f), t);
  __m256 pos = _mm256_div_ps(_mm256_set1_ps(1.0f), denom);
  __m256 neg = _mm256_div_ps(t, denom);
  __m256 mask = _mm256_cmp_ps(x, zero, _CMP_GE_OQ);
  return _mm256_blendv_ps(neg, pos, mask);
}

void vsigmoid_f32(int64_t n, const float* x, float* y) {
  const int64_t n_main = n & ~int64_t(7);
  for (int64_t i = 0; i < n_main; i += 8) _mm256_storeu_ps(y + i, sigmoid8(_mm256_loadu_ps(x + i)));
  for (int64_t i = n_main; i < n; ++i) y[i] = sigmoid_f32(x[i]);
}

void vsilu_f32(int64_t n, const float* x, float* y) {
  const int64_t n_main = n & ~int64_t(7);
  for (int64_t i = 0; i < n_main; i += 8) {
    __m256 v = _mm256_loadu_ps(x + i);
    _mm256_storeu_ps(y + i, _mm256_mul_ps(v, sigmoid8(v)));
  }
  for (int64_t i = n_main; i < n; ++i) y[i] = x[i] * sigmoid_f32(x[i]);
}

}  // namespace

Table avx2_table() {
  Table t = scalar_table();  // f64 elementwise stays on the std::exp path
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
  t.vsigmoid_f32 = vsigmoid_f32;
  t.vsilu_f32 = vsilu_f32;
  return t;
}

}  // namespace pqa::kernels::detail

#endif  // x86-64
