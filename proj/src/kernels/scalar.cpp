#include "exp_poly.hpp"
#include "table.hpp"

// Reference implementations. Plain loops, no tricks: these define the
// semantics the SIMD backends are tested against.

namespace pqa::kernels::detail {
namespace {

template <typename T>
void gemm_nn_ref(int64_t m, int64_t n, int64_t k, const T* a, int64_t lda, const T* b, int64_t ldb, T* c,
                 int64_t ldc) {
  for (int64_t i = 0; i < m; ++i) {
    for (int64_t p = 0; p < k; ++p) {
      T av = a[i * lda + p];
      const T* brow = b + p * ldb;
      T* crow = c + i * ldc;
      for (int64_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

template <typename T>
void gemm_nt_ref(int64_t m, int64_t n, int64_t k, const T* a, int64_t lda, const T* b, int64_t ldb, T* c,
                 int64_t ldc) {
  for (int64_t i = 0; i < m; ++i) {
    for (int64_t j = 0; j < n; ++j) {
      T acc = 0;
      const T* arow = a + i * lda;
      const T* brow = b + j * ldb;
      for (int64_t p = 0; p < k; ++p) acc += arow[p] * brow[p];
      c[i * ldc + j] += acc;
    }
  }
}

template <typename T>
void gemm_tn_ref(int64_t m, int64_t n, int64_t k, const T* a, int64_t lda, const T* b, int64_t ldb, T* c,
                 int64_t ldc) {
  for (int64_t p = 0; p < k; ++p) {
    const T* arow = a + p * lda;
    const T* brow = b + p * ldb;
    for (int64_t i = 0; i < m; ++i) {
      T av = arow[i];
      T* crow = c + i * ldc;
      for (int64_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

template <typename T>
void axpy_ref(int64_t n, T a, const T* x, T* y) {
  for (int64_t i = 0; i < n; ++i) y[i] += a * x[i];
}

template <typename T>
void vmadd_ref(int64_t n, const T* x, const T* y, T* z) {
  for (int64_t i = 0; i < n; ++i) z[i] += x[i] * y[i];
}

template <typename T>
T dot_ref(int64_t n, const T* x, const T* y) {
  T acc = 0;
  for (int64_t i = 0; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

void vsigmoid_f32_ref(int64_t n, const float* x, float* y) {
  for (int64_t i = 0; i < n; ++i) y[i] = sigmoid_f32(x[i]);
}

void vsigmoid_f64_ref(int64_t n, const double* x, double* y) {
  for (int64_t i = 0; i < n; ++i) y[i] = sigmoid_f64(x[i]);
}

void vsilu_f32_ref(int64_t n, const float* x, float* y) {
  for (int64_t i = 0; i < n; ++i) y[i] = x[i] * sigmoid_f32(x[i]);
}

void vsilu_f64_ref(int64_t n, const double* x, double* y) {
  for (int64_t i = 0; i < n; ++i) y[i] = x[i] * sigmoid_f64(x[i]);
}

}  // namespace

Table scalar_table() {
  Table t;
  t.gemm_nn_f32 = gemm_nn_ref<float>;
  t.gemm_nn_f64 = gemm_nn_ref<double>;
  t.gemm_nt_f32 = gemm_nt_ref<float>;
  t.gemm_nt_f64 = gemm_nt_ref<double>;
  t.gemm_tn_f32 = gemm_tn_ref<float>;
  t.gemm_tn_f64 = gemm_tn_ref<double>;
  t.axpy_f32 = axpy_ref<float>;
  t.axpy_f64 = axpy_ref<double>;
  t.vmadd_f32 = vmadd_ref<float>;
  t.vmadd_f64 = vmadd_ref<double>;
  t.dot_f32 = dot_ref<float>;
  t.dot_f64 = dot_ref<double>;
  t.vsigmoid_f32 = vsigmoid_f32_ref;
  t.vsigmoid_f64 = vsigmoid_f64_ref;
  t.vsilu_f32 = vsilu_f32_ref;
  t.vsilu_f64 = vsilu_f64_ref;
  return t;
}

}  // namespace pqa::kernels::detail
