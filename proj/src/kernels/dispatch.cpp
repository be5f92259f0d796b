#include "pqa/kernels/kernels.hpp"

#include <cstdlib>
#include <stdexcept>
#include <string>

#include "table.hpp"

namespace pqa::kernels {
namespace {

detail::Table g_table;
Backend g_active = Backend::scalar;
bool g_initialized = false;

void apply(Backend b) {
  switch (b) {
    case Backend::scalar:
      g_table = detail::scalar_table();
      break;
#if defined(__x86_64__) || defined(_M_X64)
    case Backend::avx2:
      g_table = detail::avx2_table();
      break;
#endif
#if defined(__aarch64__)
    case Backend::neon:
      g_table = detail::neon_table();
      break;
#endif
    default:
      throw std::invalid_argument("kernel backend not supported on this machine: " + std::string(name(b)));
  }
  g_active = b;
  g_initialized = true;
}

void ensure_init() {
  if (g_initialized) return;
  Backend b = preferred();
  if (const char* env = std::getenv("PANOQA_SIMD")) {
    Backend parsed;
    if (parse(env, parsed)) {
      for (Backend s : supported())
        if (s == parsed) b = parsed;
    }
  }
  apply(b);
}

}  // namespace

#if defined(__x86_64__) || defined(_M_X64)
namespace detail {
bool avx2_supported() { return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma"); }
}  // namespace detail
#endif

std::vector<Backend> supported() {
  std::vector<Backend> v{Backend::scalar};
#if defined(__x86_64__) || defined(_M_X64)
  if (detail::avx2_supported()) v.push_back(Backend::avx2);
#endif
#if defined(__aarch64__)
  v.push_back(Backend::neon);
#endif
  return v;
}

Backend preferred() {
  auto v = supported();
  return v.back();  // supported() lists scalar first, best last
}

Backend active() {
  ensure_init();
  return g_active;
}

void select(Backend b) {
  for (Backend s : supported()) {
    if (s == b) {
      apply(b);
      return;
    }
  }
  throw std::invalid_argument("kernel backend not supported on this machine: " + std::string(name(b)));
}

const char* name(Backend b) {
  switch (b) {
    case Backend::scalar:
      return "scalar";
    case Backend::avx2:
      return "avx2";
    case Backend::neon:
      return "neon";
  }
  return "?";
}

bool parse(std::string_view s, Backend& out) {
  if (s == "scalar") out = Backend::scalar;
  else if (s == "avx2") out = Backend::avx2;
  else if (s == "neon") out = Backend::neon;
  else if (s == "auto") out = preferred();
  else return false;
  return true;
}

void gemm_nn(int64_t m, int64_t n, int64_t k, const float* a, int64_t lda, const float* b, int64_t ldb, float* c,
             int64_t ldc) {
  ensure_init();
  g_table.gemm_nn_f32(m, n, k, a, lda, b, ldb, c, ldc);
}

void gemm_nn(int64_t m, int64_t n, int64_t k, const double* a, int64_t lda, const double* b, int64_t ldb, double* c,
             int64_t ldc) {
  ensure_init();
  g_table.gemm_nn_f64(m, n, k, a, lda, b, ldb, c, ldc);
}

void gemm_nt(int64_t m, int64_t n, int64_t k, const float* a, int64_t lda, const float* b, int64_t ldb, float* c,
             int64_t ldc) {
  ensure_init();
  g_table.gemm_nt_f32(m, n, k, a, lda, b, ldb, c, ldc);
}

void gemm_nt(int64_t m, int64_t n, int64_t k, const double* a, int64_t lda, const double* b, int64_t ldb, double* c,
             int64_t ldc) {
  ensure_init();
  g_table.gemm_nt_f64(m, n, k, a, lda, b, ldb, c, ldc);
}

void gemm_tn(int64_t m, int64_t n, int64_t k, const float* a, int64_t lda, const float* b, int64_t ldb, float* c,
             int64_t ldc) {
  ensure_init();
  g_table.gemm_tn_f32(m, n, k, a, lda, b, ldb, c, ldc);
}

void gemm_tn(int64_t m, int64_t n, int64_t k, const double* a, int64_t lda, const double* b, int64_t ldb, double* c,
             int64_t ldc) {
  ensure_init();
  g_table.gemm_tn_f64(m, n, k, a, lda, b, ldb, c, ldc);
}

void axpy(int64_t n, float alpha, const float* x, float* y) {
  ensure_init();
  g_table.axpy_f32(n, alpha, x, y);
}

void axpy(int64_t n, double alpha, const double* x, double* y) {
  ensure_init();
  g_table.axpy_f64(n, alpha, x, y);
}

void vmadd(int64_t n, const float* x, const float* y, float* z) {
  ensure_init();
  g_table.vmadd_f32(n, x, y, z);
}

void vmadd(int64_t n, const double* x, const double* y, double* z) {
  ensure_init();
  g_table.vmadd_f64(n, x, y, z);
}

float dot(int64_t n, const float* x, const float* y) {
  ensure_init();
  return g_table.dot_f32(n, x, y);
}

double dot(int64_t n, const double* x, const double* y) {
  ensure_init();
  return g_table.dot_f64(n, x, y);
}

void vsigmoid(int64_t n, const float* x, float* y) {
  ensure_init();
  g_table.vsigmoid_f32(n, x, y);
}

void vsigmoid(int64_t n, const double* x, double* y) {
  ensure_init();
  g_table.vsigmoid_f64(n, x, y);
}

void vsilu(int64_t n, const float* x, float* y) {
  ensure_init();
  g_table.vsilu_f32(n, x, y);
}

void vsilu(int64_t n, const double* x, double* y) {
  ensure_init();
  g_table.vsilu_f64(n, x, y);
}

}  // namespace pqa::kernels
