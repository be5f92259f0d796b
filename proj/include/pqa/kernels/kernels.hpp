#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

// Data-parallel inner loops behind the tensor ops. Every kernel has a scalar
// reference implementation plus SIMD variants (AVX2 on x86-64, NEON on
// aarch64) selected at runtime; the variants are equivalence-tested against
// the scalar path. All GEMMs accumulate into C (C += op(A) * op(B)).
namespace pqa::kernels {

enum class Backend { scalar, avx2, neon };

std::vector<Backend> supported();   // scalar first, best backend last
Backend preferred();                // best supported backend on this machine
Backend active();
void select(Backend b);             // throws std::invalid_argument if unsupported
const char* name(Backend b);
// "scalar" | "avx2" | "neon" | "auto" (auto = preferred). False on anything else.
bool parse(std::string_view s, Backend& out);

// C[M x N] += A[M x K] * B[K x N], row-major with leading dimensions.
void gemm_nn(int64_t M, int64_t N, int64_t K, const float* A, int64_t lda,
             const float* B, int64_t ldb, float* C, int64_t ldc);
void gemm_nn(int64_t M, int64_t N, int64_t K, const double* A, int64_t lda,
             const double* B, int64_t ldb, double* C, int64_t ldc);

// C[M x N] += A[M x K] * B[N x K]^T
void gemm_nt(int64_t M, int64_t N, int64_t K, const float* A, int64_t lda,
             const float* B, int64_t ldb, float* C, int64_t ldc);
void gemm_nt(int64_t M, int64_t N, int64_t K, const double* A, int64_t lda,
             const double* B, int64_t ldb, double* C, int64_t ldc);

// C[M x N] += A[K x M]^T * B[K x N]
void gemm_tn(int64_t M, int64_t N, int64_t K, const float* A, int64_t lda,
             const float* B, int64_t ldb, float* C, int64_t ldc);
void gemm_tn(int64_t M, int64_t N, int64_t K, const double* A, int64_t lda,
             const double* B, int64_t ldb, double* C, int64_t ldc);

// y += a * x
void axpy(int64_t n, float a, const float* x, float* y);
void axpy(int64_t n, double a, const double* x, double* y);

// z += x * y  (element-wise)
void vmadd(int64_t n, const float* x, const float* y, float* z);
void vmadd(int64_t n, const double* x, const double* y, double* z);

float dot(int64_t n, const float* x, const float* y);
double dot(int64_t n, const double* x, const double* y);

// y = 1 / (1 + exp(-x))
void vsigmoid(int64_t n, const float* x, float* y);
void vsigmoid(int64_t n, const double* x, double* y);

// y = x * sigmoid(x)   (the smooth gelu-style activation used by the nets)
void vsilu(int64_t n, const float* x, float* y);
void vsilu(int64_t n, const double* x, double* y);

}  // namespace pqa::kernels
