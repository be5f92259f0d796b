#pragma once

#include <cstdint>

namespace pqa::kernels::detail {

struct Table {
  void (*gemm_nn_f32)(int64_t, int64_t, int64_t, const float*, int64_t, const float*, int64_t, float*, int64_t);
  void (*gemm_nn_f64)(int64_t, int64_t, int64_t, const double*, int64_t, const double*, int64_t, double*, int64_t);
  void (*gemm_nt_f32)(int64_t, int64_t, int64_t, const float*, int64_t, const float*, int64_t, float*, int64_t);
  void (*gemm_nt_f64)(int64_t, int64_t, int64_t, const double*, int64_t, const double*, int64_t, double*, int64_t);
  void (*gemm_tn_f32)(int64_t, int64_t, int64_t, const float*, int64_t, const float*, int64_t, float*, int64_t);
  void (*gemm_tn_f64)(int64_t, int64_t, int64_t, const double*, int64_t, const double*, int64_t, double*, int64_t);
  void (*axpy_f32)(int64_t, float, const float*, float*);
  void (*axpy_f64)(int64_t, double, const double*, double*);
  void (*vmadd_f32)(int64_t, const float*, const float*, float*);
  void (*vmadd_f64)(int64_t, const double*, const double*, double*);
  float (*dot_f32)(int64_t, const float*, const float*);
  double (*dot_f64)(int64_t, const double*, const double*);
  void (*vsigmoid_f32)(int64_t, const float*, float*);
  void (*vsigmoid_f64)(int64_t, const double*, double*);
  void (*vsilu_f32)(int64_t, const float*, float*);
  void (*vsilu_f64)(int64_t, const double*, double*);
};

Table scalar_table();

#if defined(__x86_64__) || defined(_M_X64)
bool avx2_supported();
Table avx2_table();
#endif

#if defined(__aarch64__)
Table neon_table();
#endif

}  // namespace pqa::kernels::detail
