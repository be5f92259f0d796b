#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "pqa/kernels/kernels.hpp"
#include "pqa/nn/tape.hpp"

// Differentiable tensor ops over the tape. Feature maps are [N, C, H, W];
// token matrices are [rows, cols]. Each backward accumulates (+=) into input
// gradients and skips inputs that do not require gradients.

namespace pqa::nn {

namespace detail {

template <typename T>
void check_same_shape(const Tensor<T>& a, const Tensor<T>& b, const char* who) {
  if (!a.same_shape(b)) throw std::invalid_argument(std::string(who) + ": shape mismatch " + a.shape_str() + " vs " + b.shape_str());
}

inline int64_t conv_out(int64_t in, int64_t k, int64_t stride, int64_t pad) {
  return (in + 2 * pad - k) / stride + 1;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Elementwise

template <typename T>
Var<T> add(Tape<T>& t, Var<T> a, Var<T> b) {
  const Tensor<T>& av = t.val(a);
  const Tensor<T>& bv = t.val(b);
  detail::check_same_shape(av, bv, "add");
  Tensor<T> y(av.shape());
  for (int64_t i = 0; i < y.numel(); ++i) y[i] = av[i] + bv[i];
  return t.make(std::move(y), {a, b}, [a, b](Tape<T>& tp, int32_t self) {
    const Tensor<T>& g = tp.grad(tp.self(self));
    if (tp.requires_grad(a)) kernels::axpy(g.numel(), T(1), g.data(), tp.grad(a).data());
    if (tp.requires_grad(b)) kernels::axpy(g.numel(), T(1), g.data(), tp.grad(b).data());
  });
}

template <typename T>
Var<T> scale(Tape<T>& t, Var<T> a, T c) {
  const Tensor<T>& av = t.val(a);
  Tensor<T> y(av.shape());
  for (int64_t i = 0; i < y.numel(); ++i) y[i] = av[i] * c;
  return t.make(std::move(y), {a}, [a, c](Tape<T>& tp, int32_t self) {
    const Tensor<T>& g = tp.grad(tp.self(self));
    if (tp.requires_grad(a)) kernels::axpy(g.numel(), c, g.data(), tp.grad(a).data());
  });
}

template <typename T>
Var<T> mul(Tape<T>& t, Var<T> a, Var<T> b) {
  const Tensor<T>& av = t.val(a);
  const Tensor<T>& bv = t.val(b);
  detail::check_same_shape(av, bv, "mul");
  Tensor<T> y(av.shape());
  for (int64_t i = 0; i < y.numel(); ++i) y[i] = av[i] * bv[i];
  return t.make(std::move(y), {a, b}, [a, b](Tape<T>& tp, int32_t self) {
    const Tensor<T>& g = tp.grad(tp.self(self));
    if (tp.requires_grad(a)) kernels::vmadd(g.numel(), g.data(), tp.val(b).data(), tp.grad(a).data());
    if (tp.requires_grad(b)) kernels::vmadd(g.numel(), g.data(), tp.val(a).data(), tp.grad(b).data());
  });
}

template <typename T>
Var<T> relu(Tape<T>& t, Var<T> a) {
  const Tensor<T>& av = t.val(a);
  Tensor<T> y(av.shape());
  for (int64_t i = 0; i < y.numel(); ++i) y[i] = av[i] > T(0) ? av[i] : T(0);
  return t.make(std::move(y), {a}, [a](Tape<T>& tp, int32_t self) {
    if (!tp.requires_grad(a)) return;
    const Tensor<T>& g = tp.grad(tp.self(self));
    const Tensor<T>& x = tp.val(a);
    Tensor<T>& ga = tp.grad(a);
    for (int64_t i = 0; i < g.numel(); ++i)
      if (x[i] > T(0)) ga[i] += g[i];
  });
}

template <typename T>
Var<T> sigmoid(Tape<T>& t, Var<T> a) {
  const Tensor<T>& av = t.val(a);
  Tensor<T> y(av.shape());
  kernels::vsigmoid(av.numel(), av.data(), y.data());
  return t.make(std::move(y), {a}, [a](Tape<T>& tp, int32_t self) {
    if (!tp.requires_grad(a)) return;
    const Tensor<T>& g = tp.grad(tp.self(self));
    const Tensor<T>& y = tp.val(tp.self(self));
    Tensor<T>& ga = tp.grad(a);
    for (int64_t i = 0; i < g.numel(); ++i) ga[i] += g[i] * y[i] * (T(1) - y[i]);
  });
}

template <typename T>
Var<T> silu(Tape<T>& t, Var<T> a) {
  const Tensor<T>& av = t.val(a);
  Tensor<T> y(av.shape());
  kernels::vsilu(av.numel(), av.data(), y.data());
  return t.make(std::move(y), {a}, [a](Tape<T>& tp, int32_t self) {
    if (!tp.requires_grad(a)) return;
    const Tensor<T>& g = tp.grad(tp.self(self));
    const Tensor<T>& x = tp.val(a);
    Tensor<T> s(x.shape());
    kernels::vsigmoid(x.numel(), x.data(), s.data());
    Tensor<T>& ga = tp.grad(a);
    for (int64_t i = 0; i < g.numel(); ++i) ga[i] += g[i] * s[i] * (T(1) + x[i] * (T(1) - s[i]));
  });
}

template <typename T>
Var<T> absval(Tape<T>& t, Var<T> a) {
  const Tensor<T>& av = t.val(a);
  Tensor<T> y(av.shape());
  for (int64_t i = 0; i < y.numel(); ++i) y[i] = av[i] < T(0) ? -av[i] : av[i];
  return t.make(std::move(y), {a}, [a](Tape<T>& tp, int32_t self) {
    if (!tp.requires_grad(a)) return;
    const Tensor<T>& g = tp.grad(tp.self(self));
    const Tensor<T>& x = tp.val(a);
    Tensor<T>& ga = tp.grad(a);
    for (int64_t i = 0; i < g.numel(); ++i) ga[i] += x[i] < T(0) ? -g[i] : g[i];
  });
}

// y = log(1 + c*x); compresses nonnegative energy maps onto a comparable scale
template <typename T>
Var<T> log1p_scaled(Tape<T>& t, Var<T> a, T c) {
  const Tensor<T>& av = t.val(a);
  Tensor<T> y(av.shape());
  for (int64_t i = 0; i < y.numel(); ++i) y[i] = std::log1p(c * av[i]);
  return t.make(std::move(y), {a}, [a, c](Tape<T>& tp, int32_t self) {
    if (!tp.requires_grad(a)) return;
    const Tensor<T>& g = tp.grad(tp.self(self));
    const Tensor<T>& x = tp.val(a);
    Tensor<T>& ga = tp.grad(a);
    for (int64_t i = 0; i < g.numel(); ++i) ga[i] += g[i] * c / (T(1) + c * x[i]);
  });
}

// ---------------------------------------------------------------------------
// Broadcast gates

// y[n,c,h,w] = x[n,c,h,w] * s[n,c]
template <typename T>
Var<T> mul_bcast_chan(Tape<T>& t, Var<T> x, Var<T> s) {
  const Tensor<T>& xv = t.val(x);
  const Tensor<T>& sv = t.val(s);
  const int64_t n = xv.dim(0), c = xv.dim(1), hw = xv.dim(2) * xv.dim(3);
  if (sv.ndim() != 2 || sv.dim(0) != n || sv.dim(1) != c) throw std::invalid_argument("mul_bcast_chan: gate shape");
  Tensor<T> y(xv.shape());
  for (int64_t i = 0; i < n * c; ++i) {
    const T g = sv[i];
    for (int64_t q = 0; q < hw; ++q) y[i * hw + q] = xv[i * hw + q] * g;
  }
  return t.make(std::move(y), {x, s}, [x, s, n, c, hw](Tape<T>& tp, int32_t self) {
    const Tensor<T>& g = tp.grad(tp.self(self));
    if (tp.requires_grad(x)) {
      Tensor<T>& gx = tp.grad(x);
      const Tensor<T>& sv = tp.val(s);
      for (int64_t i = 0; i < n * c; ++i) kernels::axpy(hw, sv[i], g.data() + i * hw, gx.data() + i * hw);
    }
    if (tp.requires_grad(s)) {
      Tensor<T>& gs = tp.grad(s);
      const Tensor<T>& xv = tp.val(x);
      for (int64_t i = 0; i < n * c; ++i) gs[i] += kernels::dot(hw, g.data() + i * hw, xv.data() + i * hw);
    }
  });
}

// y[n,c,h,w] = x[n,c,h,w] * s[n,c,1,w]  (gate broadcast over H)
template <typename T>
Var<T> mul_bcast_over_h(Tape<T>& t, Var<T> x, Var<T> s) {
  const Tensor<T>& xv = t.val(x);
  const Tensor<T>& sv = t.val(s);
  const int64_t n = xv.dim(0), c = xv.dim(1), h = xv.dim(2), w = xv.dim(3);
  if (sv.ndim() != 4 || sv.dim(0) != n || sv.dim(1) != c || sv.dim(2) != 1 || sv.dim(3) != w)
    throw std::invalid_argument("mul_bcast_over_h: gate shape");
  Tensor<T> y(xv.shape());
  for (int64_t i = 0; i < n * c; ++i)
    for (int64_t yy = 0; yy < h; ++yy)
      for (int64_t xx = 0; xx < w; ++xx) y[(i * h + yy) * w + xx] = xv[(i * h + yy) * w + xx] * sv[i * w + xx];
  return t.make(std::move(y), {x, s}, [x, s, n, c, h, w](Tape<T>& tp, int32_t self) {
    const Tensor<T>& g = tp.grad(tp.self(self));
    if (tp.requires_grad(x)) {
      Tensor<T>& gx = tp.grad(x);
      const Tensor<T>& sv = tp.val(s);
      for (int64_t i = 0; i < n * c; ++i)
        for (int64_t yy = 0; yy < h; ++yy)
          for (int64_t xx = 0; xx < w; ++xx) gx[(i * h + yy) * w + xx] += g[(i * h + yy) * w + xx] * sv[i * w + xx];
    }
    if (tp.requires_grad(s)) {
      Tensor<T>& gs = tp.grad(s);
      const Tensor<T>& xv = tp.val(x);
      for (int64_t i = 0; i < n * c; ++i)
        for (int64_t yy = 0; yy < h; ++yy)
          for (int64_t xx = 0; xx < w; ++xx) gs[i * w + xx] += g[(i * h + yy) * w + xx] * xv[(i * h + yy) * w + xx];
    }
  });
}

// y[n,c,h,w] = x[n,c,h,w] * s[n,c,h,1]  (gate broadcast over W)
template <typename T>
Var<T> mul_bcast_over_w(Tape<T>& t, Var<T> x, Var<T> s) {
  const Tensor<T>& xv = t.val(x);
  const Tensor<T>& sv = t.val(s);
  const int64_t n = xv.dim(0), c = xv.dim(1), h = xv.dim(2), w = xv.dim(3);
  if (sv.ndim() != 4 || sv.dim(0) != n || sv.dim(1) != c || sv.dim(2) != h || sv.dim(3) != 1)
    throw std::invalid_argument("mul_bcast_over_w: gate shape");
  Tensor<T> y(xv.shape());
  for (int64_t i = 0; i < n * c * h; ++i) {
    const T gv = sv[i];
    for (int64_t xx = 0; xx < w; ++xx) y[i * w + xx] = xv[i * w + xx] * gv;
  }
  return t.make(std::move(y), {x, s}, [x, s, n, c, h, w](Tape<T>& tp, int32_t self) {
    const Tensor<T>& g = tp.grad(tp.self(self));
    if (tp.requires_grad(x)) {
      Tensor<T>& gx = tp.grad(x);
      const Tensor<T>& sv = tp.val(s);
      for (int64_t i = 0; i < n * c * h; ++i) kernels::axpy(w, sv[i], g.data() + i * w, gx.data() + i * w);
    }
    if (tp.requires_grad(s)) {
      Tensor<T>& gs = tp.grad(s);
      const Tensor<T>& xv = tp.val(x);
      for (int64_t i = 0; i < n * c * h; ++i) gs[i] += kernels::dot(w, g.data() + i * w, xv.data() + i * w);
    }
  });
}

// y[n,c,h,w] = x[n,c,h,w] * s[n,1,h,w]  (gate broadcast over channels)
template <typename T>
Var<T> mul_bcast_spatial(Tape<T>& t, Var<T> x, Var<T> s) {
  const Tensor<T>& xv = t.val(x);
  const Tensor<T>& sv = t.val(s);
  const int64_t n = xv.dim(0), c = xv.dim(1), hw = xv.dim(2) * xv.dim(3);
  if (sv.ndim() != 4 || sv.dim(0) != n || sv.dim(1) != 1 || sv.dim(2) != xv.dim(2) || sv.dim(3) != xv.dim(3))
    throw std::invalid_argument("mul_bcast_spatial: gate shape");
  Tensor<T> y(xv.shape());
  for (int64_t nn = 0; nn < n; ++nn)
    for (int64_t cc = 0; cc < c; ++cc)
      for (int64_t q = 0; q < hw; ++q) y[(nn * c + cc) * hw + q] = xv[(nn * c + cc) * hw + q] * sv[nn * hw + q];
  return t.make(std::move(y), {x, s}, [x, s, n, c, hw](Tape<T>& tp, int32_t self) {
    const Tensor<T>& g = tp.grad(tp.self(self));
    if (tp.requires_grad(x)) {
      Tensor<T>& gx = tp.grad(x);
      const Tensor<T>& sv = tp.val(s);
      for (int64_t nn = 0; nn < n; ++nn)
        for (int64_t cc = 0; cc < c; ++cc)
          kernels::vmadd(hw, g.data() + (nn * c + cc) * hw, sv.data() + nn * hw, gx.data() + (nn * c + cc) * hw);
    }
    if (tp.requires_grad(s)) {
      Tensor<T>& gs = tp.grad(s);
      const Tensor<T>& xv = tp.val(x);
      for (int64_t nn = 0; nn < n; ++nn)
        for (int64_t cc = 0; cc < c; ++cc)
          kernels::vmadd(hw, g.data() + (nn * c + cc) * hw, xv.data() + (nn * c + cc) * hw, gs.data() + nn * hw);
    }
  });
}

// ---------------------------------------------------------------------------
// Dense algebra

// y[N, Dout] = x[N, Din] * w[Dout, Din]^T (+ b)
template <typename T>
Var<T> linear(Tape<T>& t, Var<T> x, Var<T> w, Var<T> b = {}) {
  const Tensor<T>& xv = t.val(x);
  const Tensor<T>& wv = t.val(w);
  const int64_t n = xv.dim(0), din = xv.dim(1), dout = wv.dim(0);
  if (wv.dim(1) != din) throw std::invalid_argument("linear: weight/input dim mismatch");
  Tensor<T> y({n, dout});
  if (b.defined()) {
    const Tensor<T>& bv = t.val(b);
    for (int64_t i = 0; i < n; ++i)
      for (int64_t j = 0; j < dout; ++j) y[i * dout + j] = bv[j];
  }
  kernels::gemm_nt(n, dout, din, xv.data(), din, wv.data(), din, y.data(), dout);
  return t.make(std::move(y), b.defined() ? std::initializer_list<Var<T>>{x, w, b} : std::initializer_list<Var<T>>{x, w},
                [x, w, b, n, din, dout](Tape<T>& tp, int32_t self) {
                  const Tensor<T>& g = tp.grad(tp.self(self));
                  if (tp.requires_grad(x))
                    kernels::gemm_nn(n, din, dout, g.data(), dout, tp.val(w).data(), din, tp.grad(x).data(), din);
                  if (tp.requires_grad(w))
                    kernels::gemm_tn(dout, din, n, g.data(), dout, tp.val(x).data(), din, tp.grad(w).data(), din);
                  if (b.defined() && tp.requires_grad(b)) {
                    Tensor<T>& gb = tp.grad(b);
                    for (int64_t i = 0; i < n; ++i)
                      for (int64_t j = 0; j < dout; ++j) gb[j] += g[i * dout + j];
                  }
                });
}

// y[M, N] = a[M, K] * b[K, N]
template <typename T>
Var<T> matmul(Tape<T>& t, Var<T> a, Var<T> b) {
  const Tensor<T>& av = t.val(a);
  const Tensor<T>& bv = t.val(b);
  const int64_t m = av.dim(0), k = av.dim(1), n = bv.dim(1);
  if (bv.dim(0) != k) throw std::invalid_argument("matmul: inner dim mismatch");
  Tensor<T> y({m, n});
  kernels::gemm_nn(m, n, k, av.data(), k, bv.data(), n, y.data(), n);
  return t.make(std::move(y), {a, b}, [a, b, m, k, n](Tape<T>& tp, int32_t self) {
    const Tensor<T>& g = tp.grad(tp.self(self));
    if (tp.requires_grad(a)) kernels::gemm_nt(m, k, n, g.data(), n, tp.val(b).data(), n, tp.grad(a).data(), k);
    if (tp.requires_grad(b)) kernels::gemm_tn(k, n, m, tp.val(a).data(), k, g.data(), n, tp.grad(b).data(), n);
  });
}

// y[M, N] = a[M, K] * b[N, K]^T
template <typename T>
Var<T> matmul_nt(Tape<T>& t, Var<T> a, Var<T> b) {
  const Tensor<T>& av = t.val(a);
  const Tensor<T>& bv = t.val(b);
  const int64_t m = av.dim(0), k = av.dim(1), n = bv.dim(0);
  if (bv.dim(1) != k) throw std::invalid_argument("matmul_nt: inner dim mismatch");
  Tensor<T> y({m, n});
  kernels::gemm_nt(m, n, k, av.data(), k, bv.data(), k, y.data(), n);
  return t.make(std::move(y), {a, b}, [a, b, m, k, n](Tape<T>& tp, int32_t self) {
    const Tensor<T>& g = tp.grad(tp.self(self));
    if (tp.requires_grad(a)) kernels::gemm_nn(m, k, n, g.data(), n, tp.val(b).data(), k, tp.grad(a).data(), k);
    if (tp.requires_grad(b)) kernels::gemm_tn(n, k, m, g.data(), n, tp.val(a).data(), k, tp.grad(b).data(), k);
  });
}

// ---------------------------------------------------------------------------
// Softmax / normalization

// Softmax along the last axis of a 2-D tensor.
template <typename T>
Var<T> softmax_rows(Tape<T>& t, Var<T> x) {
  const Tensor<T>& xv = t.val(x);
  const int64_t n = xv.dim(0), d = xv.dim(1);
  Tensor<T> y(xv.shape());
  for (int64_t i = 0; i < n; ++i) {
    const T* row = xv.data() + i * d;
    T mx = row[0];
    for (int64_t j = 1; j < d; ++j) mx = std::max(mx, row[j]);
    T sum = 0;
    for (int64_t j = 0; j < d; ++j) {
      const T e = std::exp(row[j] - mx);
      y[i * d + j] = e;
      sum += e;
    }
    for (int64_t j = 0; j < d; ++j) y[i * d + j] /= sum;
  }
  return t.make(std::move(y), {x}, [x, n, d](Tape<T>& tp, int32_t self) {
    if (!tp.requires_grad(x)) return;
    const Tensor<T>& g = tp.grad(tp.self(self));
    const Tensor<T>& y = tp.val(tp.self(self));
    Tensor<T>& gx = tp.grad(x);
    for (int64_t i = 0; i < n; ++i) {
      const T gy = kernels::dot(d, g.data() + i * d, y.data() + i * d);
      for (int64_t j = 0; j < d; ++j) gx[i * d + j] += y[i * d + j] * (g[i * d + j] - gy);
    }
  });
}

// Group norm over [N, C, H, W] with per-channel affine.
template <typename T>
Var<T> group_norm(Tape<T>& t, Var<T> x, int64_t groups, Var<T> gamma, Var<T> beta, T eps = T(1e-5)) {
  const Tensor<T>& xv = t.val(x);
  const int64_t n = xv.dim(0), c = xv.dim(1), hw = xv.dim(2) * xv.dim(3);
  if (c % groups != 0) throw std::invalid_argument("group_norm: channels not divisible by groups");
  const int64_t cg = c / groups, m = cg * hw;
  const Tensor<T>& gv = t.val(gamma);
  const Tensor<T>& bv = t.val(beta);
  if (gv.numel() != c || bv.numel() != c) throw std::invalid_argument("group_norm: affine size");
  Tensor<T> y(xv.shape());
  Tensor<T> stats({n * groups, 2});  // (mean, inv_std) cached for backward
  for (int64_t i = 0; i < n * groups; ++i) {
    const T* base = xv.data() + i * m;
    T mean = 0;
    for (int64_t j = 0; j < m; ++j) mean += base[j];
    mean /= static_cast<T>(m);
    T var = 0;
    for (int64_t j = 0; j < m; ++j) {
      const T d = base[j] - mean;
      var += d * d;
    }
    var /= static_cast<T>(m);
    const T inv = T(1) / std::sqrt(var + eps);
    stats[i * 2] = mean;
    stats[i * 2 + 1] = inv;
    const int64_t g_idx = i % groups;
    for (int64_t cc = 0; cc < cg; ++cc) {
      const T ga = gv[g_idx * cg + cc], be = bv[g_idx * cg + cc];
      for (int64_t q = 0; q < hw; ++q) {
        const int64_t idx = i * m + cc * hw + q;
        y[idx] = ga * (xv[idx] - mean) * inv + be;
      }
    }
  }
  return t.make(std::move(y), {x, gamma, beta},
                [x, gamma, beta, n, groups, cg, hw, m, stats](Tape<T>& tp, int32_t self) {
                  const Tensor<T>& g = tp.grad(tp.self(self));
                  const Tensor<T>& xv = tp.val(x);
                  const Tensor<T>& gv = tp.val(gamma);
                  const bool need_x = tp.requires_grad(x);
                  const bool need_a = tp.requires_grad(gamma);
                  const bool need_b = tp.requires_grad(beta);
                  for (int64_t i = 0; i < n * groups; ++i) {
                    const T mean = stats[i * 2], inv = stats[i * 2 + 1];
                    const int64_t g_idx = i % groups;
                    if (need_a || need_b) {
                      Tensor<T>& ga = tp.grad(gamma);
                      Tensor<T>& gb = tp.grad(beta);
                      for (int64_t cc = 0; cc < cg; ++cc) {
                        T sa = 0, sb = 0;
                        for (int64_t q = 0; q < hw; ++q) {
                          const int64_t idx = i * m + cc * hw + q;
                          sa += g[idx] * (xv[idx] - mean) * inv;
                          sb += g[idx];
                        }
                        if (need_a) ga[g_idx * cg + cc] += sa;
                        if (need_b) gb[g_idx * cg + cc] += sb;
                      }
                    }
                    if (need_x) {
                      // ghat = g * gamma; gx = inv * (ghat - mean(ghat) - xhat * mean(ghat * xhat))
                      T sum_gh = 0, sum_ghx = 0;
                      for (int64_t cc = 0; cc < cg; ++cc) {
                        const T ga = gv[g_idx * cg + cc];
                        for (int64_t q = 0; q < hw; ++q) {
                          const int64_t idx = i * m + cc * hw + q;
                          const T gh = g[idx] * ga;
                          sum_gh += gh;
                          sum_ghx += gh * (xv[idx] - mean) * inv;
                        }
                      }
                      const T mean_gh = sum_gh / static_cast<T>(m);
                      const T mean_ghx = sum_ghx / static_cast<T>(m);
                      Tensor<T>& gx = tp.grad(x);
                      for (int64_t cc = 0; cc < cg; ++cc) {
                        const T ga = gv[g_idx * cg + cc];
                        for (int64_t q = 0; q < hw; ++q) {
                          const int64_t idx = i * m + cc * hw + q;
                          const T xhat = (xv[idx] - mean) * inv;
                          gx[idx] += inv * (g[idx] * ga - mean_gh - xhat * mean_ghx);
                        }
                      }
                    }
                  }
                });
}

// Layer norm along the last axis of a 2-D tensor; gamma/beta optional.
template <typename T>
Var<T> layer_norm(Tape<T>& t, Var<T> x, Var<T> gamma = {}, Var<T> beta = {}, T eps = T(1e-5)) {
  const Tensor<T>& xv = t.val(x);
  const int64_t n = xv.dim(0), d = xv.dim(1);
  const bool affine = gamma.defined();
  Tensor<T> y(xv.shape());
  Tensor<T> stats({n, 2});
  for (int64_t i = 0; i < n; ++i) {
    const T* row = xv.data() + i * d;
    T mean = 0;
    for (int64_t j = 0; j < d; ++j) mean += row[j];
    mean /= static_cast<T>(d);
    T var = 0;
    for (int64_t j = 0; j < d; ++j) {
      const T dd = row[j] - mean;
      var += dd * dd;
    }
    var /= static_cast<T>(d);
    const T inv = T(1) / std::sqrt(var + eps);
    stats[i * 2] = mean;
    stats[i * 2 + 1] = inv;
    for (int64_t j = 0; j < d; ++j) {
      T v = (row[j] - mean) * inv;
      if (affine) v = v * t.val(gamma)[j] + t.val(beta)[j];
      y[i * d + j] = v;
    }
  }
  std::vector<Var<T>> inputs = affine ? std::vector<Var<T>>{x, gamma, beta} : std::vector<Var<T>>{x};
  return t.make(std::move(y), inputs, [x, gamma, beta, n, d, affine, stats](Tape<T>& tp, int32_t self) {
    const Tensor<T>& g = tp.grad(tp.self(self));
    const Tensor<T>& xv = tp.val(x);
    for (int64_t i = 0; i < n; ++i) {
      const T mean = stats[i * 2], inv = stats[i * 2 + 1];
      if (affine && (tp.requires_grad(gamma) || tp.requires_grad(beta))) {
        Tensor<T>& ga = tp.grad(gamma);
        Tensor<T>& gb = tp.grad(beta);
        for (int64_t j = 0; j < d; ++j) {
          ga[j] += g[i * d + j] * (xv[i * d + j] - mean) * inv;
          gb[j] += g[i * d + j];
        }
      }
      if (tp.requires_grad(x)) {
        T sum_gh = 0, sum_ghx = 0;
        for (int64_t j = 0; j < d; ++j) {
          const T gh = affine ? g[i * d + j] * tp.val(gamma)[j] : g[i * d + j];
          sum_gh += gh;
          sum_ghx += gh * (xv[i * d + j] - mean) * inv;
        }
        const T mean_gh = sum_gh / static_cast<T>(d);
        const T mean_ghx = sum_ghx / static_cast<T>(d);
        Tensor<T>& gx = tp.grad(x);
        for (int64_t j = 0; j < d; ++j) {
          const T gh = affine ? g[i * d + j] * tp.val(gamma)[j] : g[i * d + j];
          const T xhat = (xv[i * d + j] - mean) * inv;
          gx[i * d + j] += inv * (gh - mean_gh - xhat * mean_ghx);
        }
      }
    }
  });
}

// ---------------------------------------------------------------------------
// Pooling

// [N, C, H, W] -> [N, C] spatial mean.
template <typename T>
Var<T> global_avg_pool(Tape<T>& t, Var<T> x) {
  const Tensor<T>& xv = t.val(x);
  const int64_t n = xv.dim(0), c = xv.dim(1), hw = xv.dim(2) * xv.dim(3);
  Tensor<T> y({n, c});
  for (int64_t i = 0; i < n * c; ++i) {
    T acc = 0;
    for (int64_t q = 0; q < hw; ++q) acc += xv[i * hw + q];
    y[i] = acc / static_cast<T>(hw);
  }
  return t.make(std::move(y), {x}, [x, n, c, hw](Tape<T>& tp, int32_t self) {
    if (!tp.requires_grad(x)) return;
    const Tensor<T>& g = tp.grad(tp.self(self));
    Tensor<T>& gx = tp.grad(x);
    for (int64_t i = 0; i < n * c; ++i) {
      const T gv = g[i] / static_cast<T>(hw);
      for (int64_t q = 0; q < hw; ++q) gx[i * hw + q] += gv;
    }
  });
}

// Mean over H: [N, C, H, W] -> [N, C, 1, W]
template <typename T>
Var<T> pool_mean_h(Tape<T>& t, Var<T> x) {
  const Tensor<T>& xv = t.val(x);
  const int64_t n = xv.dim(0), c = xv.dim(1), h = xv.dim(2), w = xv.dim(3);
  Tensor<T> y({n, c, 1, w});
  for (int64_t i = 0; i < n * c; ++i)
    for (int64_t xx = 0; xx < w; ++xx) {
      T acc = 0;
      for (int64_t yy = 0; yy < h; ++yy) acc += xv[(i * h + yy) * w + xx];
      y[i * w + xx] = acc / static_cast<T>(h);
    }
  return t.make(std::move(y), {x}, [x, n, c, h, w](Tape<T>& tp, int32_t self) {
    if (!tp.requires_grad(x)) return;
    const Tensor<T>& g = tp.grad(tp.self(self));
    Tensor<T>& gx = tp.grad(x);
    for (int64_t i = 0; i < n * c; ++i)
      for (int64_t yy = 0; yy < h; ++yy)
        for (int64_t xx = 0; xx < w; ++xx) gx[(i * h + yy) * w + xx] += g[i * w + xx] / static_cast<T>(h);
  });
}

// Mean over W: [N, C, H, W] -> [N, C, H, 1]
template <typename T>
Var<T> pool_mean_w(Tape<T>& t, Var<T> x) {
  const Tensor<T>& xv = t.val(x);
  const int64_t n = xv.dim(0), c = xv.dim(1), h = xv.dim(2), w = xv.dim(3);
  Tensor<T> y({n, c, h, 1});
  for (int64_t i = 0; i < n * c * h; ++i) {
    T acc = 0;
    for (int64_t xx = 0; xx < w; ++xx) acc += xv[i * w + xx];
    y[i] = acc / static_cast<T>(w);
  }
  return t.make(std::move(y), {x}, [x, n, c, h, w](Tape<T>& tp, int32_t self) {
    if (!tp.requires_grad(x)) return;
    const Tensor<T>& g = tp.grad(tp.self(self));
    Tensor<T>& gx = tp.grad(x);
    for (int64_t i = 0; i < n * c * h; ++i)
      for (int64_t xx = 0; xx < w; ++xx) gx[i * w + xx] += g[i] / static_cast<T>(w);
  });
}

// 2x2 max pool, stride 2, floor semantics.
template <typename T>
Var<T> maxpool2(Tape<T>& t, Var<T> x) {
  const Tensor<T>& xv = t.val(x);
  const int64_t n = xv.dim(0), c = xv.dim(1), h = xv.dim(2), w = xv.dim(3);
  if (h < 2 || w < 2) throw std::invalid_argument("maxpool2: spatial dims < 2");
  const int64_t oh = h / 2, ow = w / 2;
  Tensor<T> y({n, c, oh, ow});
  std::vector<int64_t> arg(static_cast<size_t>(n * c * oh * ow));
  for (int64_t i = 0; i < n * c; ++i)
    for (int64_t oy = 0; oy < oh; ++oy)
      for (int64_t ox = 0; ox < ow; ++ox) {
        int64_t best = (i * h + oy * 2) * w + ox * 2;
        T bv = xv[best];
        for (int64_t dy = 0; dy < 2; ++dy)
          for (int64_t dx = 0; dx < 2; ++dx) {
            const int64_t idx = (i * h + oy * 2 + dy) * w + ox * 2 + dx;
            if (xv[idx] > bv) {
              bv = xv[idx];
              best = idx;
            }
          }
        y[(i * oh + oy) * ow + ox] = bv;
        arg[static_cast<size_t>((i * oh + oy) * ow + ox)] = best;
      }
  return t.make(std::move(y), {x}, [x, arg = std::move(arg)](Tape<T>& tp, int32_t self) {
    if (!tp.requires_grad(x)) return;
    const Tensor<T>& g = tp.grad(tp.self(self));
    Tensor<T>& gx = tp.grad(x);
    for (int64_t i = 0; i < g.numel(); ++i) gx[arg[static_cast<size_t>(i)]] += g[i];
  });
}

// ---------------------------------------------------------------------------
// Shape plumbing

template <typename T>
Var<T> reshape(Tape<T>& t, Var<T> x, std::vector<int64_t> shape) {
  Tensor<T> y = t.val(x).clone().reshaped(std::move(shape));
  return t.make(std::move(y), {x}, [x](Tape<T>& tp, int32_t self) {
    if (!tp.requires_grad(x)) return;
    const Tensor<T>& g = tp.grad(tp.self(self));
    kernels::axpy(g.numel(), T(1), g.data(), tp.grad(x).data());
  });
}

// Swap H and W axes of [N, C, H, W].
template <typename T>
Var<T> transpose_hw(Tape<T>& t, Var<T> x) {
  const Tensor<T>& xv = t.val(x);
  const int64_t n = xv.dim(0), c = xv.dim(1), h = xv.dim(2), w = xv.dim(3);
  Tensor<T> y({n, c, w, h});
  for (int64_t i = 0; i < n * c; ++i)
    for (int64_t yy = 0; yy < h; ++yy)
      for (int64_t xx = 0; xx < w; ++xx) y[(i * w + xx) * h + yy] = xv[(i * h + yy) * w + xx];
  return t.make(std::move(y), {x}, [x, n, c, h, w](Tape<T>& tp, int32_t self) {
    if (!tp.requires_grad(x)) return;
    const Tensor<T>& g = tp.grad(tp.self(self));
    Tensor<T>& gx = tp.grad(x);
    for (int64_t i = 0; i < n * c; ++i)
      for (int64_t yy = 0; yy < h; ++yy)
        for (int64_t xx = 0; xx < w; ++xx) gx[(i * h + yy) * w + xx] += g[(i * w + xx) * h + yy];
  });
}

// Concatenate two tensors along their last axis (all other dims equal).
template <typename T>
Var<T> concat_last(Tape<T>& t, Var<T> a, Var<T> b) {
  const Tensor<T>& av = t.val(a);
  const Tensor<T>& bv = t.val(b);
  if (av.ndim() != bv.ndim()) throw std::invalid_argument("concat_last: rank mismatch");
  std::vector<int64_t> shape = av.shape();
  const int last = av.ndim() - 1;
  for (int i = 0; i < last; ++i)
    if (av.dim(i) != bv.dim(i)) throw std::invalid_argument("concat_last: leading dim mismatch");
  const int64_t wa = av.dim(last), wb = bv.dim(last);
  shape[static_cast<size_t>(last)] = wa + wb;
  const int64_t rows = av.numel() / wa;
  Tensor<T> y(shape);
  for (int64_t r = 0; r < rows; ++r) {
    for (int64_t j = 0; j < wa; ++j) y[r * (wa + wb) + j] = av[r * wa + j];
    for (int64_t j = 0; j < wb; ++j) y[r * (wa + wb) + wa + j] = bv[r * wb + j];
  }
  return t.make(std::move(y), {a, b}, [a, b, rows, wa, wb](Tape<T>& tp, int32_t self) {
    const Tensor<T>& g = tp.grad(tp.self(self));
    if (tp.requires_grad(a)) {
      Tensor<T>& ga = tp.grad(a);
      for (int64_t r = 0; r < rows; ++r)
        for (int64_t j = 0; j < wa; ++j) ga[r * wa + j] += g[r * (wa + wb) + j];
    }
    if (tp.requires_grad(b)) {
      Tensor<T>& gb = tp.grad(b);
      for (int64_t r = 0; r < rows; ++r)
        for (int64_t j = 0; j < wb; ++j) gb[r * wb + j] += g[r * (wa + wb) + wa + j];
    }
  });
}

// Slice along the channel axis of [N, C, H, W].
template <typename T>
Var<T> slice_channels(Tape<T>& t, Var<T> x, int64_t start, int64_t len) {
  const Tensor<T>& xv = t.val(x);
  const int64_t n = xv.dim(0), c = xv.dim(1), hw = xv.dim(2) * xv.dim(3);
  if (start < 0 || len < 1 || start + len > c) throw std::invalid_argument("slice_channels: range");
  Tensor<T> y({n, len, xv.dim(2), xv.dim(3)});
  for (int64_t nn = 0; nn < n; ++nn)
    for (int64_t cc = 0; cc < len; ++cc)
      for (int64_t q = 0; q < hw; ++q) y[(nn * len + cc) * hw + q] = xv[(nn * c + start + cc) * hw + q];
  return t.make(std::move(y), {x}, [x, n, c, hw, start, len](Tape<T>& tp, int32_t self) {
    if (!tp.requires_grad(x)) return;
    const Tensor<T>& g = tp.grad(tp.self(self));
    Tensor<T>& gx = tp.grad(x);
    for (int64_t nn = 0; nn < n; ++nn)
      for (int64_t cc = 0; cc < len; ++cc)
        kernels::axpy(hw, T(1), g.data() + (nn * len + cc) * hw, gx.data() + (nn * c + start + cc) * hw);
  });
}

// Slice along the last axis: y[..., j] = x[..., start + j], j in [0, len).
template <typename T>
Var<T> slice_last(Tape<T>& t, Var<T> x, int64_t start, int64_t len) {
  const Tensor<T>& xv = t.val(x);
  const int last = xv.ndim() - 1;
  const int64_t w = xv.dim(last);
  if (start < 0 || len < 1 || start + len > w) throw std::invalid_argument("slice_last: range");
  std::vector<int64_t> shape = xv.shape();
  shape[static_cast<size_t>(last)] = len;
  const int64_t rows = xv.numel() / w;
  Tensor<T> y(shape);
  for (int64_t r = 0; r < rows; ++r)
    for (int64_t j = 0; j < len; ++j) y[r * len + j] = xv[r * w + start + j];
  return t.make(std::move(y), {x}, [x, rows, w, start, len](Tape<T>& tp, int32_t self) {
    if (!tp.requires_grad(x)) return;
    const Tensor<T>& g = tp.grad(tp.self(self));
    Tensor<T>& gx = tp.grad(x);
    for (int64_t r = 0; r < rows; ++r)
      for (int64_t j = 0; j < len; ++j) gx[r * w + start + j] += g[r * len + j];
  });
}

// Stack 2-D tensors with equal widths along rows.
template <typename T>
Var<T> concat_rows(Tape<T>& t, const std::vector<Var<T>>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_rows: empty");
  const int64_t d = t.val(parts[0]).dim(1);
  int64_t rows = 0;
  for (Var<T> p : parts) {
    if (t.val(p).ndim() != 2 || t.val(p).dim(1) != d) throw std::invalid_argument("concat_rows: width mismatch");
    rows += t.val(p).dim(0);
  }
  Tensor<T> y({rows, d});
  int64_t at = 0;
  std::vector<int64_t> offsets;
  for (Var<T> p : parts) {
    const Tensor<T>& pv = t.val(p);
    offsets.push_back(at);
    for (int64_t i = 0; i < pv.numel(); ++i) y[at * d + i] = pv[i];
    at += pv.dim(0);
  }
  auto parts_copy = parts;
  auto offs = offsets;
  return t.make(std::move(y), parts, [parts_copy, offs, d](Tape<T>& tp, int32_t self) {
    const Tensor<T>& g = tp.grad(tp.self(self));
    for (size_t k = 0; k < parts_copy.size(); ++k) {
      if (!tp.requires_grad(parts_copy[k])) continue;
      Tensor<T>& gp = tp.grad(parts_copy[k]);
      const int64_t r0 = offs[k];
      for (int64_t i = 0; i < gp.numel(); ++i) gp[i] += g[r0 * d + i];
    }
  });
}

// Mean over all elements -> scalar [1].
template <typename T>
Var<T> mean_all(Tape<T>& t, Var<T> x) {
  const Tensor<T>& xv = t.val(x);
  Tensor<T> y({1});
  T acc = 0;
  for (int64_t i = 0; i < xv.numel(); ++i) acc += xv[i];
  y[0] = acc / static_cast<T>(xv.numel());
  return t.make(std::move(y), {x}, [x](Tape<T>& tp, int32_t self) {
    if (!tp.requires_grad(x)) return;
    const T g = tp.grad(tp.self(self))[0];
    Tensor<T>& gx = tp.grad(x);
    const T gv = g / static_cast<T>(gx.numel());
    for (int64_t i = 0; i < gx.numel(); ++i) gx[i] += gv;
  });
}

// ---------------------------------------------------------------------------
// Convolution

// x [N, Cin, H, W], w [Cout, Cin/groups, kh, kw], optional b [Cout].
template <typename T>
Var<T> conv2d(Tape<T>& t, Var<T> x, Var<T> w, Var<T> b, int64_t stride, int64_t pad, int64_t groups = 1) {
  const Tensor<T>& xv = t.val(x);
  const Tensor<T>& wv = t.val(w);
  const int64_t n = xv.dim(0), cin = xv.dim(1), h = xv.dim(2), ww = xv.dim(3);
  const int64_t cout = wv.dim(0), cg = wv.dim(1), kh = wv.dim(2), kw = wv.dim(3);
  if (cin % groups != 0 || cout % groups != 0 || cg != cin / groups)
    throw std::invalid_argument("conv2d: channel/group mismatch");
  const int64_t oh = detail::conv_out(h, kh, stride, pad), ow = detail::conv_out(ww, kw, stride, pad);
  if (oh < 1 || ow < 1) throw std::invalid_argument("conv2d: empty output");
  const int64_t coutg = cout / groups, q = oh * ow, ck = cg * kh * kw;

  auto im2col = [=](const Tensor<T>& src, int64_t nn, int64_t g, Tensor<T>& col) {
    for (int64_t c = 0; c < cg; ++c)
      for (int64_t ky = 0; ky < kh; ++ky)
        for (int64_t kx = 0; kx < kw; ++kx) {
          T* dst = col.data() + ((c * kh + ky) * kw + kx) * q;
          const T* plane = src.data() + ((nn * cin + g * cg + c) * h) * ww;
          for (int64_t oy = 0; oy < oh; ++oy) {
            const int64_t iy = oy * stride - pad + ky;
            if (iy < 0 || iy >= h) {
              for (int64_t ox = 0; ox < ow; ++ox) dst[oy * ow + ox] = 0;
              continue;
            }
            for (int64_t ox = 0; ox < ow; ++ox) {
              const int64_t ix = ox * stride - pad + kx;
              dst[oy * ow + ox] = (ix < 0 || ix >= ww) ? T(0) : plane[iy * ww + ix];
            }
          }
        }
  };

  Tensor<T> y({n, cout, oh, ow});
  std::vector<Tensor<T>> cols;
  cols.reserve(static_cast<size_t>(n * groups));
  for (int64_t nn = 0; nn < n; ++nn) {
    for (int64_t g = 0; g < groups; ++g) {
      Tensor<T> col({ck, q});
      im2col(xv, nn, g, col);
      T* ybase = y.data() + ((nn * cout + g * coutg) * q);
      if (b.defined()) {
        const Tensor<T>& bv = t.val(b);
        for (int64_t c = 0; c < coutg; ++c)
          for (int64_t p = 0; p < q; ++p) ybase[c * q + p] = bv[g * coutg + c];
      }
      kernels::gemm_nn(coutg, q, ck, wv.data() + g * coutg * ck, ck, col.data(), q, ybase, q);
      cols.push_back(std::move(col));
    }
  }

  auto bw = [x, w, b, n, cin, h, ww, cout, cg, kh, kw, stride, pad, groups, oh, ow, coutg, q, ck,
             cols = std::move(cols)](Tape<T>& tp, int32_t self) {
    const Tensor<T>& g = tp.grad(tp.self(self));
    const Tensor<T>& wv = tp.val(w);
    const bool need_x = tp.requires_grad(x);
    const bool need_w = tp.requires_grad(w);
    const bool need_b = b.defined() && tp.requires_grad(b);
    Tensor<T> gcol = need_x ? Tensor<T>({ck, q}) : Tensor<T>();
    for (int64_t nn = 0; nn < n; ++nn) {
      for (int64_t gi = 0; gi < groups; ++gi) {
        const T* gy = g.data() + ((nn * cout + gi * coutg) * q);
        if (need_w) {
          kernels::gemm_nt(coutg, ck, q, gy, q, cols[static_cast<size_t>(nn * groups + gi)].data(), q,
                           tp.grad(w).data() + gi * coutg * ck, ck);
        }
        if (need_b) {
          Tensor<T>& gb = tp.grad(b);
          for (int64_t c = 0; c < coutg; ++c)
            for (int64_t p = 0; p < q; ++p) gb[gi * coutg + c] += gy[c * q + p];
        }
        if (need_x) {
          gcol.fill(T(0));
          kernels::gemm_tn(ck, q, coutg, wv.data() + gi * coutg * ck, ck, gy, q, gcol.data(), q);
          Tensor<T>& gx = tp.grad(x);
          for (int64_t c = 0; c < cg; ++c)
            for (int64_t ky = 0; ky < kh; ++ky)
              for (int64_t kx = 0; kx < kw; ++kx) {
                const T* src = gcol.data() + ((c * kh + ky) * kw + kx) * q;
                T* plane = gx.data() + ((nn * cin + gi * cg + c) * h) * ww;
                for (int64_t oy = 0; oy < oh; ++oy) {
                  const int64_t iy = oy * stride - pad + ky;
                  if (iy < 0 || iy >= h) continue;
                  for (int64_t ox = 0; ox < ow; ++ox) {
                    const int64_t ix = ox * stride - pad + kx;
                    if (ix >= 0 && ix < ww) plane[iy * ww + ix] += src[oy * ow + ox];
                  }
                }
              }
        }
      }
    }
  };
  return t.make(std::move(y), b.defined() ? std::initializer_list<Var<T>>{x, w, b} : std::initializer_list<Var<T>>{x, w},
                std::move(bw));
}

// ---------------------------------------------------------------------------
// Norm-in-norm loss

// z-normalizes both score vectors (population std + eps) and returns the
// mean |z - zhat|^gamma / omega as a scalar node. `s` (the MOS side) is a
// constant; gradients flow to s_hat only.
template <typename T>
Var<T> norm_in_norm_loss(Tape<T>& t, Var<T> s_hat, const Tensor<T>& s, T gamma = T(1), T omega = T(2),
                         T eps = T(1e-8)) {
  const Tensor<T>& pv = t.val(s_hat);
  const int64_t n = pv.numel();
  if (s.numel() != n) throw std::invalid_argument("norm_in_norm_loss: length mismatch");
  if (n < 2) throw std::invalid_argument("norm_in_norm_loss: need at least 2 scores");
  if (gamma != T(1) && gamma != T(2)) throw std::invalid_argument("norm_in_norm_loss: gamma must be 1 or 2");

  auto zstats = [n, eps](const T* v, T& mean, T& sd) {
    mean = 0;
    for (int64_t i = 0; i < n; ++i) mean += v[i];
    mean /= static_cast<T>(n);
    T var = 0;
    for (int64_t i = 0; i < n; ++i) {
      const T d = v[i] - mean;
      var += d * d;
    }
    sd = std::sqrt(var / static_cast<T>(n));
    (void)eps;
  };
  T ms, sds, mp, sdp;
  zstats(s.data(), ms, sds);
  zstats(pv.data(), mp, sdp);
  Tensor<T> y({1});
  T acc = 0;
  for (int64_t i = 0; i < n; ++i) {
    const T z = (s[i] - ms) / (sds + eps);
    const T zh = (pv[i] - mp) / (sdp + eps);
    const T d = z - zh;
    acc += gamma == T(1) ? std::abs(d) : d * d;
  }
  y[0] = acc / (omega * static_cast<T>(n));

  Tensor<T> s_copy = s.clone();
  return t.make(std::move(y), {s_hat},
                [s_hat, s_copy, gamma, omega, eps, ms, sds, mp, sdp, n](Tape<T>& tp, int32_t self) {
                  if (!tp.requires_grad(s_hat)) return;
                  const T gout = tp.grad(tp.self(self))[0];
                  const Tensor<T>& pv = tp.val(s_hat);
                  Tensor<T>& gp = tp.grad(s_hat);
                  // r_i = d(loss)/d(zhat_i)
                  std::vector<T> r(static_cast<size_t>(n));
                  for (int64_t i = 0; i < n; ++i) {
                    const T z = (s_copy[i] - ms) / (sds + eps);
                    const T zh = (pv[i] - mp) / (sdp + eps);
                    const T d = z - zh;
                    T dl;
                    if (gamma == T(1)) {
                      dl = d > T(0) ? T(-1) : (d < T(0) ? T(1) : T(0));
                    } else {
                      dl = T(-2) * d;
                    }
                    r[static_cast<size_t>(i)] = dl / (omega * static_cast<T>(n));
                  }
                  // zhat_i = (p_i - mu) / (sd + eps); propagate through mu and sd.
                  T sum_r = 0, sum_rz = 0;
                  for (int64_t i = 0; i < n; ++i) {
                    sum_r += r[static_cast<size_t>(i)];
                    sum_rz += r[static_cast<size_t>(i)] * (pv[i] - mp);
                  }
                  const T inv = T(1) / (sdp + eps);
                  for (int64_t j = 0; j < n; ++j) {
                    // dzhat_i/dp_j = inv * (delta_ij - 1/n) - (p_i - mu) * inv^2 * dsd/dp_j
                    // dsd/dp_j = (p_j - mu) / (n * sd)  (guarded when sd ~ 0)
                    T dsd_dpj = T(0);
                    if (sdp > T(0)) dsd_dpj = (pv[j] - mp) / (static_cast<T>(n) * sdp);
                    const T term = r[static_cast<size_t>(j)] * inv - sum_r * inv / static_cast<T>(n) -
                                   sum_rz * inv * inv * dsd_dpj;
                    gp[j] += gout * term;
                  }
                });
}

}  // namespace pqa::nn
