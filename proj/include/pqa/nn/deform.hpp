#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "pqa/kernels/kernels.hpp"
#include "pqa/nn/tape.hpp"

// Deformable convolution (DCNv3 style): learned per-location offsets move the
// kernel's sampling points, bilinear interpolation reads fractional positions
// (zero outside the map), and a softmax over the k^2 kernel points normalizes
// the modulation scalars. The grouped aggregation is expressed as a GEMM over
// a gathered sample matrix so the SIMD kernels carry the load.

namespace pqa::nn {

// Softmax over kernel points. logits [N, G*K2, H, W] -> same shape, where the
// channel axis is laid out g*K2 + kk; normalization runs over kk for each
// (n, g, spatial position).
template <typename T>
Var<T> deform_softmax(Tape<T>& t, Var<T> logits, int64_t groups) {
  const Tensor<T>& lv = t.val(logits);
  const int64_t n = lv.dim(0), ch = lv.dim(1), q = lv.dim(2) * lv.dim(3);
  if (ch % groups != 0) throw std::invalid_argument("deform_softmax: channels not divisible by groups");
  const int64_t k2 = ch / groups;
  Tensor<T> y(lv.shape());
  for (int64_t ng = 0; ng < n * groups; ++ng) {
    const T* base = lv.data() + ng * k2 * q;
    T* out = y.data() + ng * k2 * q;
    for (int64_t p = 0; p < q; ++p) {
      T mx = base[p];
      for (int64_t kk = 1; kk < k2; ++kk) mx = std::max(mx, base[kk * q + p]);
      T sum = 0;
      for (int64_t kk = 0; kk < k2; ++kk) {
        const T e = std::exp(base[kk * q + p] - mx);
        out[kk * q + p] = e;
        sum += e;
      }
      for (int64_t kk = 0; kk < k2; ++kk) out[kk * q + p] /= sum;
    }
  }
  return t.make(std::move(y), {logits}, [logits, n, groups, k2, q](Tape<T>& tp, int32_t self) {
    if (!tp.requires_grad(logits)) return;
    const Tensor<T>& g = tp.grad(tp.self(self));
    const Tensor<T>& y = tp.val(tp.self(self));
    Tensor<T>& gl = tp.grad(logits);
    for (int64_t ng = 0; ng < n * groups; ++ng) {
      const int64_t off = ng * k2 * q;
      for (int64_t p = 0; p < q; ++p) {
        T dotv = 0;
        for (int64_t kk = 0; kk < k2; ++kk) dotv += g[off + kk * q + p] * y[off + kk * q + p];
        for (int64_t kk = 0; kk < k2; ++kk)
          gl[off + kk * q + p] += y[off + kk * q + p] * (g[off + kk * q + p] - dotv);
      }
    }
  });
}

// Grouped deformable aggregation.
//   x       [N, Cin, H, W]
//   w       [Cmid, Cin/G, k, k]       (Cmid divisible by G)
//   offsets [N, 2*G*k^2, OH, OW]      channel 2*(g*k^2+kk) is dy, +1 is dx
//   m       [N, G*k^2, OH, OW]        softmax-normalized modulation
// Output [N, Cmid, OH, OW]; the caller appends the 1x1 projection.
template <typename T>
Var<T> deform_core(Tape<T>& t, Var<T> x, Var<T> w, Var<T> offsets, Var<T> m, int64_t stride, int64_t pad,
                   int64_t groups) {
  const Tensor<T>& xv = t.val(x);
  const Tensor<T>& wv = t.val(w);
  const Tensor<T>& ov = t.val(offsets);
  const Tensor<T>& mv = t.val(m);
  const int64_t n = xv.dim(0), cin = xv.dim(1), h = xv.dim(2), ww = xv.dim(3);
  const int64_t cmid = wv.dim(0), cg = wv.dim(1), kh = wv.dim(2), kw = wv.dim(3);
  if (cin % groups != 0 || cmid % groups != 0 || cg != cin / groups)
    throw std::invalid_argument("deform_core: channel/group mismatch");
  if (kh != kw || kh % 2 == 0) throw std::invalid_argument("deform_core: kernel must be odd square");
  const int64_t k2 = kh * kw;
  const int64_t oh = (h + 2 * pad - kh) / stride + 1, ow = (ww + 2 * pad - kw) / stride + 1;
  if (oh < 1 || ow < 1) throw std::invalid_argument("deform_core: empty output");
  const int64_t q = oh * ow, coutg = cmid / groups, rows = k2 * cg;
  if (ov.dim(0) != n || ov.dim(1) != 2 * groups * k2 || ov.dim(2) != oh || ov.dim(3) != ow)
    throw std::invalid_argument("deform_core: offset shape");
  if (mv.dim(0) != n || mv.dim(1) != groups * k2 || mv.dim(2) != oh || mv.dim(3) != ow)
    throw std::invalid_argument("deform_core: modulation shape");
  for (int64_t i = 0; i < ov.numel(); ++i)
    if (!std::isfinite(static_cast<double>(ov[i]))) throw std::runtime_error("deform_core: non-finite offset");

  // Pack grouped weights as [Coutg, k2*Cg] per group, column index kk*Cg + c.
  auto pack_w = [coutg, k2, cg, rows](const Tensor<T>& src, int64_t g, Tensor<T>& dst) {
    for (int64_t co = 0; co < coutg; ++co)
      for (int64_t kk = 0; kk < k2; ++kk)
        for (int64_t c = 0; c < cg; ++c)
          dst[co * rows + kk * cg + c] = src[((g * coutg + co) * cg + c) * k2 + kk];
  };

  // Gather the raw (unmodulated) sample matrix for one (n, g).
  auto gather = [&](int64_t nn, int64_t g, Tensor<T>& sraw) {
    const int64_t plane = h * ww;
    for (int64_t kk = 0; kk < k2; ++kk) {
      const int64_t ky = kk / kw, kx = kk % kw;
      const T* offy = ov.data() + (nn * 2 * groups * k2 + 2 * (g * k2 + kk)) * q;
      const T* offx = offy + q;
      for (int64_t p = 0; p < q; ++p) {
        const int64_t oy = p / ow, ox = p % ow;
        const T py = static_cast<T>(oy * stride - pad + ky) + offy[p];
        const T px = static_cast<T>(ox * stride - pad + kx) + offx[p];
        if (!(py > T(-1) && py < T(h) && px > T(-1) && px < T(ww))) {
          for (int64_t c = 0; c < cg; ++c) sraw[(kk * cg + c) * q + p] = T(0);
          continue;
        }
        const int64_t y0 = static_cast<int64_t>(std::floor(py));
        const int64_t x0 = static_cast<int64_t>(std::floor(px));
        const T fy = py - static_cast<T>(y0), fx = px - static_cast<T>(x0);
        const bool y0i = y0 >= 0, y1i = y0 + 1 < h, x0i = x0 >= 0, x1i = x0 + 1 < ww;
        const T* src = xv.data() + (nn * cin + g * cg) * plane;
        for (int64_t c = 0; c < cg; ++c, src += plane) {
          const T v00 = (y0i && x0i) ? src[y0 * ww + x0] : T(0);
          const T v01 = (y0i && x1i) ? src[y0 * ww + x0 + 1] : T(0);
          const T v10 = (y1i && x0i) ? src[(y0 + 1) * ww + x0] : T(0);
          const T v11 = (y1i && x1i) ? src[(y0 + 1) * ww + x0 + 1] : T(0);
          sraw[(kk * cg + c) * q + p] =
              (T(1) - fy) * ((T(1) - fx) * v00 + fx * v01) + fy * ((T(1) - fx) * v10 + fx * v11);
        }
      }
    }
  };

  Tensor<T> y({n, cmid, oh, ow});
  std::vector<Tensor<T>> cache;
  cache.reserve(static_cast<size_t>(n * groups));
  Tensor<T> wpack({coutg, rows});
  Tensor<T> smod({rows, q});
  for (int64_t nn = 0; nn < n; ++nn) {
    for (int64_t g = 0; g < groups; ++g) {
      Tensor<T> sraw({rows, q});
      gather(nn, g, sraw);
      for (int64_t kk = 0; kk < k2; ++kk) {
        const T* mrow = mv.data() + (nn * groups * k2 + g * k2 + kk) * q;
        for (int64_t c = 0; c < cg; ++c) {
          const T* sr = sraw.data() + (kk * cg + c) * q;
          T* sm = smod.data() + (kk * cg + c) * q;
          for (int64_t p = 0; p < q; ++p) sm[p] = sr[p] * mrow[p];
        }
      }
      pack_w(wv, g, wpack);
      kernels::gemm_nn(coutg, q, rows, wpack.data(), rows, smod.data(), q,
                       y.data() + (nn * cmid + g * coutg) * q, q);
      cache.push_back(std::move(sraw));
    }
  }

  auto bw = [x, w, offsets, m, n, cin, h, ww, cmid, cg, kh, kw, k2, stride, pad, groups, oh, ow, q, coutg, rows,
             pack_w, cache = std::move(cache)](Tape<T>& tp, int32_t self) {
    const Tensor<T>& g = tp.grad(tp.self(self));
    const Tensor<T>& xv = tp.val(x);
    const Tensor<T>& wv = tp.val(w);
    const Tensor<T>& ov = tp.val(offsets);
    const Tensor<T>& mv = tp.val(m);
    const bool need_x = tp.requires_grad(x);
    const bool need_w = tp.requires_grad(w);
    const bool need_o = tp.requires_grad(offsets);
    const bool need_m = tp.requires_grad(m);
    const int64_t plane = h * ww;
    Tensor<T> wpack({coutg, rows});
    Tensor<T> smod({rows, q});
    Tensor<T> gs({rows, q});
    std::vector<Tensor<T>> gwpack;
    if (need_w) {
      gwpack.reserve(static_cast<size_t>(groups));
      for (int64_t gg = 0; gg < groups; ++gg) {
        gwpack.emplace_back(std::vector<int64_t>{coutg, rows});
        gwpack.back().fill(T(0));
      }
    }
    for (int64_t nn = 0; nn < n; ++nn) {
      for (int64_t gi = 0; gi < groups; ++gi) {
        const Tensor<T>& sraw = cache[static_cast<size_t>(nn * groups + gi)];
        const T* gy = g.data() + (nn * cmid + gi * coutg) * q;
        if (need_w) {
          for (int64_t kk = 0; kk < k2; ++kk) {
            const T* mrow = mv.data() + (nn * groups * k2 + gi * k2 + kk) * q;
            for (int64_t c = 0; c < cg; ++c) {
              const T* sr = sraw.data() + (kk * cg + c) * q;
              T* sm = smod.data() + (kk * cg + c) * q;
              for (int64_t p = 0; p < q; ++p) sm[p] = sr[p] * mrow[p];
            }
          }
          kernels::gemm_nt(coutg, rows, q, gy, q, smod.data(), q, gwpack[static_cast<size_t>(gi)].data(), rows);
        }
        if (!(need_x || need_o || need_m)) continue;
        gs.fill(T(0));
        pack_w(wv, gi, wpack);
        kernels::gemm_tn(rows, q, coutg, wpack.data(), rows, gy, q, gs.data(), q);
        for (int64_t kk = 0; kk < k2; ++kk) {
          const int64_t ky = kk / kw, kx = kk % kw;
          const T* offy = ov.data() + (nn * 2 * groups * k2 + 2 * (gi * k2 + kk)) * q;
          const T* offx = offy + q;
          const T* mrow = mv.data() + (nn * groups * k2 + gi * k2 + kk) * q;
          T* gmrow = need_m ? tp.grad(m).data() + (nn * groups * k2 + gi * k2 + kk) * q : nullptr;
          T* goy = need_o ? tp.grad(offsets).data() + (nn * 2 * groups * k2 + 2 * (gi * k2 + kk)) * q : nullptr;
          T* gox = need_o ? goy + q : nullptr;
          for (int64_t p = 0; p < q; ++p) {
            const int64_t oy = p / ow, ox = p % ow;
            const T py = static_cast<T>(oy * stride - pad + ky) + offy[p];
            const T px = static_cast<T>(ox * stride - pad + kx) + offx[p];
            if (need_m) {
              T acc = 0;
              for (int64_t c = 0; c < cg; ++c) acc += gs[(kk * cg + c) * q + p] * sraw[(kk * cg + c) * q + p];
              gmrow[p] += acc;
            }
            if (!(need_x || need_o)) continue;
            if (!(py > T(-1) && py < T(h) && px > T(-1) && px < T(ww))) continue;
            const int64_t y0 = static_cast<int64_t>(std::floor(py));
            const int64_t x0 = static_cast<int64_t>(std::floor(px));
            const T fy = py - static_cast<T>(y0), fx = px - static_cast<T>(x0);
            const bool y0i = y0 >= 0, y1i = y0 + 1 < h, x0i = x0 >= 0, x1i = x0 + 1 < ww;
            const T mval = mrow[p];
            const T* src = xv.data() + (nn * cin + gi * cg) * plane;
            T* gxp = need_x ? tp.grad(x).data() + (nn * cin + gi * cg) * plane : nullptr;
            T gfy = 0, gfx = 0;
            for (int64_t c = 0; c < cg; ++c, src += plane) {
              const T gsr = gs[(kk * cg + c) * q + p] * mval;
              if (need_x) {
                T* gp = gxp + c * plane;
                if (y0i && x0i) gp[y0 * ww + x0] += gsr * (T(1) - fy) * (T(1) - fx);
                if (y0i && x1i) gp[y0 * ww + x0 + 1] += gsr * (T(1) - fy) * fx;
                if (y1i && x0i) gp[(y0 + 1) * ww + x0] += gsr * fy * (T(1) - fx);
                if (y1i && x1i) gp[(y0 + 1) * ww + x0 + 1] += gsr * fy * fx;
              }
              if (need_o) {
                const T v00 = (y0i && x0i) ? src[y0 * ww + x0] : T(0);
                const T v01 = (y0i && x1i) ? src[y0 * ww + x0 + 1] : T(0);
                const T v10 = (y1i && x0i) ? src[(y0 + 1) * ww + x0] : T(0);
                const T v11 = (y1i && x1i) ? src[(y0 + 1) * ww + x0 + 1] : T(0);
                gfy += gsr * (-(T(1) - fx) * v00 - fx * v01 + (T(1) - fx) * v10 + fx * v11);
                gfx += gsr * (-(T(1) - fy) * v00 + (T(1) - fy) * v01 - fy * v10 + fy * v11);
              }
            }
            if (need_o) {
              goy[p] += gfy;
              gox[p] += gfx;
            }
          }
        }
      }
    }
    if (need_w) {
      Tensor<T>& gw = tp.grad(w);
      for (int64_t gi = 0; gi < groups; ++gi)
        for (int64_t co = 0; co < coutg; ++co)
          for (int64_t kk = 0; kk < k2; ++kk)
            for (int64_t c = 0; c < cg; ++c)
              gw[((gi * coutg + co) * cg + c) * k2 + kk] += gwpack[static_cast<size_t>(gi)][co * rows + kk * cg + c];
    }
  };
  return t.make(std::move(y), {x, w, offsets, m}, std::move(bw));
}

}  // namespace pqa::nn
