#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <functional>
#include <vector>

#include "pqa/core/rng.hpp"
#include "pqa/nn/deform.hpp"
#include "pqa/nn/ops.hpp"

using pqa::Rng;
using pqa::Tensor;
using pqa::nn::Tape;
using pqa::nn::Var;
namespace ops = pqa::nn;

namespace {

Tensor<double> randn(Rng& rng, std::vector<int64_t> shape, double sd = 1.0) {
  Tensor<double> t(std::move(shape));
  for (int64_t i = 0; i < t.numel(); ++i) t[i] = rng.normal(0.0, sd);
  return t;
}

double max_abs_diff(const Tensor<double>& a, const Tensor<double>& b) {
  REQUIRE(a.same_shape(b));
  double m = 0;
  for (int64_t i = 0; i < a.numel(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace

TEST_CASE("zero field reduces to grouped conv scaled by 1/k^2") {
  Rng rng(21);
  const int64_t n = 2, cin = 8, h = 11, w = 10;
  for (int64_t k : {3, 7}) {
    for (int64_t groups : {1, 4}) {
      for (int64_t stride : {1, 2}) {
        const int64_t pad = k / 2, k2 = k * k;
        const int64_t oh = (h + 2 * pad - k) / stride + 1, ow = (w + 2 * pad - k) / stride + 1;
        Tensor<double> x = randn(rng, {n, cin, h, w});
        Tensor<double> wt = randn(rng, {cin, cin / groups, k, k});
        Tensor<double> zero_off({n, 2 * groups * k2, oh, ow});
        Tensor<double> zero_logits({n, groups * k2, oh, ow});

        Tape<double> t;
        Var<double> m = ops::deform_softmax(t, t.leaf(zero_logits), groups);
        // softmax of zeros is exactly uniform
        for (int64_t i = 0; i < t.val(m).numel(); ++i)
          CHECK(t.val(m)[i] == doctest::Approx(1.0 / static_cast<double>(k2)).epsilon(1e-12));
        Var<double> y = ops::deform_core(t, t.leaf(x), t.leaf(wt), t.leaf(zero_off), m, stride, pad, groups);
        Var<double> ref = ops::conv2d(t, t.leaf(x), t.leaf(wt), Var<double>{}, stride, pad, groups);
        Var<double> scaled = ops::scale(t, ref, 1.0 / static_cast<double>(k2));
        INFO("k=", k, " groups=", groups, " stride=", stride);
        CHECK(max_abs_diff(t.val(y), t.val(scaled)) <= 1e-6);
      }
    }
  }
}

TEST_CASE("integer offset shifts columns with zero fill") {
  // 1x1 kernel, identity weights, offset (dy,dx)=(0,+1): output is the input
  // shifted left by one column.
  const int64_t n = 1, c = 3, h = 4, w = 5;
  Rng rng(22);
  Tensor<double> x = randn(rng, {n, c, h, w});
  Tensor<double> wt({c, c, 1, 1});
  for (int64_t i = 0; i < c; ++i) wt[i * c + i] = 1.0;
  Tensor<double> off({n, 2, h, w});
  for (int64_t p = 0; p < h * w; ++p) off[h * w + p] = 1.0;  // dx channel
  Tensor<double> m = Tensor<double>::full({n, 1, h, w}, 1.0);
  Tape<double> t;
  Var<double> y = ops::deform_core(t, t.leaf(x), t.leaf(wt), t.leaf(off), t.leaf(m), 1, 0, 1);
  for (int64_t cc = 0; cc < c; ++cc)
    for (int64_t yy = 0; yy < h; ++yy)
      for (int64_t xx = 0; xx < w; ++xx) {
        const double expect = xx + 1 < w ? x[(cc * h + yy) * w + xx + 1] : 0.0;
        CHECK(t.val(y)[(cc * h + yy) * w + xx] == doctest::Approx(expect).epsilon(1e-12));
      }
}

TEST_CASE("modulation softmax sums to 1 per location and group") {
  Rng rng(23);
  Tensor<double> logits = randn(rng, {2, 2 * 9, 4, 5}, 2.0);
  Tape<double> t;
  Var<double> m = ops::deform_softmax(t, t.leaf(logits), 2);
  for (int64_t nn = 0; nn < 2; ++nn)
    for (int64_t g = 0; g < 2; ++g)
      for (int64_t p = 0; p < 20; ++p) {
        double s = 0;
        for (int64_t kk = 0; kk < 9; ++kk) s += t.val(m)[((nn * 2 + g) * 9 + kk) * 20 + p];
        CHECK(std::abs(s - 1.0) <= 1e-6);
      }
}

TEST_CASE("linear in input under a frozen field") {
  Rng rng(24);
  const int64_t n = 1, cin = 4, h = 6, w = 6, k = 3, groups = 2, pad = 1;
  Tensor<double> x1 = randn(rng, {n, cin, h, w});
  Tensor<double> x2 = randn(rng, {n, cin, h, w});
  Tensor<double> wt = randn(rng, {cin, cin / groups, k, k});
  Tensor<double> off = randn(rng, {n, 2 * groups * 9, h, w}, 0.7);
  Tensor<double> logits = randn(rng, {n, groups * 9, h, w});
  const double a = 1.7, b = -0.6;

  auto run = [&](const Tensor<double>& x) {
    Tape<double> t;
    Var<double> m = ops::deform_softmax(t, t.leaf(logits), groups);
    return t.val(ops::deform_core(t, t.leaf(x), t.leaf(wt), t.leaf(off), m, 1, pad, groups)).clone();
  };
  Tensor<double> mix(x1.shape());
  for (int64_t i = 0; i < mix.numel(); ++i) mix[i] = a * x1[i] + b * x2[i];
  Tensor<double> y1 = run(x1), y2 = run(x2), ym = run(mix);
  double worst = 0;
  for (int64_t i = 0; i < ym.numel(); ++i) worst = std::max(worst, std::abs(ym[i] - (a * y1[i] + b * y2[i])));
  CHECK(worst <= 1e-6);
}

TEST_CASE("non-finite offsets are rejected") {
  Tensor<double> x({1, 2, 4, 4});
  Tensor<double> wt({2, 2, 1, 1});
  Tensor<double> off({1, 2, 4, 4});
  off[3] = std::nan("");
  Tensor<double> m = Tensor<double>::full({1, 1, 4, 4}, 1.0);
  Tape<double> t;
  CHECK_THROWS_AS(ops::deform_core(t, t.leaf(x), t.leaf(wt), t.leaf(off), t.leaf(m), 1, 0, 1), std::runtime_error);
}

TEST_CASE("deform gradients match finite differences") {
  // 1x4x6x6 input, random fractional offsets (away from the bilinear kinks at
  // integer positions with probability 1).
  Rng rng(25);
  const int64_t n = 1, cin = 4, h = 6, w = 6, k = 3, groups = 2, pad = 1, k2 = 9;
  Tensor<double> x = randn(rng, {n, cin, h, w});
  Tensor<double> wt = randn(rng, {cin, cin / groups, k, k});
  Tensor<double> off = randn(rng, {n, 2 * groups * k2, h, w}, 0.6);
  Tensor<double> logits = randn(rng, {n, groups * k2, h, w}, 0.8);
  Tensor<double> pw({n, cin, h, w});
  Rng prng(99);
  for (int64_t i = 0; i < pw.numel(); ++i) pw[i] = prng.normal();

  auto build = [&](Tape<double>& t, const std::vector<Var<double>>& v) {
    Var<double> m = ops::deform_softmax(t, v[3], groups);
    Var<double> y = ops::deform_core(t, v[0], v[1], v[2], m, 1, pad, groups);
    return ops::mean_all(t, ops::mul(t, y, t.leaf(pw)));
  };

  // analytic
  Tape<double> t;
  std::vector<Var<double>> vs = {t.leaf(x.clone(), true), t.leaf(wt.clone(), true), t.leaf(off.clone(), true),
                                 t.leaf(logits.clone(), true)};
  Var<double> loss = build(t, vs);
  t.backward_scalar(loss);

  auto eval = [&](const std::vector<Tensor<double>>& xs) {
    Tape<double> tp;
    std::vector<Var<double>> lv;
    for (const auto& xx : xs) lv.push_back(tp.leaf(xx.clone(), false));
    return tp.val(build(tp, lv))[0];
  };

  std::vector<Tensor<double>> xs = {x, wt, off, logits};
  Rng pick(0xdef);
  const double fd_h = 1e-6;
  for (size_t ii = 0; ii < xs.size(); ++ii) {
    REQUIRE(t.has_grad(vs[ii]));
    const Tensor<double>& g = t.grad(vs[ii]);
    const int64_t numel = xs[ii].numel();
    for (int probe = 0; probe < 20; ++probe) {
      const int64_t idx = static_cast<int64_t>(pick.uniform_int(static_cast<uint64_t>(numel)));
      const double orig = xs[ii][idx];
      xs[ii][idx] = orig + fd_h;
      const double fp = eval(xs);
      xs[ii][idx] = orig - fd_h;
      const double fm = eval(xs);
      xs[ii][idx] = orig;
      const double fd = (fp - fm) / (2.0 * fd_h);
      const double denom = std::max({1e-6, std::abs(fd), std::abs(g[idx])});
      INFO("input ", ii, " idx ", idx, " analytic ", g[idx], " fd ", fd);
      CHECK(std::abs(fd - g[idx]) / denom <= 1e-3);
    }
  }
}

TEST_CASE("deform shape and argument validation") {
  Tape<double> t;
  Tensor<double> x({1, 4, 6, 6});
  Tensor<double> wt({4, 2, 3, 3});
  Tensor<double> off({1, 2 * 2 * 9, 6, 6});
  Tensor<double> m({1, 2 * 9, 6, 6});
  // even kernel rejected
  CHECK_THROWS_AS(ops::deform_core(t, t.leaf(x), t.leaf(Tensor<double>({4, 2, 2, 2})), t.leaf(off), t.leaf(m), 1, 1, 2),
                  std::invalid_argument);
  // wrong offset channel count
  CHECK_THROWS_AS(
      ops::deform_core(t, t.leaf(x), t.leaf(wt), t.leaf(Tensor<double>({1, 4, 6, 6})), t.leaf(m), 1, 1, 2),
      std::invalid_argument);
  // channels not divisible by groups
  CHECK_THROWS_AS(ops::deform_core(t, t.leaf(Tensor<double>({1, 3, 6, 6})), t.leaf(wt), t.leaf(off), t.leaf(m), 1, 1, 2),
                  std::invalid_argument);
}
