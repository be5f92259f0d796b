// Acceptance gate: runs every release criterion in order and prints one
// PASS/FAIL line per criterion. Exit status is nonzero when any line fails.
// Runtime bounds are part of the criteria and are asserted, not just printed.
//
//   acceptance_test [--scratch DIR] [--epochs N] [--seed S] [--only 1,4,9]
//
// The synthetic dataset is generated once into the scratch directory and
// shared by criteria 6, 8 and 9; its generation time counts toward the
// end-to-end budget of criterion 8.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "pqa/aps/sampler.hpp"
#include "pqa/data/config.hpp"
#include "pqa/data/manifest.hpp"
#include "pqa/data/synth.hpp"
#include "pqa/fr/metrics.hpp"
#include "pqa/io/png_io.hpp"
#include "pqa/model/model.hpp"
#include "pqa/nn/deform.hpp"
#include "pqa/nn/ops.hpp"
#include "pqa/stats/stats.hpp"
#include "pqa/train/trainer.hpp"

namespace fs = std::filesystem;
using pqa::Rng;
using pqa::Tensor;
using pqa::nn::Tape;
using pqa::nn::Var;
namespace aps = pqa::aps;
namespace ops = pqa::nn;
namespace data = pqa::data;
namespace fr = pqa::fr;
namespace stats = pqa::stats;
namespace train = pqa::train;

namespace {

double now_s() {
  return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch()).count();
}

struct Check {
  bool ok = true;
  std::string detail;

  void expect(bool cond, const std::string& msg) {
    if (!cond && ok) {
      ok = false;
      detail = msg;
    }
  }
  void note(const std::string& msg) {
    if (ok) detail = msg;
  }
};

std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof(buf), f, ap);
  va_end(ap);
  return buf;
}

Tensor<double> randn(Rng& rng, std::vector<int64_t> shape, double sd = 1.0) {
  Tensor<double> t(std::move(shape));
  for (int64_t i = 0; i < t.numel(); ++i) t[i] = rng.normal(0.0, sd);
  return t;
}

template <typename T>
void jitter_store(pqa::nn::ParamStore<T>& ps, uint64_t seed, double sd = 0.02) {
  Rng rng(seed);
  for (size_t i = 0; i < ps.size(); ++i) {
    if (!ps[i].trainable) continue;
    Tensor<T>& v = ps[i].value;
    for (int64_t j = 0; j < v.numel(); ++j) v[j] += static_cast<T>(rng.normal(0.0, sd));
  }
}

// Relative finite-difference check against the analytic value.
bool fd_close(double analytic, double fd, double tol) {
  const double denom = std::max({1e-6, std::abs(fd), std::abs(analytic)});
  return std::abs(fd - analytic) / denom <= tol;
}

// ---------------------------------------------------------------------------
// criterion 1: sampler against the Gaussian-CDF oracle plus grid invariants
// ---------------------------------------------------------------------------

Check criterion1() {
  Check c;
  auto phi = [](double z) { return 0.5 * (1.0 + std::erf(z / std::sqrt(2.0))); };
  aps::PriorEquatorParams pe;
  const double lo = (90.0 - pe.theta_t - pe.mu) / pe.lambda_scale;
  const double hi = (90.0 + pe.theta_t - pe.mu) / pe.lambda_scale;
  const double a = (0.0 - pe.mu) / pe.lambda_scale;
  const double b = (180.0 - pe.mu) / pe.lambda_scale;
  const double m_oracle = (phi(hi) - phi(lo)) / (phi(b) - phi(a));

  c.expect(std::abs(aps::equator_mass(pe) - m_oracle) <= 1e-12,
           fmt("equator_mass %.6f vs oracle %.6f", aps::equator_mass(pe), m_oracle));
  c.expect(std::abs(m_oracle - 0.783) <= 2e-3, fmt("oracle m=%.4f not near 0.783", m_oracle));
  const auto [kl, kh] = aps::split_counts(10, m_oracle);
  c.expect(kl == 7 && kh == 3, fmt("split (%lld,%lld) != (7,3)", (long long)kl, (long long)kh));
  c.expect(kl == static_cast<int64_t>(std::floor(10.0 * m_oracle)), "k_low != Floor(10m)");

  // block spans: 7 equatorial blocks, then 2 north, then 1 south
  const auto grid = aps::build_grid(7, 3, pe.theta_t);
  c.expect(grid.blocks.size() == 10, "grid must have 10 blocks");
  for (int i = 0; i < 7 && c.ok; ++i) {
    const auto& blk = grid.blocks[static_cast<size_t>(i)];
    c.expect(blk.colat_lo == 67.0 && blk.colat_hi == 113.0, "equatorial colatitude span");
    c.expect(std::abs(blk.lon_lo - (-180.0 + 360.0 / 7.0 * i)) <= 1e-9 &&
                 std::abs(blk.lon_hi - (-180.0 + 360.0 / 7.0 * (i + 1))) <= 1e-9,
             "equatorial longitude span");
  }
  for (int i = 7; i < 9 && c.ok; ++i) {
    const auto& blk = grid.blocks[static_cast<size_t>(i)];
    c.expect(blk.colat_lo == 0.0 && blk.colat_hi == 67.0, "north colatitude span");
    c.expect(std::abs(blk.lon_hi - blk.lon_lo - 180.0) <= 1e-9, "north longitude width");
  }
  if (c.ok) {
    const auto& blk = grid.blocks[9];
    c.expect(blk.colat_lo == 113.0 && blk.colat_hi == 180.0 && blk.lon_lo == -180.0 &&
                 blk.lon_hi == 180.0,
             "south block span");
  }

  // Monte-Carlo placement: 1e5 centers, in-band fraction exactly k_low/K and
  // every center inside its own block
  Rng rng(123);
  int64_t in_band = 0, total = 0;
  bool inside = true;
  for (int rep = 0; rep < 10000; ++rep) {
    const auto centers = aps::sample_patch_coords(grid, rng);
    for (const auto& ct : centers) {
      ++total;
      if (ct.colat_deg >= 67.0 && ct.colat_deg <= 113.0) ++in_band;
      const auto& blk = grid.blocks[static_cast<size_t>(ct.block_index)];
      inside = inside && ct.colat_deg >= blk.colat_lo && ct.colat_deg <= blk.colat_hi &&
               ct.lon_deg >= blk.lon_lo && ct.lon_deg <= blk.lon_hi;
    }
  }
  c.expect(in_band * 10 == total * 7, fmt("in-band fraction %lld/%lld != 7/10",
                                          (long long)in_band, (long long)total));
  c.expect(inside, "a sampled center fell outside its block");

  // patch dims and determinism of the full sampler
  pqa::erp::Image img(3, 128, 256);
  Rng irng(9);
  for (int64_t i = 0; i < img.data.numel(); ++i) img.data[i] = static_cast<float>(irng.uniform());
  aps::SamplerConfig scfg;
  scfg.network_side = 64;
  Rng r1(5), r2(5);
  const auto ps1 = aps::sample_image(img, scfg, r1);
  const auto ps2 = aps::sample_image(img, scfg, r2);
  c.expect(ps1.p_h == 25 && ps1.p_w == 25, fmt("patch dims (%lld,%lld) != (25,25)",
                                               (long long)ps1.p_h, (long long)ps1.p_w));
  c.expect(ps1.patches.size() == 10, "K=10 patches expected");
  bool same = ps1.patches.size() == ps2.patches.size();
  for (size_t i = 0; same && i < ps1.patches.size(); ++i)
    for (int64_t j = 0; same && j < ps1.patches[i].numel(); ++j)
      same = ps1.patches[i][j] == ps2.patches[i][j];
  c.expect(same, "same seed must reproduce identical patches");
  c.note(fmt("m=%.4f split=(7,3), 1e5 centers in-band exactly 70%%", m_oracle));
  return c;
}

// ---------------------------------------------------------------------------
// criterion 2: zero-field deformable conv reduces to grouped conv / k^2
// ---------------------------------------------------------------------------

Check criterion2() {
  Check c;
  Rng rng(21);
  const int64_t n = 2, cin = 8, h = 11, w = 10;
  double worst = 0.0;
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
        Var<double> y =
            ops::deform_core(t, t.leaf(x), t.leaf(wt), t.leaf(zero_off), m, stride, pad, groups);
        Var<double> ref = ops::conv2d(t, t.leaf(x), t.leaf(wt), Var<double>{}, stride, pad, groups);
        const Tensor<double>&yv = t.val(y), &rv = t.val(ref);
        for (int64_t i = 0; i < yv.numel(); ++i)
          worst = std::max(worst, std::abs(yv[i] - rv[i] / static_cast<double>(k2)));
      }
    }
  }
  c.expect(worst <= 1e-6, fmt("max |deform - conv/k^2| = %.3g > 1e-6", worst));
  c.note(fmt("max |deform - conv/k^2| = %.3g over 8 configurations", worst));
  return c;
}

// ---------------------------------------------------------------------------
// criterion 3: finite-difference gradient suite at double precision
// ---------------------------------------------------------------------------

// Probes a few random coordinates of every tensor in `leaves` against central
// differences of `eval_objective` (which must re-run the forward pass).
bool fd_probe_tensors(std::vector<Tensor<double>*> leaves, const std::vector<const Tensor<double>*>& grads,
                      const std::function<double()>& eval_objective, Rng& pick,
                      int probes_per_tensor, double step, double tol, std::string& why) {
  for (size_t li = 0; li < leaves.size(); ++li) {
    Tensor<double>& v = *leaves[li];
    const Tensor<double>& g = *grads[li];
    for (int p = 0; p < probes_per_tensor; ++p) {
      const int64_t idx = pick.uniform_int(v.numel());
      const double orig = v[idx];
      v[idx] = orig + step;
      const double fp = eval_objective();
      v[idx] = orig - step;
      const double fm = eval_objective();
      v[idx] = orig;
      const double fd = (fp - fm) / (2.0 * step);
      if (!fd_close(g[idx], fd, tol)) {
        why = fmt("leaf %zu idx %lld analytic %.6g fd %.6g", li, (long long)idx, g[idx], fd);
        return false;
      }
    }
  }
  return true;
}

bool fd_deform_core(std::string& why) {
  Rng rng(31);
  const int64_t n = 1, cin = 4, h = 7, w = 8, k = 3, groups = 2, stride = 1, pad = 1;
  const int64_t k2 = k * k, oh = h, ow = w;
  Tensor<double> x = randn(rng, {n, cin, h, w});
  Tensor<double> wt = randn(rng, {cin, cin / groups, k, k}, 0.5);
  Tensor<double> off = randn(rng, {n, 2 * groups * k2, oh, ow}, 0.3);
  Tensor<double> logits = randn(rng, {n, groups * k2, oh, ow}, 0.5);
  Tensor<double> obj_w = randn(rng, {n, cin, oh, ow});

  auto objective = [&]() {
    Tape<double> t;
    Var<double> m = ops::deform_softmax(t, t.leaf(logits), groups);
    Var<double> y = ops::deform_core(t, t.leaf(x), t.leaf(wt), t.leaf(off), m, stride, pad, groups);
    return t.val(ops::mean_all(t, ops::mul(t, y, t.leaf(obj_w))))[0];
  };

  Tape<double> t;
  Var<double> vx = t.leaf(x, true), vw = t.leaf(wt, true), vo = t.leaf(off, true),
              vl = t.leaf(logits, true);
  Var<double> m = ops::deform_softmax(t, vl, groups);
  Var<double> y = ops::deform_core(t, vx, vw, vo, m, stride, pad, groups);
  Var<double> obj = ops::mean_all(t, ops::mul(t, y, t.leaf(obj_w)));
  t.backward_scalar(obj);

  Rng pick(77);
  return fd_probe_tensors({&x, &wt, &off, &logits},
                          {&t.grad(vx), &t.grad(vw), &t.grad(vo), &t.grad(vl)}, objective, pick,
                          6, 1e-5, 1e-3, why);
}

// FD over a module with its own parameter store: probes random parameter
// coordinates; the module forward is re-run through `objective`.
template <typename Forward>
bool fd_module(pqa::nn::ParamStore<double>& ps, Forward&& forward, uint64_t pick_seed, int probes,
               double tol, std::string& why) {
  auto objective = [&]() {
    Tape<double> t;
    pqa::nn::Binding<double> bd(t, ps, false);
    return forward(t, bd, false);
  };

  Tape<double> t;
  pqa::nn::Binding<double> bd(t, ps, true);
  forward(t, bd, true);  // runs forward + backward_scalar internally

  std::vector<size_t> live;
  for (size_t i = 0; i < ps.size(); ++i)
    if (ps[i].trainable && t.has_grad(bd[i])) live.push_back(i);
  if (live.empty()) {
    why = "no trainable parameter received a gradient";
    return false;
  }

  Rng pick(pick_seed);
  const double h = 1e-5;
  for (int p = 0; p < probes; ++p) {
    const size_t pi = live[pick.uniform_int(static_cast<int64_t>(live.size()))];
    Tensor<double>& v = ps[pi].value;
    const int64_t idx = pick.uniform_int(v.numel());
    const double analytic = t.grad(bd[pi])[idx];
    const double orig = v[idx];
    v[idx] = orig + h;
    const double fp = objective();
    v[idx] = orig - h;
    const double fm = objective();
    v[idx] = orig;
    const double fd = (fp - fm) / (2.0 * h);
    if (!fd_close(analytic, fd, tol)) {
      why = fmt("param %s idx %lld analytic %.6g fd %.6g", ps[pi].name.c_str(), (long long)idx,
                analytic, fd);
      return false;
    }
  }
  return true;
}

Check criterion3() {
  Check c;
  std::string why;

  c.expect(fd_deform_core(why), "deform_conv: " + why);
  if (!c.ok) return c;

  const pqa::model::ModelConfig rcfg = pqa::model::reduced_config();

  {  // daa_forward
    pqa::nn::ParamStore<double> ps;
    Rng rng(41);
    pqa::model::DaaBlock<double> daa(ps, rng, "daa", "daa", 8, 2, 3);
    jitter_store(ps, 42);
    Rng drng(43);
    Tensor<double> x = randn(drng, {2, 8, 8, 8});
    Tensor<double> obj_w = randn(drng, {2, 8, 4, 4});
    auto fwd = [&](Tape<double>& t, pqa::nn::Binding<double>& bd, bool back) {
      Var<double> y = daa(t, bd, t.leaf(x));
      Var<double> obj = ops::mean_all(t, ops::mul(t, y, t.leaf(obj_w)));
      if (back) t.backward_scalar(obj);
      return t.val(obj)[0];
    };
    c.expect(fd_module(ps, fwd, 44, 10, 1e-3, why), "daa_forward: " + why);
    if (!c.ok) return c;
  }

  {  // hpa_forward on the reduced channel plan
    pqa::nn::ParamStore<double> ps;
    Rng rng(51);
    pqa::model::Hpa<double> hpa(ps, rng, rcfg);
    jitter_store(ps, 52);
    Rng drng(53);
    const int64_t c4 = rcfg.stage_channels()[4];
    Tensor<double> x = randn(drng, {2, c4, 3, 3});
    Tensor<double> obj_w = randn(drng, {2, c4, 3, 3});
    auto fwd = [&](Tape<double>& t, pqa::nn::Binding<double>& bd, bool back) {
      Var<double> y = hpa(t, bd, t.leaf(x), nullptr);
      Var<double> obj = ops::mean_all(t, ops::mul(t, y, t.leaf(obj_w)));
      if (back) t.backward_scalar(obj);
      return t.val(obj)[0];
    };
    c.expect(fd_module(ps, fwd, 54, 10, 1e-3, why), "hpa_forward: " + why);
    if (!c.ok) return c;
  }

  {  // mhsa + ffn (token block, embed through score head)
    pqa::nn::ParamStore<double> ps;
    Rng rng(61);
    pqa::model::Lgqa<double> lgqa(ps, rng, rcfg);
    jitter_store(ps, 62);
    Rng drng(63);
    Tensor<double> v = randn(drng, {rcfg.k_patches, rcfg.stage_channels()[4]});
    auto fwd = [&](Tape<double>& t, pqa::nn::Binding<double>& bd, bool back) {
      Var<double> s = lgqa(t, bd, t.leaf(v), nullptr);
      if (back) t.backward_scalar(s);
      return t.val(s)[0];
    };
    c.expect(fd_module(ps, fwd, 64, 12, 1e-3, why), "mhsa/ffn: " + why);
    if (!c.ok) return c;
  }

  {  // norm_in_norm_loss w.r.t. predicted scores, both gamma values
    Rng drng(71);
    for (double gamma : {1.0, 2.0}) {
      Tensor<double> s = randn(drng, {8}, 2.0);
      Tensor<double> sh = randn(drng, {8}, 2.0);
      Tape<double> t;
      Var<double> v = t.leaf(sh, true);
      Var<double> loss = ops::norm_in_norm_loss(t, v, s, gamma, 2.0, 1e-8);
      t.backward_scalar(loss);
      const Tensor<double>& g = t.grad(v);
      for (int64_t i = 0; i < 8 && c.ok; ++i) {
        const double h = 1e-6, orig = sh[i];
        auto eval = [&](double val) {
          Tensor<double> s2 = sh.clone();
          s2[i] = val;
          Tape<double> t2;
          return t2.val(ops::norm_in_norm_loss(t2, t2.leaf(s2), s, gamma, 2.0, 1e-8))[0];
        };
        const double fd = (eval(orig + h) - eval(orig - h)) / (2.0 * h);
        c.expect(fd_close(g[i], fd, 1e-5),
                 fmt("norm_in_norm_loss gamma=%g idx %lld analytic %.6g fd %.6g", gamma,
                     (long long)i, g[i], fd));
      }
      if (!c.ok) return c;
    }
  }

  {  // reduced full model
    pqa::model::Model<double> m{rcfg};
    jitter_store(m.params, 81, 0.05);
    Rng drng(82);
    Tensor<double> patches({rcfg.k_patches, 3, rcfg.network_side, rcfg.network_side});
    for (int64_t i = 0; i < patches.numel(); ++i) patches[i] = drng.uniform();

    Tape<double> t;
    pqa::nn::Binding<double> bd(t, m.params, true);
    Var<double> s = m.forward(t, bd, t.leaf(patches));
    t.backward_scalar(s);

    std::vector<size_t> live;
    for (size_t i = 0; i < m.params.size(); ++i)
      if (m.params[i].trainable && t.has_grad(bd[i])) live.push_back(i);
    c.expect(!live.empty(), "no live parameters in reduced model");

    Rng pick(83);
    const double h = 1e-5;
    int probes = 0;
    for (int attempt = 0; attempt < 200 && probes < 12 && c.ok; ++attempt) {
      const size_t pi = live[pick.uniform_int(static_cast<int64_t>(live.size()))];
      Tensor<double>& pv = m.params[pi].value;
      const int64_t idx = pick.uniform_int(pv.numel());
      const double analytic = t.grad(bd[pi])[idx];
      // skip gradients below the central-difference noise floor
      if (std::abs(analytic) < 1e-5) continue;
      ++probes;
      const double orig = pv[idx];
      pv[idx] = orig + h;
      const double fp = m.score(patches);
      pv[idx] = orig - h;
      const double fm = m.score(patches);
      pv[idx] = orig;
      const double fd = (fp - fm) / (2.0 * h);
      c.expect(fd_close(analytic, fd, 1e-3), fmt("reduced model param %s idx %lld analytic %.6g fd %.6g",
                                                 m.params[pi].name.c_str(), (long long)idx, analytic, fd));
    }
  }

  c.note("deform_conv, daa, hpa, mhsa/ffn, loss, reduced model all within tolerance");
  return c;
}

// ---------------------------------------------------------------------------
// criterion 4: loss properties
// ---------------------------------------------------------------------------

Check criterion4() {
  Check c;
  Rng rng(91);
  for (int rep = 0; rep < 5 && c.ok; ++rep) {
    Tensor<double> s = randn(rng, {9}, 3.0);
    const double a = 0.5 + rng.uniform() * 3.0, b = rng.normal(0.0, 2.0);
    Tensor<double> sh({9});
    for (int64_t i = 0; i < 9; ++i) sh[i] = a * s[i] + b;
    for (double gamma : {1.0, 2.0}) {
      Tape<double> t;
      const double loss = t.val(ops::norm_in_norm_loss(t, t.leaf(sh), s, gamma, 2.0, 1e-8))[0];
      c.expect(std::abs(loss) <= 1e-8, fmt("affine loss %.3g > 1e-8 (gamma=%g)", loss, gamma));
    }
  }

  Tensor<double> s({3}), sh({3});
  s[0] = 0, s[1] = 1, s[2] = 2;
  sh[0] = 0, sh[1] = 2, sh[2] = 1;
  Tape<double> t;
  const double loss = t.val(ops::norm_in_norm_loss(t, t.leaf(sh), s, 1.0, 2.0, 1e-8))[0];
  c.expect(std::abs(loss - 1.0 / std::sqrt(6.0)) <= 5e-5,
           fmt("hand oracle: loss %.6f != 0.4082", loss));
  c.note(fmt("affine -> 0, hand oracle loss %.4f", loss));
  return c;
}

// ---------------------------------------------------------------------------
// criterion 5: correlation / fit oracles
// ---------------------------------------------------------------------------

double plcc_bf(const std::vector<double>& x, const std::vector<double>& y) {
  const size_t n = x.size();
  double mx = 0, my = 0;
  for (size_t i = 0; i < n; ++i) mx += x[i], my += y[i];
  mx /= n, my /= n;
  double sxy = 0, sxx = 0, syy = 0;
  for (size_t i = 0; i < n; ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

std::vector<double> ranks_bf(const std::vector<double>& x) {
  const size_t n = x.size();
  std::vector<double> r(n);
  for (size_t i = 0; i < n; ++i) {
    size_t smaller = 0, equal = 0;
    for (size_t j = 0; j < n; ++j) {
      if (x[j] < x[i]) ++smaller;
      if (x[j] == x[i]) ++equal;
    }
    r[i] = static_cast<double>(smaller) + 1.0 + 0.5 * static_cast<double>(equal - 1);
  }
  return r;
}

Check criterion5() {
  Check c;
  Rng rng(101);
  double worst = 0.0;
  for (int rep = 0; rep < 100 && c.ok; ++rep) {
    std::vector<double> x(50), y(50);
    for (auto& v : x) v = rng.uniform() * 10.0;
    for (auto& v : y) v = rng.uniform() * 10.0;
    const double dp = std::abs(stats::plcc(x, y) - plcc_bf(x, y));
    const double ds = std::abs(stats::srcc(x, y) - plcc_bf(ranks_bf(x), ranks_bf(y)));
    double se = 0;
    for (size_t i = 0; i < x.size(); ++i) se += (x[i] - y[i]) * (x[i] - y[i]);
    const double dr = std::abs(stats::rmse(x, y) - std::sqrt(se / x.size()));
    worst = std::max({worst, dp, ds, dr});
    c.expect(dp <= 1e-10 && ds <= 1e-10 && dr <= 1e-10,
             fmt("rep %d: plcc err %.2g srcc err %.2g rmse err %.2g", rep, dp, ds, dr));
  }

  const std::vector<double> tied = {1, 2, 2, 3};
  const std::vector<double> want = {1.0, 2.5, 2.5, 4.0};
  const auto got = stats::average_ranks(tied);
  for (size_t i = 0; i < want.size(); ++i)
    c.expect(got[i] == want[i], "tie handling: average ranks mismatch");

  // noiseless logistic recovery
  stats::LogisticParams truth;
  truth.rho1 = 2.0, truth.rho2 = 1.0, truth.rho3 = 0.0, truth.rho4 = 0.1, truth.rho5 = 3.0;
  std::vector<double> x(60), y(60);
  for (size_t i = 0; i < x.size(); ++i) {
    x[i] = -6.0 + 12.0 * static_cast<double>(i) / 59.0;
    y[i] = stats::logistic_eval(truth, x[i]);
  }
  try {
    const auto fitted = stats::logistic_fit(x, y);
    const auto mapped = stats::logistic_map(fitted, x);
    const double curve_rmse = stats::rmse(mapped, y);
    c.expect(curve_rmse <= 1e-6, fmt("noiseless logistic curve rmse %.3g > 1e-6", curve_rmse));
    c.note(fmt("brute-force max err %.2g, logistic curve rmse %.2g", worst, curve_rmse));
  } catch (const stats::FitFailure& e) {
    c.expect(false, std::string("logistic_fit did not converge: ") + e.what());
  }
  return c;
}

// ---------------------------------------------------------------------------
// criterion 6: FR baselines strictly monotone on the synthetic ladders
// ---------------------------------------------------------------------------

Check criterion6(const data::DatasetManifest& manifest, const std::string& dataset_dir) {
  Check c;
  auto path_of = [&](const std::string& id) -> std::string {
    for (const auto& r : manifest.rows)
      if (r.image_id == id) return r.image_path;
    return (fs::path(dataset_dir) / (id + ".png")).string();
  };

  const char* families[] = {"blur", "noise", "quant"};
  const char* metric_names[] = {"ws_psnr", "s_psnr", "cpp_psnr", "ws_ssim"};
  int cells = 0;
  for (int ci = 0; ci < 4 && c.ok; ++ci) {
    const auto ref = pqa::io::load_png(path_of(fmt("c%d_ref", ci)));
    for (const char* fam : families) {
      double prev[4] = {1e9, 1e9, 1e9, 1e9};
      for (int level = 1; level <= 4 && c.ok; ++level) {
        const auto dist = pqa::io::load_png(path_of(fmt("c%d_%s_l%d", ci, fam, level)));
        const double vals[4] = {fr::ws_psnr(ref, dist).value, fr::s_psnr(ref, dist).value,
                                fr::cpp_psnr(ref, dist).value, fr::ws_ssim(ref, dist).value};
        for (int mi = 0; mi < 4; ++mi) {
          c.expect(vals[mi] < prev[mi], fmt("c%d %s level %d: %s %.4f !< %.4f", ci, fam, level,
                                            metric_names[mi], vals[mi], prev[mi]));
          prev[mi] = vals[mi];
        }
      }
      ++cells;
    }

    // identical-image caps, once per content
    const auto same_psnr = fr::ws_psnr(ref, ref);
    c.expect(same_psnr.value == 100.0 && same_psnr.capped, "ws_psnr self-compare cap");
    const auto same_s = fr::s_psnr(ref, ref);
    c.expect(same_s.value == 100.0 && same_s.capped, "s_psnr self-compare cap");
    const auto same_cpp = fr::cpp_psnr(ref, ref);
    c.expect(same_cpp.value == 100.0 && same_cpp.capped, "cpp_psnr self-compare cap");
    c.expect(fr::ws_ssim(ref, ref).value == 1.0, "ws_ssim self-compare must be exactly 1");
  }
  c.note(fmt("4 metrics strictly monotone over %d content/distortion cells", cells));
  return c;
}

// ---------------------------------------------------------------------------
// criterion 7: frozen shape ledger for the default 224 configuration
// ---------------------------------------------------------------------------

Check criterion7() {
  Check c;
  static const std::vector<std::pair<std::string, std::vector<int64_t>>> ledger = {
      {"F_0", {10, 16, 56, 56}},    {"F_1", {10, 32, 28, 28}},
      {"F_2", {10, 64, 14, 14}},    {"F_3", {10, 128, 7, 7}},
      {"F_4", {10, 128, 7, 7}},     {"F_d0", {10, 16, 56, 56}},
      {"F_d1", {10, 32, 28, 28}},   {"F_d2", {10, 64, 14, 14}},
      {"F_d3", {10, 128, 7, 7}},    {"Fuse01", {10, 32, 28, 28}},
      {"Fuse12", {10, 64, 14, 14}}, {"Fuse12_d", {10, 64, 14, 14}},
      {"Fuse23", {10, 128, 7, 7}},  {"Fuse23_d", {10, 128, 7, 7}},
      {"DAA_Fuse01", {10, 32, 14, 14}}, {"F_m", {10, 128, 3, 3}},
      {"F_a", {10, 128, 3, 3}},     {"X_g", {80, 16, 3, 3}},
      {"F_hpa", {10, 128, 3, 3}},   {"V", {10, 128}},
      {"X_p", {10, 128}},           {"V_m", {10, 128}},
      {"V_o", {10, 128}},           {"token_scores", {10, 1}},
  };

  pqa::model::Model<float> m{pqa::model::ModelConfig{}};
  Rng rng(31);
  Tensor<float> patches({10, 3, 224, 224});
  for (int64_t i = 0; i < patches.numel(); ++i) patches[i] = static_cast<float>(rng.uniform());
  Tape<float> t;
  pqa::nn::Binding<float> bd(t, m.params, false);
  pqa::model::ShapeTrace trace;
  Var<float> s = m.forward(t, bd, t.leaf(patches), &trace);
  c.expect(std::isfinite(t.val(s)[0]), "score must be finite at init");
  c.expect(trace.size() == ledger.size(),
           fmt("trace has %zu entries, ledger %zu", trace.size(), ledger.size()));
  for (size_t i = 0; c.ok && i < ledger.size(); ++i) {
    c.expect(trace[i].first == ledger[i].first,
             fmt("entry %zu name %s != %s", i, trace[i].first.c_str(), ledger[i].first.c_str()));
    c.expect(trace[i].second == ledger[i].second, fmt("entry %zu (%s): shape drift", i,
                                                      ledger[i].first.c_str()));
  }
  c.note(fmt("%zu intermediate shapes match the frozen table", ledger.size()));
  return c;
}

// ---------------------------------------------------------------------------
// criteria 8 & 9: end-to-end desk-scale run + bitwise reproducibility
// ---------------------------------------------------------------------------

struct EndToEnd {
  Check c8, c9;
};

EndToEnd criteria89(const std::string& scratch, const std::string& manifest_path, double synth_seconds,
                    int64_t epochs, uint64_t seed) {
  EndToEnd r;
  const double t0 = now_s();

  data::AppConfig cfg;
  cfg.train.epochs = epochs;
  cfg.train.seed = seed;
  cfg.sync();

  const auto manifest = data::load_manifest(manifest_path, cfg.train.seed, cfg.train.train_fraction);
  int64_t n_train = 0, n_test = 0;
  for (const auto& row : manifest.rows) (row.split == data::Split::train ? n_train : n_test)++;
  r.c8.expect(manifest.rows.size() == 52, fmt("dataset has %zu rows, expected 52", manifest.rows.size()));
  r.c8.expect(n_train == 42 && n_test == 10,
              fmt("split %lld/%lld != 42/10", (long long)n_train, (long long)n_test));

  const std::string run_a = (fs::path(scratch) / "run_a").string();
  train::TrainResult res;
  try {
    res = train::train_run(manifest, cfg, run_a, nullptr);
  } catch (const std::exception& e) {
    r.c8.expect(false, std::string("train_run failed: ") + e.what());
    r.c9.expect(false, "skipped: training failed");
    return r;
  }

  const auto train_rep = train::evaluate_run(res.checkpoint, manifest, data::Split::train, nullptr);
  const auto test_rep = train::evaluate_run(res.checkpoint, manifest, data::Split::test, nullptr);
  const double total = synth_seconds + (now_s() - t0);

  r.c8.expect(train_rep.n_failed == 0 && test_rep.n_failed == 0, "images failed to score");
  r.c8.expect(train_rep.srcc >= 0.85, fmt("train srcc %.4f < 0.85", train_rep.srcc));
  r.c8.expect(test_rep.srcc >= 0.60, fmt("test srcc %.4f < 0.60", test_rep.srcc));
  r.c8.expect(total <= 900.0, fmt("end-to-end %.0f s > 900 s", total));
  r.c8.note(fmt("train srcc %.3f, test srcc %.3f, %d epochs, %.0f s total", train_rep.srcc,
                test_rep.srcc, (int)epochs, total));

  // criterion 9: identical seed, fresh run, byte-identical history
  const std::string run_b = (fs::path(scratch) / "run_b").string();
  try {
    train::train_run(manifest, cfg, run_b, nullptr);
  } catch (const std::exception& e) {
    r.c9.expect(false, std::string("second train_run failed: ") + e.what());
    return r;
  }
  auto slurp = [](const std::string& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };
  const std::string ha = slurp((fs::path(run_a) / "history.csv").string());
  const std::string hb = slurp((fs::path(run_b) / "history.csv").string());
  r.c9.expect(!ha.empty() && ha == hb, "history.csv differs between same-seed runs");
  r.c9.note(fmt("history.csv identical across reruns (%zu bytes)", ha.size()));
  return r;
}

}  // namespace

int main(int argc, char** argv) {
  std::string scratch = "acceptance_scratch";
  int64_t epochs = 12;
  uint64_t seed = 1;
  std::vector<int> only;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    auto next = [&]() -> std::string { return i + 1 < argc ? argv[++i] : ""; };
    if (a == "--scratch")
      scratch = next();
    else if (a == "--epochs")
      epochs = std::stoll(next());
    else if (a == "--seed")
      seed = std::stoull(next());
    else if (a == "--only") {
      std::stringstream ss(next());
      for (std::string tok; std::getline(ss, tok, ',');) only.push_back(std::stoi(tok));
    } else {
      std::fprintf(stderr, "usage: acceptance_test [--scratch DIR] [--epochs N] [--seed S] [--only 1,2]\n");
      return 1;
    }
  }
  auto wanted = [&](int n) { return only.empty() || std::find(only.begin(), only.end(), n) != only.end(); };

  struct Row {
    int num;
    std::string label;
    Check check;
    double seconds;
  };
  std::vector<Row> rows;
  auto run = [&](int num, const std::string& label, double budget_s, const std::function<Check()>& body) {
    if (!wanted(num)) return;
    const double t0 = now_s();
    Check c;
    try {
      c = body();
    } catch (const std::exception& e) {
      c.ok = false;
      c.detail = std::string("exception: ") + e.what();
    }
    const double dt = now_s() - t0;
    if (budget_s > 0 && dt > budget_s) {
      c.ok = false;
      c.detail = fmt("runtime %.1f s over the %.0f s budget; %s", dt, budget_s, c.detail.c_str());
    }
    rows.push_back({num, label, c, dt});
  };

  run(1, "sampler split and placement oracle", 10, criterion1);
  run(2, "deformable conv zero-field reduction", 30, criterion2);
  run(3, "finite-difference gradient suite", 300, criterion3);
  run(4, "norm-in-norm loss properties", 0, criterion4);
  run(5, "correlation and logistic-fit oracles", 0, criterion5);

  // shared synthetic dataset for 6, 8, 9
  std::string dataset_dir = (fs::path(scratch) / "dataset").string();
  std::string manifest_path = (fs::path(dataset_dir) / "manifest.csv").string();
  double synth_seconds = 0.0;
  if (wanted(6) || wanted(8) || wanted(9)) {
    const double t0 = now_s();
    if (!fs::exists(manifest_path)) {
      data::SynthConfig scfg;  // 4 contents x (1 ref + 3 distortions x 4 levels) at 512x1024
      data::synth_dataset(dataset_dir, scfg);
    }
    synth_seconds = now_s() - t0;
  }

  if (wanted(6)) {
    run(6, "FR baselines monotone on synthetic ladders", 0, [&] {
      const auto manifest = data::load_manifest(manifest_path, 1, 0.8);
      return criterion6(manifest, dataset_dir);
    });
  }
  run(7, "224x224 shape ledger", 0, criterion7);

  if (wanted(8) || wanted(9)) {
    const double t0 = now_s();
    EndToEnd ee = criteria89(scratch, manifest_path, synth_seconds, epochs, seed);
    const double dt = now_s() - t0;
    if (wanted(8)) rows.push_back({8, "end-to-end desk-scale training run", ee.c8, synth_seconds + dt});
    if (wanted(9)) rows.push_back({9, "same-seed rerun reproducibility", ee.c9, dt});
  }

  std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return a.num < b.num; });
  bool all_ok = true;
  for (const auto& r : rows) {
    all_ok = all_ok && r.check.ok;
    std::printf("criterion %d %s  %-42s (%.1f s)%s%s\n", r.num, r.check.ok ? "PASS" : "FAIL",
                r.label.c_str(), r.seconds, r.check.detail.empty() ? "" : "  -- ",
                r.check.detail.c_str());
  }
  std::printf("ACCEPTANCE: %zu/%zu criteria passed\n",
              static_cast<size_t>(std::count_if(rows.begin(), rows.end(),
                                                [](const Row& r) { return r.check.ok; })),
              rows.size());
  return all_ok ? 0 : 1;
}
