#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "pqa/model/layers.hpp"

// The quality model: toy hierarchical backbone -> per-level deformable
// adjustment and adjacent fusion (PDFF) -> grouped directional-pooling
// attention (HPA) -> token embedding + multi-head self-attention + FFN ->
// per-token score head averaged over the K patches.

namespace pqa::model {

struct ModelConfig {
  int64_t k_patches = 10;     // token count l_p
  int64_t embed_dim = 128;    // l_d
  int64_t heads = 8;
  int64_t hpa_groups = 8;     // G_h channel groups in HPA
  int64_t hpa_norm_groups = 4;
  int64_t deform_groups = 4;
  int64_t deform_kernel = 3;
  int64_t network_side = 224;
  int64_t base_channels = 16;  // backbone stage-0 width; stages are x1,x2,x4,x8,x8
  bool freeze_backbone = true;
  uint64_t init_seed = 1;
  std::string backbone = "toy";

  std::array<int64_t, 5> stage_channels() const {
    return {base_channels, base_channels * 2, base_channels * 4, base_channels * 8, base_channels * 8};
  }
};

// Reduced configuration used by the double-precision gradient checks. The
// input side stays large enough that F_m keeps a 2x2 spatial extent;
// anything smaller collapses HPA's group norm onto single elements.
inline ModelConfig reduced_config() {
  ModelConfig cfg;
  cfg.k_patches = 3;
  cfg.embed_dim = 16;
  cfg.base_channels = 4;
  cfg.network_side = 128;
  return cfg;
}

namespace detail {
inline int64_t norm_groups_for(int64_t channels) {
  if (channels % 4 == 0) return 4;
  if (channels % 2 == 0) return 2;
  return 1;
}

// Fixed 3x3 kernels for the frozen backbone. The cascade pairs a smoothing
// kernel with a Laplacian detail kernel at every stage, with group norm and
// SiLU in between, so the pooled stage-4 channels read out multi-scale
// contrast statistics (a small scattering transform). Random weights here mix
// the bands with arbitrary signs and the pooled features stop generalizing
// across contents.
inline const double kGauss3[9] = {1 / 16.0, 2 / 16.0, 1 / 16.0, 2 / 16.0, 4 / 16.0,
                                  2 / 16.0, 1 / 16.0, 2 / 16.0, 1 / 16.0};
inline const double kLap3[9] = {0, 0.25, 0, 0.25, -1.0, 0.25, 0, 0.25, 0};
inline const double kSobelX[9] = {-1 / 8.0, 0, 1 / 8.0, -2 / 8.0, 0, 2 / 8.0, -1 / 8.0, 0, 1 / 8.0};
inline const double kSobelY[9] = {-1 / 8.0, -2 / 8.0, -1 / 8.0, 0, 0, 0, 1 / 8.0, 2 / 8.0, 1 / 8.0};
inline const double kDiag1[9] = {-2 / 8.0, -1 / 8.0, 0, -1 / 8.0, 0, 1 / 8.0, 0, 1 / 8.0, 2 / 8.0};
inline const double kDiag2[9] = {0, -1 / 8.0, -2 / 8.0, 1 / 8.0, 0, -1 / 8.0, 2 / 8.0, 1 / 8.0, 0};

// 3 -> cout: luminance/opponent color weights crossed with a kernel menu.
template <typename T>
void bank_rgb(Tensor<T>& w) {
  const int64_t cout = w.shape()[0];
  const double lum[3] = {1 / 3.0, 1 / 3.0, 1 / 3.0};
  const double rg[3] = {0.5, -0.5, 0.0};
  const double by[3] = {-0.25, -0.25, 0.5};
  struct Entry {
    const double* color;
    const double* kernel;
  };
  const Entry menu[8] = {{lum, kGauss3}, {lum, kLap3},   {lum, kSobelX}, {lum, kSobelY},
                         {rg, kGauss3},  {by, kGauss3},  {lum, kDiag1},  {lum, kDiag2}};
  for (int64_t o = 0; o < cout; ++o) {
    const Entry& e = menu[o % 8];
    for (int64_t c = 0; c < 3; ++c)
      for (int64_t i = 0; i < 9; ++i) w[(o * 3 + c) * 9 + i] = static_cast<T>(e.color[c] * e.kernel[i]);
  }
}

// cin -> cout with cout = 2*cin: each input channel emits a smoothed copy and
// a Laplacian detail copy.
template <typename T>
void bank_pairs(Tensor<T>& w) {
  const int64_t cout = w.shape()[0], cin = w.shape()[1];
  for (int64_t i = 0; i < w.numel(); ++i) w[i] = T(0);
  for (int64_t o = 0; o < cout; ++o) {
    const int64_t src = (o / 2) % cin;
    const double* k = (o % 2 == 0) ? kGauss3 : kLap3;
    for (int64_t i = 0; i < 9; ++i) w[(o * cin + src) * 9 + i] = static_cast<T>(k[i]);
  }
}

// cin -> cout, same width: per-channel smoothing.
template <typename T>
void bank_smooth(Tensor<T>& w) {
  const int64_t cout = w.shape()[0], cin = w.shape()[1];
  for (int64_t i = 0; i < w.numel(); ++i) w[i] = T(0);
  for (int64_t o = 0; o < cout; ++o)
    for (int64_t i = 0; i < 9; ++i) w[(o * cin + (o % cin)) * 9 + i] = static_cast<T>(kGauss3[i]);
}
}  // namespace detail

// Optional record of intermediate shapes, compared against the frozen ledger.
using ShapeTrace = std::vector<std::pair<std::string, std::vector<int64_t>>>;

template <typename T>
struct Backbone {
  // stage0: two stride-2 convs (3 -> c0/2 -> c0); stages 1-3 stride 2; stage 4 stride 1.
  // A fixed scattering-style cascade: one whole-tensor contrast normalization
  // up front, rectified band decompositions through the middle, and a log
  // compression of the stage-4 energy maps so pooled features stay on a
  // comparable scale across distortion strengths.
  ConvLayer<T> conv0a, conv0b, conv1, conv2, conv3, conv4;
  GroupNormLayer<T> gn0a;

  Backbone() = default;
  Backbone(ParamStore<T>& ps, Rng& rng, const ModelConfig& cfg) {
    const auto ch = cfg.stage_channels();
    const bool tr = !cfg.freeze_backbone;
    const int64_t c0h = std::max<int64_t>(2, ch[0] / 2);
    conv0a = ConvLayer<T>(ps, rng, "backbone.stage0.conv0", 3, c0h, 3, 2, 1, tr);
    gn0a = GroupNormLayer<T>(ps, "backbone.stage0.gn0", c0h, 1, tr);
    conv0b = ConvLayer<T>(ps, rng, "backbone.stage0.conv1", c0h, ch[0], 3, 2, 1, tr);
    conv1 = ConvLayer<T>(ps, rng, "backbone.stage1.conv", ch[0], ch[1], 3, 2, 1, tr);
    conv2 = ConvLayer<T>(ps, rng, "backbone.stage2.conv", ch[1], ch[2], 3, 2, 1, tr);
    conv3 = ConvLayer<T>(ps, rng, "backbone.stage3.conv", ch[2], ch[3], 3, 2, 1, tr);
    conv4 = ConvLayer<T>(ps, rng, "backbone.stage4.conv", ch[3], ch[4], 3, 1, 1, tr);
    detail::bank_rgb(ps[conv0a.w].value);
    detail::bank_pairs(ps[conv0b.w].value);
    detail::bank_pairs(ps[conv1.w].value);
    detail::bank_pairs(ps[conv2.w].value);
    detail::bank_pairs(ps[conv3.w].value);
    detail::bank_smooth(ps[conv4.w].value);
  }

  std::array<Var<T>, 5> operator()(Tape<T>& t, const Binding<T>& bd, Var<T> x) const {
    Var<T> h = gn0a(t, bd, conv0a(t, bd, x));
    Var<T> f0 = nn::absval(t, conv0b(t, bd, h));
    Var<T> f1 = nn::absval(t, conv1(t, bd, f0));
    Var<T> f2 = nn::absval(t, conv2(t, bd, f1));
    Var<T> f3 = nn::absval(t, conv3(t, bd, f2));
    Var<T> f4 = nn::log1p_scaled(t, conv4(t, bd, f3), T(100));
    return {f0, f1, f2, f3, f4};
  }
};

template <typename T>
struct Pdff {
  std::array<DeformLayer<T>, 4> adjust;
  ConvLayer<T> proj01, proj12, proj23;  // stride-2 pointwise channel-match projections
  DeformLayer<T> fuse12_d, fuse23_d;
  DaaBlock<T> daa_inner, daa_outer;
  ConvLayer<T> align0, align1;  // stride-2 pointwise alignment to the coarsest summand

  Pdff() = default;
  Pdff(ParamStore<T>& ps, Rng& rng, const ModelConfig& cfg) {
    const auto ch = cfg.stage_channels();
    const int64_t g = cfg.deform_groups, k = cfg.deform_kernel;
    for (int i = 0; i < 4; ++i)
      adjust[static_cast<size_t>(i)] =
          DeformLayer<T>(ps, rng, "pdff.adjust" + std::to_string(i), ch[static_cast<size_t>(i)],
                         ch[static_cast<size_t>(i)], k, g, 1);
    proj01 = ConvLayer<T>(ps, rng, "pdff.proj01", ch[0], ch[1], 1, 2, 0);
    proj12 = ConvLayer<T>(ps, rng, "pdff.proj12", ch[1], ch[2], 1, 2, 0);
    proj23 = ConvLayer<T>(ps, rng, "pdff.proj23", ch[2], ch[3], 1, 2, 0);
    fuse12_d = DeformLayer<T>(ps, rng, "pdff.fuse12", ch[2], ch[2], k, g, 1);
    fuse23_d = DeformLayer<T>(ps, rng, "pdff.fuse23", ch[3], ch[3], k, g, 1);
    daa_inner = DaaBlock<T>(ps, rng, "pdff.daa0", "pdff.daa0", ch[1], g, k);
    align0 = ConvLayer<T>(ps, rng, "pdff.align0", ch[1], ch[3], 1, 2, 0);
    align1 = ConvLayer<T>(ps, rng, "pdff.align1", ch[2], ch[3], 1, 2, 0);
    daa_outer = DaaBlock<T>(ps, rng, "pdff.daa1", "pdff.daa1", ch[3], g, k);
  }

  Var<T> operator()(Tape<T>& t, const Binding<T>& bd, const std::array<Var<T>, 5>& f, ShapeTrace* trace) const {
    std::array<Var<T>, 4> fd;
    for (int i = 0; i < 4; ++i) fd[static_cast<size_t>(i)] = adjust[static_cast<size_t>(i)](t, bd, f[static_cast<size_t>(i)]);
    Var<T> fuse01 = nn::add(t, proj01(t, bd, fd[0]), fd[1]);
    Var<T> fuse12 = nn::add(t, proj12(t, bd, fd[1]), fd[2]);
    Var<T> fuse23 = nn::add(t, proj23(t, bd, fd[2]), fd[3]);
    Var<T> fuse12d = fuse12_d(t, bd, fuse12);
    Var<T> fuse23d = fuse23_d(t, bd, fuse23);
    Var<T> inner = daa_inner(t, bd, fuse01);
    Var<T> sum = nn::add(t, nn::add(t, align0(t, bd, inner), align1(t, bd, fuse12d)), fuse23d);
    Var<T> fm = daa_outer(t, bd, sum);
    if (trace) {
      for (int i = 0; i < 4; ++i)
        trace->emplace_back("F_d" + std::to_string(i), t.val(fd[static_cast<size_t>(i)]).shape());
      trace->emplace_back("Fuse01", t.val(fuse01).shape());
      trace->emplace_back("Fuse12", t.val(fuse12).shape());
      trace->emplace_back("Fuse12_d", t.val(fuse12d).shape());
      trace->emplace_back("Fuse23", t.val(fuse23).shape());
      trace->emplace_back("Fuse23_d", t.val(fuse23d).shape());
      trace->emplace_back("DAA_Fuse01", t.val(inner).shape());
      trace->emplace_back("F_m", t.val(fm).shape());
    }
    return fm;
  }
};

template <typename T>
struct Hpa {
  DeformLayer<T> fa_deform;
  ConvLayer<T> fa_conv, mix, conv2, proj;
  GroupNormLayer<T> gn;
  int64_t groups = 8;

  Hpa() = default;
  Hpa(ParamStore<T>& ps, Rng& rng, const ModelConfig& cfg) : groups(cfg.hpa_groups) {
    const int64_t c = cfg.stage_channels()[4];
    if (c % groups != 0) throw std::invalid_argument("hpa: channels not divisible by hpa_groups");
    const int64_t cg = c / groups;
    fa_deform = DeformLayer<T>(ps, rng, "hpa.fa", c, c, cfg.deform_kernel, cfg.deform_groups, 1);
    fa_conv = ConvLayer<T>(ps, rng, "hpa.fa_conv", c, c, 3, 1, 1);
    mix = ConvLayer<T>(ps, rng, "hpa.mix", cg, cg, 1, 1, 0);
    gn = GroupNormLayer<T>(ps, "hpa.gn", cg, cg % cfg.hpa_norm_groups == 0 ? cfg.hpa_norm_groups : 1);
    conv2 = ConvLayer<T>(ps, rng, "hpa.conv2", cg, cg, 3, 1, 1);
    proj = ConvLayer<T>(ps, rng, "hpa.proj", c, c, 1, 1, 0);
  }

  Var<T> operator()(Tape<T>& t, const Binding<T>& bd, Var<T> fm, ShapeTrace* trace) const {
    const int64_t n = t.val(fm).dim(0), c = t.val(fm).dim(1), h = t.val(fm).dim(2), w = t.val(fm).dim(3);
    const int64_t cg = c / groups;
    Var<T> fa = fa_conv(t, bd, fa_deform(t, bd, fm));
    Var<T> xg = nn::reshape(t, fa, {n * groups, cg, h, w});
    // Directional context: pooled rows and columns mixed jointly, split back
    // into sigmoid gates for each axis.
    Var<T> ph = nn::pool_mean_h(t, xg);                            // [B, cg, 1, w]
    Var<T> pw = nn::transpose_hw(t, nn::pool_mean_w(t, xg));       // [B, cg, 1, h]
    Var<T> mixed = mix(t, bd, nn::concat_last(t, ph, pw));         // [B, cg, 1, w+h]
    Var<T> gate_w = nn::sigmoid(t, nn::slice_last(t, mixed, 0, w));
    Var<T> gate_h = nn::sigmoid(t, nn::transpose_hw(t, nn::slice_last(t, mixed, w, h)));
    Var<T> gated = nn::mul_bcast_over_w(t, nn::mul_bcast_over_h(t, xg, gate_w), gate_h);
    Var<T> x1 = gn(t, bd, gated);
    Var<T> w1 = nn::softmax_rows(t, nn::global_avg_pool(t, x1));
    Var<T> x2 = conv2(t, bd, xg);
    Var<T> w2 = nn::softmax_rows(t, nn::global_avg_pool(t, x2));
    Var<T> combined = nn::add(t, nn::mul_bcast_chan(t, x1, w2), nn::mul_bcast_chan(t, x2, w1));
    Var<T> fhpa_g = nn::mul(t, combined, xg);
    Var<T> fhpa = proj(t, bd, nn::reshape(t, fhpa_g, {n, c, h, w}));
    if (trace) {
      trace->emplace_back("F_a", t.val(fa).shape());
      trace->emplace_back("X_g", t.val(xg).shape());
      trace->emplace_back("F_hpa", t.val(fhpa).shape());
    }
    return fhpa;
  }
};

template <typename T>
struct Lgqa {
  LinearLayer<T> embed;
  size_t pos = 0;
  size_t wq = 0, wk = 0, wv = 0, wo = 0;
  LayerNormLayer<T> ln1, ln2;
  LinearLayer<T> fc1, fc2;
  LinearLayer<T> score;
  int64_t heads = 8, dim = 128;

  Lgqa() = default;
  Lgqa(ParamStore<T>& ps, Rng& rng, const ModelConfig& cfg) : heads(cfg.heads), dim(cfg.embed_dim) {
    if (dim % heads != 0) throw std::invalid_argument("lgqa: embed_dim not divisible by heads");
    const int64_t c4 = cfg.stage_channels()[4];
    embed = LinearLayer<T>(ps, rng, "embed", c4, dim);
    // Scaled-identity embedding: tokens start as amplified copies of the
    // pooled features, so the unit-variance positional table is a small
    // additive term instead of drowning the image signal.
    {
      Tensor<T>& we = ps[embed.w].value;
      for (int64_t i = 0; i < we.numel(); ++i) we[i] = T(0);
      for (int64_t o = 0; o < dim; ++o) we[o * c4 + o % c4] = T(8);
    }
    pos = ps.add("embed.pos", nn::init_normal<T>(rng, {cfg.k_patches, dim}), true);
    const double lim = nn::xavier_limit(dim, dim);
    wq = ps.add("attn.wq", nn::init_uniform<T>(rng, {dim, dim}, lim), true);
    wk = ps.add("attn.wk", nn::init_uniform<T>(rng, {dim, dim}, lim), true);
    wv = ps.add("attn.wv", nn::init_uniform<T>(rng, {dim, dim}, lim), true);
    // Residual branches start silent (zero output projections) and the head
    // starts near zero: the score begins as a thin readout of the pooled
    // features, which the short fixed-lr training budget can actually fit,
    // and the attention/FFN corrections fade in as their outputs grow.
    wo = ps.add("attn.wo", Tensor<T>({dim, dim}), true);
    ln1 = LayerNormLayer<T>(ps, "ffn.ln1", dim);
    fc1 = LinearLayer<T>(ps, rng, "ffn.fc1", dim, dim * 4);
    fc2 = LinearLayer<T>(ps, rng, "ffn.fc2", dim * 4, dim, 0.0, true);
    ln2 = LayerNormLayer<T>(ps, "ffn.ln2", dim);
    score = LinearLayer<T>(ps, rng, "head", dim, 1, 0.001, true);
  }

  Var<T> operator()(Tape<T>& t, const Binding<T>& bd, Var<T> v, ShapeTrace* trace) const {
    const int64_t k = t.val(v).dim(0);
    if (k != t.val(bd[pos]).dim(0))
      throw std::invalid_argument("lgqa: token count does not match trained positional table");
    Var<T> xp = nn::add(t, embed(t, bd, v), bd[pos]);
    const int64_t dk = dim / heads;
    const T att_scale = T(1) / static_cast<T>(std::sqrt(static_cast<double>(dk)));
    Var<T> q = nn::matmul_nt(t, xp, bd[wq]);
    Var<T> ky = nn::matmul_nt(t, xp, bd[wk]);
    Var<T> vv = nn::matmul_nt(t, xp, bd[wv]);
    Var<T> heads_out;
    for (int64_t hh = 0; hh < heads; ++hh) {
      Var<T> qh = nn::slice_last(t, q, hh * dk, dk);
      Var<T> kh = nn::slice_last(t, ky, hh * dk, dk);
      Var<T> vh = nn::slice_last(t, vv, hh * dk, dk);
      Var<T> attn = nn::softmax_rows(t, nn::scale(t, nn::matmul_nt(t, qh, kh), att_scale));
      Var<T> oh = nn::matmul(t, attn, vh);
      heads_out = hh == 0 ? oh : nn::concat_last(t, heads_out, oh);
    }
    Var<T> vm = nn::matmul_nt(t, heads_out, bd[wo]);
    Var<T> h1 = ln1(t, bd, nn::add(t, vm, xp));
    Var<T> ff = fc2(t, bd, nn::silu(t, fc1(t, bd, h1)));
    Var<T> vo = ln2(t, bd, nn::add(t, ff, h1));
    Var<T> s = score(t, bd, vo);
    if (trace) {
      trace->emplace_back("X_p", t.val(xp).shape());
      trace->emplace_back("V_m", t.val(vm).shape());
      trace->emplace_back("V_o", t.val(vo).shape());
      trace->emplace_back("token_scores", t.val(s).shape());
    }
    return nn::mean_all(t, s);
  }
};

template <typename T>
struct Model {
  ModelConfig cfg;
  ParamStore<T> params;
  Backbone<T> backbone;
  Pdff<T> pdff;
  Hpa<T> hpa;
  Lgqa<T> lgqa;

  explicit Model(const ModelConfig& cfg_) : cfg(cfg_) {
    Rng rng(Rng::mix(cfg.init_seed, 0x6d6f64656c /* "model" */));
    backbone = Backbone<T>(params, rng, cfg);
    pdff = Pdff<T>(params, rng, cfg);
    hpa = Hpa<T>(params, rng, cfg);
    lgqa = Lgqa<T>(params, rng, cfg);
  }

  // One image's K patches, [K, 3, side, side] -> scalar score node.
  Var<T> forward(Tape<T>& t, const Binding<T>& bd, Var<T> patches, ShapeTrace* trace = nullptr) const {
    const Tensor<T>& pv = t.val(patches);
    if (pv.ndim() != 4 || pv.dim(0) != cfg.k_patches || pv.dim(1) != 3 || pv.dim(2) != cfg.network_side ||
        pv.dim(3) != cfg.network_side)
      throw std::invalid_argument("model: expected [" + std::to_string(cfg.k_patches) + ",3," +
                                  std::to_string(cfg.network_side) + "," + std::to_string(cfg.network_side) +
                                  "] patch batch, got " + pv.shape_str());
    auto pyr = backbone(t, bd, patches);
    if (trace)
      for (int i = 0; i < 5; ++i) trace->emplace_back("F_" + std::to_string(i), t.val(pyr[static_cast<size_t>(i)]).shape());
    Var<T> fm = pdff(t, bd, pyr, trace);
    Var<T> fhpa = hpa(t, bd, fm, trace);
    Var<T> v = nn::add(t, nn::global_avg_pool(t, pyr[4]), nn::global_avg_pool(t, fhpa));
    if (trace) trace->emplace_back("V", t.val(v).shape());
    return lgqa(t, bd, v, trace);
  }

  // Convenience: score a patch tensor with no gradient bookkeeping.
  T score(const Tensor<T>& patches) const {
    Tape<T> t;
    Binding<T> bd(t, params, false);
    Var<T> x = t.leaf(patches.clone(), false);
    return t.val(forward(t, bd, x))[0];
  }
};

}  // namespace pqa::model
