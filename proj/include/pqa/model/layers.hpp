#pragma once

#include <algorithm>
#include <string>

#include "pqa/nn/deform.hpp"
#include "pqa/nn/ops.hpp"
#include "pqa/nn/params.hpp"

// Thin layer wrappers: each registers its parameters in the store at
// construction (fixed order => deterministic init and checkpoint layout) and
// applies the matching op when called with a tape + binding.

namespace pqa::model {

using nn::Binding;
using nn::ParamStore;
using nn::Tape;
using nn::Var;

template <typename T>
struct ConvLayer {
  size_t w = 0, b = 0;
  bool has_bias = true;
  int64_t stride = 1, pad = 0, groups = 1;

  ConvLayer() = default;
  ConvLayer(ParamStore<T>& ps, Rng& rng, const std::string& name, int64_t cin, int64_t cout, int64_t k,
            int64_t stride_, int64_t pad_, bool trainable = true, bool zero_init = false, int64_t groups_ = 1)
      : stride(stride_), pad(pad_), groups(groups_) {
    const int64_t fan_in = (cin / groups_) * k * k;
    Tensor<T> wt = zero_init ? Tensor<T>({cout, cin / groups_, k, k})
                             : nn::init_uniform<T>(rng, {cout, cin / groups_, k, k}, nn::he_limit(fan_in));
    w = ps.add(name + ".weight", std::move(wt), trainable);
    b = ps.add(name + ".bias", Tensor<T>({cout}), trainable);
  }

  Var<T> operator()(Tape<T>& t, const Binding<T>& bd, Var<T> x) const {
    return nn::conv2d(t, x, bd[w], bd[b], stride, pad, groups);
  }
};

template <typename T>
struct LinearLayer {
  size_t w = 0, b = 0;

  LinearLayer() = default;
  LinearLayer(ParamStore<T>& ps, Rng& rng, const std::string& name, int64_t din, int64_t dout, bool trainable = true)
      : LinearLayer(ps, rng, name, din, dout, nn::xavier_limit(din, dout), trainable) {}
  LinearLayer(ParamStore<T>& ps, Rng& rng, const std::string& name, int64_t din, int64_t dout, double limit,
              bool trainable)
      : w(ps.add(name + ".weight", nn::init_uniform<T>(rng, {dout, din}, limit), trainable)),
        b(ps.add(name + ".bias", Tensor<T>({dout}), trainable)) {}

  Var<T> operator()(Tape<T>& t, const Binding<T>& bd, Var<T> x) const { return nn::linear(t, x, bd[w], bd[b]); }
};

template <typename T>
struct GroupNormLayer {
  size_t gamma = 0, beta = 0;
  int64_t groups = 1;

  GroupNormLayer() = default;
  GroupNormLayer(ParamStore<T>& ps, const std::string& name, int64_t channels, int64_t groups_, bool trainable = true)
      : gamma(ps.add(name + ".gamma", Tensor<T>::full({channels}, T(1)), trainable)),
        beta(ps.add(name + ".beta", Tensor<T>({channels}), trainable)),
        groups(groups_) {}

  Var<T> operator()(Tape<T>& t, const Binding<T>& bd, Var<T> x) const {
    return nn::group_norm(t, x, groups, bd[gamma], bd[beta]);
  }
};

template <typename T>
struct LayerNormLayer {
  size_t gamma = 0, beta = 0;

  LayerNormLayer() = default;
  LayerNormLayer(ParamStore<T>& ps, const std::string& name, int64_t dim, bool trainable = true)
      : gamma(ps.add(name + ".gamma", Tensor<T>::full({dim}, T(1)), trainable)),
        beta(ps.add(name + ".beta", Tensor<T>({dim}), trainable)) {}

  Var<T> operator()(Tape<T>& t, const Binding<T>& bd, Var<T> x) const {
    return nn::layer_norm(t, x, bd[gamma], bd[beta]);
  }
};

// Deformable conv site: zero-initialized offset head (3x3 conv emitting
// 2*G*k^2 offset channels then G*k^2 modulation logits), grouped core weights,
// and the 1x1 output projection. Parameters live under `deform.<site>.*`.
template <typename T>
struct DeformLayer {
  ConvLayer<T> offset_head;
  size_t w = 0;
  ConvLayer<T> pw;
  int64_t k = 3, groups = 4, stride = 1, pad = 1;

  DeformLayer() = default;
  DeformLayer(ParamStore<T>& ps, Rng& rng, const std::string& site, int64_t cin, int64_t cout, int64_t k_,
              int64_t groups_, int64_t stride_, bool trainable = true)
      : k(k_), groups(groups_), stride(stride_), pad(k_ / 2) {
    const std::string base = "deform." + site;
    offset_head =
        ConvLayer<T>(ps, rng, base + ".offset_head", cin, 3 * groups_ * k_ * k_, 3, stride_, 1, trainable, true);
    w = ps.add(base + ".weight", nn::init_uniform<T>(rng, {cin, cin / groups_, k_, k_}, nn::he_limit((cin / groups_) * k_ * k_)),
               trainable);
    pw = ConvLayer<T>(ps, rng, base + ".pw", cin, cout, 1, 1, 0, trainable);
  }

  Var<T> operator()(Tape<T>& t, const Binding<T>& bd, Var<T> x) const {
    const int64_t k2 = k * k;
    Var<T> field = offset_head(t, bd, x);
    Var<T> offsets = nn::slice_channels(t, field, 0, 2 * groups * k2);
    Var<T> logits = nn::slice_channels(t, field, 2 * groups * k2, groups * k2);
    Var<T> m = nn::deform_softmax(t, logits, groups);
    Var<T> core = nn::deform_core(t, x, bd[w], offsets, m, stride, pad, groups);
    return pw(t, bd, core);
  }
};

// Distortion-aware attention block: deform + pointwise, channel gate
// (squeeze-excite style, reduction 4), spatial gate (7x7 single-channel conv,
// stride 1, padding 3), then 2x2 max pooling.
template <typename T>
struct DaaBlock {
  DeformLayer<T> deform;
  ConvLayer<T> pw;
  LinearLayer<T> fc1, fc2;
  ConvLayer<T> sa;

  DaaBlock() = default;
  DaaBlock(ParamStore<T>& ps, Rng& rng, const std::string& site, const std::string& name, int64_t c,
           int64_t deform_groups, int64_t deform_k, bool trainable = true) {
    deform = DeformLayer<T>(ps, rng, site, c, c, deform_k, deform_groups, 1, trainable);
    pw = ConvLayer<T>(ps, rng, name + ".pw", c, c, 1, 1, 0, trainable);
    const int64_t cr = std::max<int64_t>(1, c / 4);
    fc1 = LinearLayer<T>(ps, rng, name + ".ca.fc1", c, cr, trainable);
    fc2 = LinearLayer<T>(ps, rng, name + ".ca.fc2", cr, c, trainable);
    sa = ConvLayer<T>(ps, rng, name + ".sa.conv", c, 1, 7, 1, 3, trainable);
  }

  Var<T> operator()(Tape<T>& t, const Binding<T>& bd, Var<T> x) const {
    Var<T> fn = pw(t, bd, deform(t, bd, x));
    Var<T> gate_c = nn::sigmoid(t, fc2(t, bd, nn::relu(t, fc1(t, bd, nn::global_avg_pool(t, fn)))));
    Var<T> fc = nn::mul_bcast_chan(t, fn, gate_c);
    Var<T> gate_s = nn::sigmoid(t, sa(t, bd, fc));
    Var<T> fs = nn::mul_bcast_spatial(t, fc, gate_s);
    return nn::maxpool2(t, fs);
  }
};

}  // namespace pqa::model
