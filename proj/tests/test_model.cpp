#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <string>
#include <vector>

#include "pqa/model/model.hpp"

using pqa::Rng;
using pqa::Tensor;
using pqa::model::Binding;
using pqa::model::Model;
using pqa::model::ModelConfig;
using pqa::model::ShapeTrace;
using pqa::nn::Tape;
using pqa::nn::Var;

namespace {

template <typename T>
Tensor<T> random_patches(Rng& rng, int64_t k, int64_t side) {
  Tensor<T> t({k, 3, side, side});
  for (int64_t i = 0; i < t.numel(); ++i) t[i] = static_cast<T>(rng.uniform());
  return t;
}

// Adds small noise to every trainable parameter; moves the zero-initialized
// offset heads off the bilinear kinks so finite differences are valid.
template <typename T>
void jitter_params(Model<T>& m, uint64_t seed, double sd = 0.02) {
  Rng rng(seed);
  for (size_t i = 0; i < m.params.size(); ++i) {
    if (!m.params[i].trainable) continue;
    Tensor<T>& v = m.params[i].value;
    for (int64_t j = 0; j < v.numel(); ++j) v[j] += static_cast<T>(rng.normal(0.0, sd));
  }
}

}  // namespace

// Frozen shape table for the default 224x224 / K=10 configuration. Any edit
// to the architecture must consciously update this table.
static const std::vector<std::pair<std::string, std::vector<int64_t>>> kLedger224 = {
    {"F_0", {10, 16, 56, 56}},     {"F_1", {10, 32, 28, 28}},  {"F_2", {10, 64, 14, 14}},
    {"F_3", {10, 128, 7, 7}},      {"F_4", {10, 128, 7, 7}},   {"F_d0", {10, 16, 56, 56}},
    {"F_d1", {10, 32, 28, 28}},    {"F_d2", {10, 64, 14, 14}}, {"F_d3", {10, 128, 7, 7}},
    {"Fuse01", {10, 32, 28, 28}},  {"Fuse12", {10, 64, 14, 14}}, {"Fuse12_d", {10, 64, 14, 14}},
    {"Fuse23", {10, 128, 7, 7}},   {"Fuse23_d", {10, 128, 7, 7}}, {"DAA_Fuse01", {10, 32, 14, 14}},
    {"F_m", {10, 128, 3, 3}},      {"F_a", {10, 128, 3, 3}},   {"X_g", {80, 16, 3, 3}},
    {"F_hpa", {10, 128, 3, 3}},    {"V", {10, 128}},           {"X_p", {10, 128}},
    {"V_m", {10, 128}},            {"V_o", {10, 128}},         {"token_scores", {10, 1}},
};

TEST_CASE("shape ledger for the default 224 configuration") {
  Model<float> m{ModelConfig{}};
  Rng rng(31);
  Tensor<float> patches = random_patches<float>(rng, 10, 224);
  Tape<float> t;
  Binding<float> bd(t, m.params, false);
  ShapeTrace trace;
  Var<float> s = m.forward(t, bd, t.leaf(patches), &trace);
  REQUIRE(trace.size() == kLedger224.size());
  for (size_t i = 0; i < trace.size(); ++i) {
    INFO("entry ", i, ": ", trace[i].first);
    CHECK(trace[i].first == kLedger224[i].first);
    CHECK(trace[i].second == kLedger224[i].second);
  }
  // finite at initialization for [0,1] inputs
  CHECK(std::isfinite(t.val(s)[0]));
  // deterministic: a second run reproduces the score exactly
  CHECK(m.score(patches) == t.val(s)[0]);
  // same seed, fresh model: bit-identical parameters and score
  Model<float> m2{ModelConfig{}};
  CHECK(m2.score(patches) == t.val(s)[0]);
}

TEST_CASE("backbone contract: 8x3x224x224 -> F_0 8x16x56x56") {
  Model<float> m{ModelConfig{}};
  Rng rng(32);
  Tensor<float> x({8, 3, 224, 224});
  for (int64_t i = 0; i < x.numel(); ++i) x[i] = static_cast<float>(rng.uniform());
  Tape<float> t;
  Binding<float> bd(t, m.params, false);
  auto pyr = m.backbone(t, bd, t.leaf(x));
  CHECK(t.val(pyr[0]).shape() == std::vector<int64_t>{8, 16, 56, 56});
  CHECK(t.val(pyr[4]).shape() == std::vector<int64_t>{8, 128, 7, 7});
}

TEST_CASE("wrong patch batch shape is rejected") {
  Model<float> m{ModelConfig{}};
  Tape<float> t;
  Binding<float> bd(t, m.params, false);
  Var<float> bad = t.leaf(Tensor<float>({10, 3, 64, 64}));
  CHECK_THROWS_AS(m.forward(t, bd, bad), std::invalid_argument);
}

TEST_CASE("hpa mixes nothing across samples") {
  Model<double> m{pqa::model::reduced_config()};
  jitter_params(m, 7);
  Rng rng(33);
  const int64_t c4 = m.cfg.stage_channels()[4];
  Tensor<double> fm({2, c4, 3, 3});
  for (int64_t i = 0; i < fm.numel(); ++i) fm[i] = rng.normal();

  Tape<double> t;
  Binding<double> bd(t, m.params, false);
  Tensor<double> both = t.val(m.hpa(t, bd, t.leaf(fm), nullptr)).clone();

  for (int64_t nn = 0; nn < 2; ++nn) {
    Tensor<double> one({1, c4, 3, 3});
    for (int64_t i = 0; i < one.numel(); ++i) one[i] = fm[nn * one.numel() + i];
    Tape<double> t1;
    Binding<double> bd1(t1, m.params, false);
    Tensor<double> y1 = t1.val(m.hpa(t1, bd1, t1.leaf(one), nullptr)).clone();
    for (int64_t i = 0; i < y1.numel(); ++i)
      CHECK(both[nn * y1.numel() + i] == doctest::Approx(y1[i]).epsilon(1e-12));
  }
}

TEST_CASE("zero positional table makes the score patch-order invariant") {
  Model<double> m{pqa::model::reduced_config()};
  jitter_params(m, 8);
  m.params.at("embed.pos").value.fill(0.0);
  Rng rng(34);
  Tensor<double> patches = random_patches<double>(rng, 3, m.cfg.network_side);
  const double base = m.score(patches);
  // rotate patch order 0,1,2 -> 2,0,1
  Tensor<double> rotated(patches.shape());
  const int64_t sz = 3 * m.cfg.network_side * m.cfg.network_side;
  for (int64_t k = 0; k < 3; ++k)
    for (int64_t i = 0; i < sz; ++i) rotated[k * sz + i] = patches[((k + 2) % 3) * sz + i];
  CHECK(std::abs(m.score(rotated) - base) <= 1e-5);
  // with a nonzero positional table the order matters
  Model<double> m2{pqa::model::reduced_config()};
  jitter_params(m2, 8);
  CHECK(std::abs(m2.score(rotated) - m2.score(patches)) > 1e-9);
}

TEST_CASE("gradient presence: every trainable parameter learns") {
  Model<double> m{pqa::model::reduced_config()};
  jitter_params(m, 9);
  Rng rng(35);
  std::vector<bool> nonzero(m.params.size(), false);
  for (int rep = 0; rep < 3; ++rep) {
    Tensor<double> patches = random_patches<double>(rng, 3, m.cfg.network_side);
    Tape<double> t;
    Binding<double> bd(t, m.params, true);
    Var<double> s = m.forward(t, bd, t.leaf(patches));
    t.backward_scalar(s);
    for (size_t i = 0; i < m.params.size(); ++i) {
      if (!m.params[i].trainable) continue;
      if (!t.has_grad(bd[i])) continue;
      const Tensor<double>& g = t.grad(bd[i]);
      for (int64_t j = 0; j < g.numel(); ++j)
        if (g[j] != 0.0) {
          nonzero[i] = true;
          break;
        }
    }
  }
  int trainable = 0, alive = 0;
  for (size_t i = 0; i < m.params.size(); ++i) {
    if (!m.params[i].trainable) continue;
    ++trainable;
    INFO("param ", m.params[i].name);
    CHECK(nonzero[i]);
    if (nonzero[i]) ++alive;
  }
  CHECK(trainable == alive);
  CHECK(trainable > 0);
}

TEST_CASE("frozen backbone receives no gradients") {
  Model<double> m{pqa::model::reduced_config()};
  jitter_params(m, 10);
  Rng rng(36);
  Tensor<double> patches = random_patches<double>(rng, 3, m.cfg.network_side);
  Tape<double> t;
  Binding<double> bd(t, m.params, true);
  Var<double> s = m.forward(t, bd, t.leaf(patches));
  t.backward_scalar(s);
  int frozen = 0;
  for (size_t i = 0; i < m.params.size(); ++i) {
    if (m.params[i].trainable) continue;
    ++frozen;
    CHECK(!t.has_grad(bd[i]));
    CHECK(m.params[i].name.rfind("backbone.", 0) == 0);
  }
  CHECK(frozen > 0);
}

TEST_CASE("reduced full model matches finite differences") {
  Model<double> m{pqa::model::reduced_config()};
  jitter_params(m, 11, 0.05);
  Rng rng(37);
  Tensor<double> patches = random_patches<double>(rng, 3, m.cfg.network_side);

  Tape<double> t;
  Binding<double> bd(t, m.params, true);
  Var<double> s = m.forward(t, bd, t.leaf(patches));
  t.backward_scalar(s);

  // collect trainable params that received gradients
  std::vector<size_t> live;
  for (size_t i = 0; i < m.params.size(); ++i)
    if (m.params[i].trainable && t.has_grad(bd[i])) live.push_back(i);
  REQUIRE(!live.empty());

  Rng pick(0xabc);
  const double h = 1e-5;
  int probes = 0;
  for (int attempt = 0; attempt < 200 && probes < 12; ++attempt) {
    const size_t pi = live[pick.uniform_int(static_cast<uint64_t>(live.size()))];
    Tensor<double>& pv = m.params[pi].value;
    const int64_t idx = static_cast<int64_t>(pick.uniform_int(static_cast<uint64_t>(pv.numel())));
    const double analytic = t.grad(bd[pi])[idx];
    // gradients below the central-difference noise floor cannot be verified
    if (std::abs(analytic) < 1e-5) continue;
    ++probes;
    const double orig = pv[idx];
    pv[idx] = orig + h;
    const double fp = m.score(patches);
    pv[idx] = orig - h;
    const double fm = m.score(patches);
    pv[idx] = orig;
    const double fd = (fp - fm) / (2.0 * h);
    const double denom = std::max({1e-6, std::abs(fd), std::abs(analytic)});
    INFO("param ", m.params[pi].name, " idx ", idx, " analytic ", analytic, " fd ", fd);
    CHECK(std::abs(fd - analytic) / denom <= 1e-3);
  }
  CHECK(probes == 12);
}
