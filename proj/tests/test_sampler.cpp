#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "pqa/aps/sampler.hpp"
#include "pqa/core/rng.hpp"
#include "pqa/erp/geometry.hpp"

using namespace pqa;

namespace {

double phi_cdf(double x) { return 0.5 * (1.0 + std::erf(x / std::sqrt(2.0))); }

}  // namespace

TEST_CASE("pe_density shape and normalization") {
  aps::PriorEquatorParams p;
  CHECK(aps::pe_density(91.3, p) > aps::pe_density(80.0, p));
  CHECK(aps::pe_density(91.3, p) > aps::pe_density(100.0, p));
  for (double d : {1.0, 7.3, 22.0})
    CHECK(aps::pe_density(91.3 + d, p) == doctest::Approx(aps::pe_density(91.3 - d, p)).epsilon(1e-12));
  CHECK_THROWS(aps::pe_density(-0.5, p));
  CHECK_THROWS(aps::pe_density(180.5, p));

  // Simpson quadrature over [0, 180].
  auto integrate = [&p](int n) {
    const double h = 180.0 / n;
    double acc = aps::pe_density(0.0, p) + aps::pe_density(180.0, p);
    for (int i = 1; i < n; ++i) acc += aps::pe_density(i * h, p) * (i % 2 ? 4.0 : 2.0);
    return acc * h / 3.0;
  };
  CHECK(std::abs(integrate(2000) - 1.0) <= 1e-6);

  aps::PriorEquatorParams lp = p;
  lp.family = aps::PriorEquatorParams::Family::laplace;
  auto integrate_l = [&lp](int n) {
    const double h = 180.0 / n;
    double acc = aps::pe_density(0.0, lp) + aps::pe_density(180.0, lp);
    for (int i = 1; i < n; ++i) acc += aps::pe_density(i * h, lp) * (i % 2 ? 4.0 : 2.0);
    return acc * h / 3.0;
  };
  CHECK(std::abs(integrate_l(20000) - 1.0) <= 1e-6);
}

TEST_CASE("equator_mass matches the Gaussian-CDF oracle") {
  aps::PriorEquatorParams p;
  const double oracle = phi_cdf((113.0 - 91.3) / 18.58) - phi_cdf((67.0 - 91.3) / 18.58);
  CHECK(std::abs(aps::equator_mass(p) - oracle) <= 1e-5);  // truncation renorm is ~1e-6
  CHECK(aps::equator_mass(p) == doctest::Approx(0.783).epsilon(1e-3));

  aps::PriorEquatorParams wide = p;
  wide.theta_t = 89.999;
  CHECK(aps::equator_mass(wide) > 0.999);
  aps::PriorEquatorParams narrow = p;
  narrow.theta_t = 1e-6;
  CHECK(aps::equator_mass(narrow) < 1e-5);
}

TEST_CASE("split_counts floor semantics") {
  aps::PriorEquatorParams p;
  auto [k_low, k_high] = aps::split_counts(10, aps::equator_mass(p));
  CHECK(k_low == 7);
  CHECK(k_high == 3);
  CHECK(aps::split_counts(10, 1.0) == std::pair<int64_t, int64_t>{10, 0});
  CHECK(aps::split_counts(0, 0.5) == std::pair<int64_t, int64_t>{0, 0});
  Rng rng(3);
  for (int64_t k = 0; k <= 20; ++k) {
    double m = rng.uniform();
    auto [lo, hi] = aps::split_counts(k, m);
    CHECK(lo + hi == k);
    CHECK(lo >= 0);
    CHECK(hi >= 0);
  }
}

TEST_CASE("patch_dims floors and clamps") {
  CHECK(aps::patch_dims(8192, 4096, 0.1, 0.2) == std::pair<int64_t, int64_t>{819, 819});
  CHECK(aps::patch_dims(10, 10, 0.1, 0.2) == std::pair<int64_t, int64_t>{2, 2});
  CHECK(aps::patch_dims(1024, 512, 0.1, 0.2) == std::pair<int64_t, int64_t>{102, 102});
  CHECK_THROWS(aps::patch_dims(100, 100, 0.0, 0.2));
  CHECK_THROWS(aps::patch_dims(100, 100, 0.1, -0.1));
}

TEST_CASE("build_grid bands and spans") {
  auto g = aps::build_grid(7, 3, 23.0);
  REQUIRE(g.blocks.size() == 10);
  for (int i = 0; i < 7; ++i) {
    CHECK(g.blocks[i].colat_lo == doctest::Approx(67.0));
    CHECK(g.blocks[i].colat_hi == doctest::Approx(113.0));
    CHECK(g.blocks[i].lon_hi - g.blocks[i].lon_lo == doctest::Approx(360.0 / 7));
  }
  // North gets Ceil(3/2) = 2 blocks of 180, south 1 block of 360.
  CHECK(g.blocks[7].colat_lo == doctest::Approx(0.0));
  CHECK(g.blocks[7].colat_hi == doctest::Approx(67.0));
  CHECK(g.blocks[7].lon_hi - g.blocks[7].lon_lo == doctest::Approx(180.0));
  CHECK(g.blocks[8].lon_hi - g.blocks[8].lon_lo == doctest::Approx(180.0));
  CHECK(g.blocks[9].colat_lo == doctest::Approx(113.0));
  CHECK(g.blocks[9].colat_hi == doctest::Approx(180.0));
  CHECK(g.blocks[9].lon_hi - g.blocks[9].lon_lo == doctest::Approx(360.0));

  // Longitude tiling of each band covers [-180, 180).
  CHECK(g.blocks[0].lon_lo == doctest::Approx(-180.0));
  CHECK(g.blocks[6].lon_hi == doctest::Approx(180.0));

  auto g2 = aps::build_grid(10, 0, 23.0);
  CHECK(g2.blocks.size() == 10);
  for (const auto& b : g2.blocks) CHECK(b.colat_lo == doctest::Approx(67.0));
}

TEST_CASE("sample_patch_coords determinism and containment") {
  auto g = aps::build_grid(7, 3, 23.0);
  Rng a(99), b(99);
  auto ca = aps::sample_patch_coords(g, a);
  auto cb = aps::sample_patch_coords(g, b);
  REQUIRE(ca.size() == 10);
  for (size_t i = 0; i < ca.size(); ++i) {
    CHECK(ca[i].colat_deg == cb[i].colat_deg);
    CHECK(ca[i].lon_deg == cb[i].lon_deg);
  }

  Rng rng(123);
  for (int trial = 0; trial < 1000; ++trial) {
    auto cs = aps::sample_patch_coords(g, rng);
    int64_t in_band = 0;
    for (const auto& c : cs) {
      const auto& blk = g.blocks[static_cast<size_t>(c.block_index)];
      CHECK(c.colat_deg >= blk.colat_lo);
      CHECK(c.colat_deg <= blk.colat_hi);
      CHECK(c.lon_deg >= blk.lon_lo);
      CHECK(c.lon_deg <= blk.lon_hi);
      if (c.colat_deg >= 67.0 && c.colat_deg <= 113.0) ++in_band;
    }
    CHECK(in_band == 7);  // exactly K_low by construction
  }
}

TEST_CASE("uniform_grid_coords layouts") {
  auto c1 = aps::uniform_grid_coords(1024, 512, 1);
  REQUIRE(c1.size() == 1);
  CHECK(c1[0].colat_deg == doctest::Approx(90.0));
  CHECK(c1[0].lon_deg == doctest::Approx(0.0));

  auto c4 = aps::uniform_grid_coords(512, 512, 4);
  REQUIRE(c4.size() == 4);
  CHECK(c4[0].colat_deg == doctest::Approx(45.0));
  CHECK(c4[0].lon_deg == doctest::Approx(-90.0));
  CHECK(c4[1].lon_deg == doctest::Approx(90.0));
  CHECK(c4[2].colat_deg == doctest::Approx(135.0));
  CHECK(c4[3].lon_deg == doctest::Approx(90.0));

  for (int64_t k = 1; k <= 100; ++k) {
    auto cs = aps::uniform_grid_coords(1000, 500, k);
    CHECK(cs.size() == static_cast<size_t>(k));
    for (const auto& c : cs) {
      CHECK(c.colat_deg > 0.0);
      CHECK(c.colat_deg < 180.0);
      CHECK(c.lon_deg >= -180.0);
      CHECK(c.lon_deg < 180.0);
    }
  }
}

TEST_CASE("extract_patches constants, wrap oracle, identity resize") {
  erp::Image flat(3, 64, 128);
  for (int64_t c = 0; c < 3; ++c)
    for (int64_t y = 0; y < 64; ++y)
      for (int64_t x = 0; x < 128; ++x) flat.at(c, y, x) = 0.25f * static_cast<float>(c + 1);
  std::vector<aps::PatchCenter> centers = {{90.0, 0.0, 0}, {10.0, 170.0, 1}};
  auto ps = aps::extract_patches(flat, centers, 16, 16, 32);
  REQUIRE(ps.patches.size() == 2);
  for (const auto& p : ps.patches)
    for (int64_t i = 0; i < p.numel(); ++i) {
      int64_t c = i / (32 * 32);
      CHECK(p[i] == doctest::Approx(0.25f * static_cast<float>(c + 1)));
    }

  // Seam wrap with identity resize: explicit modular-index crop oracle.
  Rng rng(7);
  erp::Image img(1, 32, 64);
  for (int64_t y = 0; y < 32; ++y)
    for (int64_t x = 0; x < 64; ++x) img.at(0, y, x) = static_cast<float>(rng.uniform());
  const int64_t pw = 12, phh = 12;
  std::vector<aps::PatchCenter> seam = {{90.0, 179.0, 0}};
  auto sp = aps::extract_patches(img, seam, pw, phh, pw);
  const double rowf = erp::lat_to_rowf(0.0, 32);
  const double colf = erp::lon_to_colf(179.0, 64);
  int64_t r0 = static_cast<int64_t>(std::llround(rowf - (phh - 1) / 2.0));
  int64_t c0 = static_cast<int64_t>(std::llround(colf - (pw - 1) / 2.0));
  for (int64_t y = 0; y < phh; ++y)
    for (int64_t x = 0; x < pw; ++x) {
      float expect = img.at(0, r0 + y, ((c0 + x) % 64 + 64) % 64);
      CHECK(sp.patches[0][y * pw + x] == doctest::Approx(expect));
    }

  // Vertical shift keeps crops in bounds at the pole.
  std::vector<aps::PatchCenter> pole = {{0.5, 0.0, 0}};
  CHECK_NOTHROW(aps::extract_patches(img, pole, pw, phh, 16));

  CHECK_THROWS(aps::extract_patches(img, seam, 65, 12, 16));
  CHECK_THROWS(aps::extract_patches(img, seam, 12, 33, 16));

  // Values stay in [0,1] after resize.
  auto rp = aps::extract_patches(img, seam, 12, 12, 30);
  for (int64_t i = 0; i < rp.patches[0].numel(); ++i) {
    CHECK(rp.patches[0][i] >= 0.0f);
    CHECK(rp.patches[0][i] <= 1.0f);
  }
}

TEST_CASE("sample_image is a pure function of (image, config, seed)") {
  Rng rng(31);
  erp::Image img(1, 64, 128);
  for (int64_t i = 0; i < img.data.numel(); ++i) img.data[i] = static_cast<float>(rng.uniform());
  aps::SamplerConfig cfg;
  cfg.k = 10;
  cfg.network_side = 32;
  Rng s1(777), s2(777);
  auto a = aps::sample_image(img, cfg, s1);
  auto b = aps::sample_image(img, cfg, s2);
  REQUIRE(a.patches.size() == b.patches.size());
  for (size_t i = 0; i < a.patches.size(); ++i)
    for (int64_t j = 0; j < a.patches[i].numel(); ++j) CHECK(a.patches[i][j] == b.patches[i][j]);

  cfg.mode = aps::SamplerConfig::Mode::uniform_grid;
  Rng s3(1);
  auto c = aps::sample_image(img, cfg, s3);
  CHECK(c.patches.size() == 10);
}
