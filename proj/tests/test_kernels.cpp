#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "pqa/core/rng.hpp"
#include "pqa/kernels/kernels.hpp"

namespace k = pqa::kernels;

namespace {

std::vector<float> rand_f32(size_t n, pqa::Rng& rng) {
  std::vector<float> v(n);
  for (auto& x : v) x = static_cast<float>(rng.uniform(-1.0, 1.0));
  return v;
}

std::vector<double> rand_f64(size_t n, pqa::Rng& rng) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform(-1.0, 1.0);
  return v;
}

template <typename T>
T max_abs_diff(const std::vector<T>& a, const std::vector<T>& b) {
  T m = 0;
  for (size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

struct Shape {
  int64_t m, n, kk;
};

const Shape kShapes[] = {{1, 1, 1}, {3, 5, 7},    {4, 16, 8},    {5, 17, 9},
                         {8, 32, 64}, {33, 47, 129}, {64, 64, 64}, {2, 100, 3}};

template <typename T>
void check_gemm_form(int form, T tol) {
  pqa::Rng rng(0x1234 + form);
  for (const Shape& s : kShapes) {
    // Pad leading dimensions to exercise non-contiguous rows.
    int64_t lda = (form == 2 ? s.m : s.kk) + 3;
    int64_t ldb = (form == 1 ? s.kk : s.n) + 2;
    int64_t ldc = s.n + 1;
    size_t a_elems = static_cast<size_t>(form == 2 ? s.kk * lda : s.m * lda);
    size_t b_elems = static_cast<size_t>(form == 1 ? s.n * ldb : s.kk * ldb);
    size_t c_elems = static_cast<size_t>(s.m * ldc);
    std::vector<T> a, b, c0;
    if constexpr (std::is_same_v<T, float>) {
      a = rand_f32(a_elems, rng);
      b = rand_f32(b_elems, rng);
      c0 = rand_f32(c_elems, rng);
    } else {
      a = rand_f64(a_elems, rng);
      b = rand_f64(b_elems, rng);
      c0 = rand_f64(c_elems, rng);
    }
    auto run = [&](k::Backend be) {
      k::select(be);
      std::vector<T> c = c0;
      if (form == 0) k::gemm_nn(s.m, s.n, s.kk, a.data(), lda, b.data(), ldb, c.data(), ldc);
      if (form == 1) k::gemm_nt(s.m, s.n, s.kk, a.data(), lda, b.data(), ldb, c.data(), ldc);
      if (form == 2) k::gemm_tn(s.m, s.n, s.kk, a.data(), lda, b.data(), ldb, c.data(), ldc);
      return c;
    };
    auto ref = run(k::Backend::scalar);
    for (k::Backend be : k::supported()) {
      if (be == k::Backend::scalar) continue;
      auto got = run(be);
      CAPTURE(k::name(be));
      CAPTURE(s.m);
      CAPTURE(s.n);
      CAPTURE(s.kk);
      CHECK(max_abs_diff(ref, got) <= tol);
    }
  }
  k::select(k::Backend::scalar);
}

}  // namespace

TEST_CASE("gemm forms agree across backends, f32") {
  check_gemm_form<float>(0, 1e-4f);
  check_gemm_form<float>(1, 1e-4f);
  check_gemm_form<float>(2, 1e-4f);
}

TEST_CASE("gemm forms agree across backends, f64") {
  check_gemm_form<double>(0, 1e-12);
  check_gemm_form<double>(1, 1e-12);
  check_gemm_form<double>(2, 1e-12);
}

TEST_CASE("gemm accumulates into C instead of overwriting") {
  k::select(k::Backend::scalar);
  float a = 2.0f, b = 3.0f, c = 10.0f;
  k::gemm_nn(1, 1, 1, &a, 1, &b, 1, &c, 1);
  CHECK(c == doctest::Approx(16.0f));
}

TEST_CASE("gemm_nt and gemm_tn match gemm_nn on explicit transposes") {
  k::select(k::Backend::scalar);
  pqa::Rng rng(7);
  int64_t m = 9, n = 13, kk = 11;
  auto a = rand_f64(static_cast<size_t>(m * kk), rng);   // M x K
  auto b = rand_f64(static_cast<size_t>(kk * n), rng);   // K x N
  std::vector<double> bt(static_cast<size_t>(n * kk));   // N x K
  for (int64_t i = 0; i < kk; ++i)
    for (int64_t j = 0; j < n; ++j) bt[static_cast<size_t>(j * kk + i)] = b[static_cast<size_t>(i * n + j)];
  std::vector<double> at(static_cast<size_t>(kk * m));   // K x M
  for (int64_t i = 0; i < m; ++i)
    for (int64_t p = 0; p < kk; ++p) at[static_cast<size_t>(p * m + i)] = a[static_cast<size_t>(i * kk + p)];

  std::vector<double> c_nn(static_cast<size_t>(m * n), 0.0), c_nt = c_nn, c_tn = c_nn;
  k::gemm_nn(m, n, kk, a.data(), kk, b.data(), n, c_nn.data(), n);
  k::gemm_nt(m, n, kk, a.data(), kk, bt.data(), kk, c_nt.data(), n);
  k::gemm_tn(m, n, kk, at.data(), m, b.data(), n, c_tn.data(), n);
  CHECK(max_abs_diff(c_nn, c_nt) <= 1e-12);
  CHECK(max_abs_diff(c_nn, c_tn) <= 1e-12);
}

TEST_CASE("axpy / vmadd / dot agree across backends") {
  for (int64_t n : {1, 7, 8, 9, 64, 1001}) {
    pqa::Rng rng(100 + n);
    auto x = rand_f32(static_cast<size_t>(n), rng);
    auto y0 = rand_f32(static_cast<size_t>(n), rng);
    auto z0 = rand_f32(static_cast<size_t>(n), rng);

    k::select(k::Backend::scalar);
    auto y_ref = y0;
    k::axpy(n, 0.37f, x.data(), y_ref.data());
    auto z_ref = z0;
    k::vmadd(n, x.data(), y0.data(), z_ref.data());
    float d_ref = k::dot(n, x.data(), y0.data());

    for (k::Backend be : k::supported()) {
      if (be == k::Backend::scalar) continue;
      k::select(be);
      auto y = y0;
      k::axpy(n, 0.37f, x.data(), y.data());
      auto z = z0;
      k::vmadd(n, x.data(), y0.data(), z.data());
      float d = k::dot(n, x.data(), y0.data());
      CAPTURE(k::name(be));
      CAPTURE(n);
      CHECK(max_abs_diff(y_ref, y) <= 1e-6f);
      CHECK(max_abs_diff(z_ref, z) <= 1e-6f);
      CHECK(std::abs(d_ref - d) <= 1e-4f);
    }
  }
  k::select(k::Backend::scalar);
}

TEST_CASE("fast sigmoid matches std::exp reference and across backends") {
  std::vector<float> x;
  for (float v = -20.0f; v <= 20.0f; v += 0.173f) x.push_back(v);
  x.push_back(0.0f);
  x.push_back(-0.0f);
  x.push_back(100.0f);
  x.push_back(-100.0f);
  int64_t n = static_cast<int64_t>(x.size());

  k::select(k::Backend::scalar);
  std::vector<float> sig_ref(x.size()), silu_ref(x.size());
  k::vsigmoid(n, x.data(), sig_ref.data());
  k::vsilu(n, x.data(), silu_ref.data());

  // Accuracy of the polynomial path against the libm sigmoid.
  for (size_t i = 0; i < x.size(); ++i) {
    double exact = 1.0 / (1.0 + std::exp(-static_cast<double>(x[i])));
    CHECK(std::abs(static_cast<double>(sig_ref[i]) - exact) <= 2e-7);
    CHECK(std::abs(static_cast<double>(silu_ref[i]) - static_cast<double>(x[i]) * exact) <= 2e-5);
  }

  for (k::Backend be : k::supported()) {
    if (be == k::Backend::scalar) continue;
    k::select(be);
    std::vector<float> sig(x.size()), sl(x.size());
    k::vsigmoid(n, x.data(), sig.data());
    k::vsilu(n, x.data(), sl.data());
    CAPTURE(k::name(be));
    CHECK(max_abs_diff(sig_ref, sig) <= 2e-6f);
    CHECK(max_abs_diff(silu_ref, sl) <= 2e-5f);
  }
  k::select(k::Backend::scalar);

  // f64 path goes through std::exp everywhere.
  std::vector<double> xd = {-30.0, -2.0, -0.5, 0.0, 0.5, 2.0, 30.0};
  std::vector<double> yd(xd.size());
  k::vsigmoid(static_cast<int64_t>(xd.size()), xd.data(), yd.data());
  for (size_t i = 0; i < xd.size(); ++i)
    CHECK(yd[i] == doctest::Approx(1.0 / (1.0 + std::exp(-xd[i]))).epsilon(1e-14));
}

TEST_CASE("backend selection and parsing") {
  auto sup = k::supported();
  REQUIRE(!sup.empty());
  CHECK(sup.front() == k::Backend::scalar);
  for (k::Backend be : sup) {
    k::select(be);
    CHECK(k::active() == be);
  }
  k::select(k::Backend::scalar);

  k::Backend b;
  CHECK(k::parse("scalar", b));
  CHECK(b == k::Backend::scalar);
  CHECK(k::parse("avx2", b));
  CHECK(b == k::Backend::avx2);
  CHECK(k::parse("neon", b));
  CHECK(b == k::Backend::neon);
  CHECK(k::parse("auto", b));
  CHECK(b == k::preferred());
  CHECK(!k::parse("bogus", b));
  CHECK(std::string(k::name(k::Backend::avx2)) == "avx2");
}
