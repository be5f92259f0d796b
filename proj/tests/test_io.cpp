#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>

#include "pqa/core/rng.hpp"
#include "pqa/io/png_io.hpp"

using namespace pqa;

namespace {

std::string temp_path(const char* name) { return (std::filesystem::temp_directory_path() / name).string(); }

erp::Image random_image(int64_t c, int64_t h, int64_t w, uint64_t seed) {
  Rng rng(seed);
  erp::Image img(c, h, w);
  for (int64_t i = 0; i < img.data.numel(); ++i) img.data[i] = static_cast<float>(rng.uniform());
  return img;
}

}  // namespace

TEST_CASE("png 16-bit round trip") {
  auto img = random_image(1, 24, 48, 1);
  auto path = temp_path("pqa_png16.png");
  io::save_png(path, img, 16);
  auto back = io::load_png(path);
  REQUIRE(back.channels() == 1);
  REQUIRE(back.height() == 24);
  REQUIRE(back.width() == 48);
  for (int64_t i = 0; i < img.data.numel(); ++i) CHECK(std::abs(back.data[i] - img.data[i]) <= 0.5f / 65535.0f + 1e-7f);
  std::remove(path.c_str());
}

TEST_CASE("png 8-bit rgb round trip") {
  auto img = random_image(3, 16, 20, 2);
  auto path = temp_path("pqa_png8.png");
  io::save_png(path, img, 8);
  auto back = io::load_png(path);
  REQUIRE(back.channels() == 3);
  for (int64_t i = 0; i < img.data.numel(); ++i) CHECK(std::abs(back.data[i] - img.data[i]) <= 0.5f / 255.0f + 1e-6f);
  std::remove(path.c_str());
}

TEST_CASE("png io errors") {
  CHECK_THROWS(io::load_png("/nonexistent/path/x.png"));
  erp::Image img = random_image(1, 4, 4, 3);
  CHECK_THROWS(io::save_png(temp_path("pqa_bad.png"), img, 12));
  CHECK_THROWS(io::save_png("/nonexistent/dir/x.png", img, 8));
}
