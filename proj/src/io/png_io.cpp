#include "pqa/io/png_io.hpp"

#include <png.h>

#include <cstdio>
#include <memory>
#include <stdexcept>
#include <vector>

namespace pqa::io {
namespace {

struct FileCloser {
  void operator()(FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<FILE, FileCloser>;

}  // namespace

erp::Image load_png(const std::string& path) {
  FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) throw std::runtime_error("load_png: cannot open " + path);

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw std::runtime_error("load_png: png_create_read_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw std::runtime_error("load_png: png_create_info_struct failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw std::runtime_error("load_png: decode error in " + path);
  }

  png_init_io(png, fp.get());
  png_read_info(png, info);

  png_uint_32 width = png_get_image_width(png, info);
  png_uint_32 height = png_get_image_height(png, info);
  int color_type = png_get_color_type(png, info);
  int bit_depth = png_get_bit_depth(png, info);

  if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  png_set_strip_alpha(png);
  if (bit_depth == 16) png_set_swap(png);  // stream is big-endian; we read little-endian words
  png_read_update_info(png, info);

  int channels = png_get_channels(png, info);
  bit_depth = png_get_bit_depth(png, info);
  if (channels != 1 && channels != 3) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw std::runtime_error("load_png: unsupported channel count in " + path);
  }

  const size_t rowbytes = png_get_rowbytes(png, info);
  std::vector<png_byte> raster(rowbytes * height);
  std::vector<png_bytep> rows(height);
  for (png_uint_32 y = 0; y < height; ++y) rows[y] = raster.data() + y * rowbytes;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  erp::Image img(channels, static_cast<int64_t>(height), static_cast<int64_t>(width));
  if (bit_depth == 16) {
    const float scale = 1.0f / 65535.0f;
    for (png_uint_32 y = 0; y < height; ++y) {
      const uint16_t* row = reinterpret_cast<const uint16_t*>(rows[y]);
      for (png_uint_32 x = 0; x < width; ++x)
        for (int c = 0; c < channels; ++c)
          img.at(c, y, x) = static_cast<float>(row[x * static_cast<png_uint_32>(channels) + static_cast<png_uint_32>(c)]) * scale;
    }
  } else {
    const float scale = 1.0f / 255.0f;
    for (png_uint_32 y = 0; y < height; ++y) {
      const png_byte* row = rows[y];
      for (png_uint_32 x = 0; x < width; ++x)
        for (int c = 0; c < channels; ++c)
          img.at(c, y, x) = static_cast<float>(row[x * static_cast<png_uint_32>(channels) + static_cast<png_uint_32>(c)]) * scale;
    }
  }
  return img;
}

void save_png(const std::string& path, const erp::Image& img, int bit_depth) {
  if (bit_depth != 8 && bit_depth != 16) throw std::invalid_argument("save_png: bit_depth must be 8 or 16");
  const int64_t channels = img.channels();
  if (channels != 1 && channels != 3) throw std::invalid_argument("save_png: image must have 1 or 3 channels");

  FilePtr fp(std::fopen(path.c_str(), "wb"));
  if (!fp) throw std::runtime_error("save_png: cannot open " + path);

  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw std::runtime_error("save_png: png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw std::runtime_error("save_png: png_create_info_struct failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw std::runtime_error("save_png: encode error for " + path);
  }

  png_init_io(png, fp.get());
  const int color_type = channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB;
  png_set_IHDR(png, info, static_cast<png_uint_32>(img.width()), static_cast<png_uint_32>(img.height()), bit_depth,
               color_type, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  if (bit_depth == 16) png_set_swap(png);

  auto clamp01 = [](float v) { return v < 0.0f ? 0.0f : (v > 1.0f ? 1.0f : v); };
  const int64_t w = img.width(), h = img.height();
  if (bit_depth == 16) {
    std::vector<uint16_t> row(static_cast<size_t>(w * channels));
    for (int64_t y = 0; y < h; ++y) {
      for (int64_t x = 0; x < w; ++x)
        for (int64_t c = 0; c < channels; ++c)
          row[static_cast<size_t>(x * channels + c)] =
              static_cast<uint16_t>(clamp01(img.at(c, y, x)) * 65535.0f + 0.5f);
      png_write_row(png, reinterpret_cast<png_bytep>(row.data()));
    }
  } else {
    std::vector<uint8_t> row(static_cast<size_t>(w * channels));
    for (int64_t y = 0; y < h; ++y) {
      for (int64_t x = 0; x < w; ++x)
        for (int64_t c = 0; c < channels; ++c)
          row[static_cast<size_t>(x * channels + c)] = static_cast<uint8_t>(clamp01(img.at(c, y, x)) * 255.0f + 0.5f);
      png_write_row(png, row.data());
    }
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

}  // namespace pqa::io
