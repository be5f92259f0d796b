#pragma once

#include <string>

#include "pqa/erp/image.hpp"

namespace pqa::io {

// Reads an 8- or 16-bit gray/RGB PNG (alpha stripped, palette expanded) and
// normalizes to [0, 1]. Throws std::runtime_error on I/O or decode failure.
erp::Image load_png(const std::string& path);

// Writes a 1- or 3-channel image; values are clamped to [0, 1] first.
// bit_depth must be 8 or 16.
void save_png(const std::string& path, const erp::Image& img, int bit_depth = 16);

}  // namespace pqa::io
