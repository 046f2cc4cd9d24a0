#pragma once

#include "dff/image.hpp"

#include <string>

namespace dff::io {

/// 8-bit RGB PNG; channel values are rounded to the nearest level.
void write_png(const std::string& path, const RgbImage& image);

/// Any PNG libpng can read, converted to 8-bit RGB.
RgbImage read_png(const std::string& path);

} // namespace dff::io
