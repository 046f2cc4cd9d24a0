#include "dff/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>
#include <vector>

namespace dff::io {

void write_png(const std::string& path, const RgbImage& image)
{
    png_image png;
    std::memset(&png, 0, sizeof png);
    png.version = PNG_IMAGE_VERSION;
    png.width = static_cast<png_uint_32>(image.width);
    png.height = static_cast<png_uint_32>(image.height);
    png.format = PNG_FORMAT_RGB;
    std::vector<png_byte> buf(image.data.size());
    for (std::size_t i = 0; i < buf.size(); ++i) {
        const double c = std::clamp(image.data[i], 0.0, 1.0);
        buf[i] = static_cast<png_byte>(std::lround(c * 255.0));
    }
    if (!png_image_write_to_file(&png, path.c_str(), 0, buf.data(), 0, nullptr))
        throw std::runtime_error("cannot write PNG '" + path + "': " + png.message);
}

RgbImage read_png(const std::string& path)
{
    png_image png;
    std::memset(&png, 0, sizeof png);
    png.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&png, path.c_str()))
        throw std::runtime_error("cannot read PNG '" + path + "': " + png.message);
    png.format = PNG_FORMAT_RGB;
    std::vector<png_byte> buf(PNG_IMAGE_SIZE(png));
    if (!png_image_finish_read(&png, nullptr, buf.data(), 0, nullptr)) {
        png_image_free(&png);
        throw std::runtime_error("cannot decode PNG '" + path + "': " + png.message);
    }
    RgbImage image(static_cast<int>(png.width), static_cast<int>(png.height));
    for (std::size_t i = 0; i < buf.size(); ++i)
        image.data[i] = buf[i] / 255.0;
    return image;
}

} // namespace dff::io
