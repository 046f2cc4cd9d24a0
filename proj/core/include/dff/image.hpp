#pragma once

#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

namespace dff {

/// Sentinel for "no covering triangle" in depth buffers.
inline constexpr std::int32_t kNoTriangle = -1;

/// Sentinel for unlabeled pixels in label maps and correspondence maps.
inline constexpr std::uint32_t kNoLabel = std::numeric_limits<std::uint32_t>::max();

/**
 * Interleaved RGB image with channel values in [0, 1]. Pixel (x, y) has its
 * center at integer image coordinates; origin top-left, x right, y down.
 */
struct RgbImage
{
    int width = 0;
    int height = 0;
    std::vector<double> data; // height * width * 3

    RgbImage() = default;
    RgbImage(int w, int h) : width(w), height(h), data(static_cast<std::size_t>(w) * h * 3, 0.0)
    {
        if (w < 1 || h < 1)
            throw std::invalid_argument("RgbImage: size must be positive");
    }

    double& at(int x, int y, int c) { return data[(static_cast<std::size_t>(y) * width + x) * 3 + c]; }
    double at(int x, int y, int c) const { return data[(static_cast<std::size_t>(y) * width + x) * 3 + c]; }

    bool operator==(const RgbImage&) const = default;
};

/// Per-pixel u32 map (patch labels, or packed target coordinates).
struct LabelMap
{
    int width = 0;
    int height = 0;
    std::vector<std::uint32_t> data; // row-major

    LabelMap() = default;
    LabelMap(int w, int h) : width(w), height(h), data(static_cast<std::size_t>(w) * h, kNoLabel) {}

    std::uint32_t& at(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }
    std::uint32_t at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }

    bool operator==(const LabelMap&) const = default;
};

/// Rounds every channel to the nearest 8-bit level, so a PNG round trip is lossless.
inline void quantize_to_8bit(RgbImage& image)
{
    for (double& v : image.data) {
        const double c = v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
        v = static_cast<double>(static_cast<int>(c * 255.0 + 0.5)) / 255.0;
    }
}

/// Axis-aligned box in image coordinates.
struct Box
{
    double x = 0.0;
    double y = 0.0;
    double width = 0.0;
    double height = 0.0;
};

} // namespace dff
