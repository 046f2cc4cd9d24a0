#pragma once

#include "dff/image.hpp"
#include "dff/net.hpp"

#include <vector>

namespace dff::match {

struct Pixel
{
    int x = 0;
    int y = 0;

    bool operator==(const Pixel&) const = default;
};

struct MatchPair
{
    Pixel source;
    Pixel target;
    double angle_deg = 0.0;

    bool operator==(const MatchPair&) const = default;
};

struct MatchSet
{
    std::vector<MatchPair> pairs;
    double threshold_deg = 0.0;
};

inline constexpr double kSparseThresholdDeg = 30.0;
inline constexpr double kDenseThresholdDeg = 12.0;

/// Face-pixel mask: true where the pixel holds a face sample.
struct Mask
{
    int width = 0;
    int height = 0;
    std::vector<bool> data;

    bool at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }
};

/// Non-black pixels of a rendered image.
Mask face_mask(const RgbImage& image);

/// Angle in degrees between two unit vectors, with the dot product clamped to [-1, 1].
double angle_deg(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

/**
 * For every source point, the masked target pixel whose descriptor makes
 * the smallest angle with the source descriptor (first in raster order on
 * ties). The pair is kept when that angle is at most `threshold_deg`.
 *
 * @throws std::invalid_argument unless 0 < threshold_deg < 180.
 */
MatchSet sparse_match(const net::FeatureMap& source, const std::vector<Pixel>& points, const net::FeatureMap& target,
                      const Mask& target_mask, double threshold_deg = kSparseThresholdDeg);

struct DenseMatch
{
    MatchSet matches;
    LabelMap correspondence; // target y * width + x per source pixel, or kNoLabel
};

DenseMatch dense_match(const net::FeatureMap& source, const Mask& source_mask, const net::FeatureMap& target,
                       const Mask& target_mask, double threshold_deg = kDenseThresholdDeg);

/// Packs a target pixel into the correspondence map encoding.
inline std::uint32_t pack_pixel(int x, int y, int width)
{
    return static_cast<std::uint32_t>(y) * static_cast<std::uint32_t>(width) + static_cast<std::uint32_t>(x);
}

/**
 * Side-by-side visualization: each matched source pixel is colored by the
 * position of its target (hue from target x, saturation from target y), and
 * the target face pixels are colored by their own position.
 */
RgbImage correspondence_visualization(const DenseMatch& dense, const Mask& target_mask);

} // namespace dff::match
