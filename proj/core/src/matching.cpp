#include "dff/matching.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace dff::match {

namespace {

void check_threshold(double threshold_deg)
{
    if (!(threshold_deg > 0.0 && threshold_deg < 180.0))
        throw std::invalid_argument("match threshold must lie in (0, 180) degrees");
}

double clamped_angle(double dot)
{
    return std::acos(std::clamp(dot, -1.0, 1.0)) * 180.0 / std::numbers::pi;
}

Eigen::Vector3d hsv_to_rgb(double h, double s, double v)
{
    const double hh = std::fmod(h, 1.0) * 6.0;
    const int i = static_cast<int>(std::floor(hh)) % 6;
    const double f = hh - std::floor(hh);
    const double p = v * (1 - s), q = v * (1 - s * f), t = v * (1 - s * (1 - f));
    switch (i) {
    case 0: return {v, t, p};
    case 1: return {q, v, p};
    case 2: return {p, v, t};
    case 3: return {p, q, v};
    case 4: return {t, p, v};
    default: return {v, p, q};
    }
}

Eigen::Vector3d position_color(int x, int y, int width, int height)
{
    const double hue = width > 1 ? 0.85 * x / (width - 1) : 0.0;
    const double sat = height > 1 ? 0.25 + 0.75 * y / (height - 1) : 1.0;
    return hsv_to_rgb(hue, sat, 1.0);
}

} // namespace

Mask face_mask(const RgbImage& image)
{
    Mask m{image.width, image.height, std::vector<bool>(static_cast<std::size_t>(image.width) * image.height)};
    for (int y = 0; y < image.height; ++y)
        for (int x = 0; x < image.width; ++x)
            m.data[static_cast<std::size_t>(y) * image.width + x] =
                image.at(x, y, 0) > 0.0 || image.at(x, y, 1) > 0.0 || image.at(x, y, 2) > 0.0;
    return m;
}

double angle_deg(const Eigen::VectorXd& a, const Eigen::VectorXd& b)
{
    return clamped_angle(a.dot(b));
}

MatchSet sparse_match(const net::FeatureMap& source, const std::vector<Pixel>& points, const net::FeatureMap& target,
                      const Mask& target_mask, double threshold_deg)
{
    check_threshold(threshold_deg);
    if (target_mask.width != target.width || target_mask.height != target.height)
        throw std::invalid_argument("sparse_match: target mask size does not match the target features");
    if (source.dim() != target.dim())
        throw std::invalid_argument("sparse_match: descriptor dimensions differ");
    MatchSet out;
    out.threshold_deg = threshold_deg;

    std::vector<Eigen::Index> candidates;
    for (int y = 0; y < target.height; ++y)
        for (int x = 0; x < target.width; ++x)
            if (target_mask.at(x, y))
                candidates.push_back(static_cast<Eigen::Index>(y) * target.width + x);
    if (candidates.empty())
        return out;
    Eigen::MatrixXd cand(target.dim(), static_cast<Eigen::Index>(candidates.size()));
    for (std::size_t i = 0; i < candidates.size(); ++i)
        cand.col(static_cast<Eigen::Index>(i)) = target.features.col(candidates[i]);

    for (const Pixel& p : points) {
        if (p.x < 0 || p.y < 0 || p.x >= source.width || p.y >= source.height)
            throw std::invalid_argument("sparse_match: source point outside the image");
        const Eigen::VectorXd f = source.at(p.x, p.y);
        const Eigen::RowVectorXd dots = f.transpose() * cand;
        Eigen::Index best = 0;
        for (Eigen::Index i = 1; i < dots.size(); ++i)
            if (dots[i] > dots[best])
                best = i;
        const double angle = clamped_angle(dots[best]);
        if (angle <= threshold_deg) {
            const auto t = candidates[static_cast<std::size_t>(best)];
            out.pairs.push_back({p, {static_cast<int>(t % target.width), static_cast<int>(t / target.width)}, angle});
        }
    }
    return out;
}

DenseMatch dense_match(const net::FeatureMap& source, const Mask& source_mask, const net::FeatureMap& target,
                       const Mask& target_mask, double threshold_deg)
{
    if (source_mask.width != source.width || source_mask.height != source.height)
        throw std::invalid_argument("dense_match: source mask size does not match the source features");
    std::vector<Pixel> points;
    for (int y = 0; y < source.height; ++y)
        for (int x = 0; x < source.width; ++x)
            if (source_mask.at(x, y))
                points.push_back({x, y});
    DenseMatch out;
    out.matches = sparse_match(source, points, target, target_mask, threshold_deg);
    out.correspondence = LabelMap(source.width, source.height);
    for (const auto& pr : out.matches.pairs)
        out.correspondence.at(pr.source.x, pr.source.y) = pack_pixel(pr.target.x, pr.target.y, target.width);
    return out;
}

RgbImage correspondence_visualization(const DenseMatch& dense, const Mask& target_mask)
{
    const LabelMap& c = dense.correspondence;
    const int tw = target_mask.width, th = target_mask.height;
    RgbImage out(c.width + tw, std::max(c.height, th));
    for (int y = 0; y < c.height; ++y)
        for (int x = 0; x < c.width; ++x) {
            const std::uint32_t t = c.at(x, y);
            if (t == kNoLabel)
                continue;
            const Eigen::Vector3d col =
                position_color(static_cast<int>(t % static_cast<std::uint32_t>(tw)), static_cast<int>(t / static_cast<std::uint32_t>(tw)), tw, th);
            for (int k = 0; k < 3; ++k)
                out.at(x, y, k) = col[k];
        }
    for (int y = 0; y < th; ++y)
        for (int x = 0; x < tw; ++x) {
            if (!target_mask.at(x, y))
                continue;
            const Eigen::Vector3d col = position_color(x, y, tw, th);
            for (int k = 0; k < 3; ++k)
                out.at(c.width + x, y, k) = col[k];
        }
    quantize_to_8bit(out);
    return out;
}

} // namespace dff::match
