#pragma once

#include "dff/image.hpp"

#include "Eigen/Core"

#include <array>
#include <optional>
#include <string>
#include <vector>

namespace dff::eval {

/**
 * Mean Euclidean error over visible landmarks divided by sqrt(width * height) of `box`.
 *
 * @throws std::invalid_argument when no landmark is visible or the box is empty.
 */
double nme_bbox(const Eigen::Matrix2Xd& predicted, const Eigen::Matrix2Xd& truth, const std::vector<bool>& visible,
                const Box& box);

/// Mean error over all 68 landmarks divided by the distance between the two ground-truth eye centers.
double nme_interpupil(const Eigen::Matrix2Xd& predicted, const Eigen::Matrix2Xd& truth);

enum class Normalization
{
    BoundingBox,
    InterPupil
};

struct EvalItem
{
    Eigen::Matrix2Xd predicted;
    Eigen::Matrix2Xd truth;
    std::vector<bool> visible; ///< empty means all visible
    Box box;                   ///< used by BoundingBox normalization
    double yaw_deg = 0.0;      ///< ground-truth yaw
};

inline constexpr int kYawBins = 3;

/// 0 for |yaw| in [0, 30], 1 for (30, 60], 2 for (60, 90]; throws beyond 90.
int yaw_bin(double yaw_deg);

struct EvalReport
{
    std::vector<double> per_image;
    std::array<std::optional<double>, kYawBins> bin_means;
    std::array<int, kYawBins> bin_counts{};
    double mean = 0.0;   ///< mean of the non-empty bin means
    double stddev = 0.0; ///< sample standard deviation of the non-empty bin means
};

/// @throws std::invalid_argument on empty input.
EvalReport evaluate(const std::vector<EvalItem>& items, Normalization mode);

/// Aligned text table followed by key=value lines.
std::string format_report(const EvalReport& report);

} // namespace dff::eval
