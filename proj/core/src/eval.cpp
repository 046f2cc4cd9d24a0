#include "dff/eval.hpp"

#include "dff/face_model.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace dff::eval {

namespace {

void check_shapes(const Eigen::Matrix2Xd& predicted, const Eigen::Matrix2Xd& truth)
{
    if (predicted.cols() != truth.cols() || predicted.cols() == 0)
        throw std::invalid_argument("nme: prediction and truth must have the same non-zero landmark count");
}

Eigen::Vector2d eye_center(const Eigen::Matrix2Xd& points, const std::array<int, 6>& ids)
{
    Eigen::Vector2d c = Eigen::Vector2d::Zero();
    for (int i : ids)
        c += points.col(i);
    return c / static_cast<double>(ids.size());
}

std::string fixed(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", v);
    return buf;
}

} // namespace

double nme_bbox(const Eigen::Matrix2Xd& predicted, const Eigen::Matrix2Xd& truth, const std::vector<bool>& visible,
                const Box& box)
{
    check_shapes(predicted, truth);
    if (!visible.empty() && visible.size() != static_cast<std::size_t>(truth.cols()))
        throw std::invalid_argument("nme_bbox: visibility mask length differs from the landmark count");
    if (!(box.width > 0.0 && box.height > 0.0))
        throw std::invalid_argument("nme_bbox: box must have positive area");
    double sum = 0.0;
    int count = 0;
    for (Eigen::Index i = 0; i < truth.cols(); ++i) {
        if (!visible.empty() && !visible[static_cast<std::size_t>(i)])
            continue;
        sum += (predicted.col(i) - truth.col(i)).norm();
        ++count;
    }
    if (count == 0)
        throw std::invalid_argument("nme_bbox: no visible landmarks");
    return sum / count / std::sqrt(box.width * box.height);
}

double nme_interpupil(const Eigen::Matrix2Xd& predicted, const Eigen::Matrix2Xd& truth)
{
    check_shapes(predicted, truth);
    if (truth.cols() != 68)
        throw std::invalid_argument("nme_interpupil: needs the 68-point layout");
    const double pupil = (eye_center(truth, face::kRightEye68) - eye_center(truth, face::kLeftEye68)).norm();
    if (!(pupil > 0.0))
        throw std::invalid_argument("nme_interpupil: zero inter-pupil distance");
    return (predicted - truth).colwise().norm().mean() / pupil;
}

int yaw_bin(double yaw_deg)
{
    const double a = std::abs(yaw_deg);
    if (!(a <= 90.0))
        throw std::invalid_argument("yaw_bin: |yaw| exceeds 90 degrees");
    if (a <= 30.0)
        return 0;
    return a <= 60.0 ? 1 : 2;
}

EvalReport evaluate(const std::vector<EvalItem>& items, Normalization mode)
{
    if (items.empty())
        throw std::invalid_argument("evaluate: no results");
    EvalReport r;
    std::array<double, kYawBins> sums{};
    for (const auto& it : items) {
        const double v = mode == Normalization::BoundingBox ? nme_bbox(it.predicted, it.truth, it.visible, it.box)
                                                            : nme_interpupil(it.predicted, it.truth);
        r.per_image.push_back(v);
        const int b = yaw_bin(it.yaw_deg);
        sums[b] += v;
        ++r.bin_counts[b];
    }
    std::vector<double> means;
    for (int b = 0; b < kYawBins; ++b)
        if (r.bin_counts[b] > 0) {
            r.bin_means[b] = sums[b] / r.bin_counts[b];
            means.push_back(*r.bin_means[b]);
        }
    for (double m : means)
        r.mean += m;
    r.mean /= static_cast<double>(means.size());
    if (means.size() > 1) {
        double ss = 0.0;
        for (double m : means)
            ss += (m - r.mean) * (m - r.mean);
        r.stddev = std::sqrt(ss / static_cast<double>(means.size() - 1));
    }
    return r;
}

std::string format_report(const EvalReport& report)
{
    static const char* names[kYawBins] = {"[0,30]", "(30,60]", "(60,90]"};
    std::ostringstream os;
    os << "bin        count  nme\n";
    for (int b = 0; b < kYawBins; ++b) {
        char line[96];
        std::snprintf(line, sizeof line, "%-10s %5d  %s\n", names[b], report.bin_counts[b],
                      report.bin_means[b] ? fixed(*report.bin_means[b]).c_str() : "-");
        os << line;
    }
    os << "Mean                    " << fixed(report.mean) << "\n";
    os << "Std                     " << fixed(report.stddev) << "\n";
    os << "images=" << report.per_image.size() << "\n";
    for (int b = 0; b < kYawBins; ++b)
        os << "bin" << b << "_mean=" << (report.bin_means[b] ? fixed(*report.bin_means[b]) : std::string("absent")) << "\n";
    os << "mean=" << fixed(report.mean) << "\n";
    os << "std=" << fixed(report.stddev) << "\n";
    return os.str();
}

} // namespace dff::eval
