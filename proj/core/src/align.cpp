#include "dff/align.hpp"

#include "dff/renderer.hpp"

#include "Eigen/QR"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace dff::align {

void DescentStage::validate() const
{
    if (RX.rows() != 2 * kLandmarks68 || bX.size() != 2 * kLandmarks68)
        throw std::invalid_argument("DescentStage: landmark regressor must have 136 rows");
    if (Rw.rows() != 6 || bw.size() != 6)
        throw std::invalid_argument("DescentStage: camera regressor must have 6 rows");
    if (Rw.cols() != RX.cols() || RX.cols() % kLandmarks160 != 0)
        throw std::invalid_argument("DescentStage: feature length must be a multiple of 160 and shared");
    if (!RX.allFinite() || !bX.allFinite() || !Rw.allFinite() || !bw.allFinite())
        throw std::invalid_argument("DescentStage: non-finite entries");
}

void AlignConfig::validate() const
{
    if (!(omega_lan >= 0.0) || !(omega_reg >= 0.0) || omega_lan + omega_reg <= 0.0)
        throw std::invalid_argument("AlignConfig: weights must be non-negative and not both zero");
    if (iterations < 1)
        throw std::invalid_argument("AlignConfig: iterations must be at least 1");
    if (visibility_resolution < 8)
        throw std::invalid_argument("AlignConfig: visibility resolution too small");
}

Eigen::VectorXd interleave(const Eigen::Matrix2Xd& points)
{
    return Eigen::Map<const Eigen::VectorXd>(points.data(), points.size());
}

Eigen::Matrix2Xd deinterleave(const Eigen::VectorXd& v)
{
    if (v.size() % 2 != 0)
        throw std::invalid_argument("deinterleave: odd length");
    return Eigen::Map<const Eigen::Matrix2Xd>(v.data(), 2, v.size() / 2);
}

AffineLandmarks landmark_affine(const face::MorphableModel& model, const std::vector<int>& vertex_ids,
                                const face::CameraParams& w)
{
    const Eigen::Matrix3d R = face::rotation_from_angles(w.alpha, w.beta, w.gamma);
    const Eigen::Matrix<double, 2, 3> sR = w.s * R.topRows<2>();
    const int m1 = model.id_count();
    const int m = model.shape_param_count();
    AffineLandmarks a;
    a.J.resize(2 * static_cast<Eigen::Index>(vertex_ids.size()), m);
    a.offset.resize(2 * static_cast<Eigen::Index>(vertex_ids.size()));
    for (std::size_t i = 0; i < vertex_ids.size(); ++i) {
        const Eigen::Index v = vertex_ids[i];
        if (v < 0 || v >= model.vertex_count())
            throw std::out_of_range("landmark_affine: vertex id outside the model");
        const auto r = static_cast<Eigen::Index>(2 * i);
        a.offset.segment<2>(r) = sR * model.mean_shape.segment<3>(3 * v) + Eigen::Vector2d(w.tx, w.ty);
        a.J.block(r, 0, 2, m1) = sR * model.id_basis.middleRows(3 * v, 3);
        a.J.block(r, m1, 2, m - m1) = sR * model.exp_basis.middleRows(3 * v, 3);
    }
    return a;
}

namespace {

std::vector<bool> visibility_on_mesh(const face::FaceMesh& mesh, const face::CameraParams& w, const AlignConfig& config,
                                     const std::vector<int>& vertex_ids, int width, int height)
{
    const double k = static_cast<double>(config.visibility_resolution) / std::max(width, height);
    face::CameraParams scaled = w;
    scaled.s *= k;
    scaled.tx *= k;
    scaled.ty *= k;
    const int bw = std::max(1, static_cast<int>(std::lround(width * k)));
    const int bh = std::max(1, static_cast<int>(std::lround(height * k)));
    const render::DepthBuffer buffer = render::rasterize(mesh, scaled, bw, bh);
    return render::vertex_visibility(mesh, scaled, vertex_ids, buffer);
}

} // namespace

std::vector<bool> vertex_visibility(const face::MorphableModel& model, const LandmarkState& state,
                                   const AlignConfig& config, const std::vector<int>& vertex_ids, int width,
                                   int height)
{
    return visibility_on_mesh(face::synthesize_shape(model, state.p), state.w, config, vertex_ids, width, height);
}

void refresh_state(const face::MorphableModel& model, LandmarkState& state, const AlignConfig& config, int width,
                   int height)
{
    const face::FaceMesh mesh = face::synthesize_shape(model, state.p);
    state.X = interleave(face::project_points(face::select_vertices(mesh.vertices, model.landmarks68), state.w));
    state.U = interleave(face::project_points(face::select_vertices(mesh.vertices, model.landmarks160), state.w));
    state.V = visibility_on_mesh(mesh, state.w, config, model.landmarks160, width, height);
}

LandmarkState initialize(const face::MorphableModel& model, const Box& box, const AlignConfig& config, int width,
                         int height)
{
    config.validate();
    if (!(box.width > 0.0 && box.height > 0.0) || box.x >= width || box.y >= height || box.x + box.width <= 0.0 ||
        box.y + box.height <= 0.0)
        throw std::invalid_argument("initialize: face box must have positive area inside the image");

    LandmarkState state;
    state.p = face::ShapeParams::zero(model);
    face::CameraParams unit = config.mean_camera;
    unit.s = 1.0;
    unit.tx = 0.0;
    unit.ty = 0.0;
    const Eigen::Matrix2Xd raw = face::project_points(
        face::select_vertices(face::synthesize_vertices(model, state.p), model.landmarks68), unit);
    const Eigen::Vector2d lo = raw.rowwise().minCoeff();
    const Eigen::Vector2d hi = raw.rowwise().maxCoeff();
    if (hi.y() - lo.y() <= 0.0)
        throw std::invalid_argument("initialize: mean landmarks have no vertical extent under the mean camera");

    state.w = config.mean_camera;
    state.w.s = 0.85 * box.height / (hi.y() - lo.y());
    const Eigen::Vector2d center = 0.5 * (lo + hi);
    state.w.tx = box.x + 0.5 * box.width - state.w.s * center.x();
    state.w.ty = box.y + 0.5 * box.height - state.w.s * center.y();
    refresh_state(model, state, config, width, height);
    return state;
}

Eigen::VectorXd stack_descriptors(const net::FeatureMap& fmap, const LandmarkState& state)
{
    const int d = fmap.dim();
    if (state.U.size() != 2 * kLandmarks160 || state.V.size() != static_cast<std::size_t>(kLandmarks160))
        throw std::invalid_argument("stack_descriptors: state must hold 160 dense landmarks");
    Eigen::VectorXd F = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(kLandmarks160) * d);
    for (int i = 0; i < kLandmarks160; ++i)
        if (state.V[i])
            F.segment(static_cast<Eigen::Index>(i) * d, d) = net::sample_feature(fmap, state.U[2 * i], state.U[2 * i + 1]);
    return F;
}

std::pair<Eigen::VectorXd, face::CameraParams> descent_step(const LandmarkState& state, const Eigen::VectorXd& F,
                                                            const DescentStage& stage)
{
    if (stage.RX.cols() != F.size() || stage.Rw.cols() != F.size())
        throw std::invalid_argument("descent_step: feature length does not match the stage");
    if (stage.RX.rows() != state.X.size() || stage.bX.size() != state.X.size() || stage.Rw.rows() != 6 ||
        stage.bw.size() != 6)
        throw std::invalid_argument("descent_step: stage shape does not match the state");
    Eigen::VectorXd target = state.X + stage.RX * F + stage.bX;
    const Eigen::Matrix<double, 6, 1> wv = state.w.to_vector() + stage.Rw * F + stage.bw;
    face::CameraParams w = face::CameraParams::from_vector(wv);
    w.s = std::max(w.s, 1e-6);
    w.beta = std::clamp(w.beta, -std::numbers::pi / 2, std::numbers::pi / 2);
    return {std::move(target), w};
}

face::ShapeParams fit_shape(const face::MorphableModel& model, const Eigen::VectorXd& target_x,
                            const face::CameraParams& w, const AlignConfig& config)
{
    config.validate();
    if (target_x.size() != 2 * static_cast<Eigen::Index>(model.landmarks68.size()))
        throw std::invalid_argument("fit_shape: target must hold every 68-point landmark");
    const AffineLandmarks a = landmark_affine(model, model.landmarks68, w);
    const Eigen::Index m = a.J.cols();
    const Eigen::Index rows = a.J.rows();

    Eigen::VectorXd inv_sd(m);
    inv_sd << model.id_eigen.cwiseInverse().cwiseSqrt(), model.exp_eigen.cwiseInverse().cwiseSqrt();

    Eigen::MatrixXd A(rows + m, m);
    A.topRows(rows) = std::sqrt(config.omega_lan) * a.J;
    A.bottomRows(m) = (std::sqrt(config.omega_reg) * inv_sd).asDiagonal();
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(rows + m);
    rhs.head(rows) = std::sqrt(config.omega_lan) * (target_x - a.offset);

    const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
    if (qr.rank() < m)
        throw std::runtime_error("fit_shape: rank-deficient least-squares system");
    return face::ShapeParams::from_stacked(model, qr.solve(rhs));
}

AlignResult align_from_features(const face::MorphableModel& model, const net::FeatureMap& fmap, const Box& box,
                                const std::vector<DescentStage>& stages, const AlignConfig& config)
{
    if (stages.empty())
        throw std::invalid_argument("align: no descent stages");
    AlignResult result;
    result.state = initialize(model, box, config, fmap.width, fmap.height);
    result.trace.push_back(result.state.X);
    for (const auto& stage : stages) {
        if (stage.feature_length() != static_cast<Eigen::Index>(kLandmarks160) * fmap.dim())
            throw std::invalid_argument("align: stage feature length does not match the descriptor dimension");
        const Eigen::VectorXd F = stack_descriptors(fmap, result.state);
        auto [target, w] = descent_step(result.state, F, stage);
        result.state.p = fit_shape(model, target, w, config);
        result.state.w = w;
        refresh_state(model, result.state, config, fmap.width, fmap.height);
        result.trace.push_back(result.state.X);
    }
    return result;
}

AlignResult align(const face::MorphableModel& model, const RgbImage& image, const Box& box,
                  const net::NetWeights& weights, const std::vector<DescentStage>& stages, const AlignConfig& config)
{
    const net::FeatureMap fmap = net::forward(weights, image);
    return align_from_features(model, fmap, box, stages, config);
}

} // namespace dff::align
