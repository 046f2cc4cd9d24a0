#include "dff/descent.hpp"

#include "Eigen/Cholesky"
#include "Eigen/QR"

#include <stdexcept>

namespace dff::descent {

namespace {

Eigen::MatrixXd augment(const Eigen::MatrixXd& features)
{
    Eigen::MatrixXd x(features.rows(), features.cols() + 1);
    x.leftCols(features.cols()) = features;
    x.col(features.cols()).setOnes();
    return x;
}

} // namespace

RidgeSolution ridge_solve(const Eigen::MatrixXd& features, const Eigen::MatrixXd& targets, double lambda)
{
    const Eigen::Index n = features.rows();
    const Eigen::Index f = features.cols();
    if (n < 1)
        throw std::invalid_argument("ridge_solve: need at least one sample");
    if (targets.rows() != n)
        throw std::invalid_argument("ridge_solve: feature and target row counts differ");
    if (!(lambda >= 0.0))
        throw std::invalid_argument("ridge_solve: lambda must be non-negative");

    const Eigen::MatrixXd x = augment(features);
    Eigen::MatrixXd theta; // (F + 1) x T
    if (lambda == 0.0) {
        if (f + 1 <= n) {
            const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
            if (qr.rank() < f + 1)
                throw std::runtime_error("ridge_solve: rank-deficient features with lambda = 0");
            theta = qr.solve(targets);
        } else {
            const Eigen::MatrixXd gram = x * x.transpose();
            const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(gram);
            if (qr.rank() < n)
                throw std::runtime_error("ridge_solve: rank-deficient features with lambda = 0");
            theta = x.transpose() * qr.solve(targets);
        }
    } else if (f + 1 <= n) {
        Eigen::MatrixXd a = x.transpose() * x;
        a.diagonal().array() += lambda;
        theta = a.llt().solve(x.transpose() * targets);
    } else {
        Eigen::MatrixXd gram = x * x.transpose();
        gram.diagonal().array() += lambda;
        theta = x.transpose() * gram.llt().solve(targets);
    }
    RidgeSolution s;
    s.R = theta.topRows(f).transpose();
    s.b = theta.row(f).transpose();
    return s;
}

align::DescentStage learn_stage(const TrainState& state, const Eigen::MatrixXd& feature_stacks,
                                const RegressionConfig& config)
{
    const std::size_t n = state.states.size();
    if (n == 0 || static_cast<std::size_t>(feature_stacks.rows()) != n || state.truth_x.size() != n ||
        state.truth_w.size() != n)
        throw std::invalid_argument("learn_stage: one feature stack and ground truth per image required");
    const Eigen::Index lx = state.states.front().X.size();
    Eigen::MatrixXd tx(static_cast<Eigen::Index>(n), lx);
    Eigen::MatrixXd tw(static_cast<Eigen::Index>(n), 6);
    for (std::size_t i = 0; i < n; ++i) {
        const auto r = static_cast<Eigen::Index>(i);
        tx.row(r) = (state.truth_x[i] - state.states[i].X).transpose();
        tw.row(r) = (state.truth_w[i].to_vector() - state.states[i].w.to_vector()).transpose();
    }
    const RidgeSolution sx = ridge_solve(feature_stacks, tx, config.landmark_lambda(n));
    const RidgeSolution sw = ridge_solve(feature_stacks, tw, config.camera_lambda(n));
    return {sx.R, sx.b, sw.R, sw.b};
}

face::ShapeParams update_generic_shape(const face::MorphableModel& model, const std::vector<Eigen::VectorXd>& targets,
                                       const std::vector<face::CameraParams>& cameras,
                                       const align::AlignConfig& config)
{
    config.validate();
    if (targets.empty() || targets.size() != cameras.size())
        throw std::invalid_argument("update_generic_shape: need one camera per target and at least one image");
    const Eigen::Index m = model.shape_param_count();
    Eigen::MatrixXd normal = Eigen::MatrixXd::Zero(m, m);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m);
    const double wl = config.omega_lan / static_cast<double>(targets.size());
    for (std::size_t i = 0; i < targets.size(); ++i) {
        const align::AffineLandmarks a = align::landmark_affine(model, model.landmarks68, cameras[i]);
        if (targets[i].size() != a.offset.size())
            throw std::invalid_argument("update_generic_shape: target must hold every 68-point landmark");
        normal.noalias() += wl * a.J.transpose() * a.J;
        rhs.noalias() += wl * a.J.transpose() * (targets[i] - a.offset);
    }
    Eigen::VectorXd inv_var(m);
    inv_var << model.id_eigen.cwiseInverse(), model.exp_eigen.cwiseInverse();
    normal.diagonal() += config.omega_reg * inv_var;
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(normal);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive() || ldlt.vectorD().minCoeff() <= 0.0)
        throw std::runtime_error("update_generic_shape: singular normal equations");
    return face::ShapeParams::from_stacked(model, ldlt.solve(rhs));
}

CascadeResult learn_cascade(const face::MorphableModel& model, const std::vector<render::RenderedSample>& samples,
                            const net::NetWeights& weights, const align::AlignConfig& align_config,
                            const RegressionConfig& config)
{
    if (config.stage_count < 0)
        throw std::invalid_argument("learn_cascade: stage count must be non-negative");
    if (samples.empty())
        throw std::invalid_argument("learn_cascade: no training samples");
    const int width = weights.config.width;
    const int height = weights.config.height;

    TrainState ts;
    ts.generic = face::ShapeParams::zero(model);
    for (const auto& s : samples) {
        if (s.image.width != width || s.image.height != height)
            throw std::invalid_argument("learn_cascade: sample size does not match the network input size");
        ts.states.push_back(align::initialize(model, training_box(s.landmarks68), align_config, width, height));
        ts.truth_x.push_back(align::interleave(s.landmarks68));
        ts.truth_w.push_back(s.camera);
    }

    CascadeResult result;
    const auto snapshot = [&] {
        std::vector<Eigen::VectorXd> xs;
        for (const auto& st : ts.states)
            xs.push_back(st.X);
        result.x_trace.push_back(std::move(xs));
    };
    snapshot();

    const auto n = static_cast<Eigen::Index>(samples.size());
    const Eigen::Index f_len = static_cast<Eigen::Index>(align::kLandmarks160) * weights.config.feature_dim;
    for (int k = 0; k < config.stage_count; ++k) {
        Eigen::MatrixXd stacks(n, f_len);
        for (Eigen::Index i = 0; i < n; ++i) {
            const net::FeatureMap fmap = net::forward(weights, samples[i].image);
            stacks.row(i) = align::stack_descriptors(fmap, ts.states[i]).transpose();
        }
        align::DescentStage stage = learn_stage(ts, stacks, config);

        std::vector<Eigen::VectorXd> targets;
        std::vector<face::CameraParams> cameras;
        for (Eigen::Index i = 0; i < n; ++i) {
            auto [target, w] = align::descent_step(ts.states[i], stacks.row(i).transpose(), stage);
            targets.push_back(std::move(target));
            cameras.push_back(w);
        }
        ts.generic = update_generic_shape(model, targets, cameras, align_config);
        for (Eigen::Index i = 0; i < n; ++i) {
            ts.states[i].p = ts.generic;
            ts.states[i].w = cameras[i];
            align::refresh_state(model, ts.states[i], align_config, width, height);
        }
        result.stages.push_back(std::move(stage));
        snapshot();
    }
    return result;
}

} // namespace dff::descent
