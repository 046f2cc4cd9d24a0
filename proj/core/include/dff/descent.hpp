#pragma once

#include "dff/align.hpp"
#include "dff/net.hpp"
#include "dff/renderer.hpp"

#include "Eigen/Core"

#include <optional>
#include <vector>

namespace dff::descent {

struct RidgeSolution
{
    Eigen::MatrixXd R; // T x F
    Eigen::VectorXd b; // T
};

/**
 * Minimizes sum_i |t_i - R f_i - b|^2 + lambda (|R|_F^2 + |b|^2), with the
 * features as rows of `features` (N x F) and targets as rows of `targets`
 * (N x T). The intercept is an extra constant feature and is penalized like
 * the other coefficients. Uses the primal system when F + 1 <= N and the
 * equivalent dual system otherwise.
 *
 * @throws std::runtime_error when lambda is 0 and the system is rank deficient.
 */
RidgeSolution ridge_solve(const Eigen::MatrixXd& features, const Eigen::MatrixXd& targets, double lambda);

struct RegressionConfig
{
    std::optional<double> lambda1; ///< landmark regression; defaults to lambda_per_sample * N
    std::optional<double> lambda2; ///< camera regression; defaults to lambda_per_sample * N
    double lambda_per_sample = 1.0;
    int stage_count = 3;

    double landmark_lambda(std::size_t n) const { return lambda1.value_or(lambda_per_sample * static_cast<double>(n)); }
    double camera_lambda(std::size_t n) const { return lambda2.value_or(lambda_per_sample * static_cast<double>(n)); }
};

/// Current per-image states (all sharing one generic shape) and their ground truth.
struct TrainState
{
    std::vector<align::LandmarkState> states;
    std::vector<Eigen::VectorXd> truth_x;
    std::vector<face::CameraParams> truth_w;
    face::ShapeParams generic;
};

/// Ridge regressions from stacked descriptors (one row per image) to the remaining landmark and camera offsets.
align::DescentStage learn_stage(const TrainState& state, const Eigen::MatrixXd& feature_stacks,
                                const RegressionConfig& config);

/**
 * Shared shape parameters minimizing
 * (omega_lan / N) sum_i |targets_i - Y(w_i, p)|^2 + omega_reg * regularizer(p),
 * solved through the accumulated normal equations.
 */
face::ShapeParams update_generic_shape(const face::MorphableModel& model, const std::vector<Eigen::VectorXd>& targets,
                                       const std::vector<face::CameraParams>& cameras,
                                       const align::AlignConfig& config);

struct CascadeResult
{
    std::vector<align::DescentStage> stages;
    std::vector<std::vector<Eigen::VectorXd>> x_trace; ///< [stage][image]: X after init and after each stage
};

/**
 * Learns `config.stage_count` stages on rendered samples. Every image starts
 * from initialize() on the tight box of its ground-truth landmarks grown by
 * 10% per side; each stage is learned on descriptors stacked at the current
 * states, applied, followed by a generic-shape refit.
 */
CascadeResult learn_cascade(const face::MorphableModel& model, const std::vector<render::RenderedSample>& samples,
                            const net::NetWeights& weights, const align::AlignConfig& align_config,
                            const RegressionConfig& config);

/// Training box rule: tight landmark box with a 10% margin on every side.
inline Box training_box(const Eigen::Matrix2Xd& landmarks68) { return render::landmark_box(landmarks68, 0.1); }

} // namespace dff::descent
