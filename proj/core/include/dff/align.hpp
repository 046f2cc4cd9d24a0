#pragma once

#include "dff/face_model.hpp"
#include "dff/image.hpp"
#include "dff/net.hpp"

#include "Eigen/Core"

#include <utility>
#include <vector>

namespace dff::align {

inline constexpr int kLandmarks68 = 68;
inline constexpr int kLandmarks160 = 160;

/**
 * Current landmark estimate of one image. X interleaves the 68 landmark
 * coordinates (x0, y0, x1, y1, ...), U does the same for the 160 dense
 * landmarks, and V marks which dense landmarks are visible.
 */
struct LandmarkState
{
    Eigen::VectorXd X;
    Eigen::VectorXd U;
    std::vector<bool> V;
    face::ShapeParams p;
    face::CameraParams w;
};

/// One learned linear update: landmark displacement and camera increment from stacked descriptors.
struct DescentStage
{
    Eigen::MatrixXd RX; // 136 x F
    Eigen::VectorXd bX; // 136
    Eigen::MatrixXd Rw; // 6 x F
    Eigen::VectorXd bw; // 6

    Eigen::Index feature_length() const { return RX.cols(); }
    /// Throws std::invalid_argument when shapes are inconsistent or entries non-finite.
    void validate() const;
};

struct AlignConfig
{
    double omega_lan = 1.0;
    double omega_reg = 1e-3;
    int iterations = 3;
    face::CameraParams mean_camera;
    int visibility_resolution = 128;

    void validate() const;
};

/// Landmark projection written as an affine map of the shape parameters: Y(w, p) = offset + J * p.
struct AffineLandmarks
{
    Eigen::MatrixXd J;
    Eigen::VectorXd offset;
};

AffineLandmarks landmark_affine(const face::MorphableModel& model, const std::vector<int>& vertex_ids,
                                const face::CameraParams& w);

/// Interleaves a 2 x L matrix into a 2L vector, and back.
Eigen::VectorXd interleave(const Eigen::Matrix2Xd& points);
Eigen::Matrix2Xd deinterleave(const Eigen::VectorXd& v);

/**
 * Recomputes X, U and V of `state` from its p and w. Visibility comes from
 * a depth buffer rendered at `visibility_resolution` pixels along the longer
 * image side.
 */
void refresh_state(const face::MorphableModel& model, LandmarkState& state, const AlignConfig& config, int width,
                   int height);

/// Visibility of arbitrary model vertices under the state's shape and camera, same rule as refresh_state.
std::vector<bool> vertex_visibility(const face::MorphableModel& model, const LandmarkState& state,
                                   const AlignConfig& config, const std::vector<int>& vertex_ids, int width,
                                   int height);

/**
 * Mean shape and mean camera, with scale and translation chosen so the
 * bounding box of the projected 68 landmarks is centered in `box` and
 * spans 85% of its height.
 *
 * @throws std::invalid_argument for a box without positive area inside the image.
 */
LandmarkState initialize(const face::MorphableModel& model, const Box& box, const AlignConfig& config, int width,
                         int height);

/// Descriptor of every dense landmark (zero block when invisible), concatenated in landmark order.
Eigen::VectorXd stack_descriptors(const net::FeatureMap& fmap, const LandmarkState& state);

/**
 * targetX = X + RX F + bX and w' = w + Rw F + bw. The scale is kept
 * positive and the yaw is clamped to [-pi/2, pi/2].
 */
std::pair<Eigen::VectorXd, face::CameraParams> descent_step(const LandmarkState& state, const Eigen::VectorXd& F,
                                                            const DescentStage& stage);

/**
 * Minimizer of omega_lan |targetX - Y(w, p)|^2 + omega_reg (p_id' D_id^-1 p_id + p_exp' D_exp^-1 p_exp)
 * over the 68 landmark vertices.
 *
 * @throws std::runtime_error when the least-squares system is rank deficient.
 */
face::ShapeParams fit_shape(const face::MorphableModel& model, const Eigen::VectorXd& target_x,
                            const face::CameraParams& w, const AlignConfig& config);

struct AlignResult
{
    LandmarkState state;
    std::vector<Eigen::VectorXd> trace; ///< X after initialization and after every stage
};

/// Runs every stage starting from initialize(); the feature map is reused across stages.
AlignResult align_from_features(const face::MorphableModel& model, const net::FeatureMap& fmap, const Box& box,
                                const std::vector<DescentStage>& stages, const AlignConfig& config);

/// Extracts the feature map once, then align_from_features.
AlignResult align(const face::MorphableModel& model, const RgbImage& image, const Box& box,
                  const net::NetWeights& weights, const std::vector<DescentStage>& stages, const AlignConfig& config);

} // namespace dff::align
