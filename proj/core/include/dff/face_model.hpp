#pragma once

#include "Eigen/Core"

#include <array>
#include <cstdint>
#include <vector>

namespace dff::face {

using Triangle = std::array<int, 3>;

/// Triangle mesh with fixed connectivity; vertices are the columns of a 3 x n matrix.
struct FaceMesh
{
    Eigen::Matrix3Xd vertices;
    std::vector<Triangle> triangles;

    int vertex_count() const { return static_cast<int>(vertices.cols()); }
    int triangle_count() const { return static_cast<int>(triangles.size()); }
};

/**
 * Linear face model: shape = mean + id_basis * p_id + exp_basis * p_exp,
 * albedo = mean_albedo + alb_basis * p_alb. Shape and albedo vectors stack
 * per-vertex triples (x0, y0, z0, x1, ...). Basis columns have unit norm; the
 * variance of each coefficient lives in id_eigen / exp_eigen.
 */
struct MorphableModel
{
    Eigen::VectorXd mean_shape;
    Eigen::MatrixXd id_basis;
    Eigen::MatrixXd exp_basis;
    Eigen::VectorXd mean_albedo;
    Eigen::MatrixXd alb_basis;
    Eigen::VectorXd id_eigen;
    Eigen::VectorXd exp_eigen;
    std::vector<Triangle> triangles;
    std::vector<int> landmarks68;
    std::vector<int> landmarks160;

    int vertex_count() const { return static_cast<int>(mean_shape.size() / 3); }
    int id_count() const { return static_cast<int>(id_basis.cols()); }
    int exp_count() const { return static_cast<int>(exp_basis.cols()); }
    int shape_param_count() const { return id_count() + exp_count(); }

    /// Throws std::invalid_argument describing the first violated invariant.
    void validate() const;
};

struct ShapeParams
{
    Eigen::VectorXd id;
    Eigen::VectorXd exp;

    static ShapeParams zero(const MorphableModel& model);
    /// Concatenation (p_id, p_exp).
    Eigen::VectorXd stacked() const;
    static ShapeParams from_stacked(const MorphableModel& model, const Eigen::VectorXd& p);
};

struct AlbedoParams
{
    Eigen::VectorXd alb;
};

/// Weak-perspective camera: scale, pitch/yaw/roll in radians, image translation in pixels.
struct CameraParams
{
    double s = 1.0;
    double alpha = 0.0;
    double beta = 0.0;
    double gamma = 0.0;
    double tx = 0.0;
    double ty = 0.0;

    /// Order (s, alpha, beta, gamma, tx, ty).
    Eigen::Matrix<double, 6, 1> to_vector() const;
    static CameraParams from_vector(const Eigen::Matrix<double, 6, 1>& v);

    bool operator==(const CameraParams&) const = default;
};

FaceMesh synthesize_shape(const MorphableModel& model, const ShapeParams& p);

/// Vertex positions (3 x n) only; same arithmetic as synthesize_shape.
Eigen::Matrix3Xd synthesize_vertices(const MorphableModel& model, const ShapeParams& p);

/// Per-vertex RGB albedo (3n), clamped to [0, 1].
Eigen::VectorXd synthesize_albedo(const MorphableModel& model, const AlbedoParams& a);

/// Unclamped T̄ + B·a.
Eigen::VectorXd synthesize_albedo_raw(const MorphableModel& model, const AlbedoParams& a);

/// R = Rz(gamma) * Ry(beta) * Rx(alpha).
Eigen::Matrix3d rotation_from_angles(double alpha, double beta, double gamma);

/// s * [R q]_xy + t for every column q.
Eigen::Matrix2Xd project_points(const Eigen::Matrix3Xd& points, const CameraParams& w);

/// Camera-space depth d(q) = -(R q)_z; smaller is nearer to the viewer.
Eigen::VectorXd camera_depths(const Eigen::Matrix3Xd& points, const CameraParams& w);

/// Gathers the columns listed in `ids`.
Eigen::Matrix3Xd select_vertices(const Eigen::Matrix3Xd& vertices, const std::vector<int>& ids);

/// Indices of the eye landmarks within the 68-point layout.
inline constexpr std::array<int, 6> kRightEye68 = {36, 37, 38, 39, 40, 41};
inline constexpr std::array<int, 6> kLeftEye68 = {42, 43, 44, 45, 46, 47};

struct SyntheticModelOptions
{
    double id_sigma = 0.06;   ///< per-vertex rms displacement of the first identity mode
    double exp_sigma = 0.05;  ///< same, first expression mode
    double decay = 0.8;       ///< geometric decay of mode standard deviations
    int smoothing_passes = 40;
};

/**
 * Procedural stand-in for a scanned morphable model: a face-like front
 * half-ellipsoid (nose, eye sockets, brows, mouth, chin) on a regular grid of
 * at least n vertices, with smooth random bases orthonormalized by QR.
 * Deterministic in seed.
 */
MorphableModel generate_synthetic_model(std::uint64_t seed, int n, int m1, int m2,
                                        const SyntheticModelOptions& options = {});

} // namespace dff::face
