#pragma once

#include "dff/face_model.hpp"
#include "dff/image.hpp"

#include "Eigen/Core"

#include <cstdint>
#include <vector>

namespace dff::seg {
struct Segmentation;
}

namespace dff::render {

/// Per-pixel nearest camera-space depth and the triangle that produced it.
struct DepthBuffer
{
    int width = 0;
    int height = 0;
    std::vector<double> depth;            // +inf where uncovered
    std::vector<std::int32_t> triangle_id; // kNoTriangle where uncovered

    double depth_at(int x, int y) const { return depth[static_cast<std::size_t>(y) * width + x]; }
    std::int32_t triangle_at(int x, int y) const { return triangle_id[static_cast<std::size_t>(y) * width + x]; }
};

/**
 * Z-buffer rasterization of a mesh under a weak-perspective camera. Pixel
 * centers sit at integer coordinates; coverage uses edge functions with a
 * top-left tie rule and depth is interpolated barycentrically in screen
 * space (exact for weak perspective). On equal depth the lower triangle
 * index wins. Back faces are not culled.
 */
DepthBuffer rasterize(const face::FaceMesh& mesh, const face::CameraParams& w, int width, int height);

/// Tie tolerance used by vertex_visibility: 1e-4 times the mesh's camera-depth range.
double depth_tolerance(const face::FaceMesh& mesh, const face::CameraParams& w);

/**
 * Vertex visibility against the image of `buffer`. A vertex is visible if it
 * projects inside the image and no triangle other than those incident to it
 * covers its exact projected position at a depth nearer by more than
 * depth_tolerance(). Candidate occluders come from a screen-space tile
 * binning of triangle bounding boxes, so sub-pixel slivers at silhouettes
 * are not missed.
 *
 * @throws std::out_of_range for vertex ids outside the mesh.
 */
std::vector<bool> vertex_visibility(const face::FaceMesh& mesh, const face::CameraParams& w,
                                    const std::vector<int>& vertex_ids, const DepthBuffer& buffer);

struct RenderedSample
{
    RgbImage image;
    face::ShapeParams shape;
    face::AlbedoParams albedo;
    face::CameraParams camera;
    Eigen::Vector3d light = Eigen::Vector3d::UnitZ();
    Eigen::Matrix2Xd landmarks68;
    Eigen::Matrix2Xd landmarks160;
    std::vector<bool> visibility160;
};

/// Ambient fraction of albedo added to every lit face pixel.
inline constexpr double kAmbient = 0.25;

/// Area-weighted vertex normals.
Eigen::Matrix3Xd vertex_normals(const face::FaceMesh& mesh);

/**
 * Lambertian render: color = albedo * max(0, n . light) + kAmbient * albedo,
 * clamped to [0, 1], background black. `light` is a unit vector in camera
 * space (+z points toward the viewer).
 */
RenderedSample render_image(const face::MorphableModel& model, const face::ShapeParams& p,
                            const face::AlbedoParams& a, const face::CameraParams& w, const Eigen::Vector3d& light,
                            int width, int height);

/// Fills landmarks68/160 and visibility160 of a sample from its shape and camera.
void annotate_landmarks(const face::MorphableModel& model, RenderedSample& sample, int width, int height);

struct LabeledImage
{
    RgbImage image;
    LabelMap labels;
};

/// Patch label per pixel from the visible triangle; kNoLabel elsewhere.
LabelMap project_patch_labels(const face::MorphableModel& model, const face::ShapeParams& p,
                              const face::CameraParams& w, const seg::Segmentation& segmentation, int width,
                              int height);

struct DatasetConfig
{
    int width = 64;
    int height = 64;
    double max_yaw_deg = 90.0;
    double max_pitch_deg = 20.0;
    double max_roll_deg = 20.0;
    double min_height_fraction = 0.6;
    double max_height_fraction = 0.9;
    double albedo_sigma = 0.05; ///< per-vertex rms albedo deviation of the first mode
};

/**
 * Samples shapes from the model prior, poses and lights, and renders each
 * sample. Images are quantized to 8-bit levels. Deterministic in seed.
 */
std::vector<RenderedSample> generate_dataset(const face::MorphableModel& model, int count, std::uint64_t seed,
                                             const DatasetConfig& config = {});

/// Tight box around the 68 ground-truth landmarks grown by `margin` of its size on every side.
Box landmark_box(const Eigen::Matrix2Xd& landmarks, double margin);

} // namespace dff::render
