#include "dff/renderer.hpp"
#include "dff/segmentation.hpp"

#include "Eigen/Geometry"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>

namespace dff::render {

namespace {

using Point = Eigen::Vector2d;

double edge(const Point& a, const Point& b, const Point& p)
{
    return (b.x() - a.x()) * (p.y() - a.y()) - (b.y() - a.y()) * (p.x() - a.x());
}

// With positive orientation and y pointing down, interior lies below top edges and right of left edges.
bool is_top_left(const Point& a, const Point& b)
{
    const double dx = b.x() - a.x();
    const double dy = b.y() - a.y();
    return (dy == 0.0 && dx > 0.0) || dy < 0.0;
}

bool covers(double weight, bool top_left)
{
    return weight > 0.0 || (weight == 0.0 && top_left);
}

struct ScreenTriangle
{
    Point a, b, c;
    double da, db, dc;
    double area;
    int ia, ib, ic; // mesh vertex ids after orientation fix
};

// Returns false for degenerate or non-finite projections.
bool make_screen_triangle(const Eigen::Matrix2Xd& proj, const Eigen::VectorXd& depth, const face::Triangle& t,
                          ScreenTriangle& out)
{
    out.ia = t[0];
    out.ib = t[1];
    out.ic = t[2];
    out.a = proj.col(t[0]);
    out.b = proj.col(t[1]);
    out.c = proj.col(t[2]);
    out.da = depth[t[0]];
    out.db = depth[t[1]];
    out.dc = depth[t[2]];
    out.area = edge(out.a, out.b, out.c);
    if (!std::isfinite(out.area) || out.area == 0.0)
        return false;
    if (out.area < 0.0) {
        std::swap(out.b, out.c);
        std::swap(out.db, out.dc);
        std::swap(out.ib, out.ic);
        out.area = -out.area;
    }
    return true;
}

// Closed containment at an arbitrary point; fills barycentric weights.
bool contains(const ScreenTriangle& t, const Point& p, Eigen::Vector3d& bary)
{
    const double w0 = edge(t.b, t.c, p);
    const double w1 = edge(t.c, t.a, p);
    const double w2 = edge(t.a, t.b, p);
    if (w0 < 0.0 || w1 < 0.0 || w2 < 0.0)
        return false;
    bary = Eigen::Vector3d(w0, w1, w2) / t.area;
    return true;
}

} // namespace

DepthBuffer rasterize(const face::FaceMesh& mesh, const face::CameraParams& w, int width, int height)
{
    if (width < 1 || height < 1)
        throw std::invalid_argument("rasterize: image size must be positive");
    DepthBuffer buf;
    buf.width = width;
    buf.height = height;
    buf.depth.assign(static_cast<std::size_t>(width) * height, std::numeric_limits<double>::infinity());
    buf.triangle_id.assign(static_cast<std::size_t>(width) * height, kNoTriangle);

    const Eigen::Matrix2Xd proj = face::project_points(mesh.vertices, w);
    const Eigen::VectorXd depth = face::camera_depths(mesh.vertices, w);

    ScreenTriangle st;
    for (int tid = 0; tid < mesh.triangle_count(); ++tid) {
        if (!make_screen_triangle(proj, depth, mesh.triangles[tid], st))
            continue;
        const double min_x = std::min({st.a.x(), st.b.x(), st.c.x()});
        const double max_x = std::max({st.a.x(), st.b.x(), st.c.x()});
        const double min_y = std::min({st.a.y(), st.b.y(), st.c.y()});
        const double max_y = std::max({st.a.y(), st.b.y(), st.c.y()});
        const int x0 = std::max(0, static_cast<int>(std::ceil(min_x)));
        const int x1 = std::min(width - 1, static_cast<int>(std::floor(max_x)));
        const int y0 = std::max(0, static_cast<int>(std::ceil(min_y)));
        const int y1 = std::min(height - 1, static_cast<int>(std::floor(max_y)));
        if (x0 > x1 || y0 > y1)
            continue;
        const bool tl0 = is_top_left(st.b, st.c);
        const bool tl1 = is_top_left(st.c, st.a);
        const bool tl2 = is_top_left(st.a, st.b);
        for (int y = y0; y <= y1; ++y) {
            for (int x = x0; x <= x1; ++x) {
                const Point p(x, y);
                const double w0 = edge(st.b, st.c, p);
                const double w1 = edge(st.c, st.a, p);
                const double w2 = edge(st.a, st.b, p);
                if (!covers(w0, tl0) || !covers(w1, tl1) || !covers(w2, tl2))
                    continue;
                const double d = (w0 * st.da + w1 * st.db + w2 * st.dc) / st.area;
                const std::size_t idx = static_cast<std::size_t>(y) * width + x;
                if (d < buf.depth[idx]) {
                    buf.depth[idx] = d;
                    buf.triangle_id[idx] = tid;
                }
            }
        }
    }
    return buf;
}

double depth_tolerance(const face::FaceMesh& mesh, const face::CameraParams& w)
{
    if (mesh.vertex_count() == 0)
        return 0.0;
    const Eigen::VectorXd depth = face::camera_depths(mesh.vertices, w);
    return 1e-4 * (depth.maxCoeff() - depth.minCoeff());
}

std::vector<bool> vertex_visibility(const face::FaceMesh& mesh, const face::CameraParams& w,
                                    const std::vector<int>& vertex_ids, const DepthBuffer& buffer)
{
    const int n = mesh.vertex_count();
    for (int v : vertex_ids)
        if (v < 0 || v >= n)
            throw std::out_of_range("vertex_visibility: vertex id out of range");

    const Eigen::Matrix2Xd proj = face::project_points(mesh.vertices, w);
    const Eigen::VectorXd depth = face::camera_depths(mesh.vertices, w);
    const double eps = depth.size() ? 1e-4 * (depth.maxCoeff() - depth.minCoeff()) : 0.0;

    std::vector<std::vector<int>> incident(n);
    std::vector<char> queried(n, 0);
    for (int v : vertex_ids)
        queried[v] = 1;
    for (int t = 0; t < mesh.triangle_count(); ++t)
        for (int v : mesh.triangles[t])
            if (queried[v])
                incident[v].push_back(t);

    // Bin every triangle's screen bounding box into coarse tiles so each vertex tests only nearby candidates.
    constexpr int kTile = 4;
    const int tiles_x = (buffer.width + kTile - 1) / kTile;
    const int tiles_y = (buffer.height + kTile - 1) / kTile;
    std::vector<std::vector<int>> bins(static_cast<std::size_t>(tiles_x) * tiles_y);
    const auto tile_of = [&](double c, int count) {
        return std::clamp(static_cast<int>(std::floor((c + 0.5) / kTile)), 0, count - 1);
    };
    for (int t = 0; t < mesh.triangle_count(); ++t) {
        const auto& tri = mesh.triangles[t];
        double x0 = proj(0, tri[0]), x1 = x0, y0 = proj(1, tri[0]), y1 = y0;
        for (int k = 1; k < 3; ++k) {
            x0 = std::min(x0, proj(0, tri[k]));
            x1 = std::max(x1, proj(0, tri[k]));
            y0 = std::min(y0, proj(1, tri[k]));
            y1 = std::max(y1, proj(1, tri[k]));
        }
        if (!(x1 >= -0.5 && x0 < buffer.width - 0.5 && y1 >= -0.5 && y0 < buffer.height - 0.5))
            continue;
        for (int ty = tile_of(y0, tiles_y); ty <= tile_of(y1, tiles_y); ++ty)
            for (int tx = tile_of(x0, tiles_x); tx <= tile_of(x1, tiles_x); ++tx)
                bins[static_cast<std::size_t>(ty) * tiles_x + tx].push_back(t);
    }

    std::vector<bool> visible(vertex_ids.size(), false);
    for (std::size_t i = 0; i < vertex_ids.size(); ++i) {
        const int v = vertex_ids[i];
        const Point p = proj.col(v);
        if (!(p.x() >= -0.5 && p.x() < buffer.width - 0.5 && p.y() >= -0.5 && p.y() < buffer.height - 0.5))
            continue;
        const auto& candidates = bins[static_cast<std::size_t>(tile_of(p.y(), tiles_y)) * tiles_x + tile_of(p.x(), tiles_x)];

        bool occluded = false;
        ScreenTriangle st;
        Eigen::Vector3d bary;
        for (int t : candidates) {
            if (std::find(incident[v].begin(), incident[v].end(), t) != incident[v].end())
                continue;
            if (!make_screen_triangle(proj, depth, mesh.triangles[t], st) || !contains(st, p, bary))
                continue;
            const double d = bary[0] * st.da + bary[1] * st.db + bary[2] * st.dc;
            if (d < depth[v] - eps) {
                occluded = true;
                break;
            }
        }
        visible[i] = !occluded;
    }
    return visible;
}

Eigen::Matrix3Xd vertex_normals(const face::FaceMesh& mesh)
{
    Eigen::Matrix3Xd normals = Eigen::Matrix3Xd::Zero(3, mesh.vertex_count());
    for (const auto& t : mesh.triangles) {
        const Eigen::Vector3d a = mesh.vertices.col(t[0]);
        const Eigen::Vector3d b = mesh.vertices.col(t[1]);
        const Eigen::Vector3d c = mesh.vertices.col(t[2]);
        const Eigen::Vector3d n = (b - a).cross(c - a); // length = 2 * area
        for (int v : t)
            normals.col(v) += n;
    }
    for (Eigen::Index v = 0; v < normals.cols(); ++v) {
        const double len = normals.col(v).norm();
        if (len > 0.0)
            normals.col(v) /= len;
    }
    return normals;
}

void annotate_landmarks(const face::MorphableModel& model, RenderedSample& sample, int width, int height)
{
    const face::FaceMesh mesh = face::synthesize_shape(model, sample.shape);
    sample.landmarks68 = face::project_points(face::select_vertices(mesh.vertices, model.landmarks68), sample.camera);
    sample.landmarks160 =
        face::project_points(face::select_vertices(mesh.vertices, model.landmarks160), sample.camera);
    const DepthBuffer buf = rasterize(mesh, sample.camera, width, height);
    sample.visibility160 = vertex_visibility(mesh, sample.camera, model.landmarks160, buf);
}

RenderedSample render_image(const face::MorphableModel& model, const face::ShapeParams& p,
                            const face::AlbedoParams& a, const face::CameraParams& w, const Eigen::Vector3d& light,
                            int width, int height)
{
    if (std::abs(light.norm() - 1.0) > 1e-9)
        throw std::invalid_argument("render_image: light direction must be a unit vector");

    RenderedSample sample;
    sample.shape = p;
    sample.albedo = a;
    sample.camera = w;
    sample.light = light;
    sample.image = RgbImage(width, height);

    const face::FaceMesh mesh = face::synthesize_shape(model, p);
    const Eigen::VectorXd albedo = face::synthesize_albedo(model, a);
    const Eigen::Matrix3d r = face::rotation_from_angles(w.alpha, w.beta, w.gamma);
    const Eigen::Matrix3Xd normals = r * vertex_normals(mesh);
    const Eigen::Matrix2Xd proj = face::project_points(mesh.vertices, w);
    const Eigen::VectorXd depth = face::camera_depths(mesh.vertices, w);
    // Camera space has +z toward the viewer, so (R n) is compared with the light directly.
    const DepthBuffer buf = rasterize(mesh, w, width, height);

    ScreenTriangle st;
    Eigen::Vector3d bary;
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            const int t = buf.triangle_at(x, y);
            if (t == kNoTriangle)
                continue;
            make_screen_triangle(proj, depth, mesh.triangles[t], st);
            if (!contains(st, Point(x, y), bary)) {
                // Top-left ties can land a hair outside the closed test; clamp onto the triangle.
                bary = bary.cwiseMax(0.0);
                bary /= bary.sum();
            }
            const int ids[3] = {st.ia, st.ib, st.ic};
            Eigen::Vector3d n = Eigen::Vector3d::Zero();
            Eigen::Vector3d alb = Eigen::Vector3d::Zero();
            for (int k = 0; k < 3; ++k) {
                n += bary[k] * normals.col(ids[k]);
                alb += bary[k] * albedo.segment<3>(3 * ids[k]);
            }
            const double len = n.norm();
            const double lambert = len > 0.0 ? std::max(0.0, n.dot(light) / len) : 0.0;
            for (int c = 0; c < 3; ++c)
                sample.image.at(x, y, c) = std::clamp(alb[c] * lambert + kAmbient * alb[c], 0.0, 1.0);
        }
    }

    annotate_landmarks(model, sample, width, height);
    return sample;
}

LabelMap project_patch_labels(const face::MorphableModel& model, const face::ShapeParams& p,
                              const face::CameraParams& w, const seg::Segmentation& segmentation, int width,
                              int height)
{
    if (segmentation.patch_of.size() != model.triangles.size())
        throw std::invalid_argument("project_patch_labels: segmentation does not match the mesh triangle count");
    const DepthBuffer buf = rasterize(face::synthesize_shape(model, p), w, width, height);
    LabelMap labels(width, height);
    for (std::size_t i = 0; i < labels.data.size(); ++i)
        if (buf.triangle_id[i] != kNoTriangle)
            labels.data[i] = segmentation.patch_of[buf.triangle_id[i]];
    return labels;
}

std::vector<RenderedSample> generate_dataset(const face::MorphableModel& model, int count, std::uint64_t seed,
                                             const DatasetConfig& config)
{
    if (count < 1)
        throw std::invalid_argument("generate_dataset: count must be at least 1");

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };
    const double deg = std::numbers::pi / 180.0;
    const double root_n = std::sqrt(static_cast<double>(model.vertex_count()));

    std::vector<RenderedSample> samples;
    samples.reserve(count);
    for (int i = 0; i < count; ++i) {
        face::ShapeParams p = face::ShapeParams::zero(model);
        for (int k = 0; k < model.id_count(); ++k)
            p.id[k] = normal(rng) * std::sqrt(model.id_eigen[k]);
        for (int k = 0; k < model.exp_count(); ++k)
            p.exp[k] = normal(rng) * std::sqrt(model.exp_eigen[k]);
        face::AlbedoParams a{Eigen::VectorXd(model.alb_basis.cols())};
        for (Eigen::Index k = 0; k < a.alb.size(); ++k)
            a.alb[k] = normal(rng) * config.albedo_sigma * root_n * std::pow(0.8, static_cast<double>(k));

        face::CameraParams w;
        w.alpha = uniform(-config.max_pitch_deg, config.max_pitch_deg) * deg;
        w.beta = uniform(-config.max_yaw_deg, config.max_yaw_deg) * deg;
        w.gamma = uniform(-config.max_roll_deg, config.max_roll_deg) * deg;

        Eigen::Vector3d light(normal(rng), normal(rng), normal(rng));
        light.normalize();
        light.z() = std::abs(light.z());

        // Size and place the whole projected mesh.
        const Eigen::Matrix3Xd verts = face::synthesize_vertices(model, p);
        w.s = 1.0;
        const Eigen::Matrix2Xd unit_proj = face::project_points(verts, w);
        const Eigen::Vector2d lo = unit_proj.rowwise().minCoeff();
        const Eigen::Vector2d hi = unit_proj.rowwise().maxCoeff();
        const double fraction = uniform(config.min_height_fraction, config.max_height_fraction);
        w.s = fraction * config.height / (hi.y() - lo.y());
        w.s = std::min(w.s, 0.95 * config.width / (hi.x() - lo.x()));
        const auto place = [&](double lo_c, double hi_c, int size) {
            const double t_min = 1.0 - w.s * lo_c;
            const double t_max = size - 2.0 - w.s * hi_c;
            return t_max > t_min ? uniform(t_min, t_max) : 0.5 * (t_min + t_max);
        };
        w.tx = place(lo.x(), hi.x(), config.width);
        w.ty = place(lo.y(), hi.y(), config.height);

        RenderedSample sample = render_image(model, p, a, w, light, config.width, config.height);
        quantize_to_8bit(sample.image);
        samples.push_back(std::move(sample));
    }
    return samples;
}

Box landmark_box(const Eigen::Matrix2Xd& landmarks, double margin)
{
    const Eigen::Vector2d lo = landmarks.rowwise().minCoeff();
    const Eigen::Vector2d hi = landmarks.rowwise().maxCoeff();
    const Eigen::Vector2d size = hi - lo;
    return {lo.x() - margin * size.x(), lo.y() - margin * size.y(), size.x() * (1.0 + 2.0 * margin),
            size.y() * (1.0 + 2.0 * margin)};
}

} // namespace dff::render
