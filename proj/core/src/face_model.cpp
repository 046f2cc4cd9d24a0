#include "dff/face_model.hpp"

#include "Eigen/Dense"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <set>
#include <stdexcept>
#include <string>

namespace dff::face {

void MorphableModel::validate() const
{
    const auto fail = [](const std::string& what) { throw std::invalid_argument("MorphableModel: " + what); };
    if (mean_shape.size() == 0 || mean_shape.size() % 3 != 0)
        fail("mean_shape length must be a positive multiple of 3");
    const Eigen::Index dim = mean_shape.size();
    const int n = vertex_count();
    if (id_basis.rows() != dim || exp_basis.rows() != dim || alb_basis.rows() != dim || mean_albedo.size() != dim)
        fail("basis row count does not match 3n");
    if (id_basis.cols() < 1 || exp_basis.cols() < 1)
        fail("m1 and m2 must be at least 1");
    if (alb_basis.cols() != id_basis.cols())
        fail("albedo basis must have m1 columns");
    if (id_eigen.size() != id_basis.cols() || exp_eigen.size() != exp_basis.cols())
        fail("eigenvalue count does not match basis columns");
    if ((id_eigen.array() <= 0.0).any() || (exp_eigen.array() <= 0.0).any())
        fail("eigenvalues must be strictly positive");
    for (const auto& t : triangles) {
        for (int v : t)
            if (v < 0 || v >= n)
                fail("triangle index out of range");
        if (t[0] == t[1] || t[1] == t[2] || t[0] == t[2])
            fail("degenerate triangle");
    }
    for (int v : landmarks160)
        if (v < 0 || v >= n)
            fail("landmark index out of range");
    const std::set<int> dense(landmarks160.begin(), landmarks160.end());
    for (int v : landmarks68)
        if (!dense.contains(v))
            fail("landmarks68 must be a subset of landmarks160");
}

ShapeParams ShapeParams::zero(const MorphableModel& model)
{
    return {Eigen::VectorXd::Zero(model.id_count()), Eigen::VectorXd::Zero(model.exp_count())};
}

Eigen::VectorXd ShapeParams::stacked() const
{
    Eigen::VectorXd p(id.size() + exp.size());
    p << id, exp;
    return p;
}

ShapeParams ShapeParams::from_stacked(const MorphableModel& model, const Eigen::VectorXd& p)
{
    if (p.size() != model.shape_param_count())
        throw std::invalid_argument("ShapeParams::from_stacked: dimension mismatch");
    return {p.head(model.id_count()), p.tail(model.exp_count())};
}

Eigen::Matrix<double, 6, 1> CameraParams::to_vector() const
{
    Eigen::Matrix<double, 6, 1> v;
    v << s, alpha, beta, gamma, tx, ty;
    return v;
}

CameraParams CameraParams::from_vector(const Eigen::Matrix<double, 6, 1>& v)
{
    return {v[0], v[1], v[2], v[3], v[4], v[5]};
}

Eigen::Matrix3Xd synthesize_vertices(const MorphableModel& model, const ShapeParams& p)
{
    if (p.id.size() != model.id_count() || p.exp.size() != model.exp_count())
        throw std::invalid_argument("synthesize_shape: shape parameter dimension mismatch");
    const Eigen::VectorXd flat = model.mean_shape + model.id_basis * p.id + model.exp_basis * p.exp;
    return Eigen::Map<const Eigen::Matrix3Xd>(flat.data(), 3, model.vertex_count());
}

FaceMesh synthesize_shape(const MorphableModel& model, const ShapeParams& p)
{
    return {synthesize_vertices(model, p), model.triangles};
}

Eigen::VectorXd synthesize_albedo_raw(const MorphableModel& model, const AlbedoParams& a)
{
    if (a.alb.size() != model.alb_basis.cols())
        throw std::invalid_argument("synthesize_albedo: albedo parameter dimension mismatch");
    return model.mean_albedo + model.alb_basis * a.alb;
}

Eigen::VectorXd synthesize_albedo(const MorphableModel& model, const AlbedoParams& a)
{
    return synthesize_albedo_raw(model, a).cwiseMax(0.0).cwiseMin(1.0);
}

Eigen::Matrix3d rotation_from_angles(double alpha, double beta, double gamma)
{
    const double ca = std::cos(alpha), sa = std::sin(alpha);
    const double cb = std::cos(beta), sb = std::sin(beta);
    const double cg = std::cos(gamma), sg = std::sin(gamma);
    Eigen::Matrix3d rx, ry, rz;
    rx << 1, 0, 0, 0, ca, -sa, 0, sa, ca;
    ry << cb, 0, sb, 0, 1, 0, -sb, 0, cb;
    rz << cg, -sg, 0, sg, cg, 0, 0, 0, 1;
    return rz * ry * rx;
}

Eigen::Matrix2Xd project_points(const Eigen::Matrix3Xd& points, const CameraParams& w)
{
    const Eigen::Matrix3d r = rotation_from_angles(w.alpha, w.beta, w.gamma);
    Eigen::Matrix2Xd out = w.s * (r.topRows<2>() * points);
    out.row(0).array() += w.tx;
    out.row(1).array() += w.ty;
    return out;
}

Eigen::VectorXd camera_depths(const Eigen::Matrix3Xd& points, const CameraParams& w)
{
    const Eigen::Matrix3d r = rotation_from_angles(w.alpha, w.beta, w.gamma);
    return -(r.row(2) * points).transpose();
}

Eigen::Matrix3Xd select_vertices(const Eigen::Matrix3Xd& vertices, const std::vector<int>& ids)
{
    Eigen::Matrix3Xd out(3, static_cast<Eigen::Index>(ids.size()));
    for (std::size_t i = 0; i < ids.size(); ++i)
        out.col(static_cast<Eigen::Index>(i)) = vertices.col(ids[i]);
    return out;
}

namespace {

constexpr double kAzimuthMax = 1.45;
constexpr double kElevationMax = 1.05;
constexpr double kHalfWidth = 0.9;
constexpr double kHalfHeight = 1.25;
constexpr double kHalfDepth = 0.9;

struct GridLayout
{
    int rows = 0;
    int cols = 0;
    std::vector<double> azimuth;   // per vertex
    std::vector<double> elevation; // per vertex
};

GridLayout make_grid(int n)
{
    GridLayout g;
    g.rows = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(n))));
    g.cols = (n + g.rows - 1) / g.rows;
    for (int r = 0; r < g.rows; ++r) {
        for (int c = 0; c < g.cols; ++c) {
            g.azimuth.push_back(-kAzimuthMax + 2.0 * kAzimuthMax * c / (g.cols - 1));
            g.elevation.push_back(-kElevationMax + 2.0 * kElevationMax * r / (g.rows - 1));
        }
    }
    return g;
}

double bump(double phi, double theta, double cphi, double ctheta, double rphi, double rtheta)
{
    const double u = (phi - cphi) / rphi;
    const double v = (theta - ctheta) / rtheta;
    return std::exp(-(u * u + v * v));
}

// Relief along the ellipsoid normal, in model units.
double relief(double phi, double theta)
{
    double d = 0.0;
    d += 0.32 * bump(phi, theta, 0.0, 0.02, 0.14, 0.26);  // nose ridge
    d += 0.10 * bump(phi, theta, 0.0, 0.16, 0.12, 0.08);  // nose tip
    d -= 0.12 * bump(phi, theta, -0.38, -0.18, 0.15, 0.09); // eye sockets
    d -= 0.12 * bump(phi, theta, 0.38, -0.18, 0.15, 0.09);
    d += 0.06 * bump(std::abs(phi), theta, 0.38, -0.34, 0.28, 0.06); // brow ridge
    d += 0.05 * bump(phi, theta, 0.0, 0.46, 0.26, 0.05);   // upper lip
    d += 0.04 * bump(phi, theta, 0.0, 0.54, 0.22, 0.05);   // lower lip
    d += 0.08 * bump(phi, theta, 0.0, 0.82, 0.28, 0.12);   // chin
    d += 0.04 * bump(std::abs(phi), theta, 0.62, 0.08, 0.2, 0.14); // cheekbones
    return d;
}

Eigen::Vector3d base_position(double phi, double theta)
{
    // Lower face narrows toward the chin.
    const double taper = 1.0 - 0.22 * std::max(0.0, std::sin(theta));
    const double a = kHalfWidth * taper;
    Eigen::Vector3d q(a * std::cos(theta) * std::sin(phi), kHalfHeight * std::sin(theta),
                      kHalfDepth * std::cos(theta) * std::cos(phi));
    const Eigen::Vector3d normal =
        Eigen::Vector3d(q.x() / (a * a), q.y() / (kHalfHeight * kHalfHeight), q.z() / (kHalfDepth * kHalfDepth))
            .normalized();
    return q + relief(phi, theta) * normal;
}

Eigen::Vector3d base_albedo(double phi, double theta)
{
    const Eigen::Vector3d skin(0.86, 0.66, 0.53);
    const Eigen::Vector3d eye(0.12, 0.10, 0.10);
    const Eigen::Vector3d brow(0.28, 0.19, 0.12);
    const Eigen::Vector3d lip(0.72, 0.30, 0.30);
    const Eigen::Vector3d hair(0.30, 0.22, 0.15);
    const Eigen::Vector3d nostril(0.40, 0.25, 0.22);

    Eigen::Vector3d c = skin;
    // Mild left/right gradient so mirrored regions are not photometrically identical.
    c.x() += 0.04 * std::sin(phi);
    const auto blend = [&c](const Eigen::Vector3d& target, double weight) {
        weight = std::clamp(weight, 0.0, 1.0);
        c = (1.0 - weight) * c + weight * target;
    };
    blend(eye, 1.3 * bump(phi, theta, -0.38, -0.18, 0.10, 0.05));
    blend(eye, 1.3 * bump(phi, theta, 0.38, -0.18, 0.10, 0.05));
    blend(brow, 1.2 * bump(std::abs(phi), theta, 0.38, -0.33, 0.16, 0.035));
    blend(lip, 1.2 * bump(phi, theta, 0.0, 0.50, 0.20, 0.06));
    blend(nostril, 0.9 * bump(std::abs(phi), theta, 0.07, 0.20, 0.04, 0.03));
    blend(hair, std::clamp((-theta - 0.72) * 6.0, 0.0, 1.0));
    blend(hair, std::clamp((std::abs(phi) - 1.15) * 5.0, 0.0, 1.0) * (theta < 0.3 ? 1.0 : 0.0));
    return c.cwiseMax(0.0).cwiseMin(1.0);
}

struct LandmarkTarget
{
    double phi;
    double theta;
};

std::vector<LandmarkTarget> landmark68_targets()
{
    std::vector<LandmarkTarget> t;
    for (int i = 0; i <= 16; ++i) { // jaw contour
        const double u = (i - 8) / 8.0;
        const double psi = u * std::numbers::pi / 2.0 * 0.95;
        t.push_back({1.2 * std::sin(psi), -0.05 + 1.0 * std::cos(psi)});
    }
    for (int i = 0; i < 5; ++i) { // right brow (image left)
        const double phi = -0.62 + 0.12 * i;
        t.push_back({phi, -0.33 - 0.03 * std::sin(std::numbers::pi * i / 4.0)});
    }
    for (int i = 0; i < 5; ++i) { // left brow
        const double phi = 0.14 + 0.12 * i;
        t.push_back({phi, -0.33 - 0.03 * std::sin(std::numbers::pi * i / 4.0)});
    }
    for (int i = 0; i < 4; ++i) // nose bridge
        t.push_back({0.0, -0.20 + 0.11 * i});
    for (int i = 0; i < 5; ++i) // nostrils
        t.push_back({-0.12 + 0.06 * i, 0.22});
    const auto eye = [&t](double center, double sign) {
        // outer/inner corner order follows the 68-point convention
        const double outer = center + sign * 0.14;
        const double inner = center - sign * 0.14;
        if (sign < 0) {
            t.push_back({outer, -0.18});
            t.push_back({center - 0.05, -0.22});
            t.push_back({center + 0.05, -0.22});
            t.push_back({inner, -0.18});
            t.push_back({center + 0.05, -0.14});
            t.push_back({center - 0.05, -0.14});
        } else {
            t.push_back({inner, -0.18});
            t.push_back({center - 0.05, -0.22});
            t.push_back({center + 0.05, -0.22});
            t.push_back({outer, -0.18});
            t.push_back({center + 0.05, -0.14});
            t.push_back({center - 0.05, -0.14});
        }
    };
    eye(-0.38, -1.0);
    eye(0.38, 1.0);
    for (int k = 0; k < 12; ++k) { // outer lip
        const double ang = std::numbers::pi - k * (2.0 * std::numbers::pi / 12.0);
        t.push_back({0.26 * std::cos(ang), 0.50 - 0.08 * std::sin(ang)});
    }
    for (int k = 0; k < 8; ++k) { // inner lip
        const double ang = std::numbers::pi - k * (2.0 * std::numbers::pi / 8.0);
        t.push_back({0.17 * std::cos(ang), 0.50 - 0.03 * std::sin(ang)});
    }
    return t;
}

// Repeated neighbour averaging over the grid graph, applied per coordinate.
void smooth_field(Eigen::VectorXd& field, const GridLayout& g, int passes)
{
    Eigen::VectorXd next(field.size());
    for (int pass = 0; pass < passes; ++pass) {
        for (int r = 0; r < g.rows; ++r) {
            for (int c = 0; c < g.cols; ++c) {
                const int v = r * g.cols + c;
                for (int k = 0; k < 3; ++k) {
                    double sum = 0.0;
                    int count = 0;
                    if (r > 0) { sum += field[3 * (v - g.cols) + k]; ++count; }
                    if (r + 1 < g.rows) { sum += field[3 * (v + g.cols) + k]; ++count; }
                    if (c > 0) { sum += field[3 * (v - 1) + k]; ++count; }
                    if (c + 1 < g.cols) { sum += field[3 * (v + 1) + k]; ++count; }
                    next[3 * v + k] = 0.5 * field[3 * v + k] + 0.5 * sum / count;
                }
            }
        }
        field.swap(next);
    }
}

Eigen::MatrixXd orthonormal_columns(const Eigen::MatrixXd& m)
{
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(m);
    Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(m.rows(), m.cols());
    // Fix column signs so the column correlates positively with its source field.
    for (Eigen::Index j = 0; j < q.cols(); ++j)
        if (q.col(j).dot(m.col(j)) < 0.0)
            q.col(j) = -q.col(j);
    return q;
}

} // namespace

MorphableModel generate_synthetic_model(std::uint64_t seed, int n, int m1, int m2,
                                        const SyntheticModelOptions& options)
{
    if (n < 200)
        throw std::invalid_argument("generate_synthetic_model: n must be at least 200");
    if (m1 < 1 || m2 < 1)
        throw std::invalid_argument("generate_synthetic_model: m1 and m2 must be at least 1");

    const GridLayout grid = make_grid(n);
    const int nv = grid.rows * grid.cols;
    if (m1 + m2 >= 3 * nv)
        throw std::invalid_argument("generate_synthetic_model: m1 + m2 must be below 3n");

    MorphableModel model;
    model.mean_shape.resize(3 * nv);
    model.mean_albedo.resize(3 * nv);
    for (int v = 0; v < nv; ++v) {
        model.mean_shape.segment<3>(3 * v) = base_position(grid.azimuth[v], grid.elevation[v]);
        model.mean_albedo.segment<3>(3 * v) = base_albedo(grid.azimuth[v], grid.elevation[v]);
    }

    for (int r = 0; r + 1 < grid.rows; ++r) {
        for (int c = 0; c + 1 < grid.cols; ++c) {
            const int v00 = r * grid.cols + c;
            const int v01 = v00 + 1;
            const int v10 = v00 + grid.cols;
            const int v11 = v10 + 1;
            // Winding gives outward (+z) normals on the frontal surface.
            model.triangles.push_back({v00, v01, v10});
            model.triangles.push_back({v01, v11, v10});
        }
    }

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);

    const auto smooth_noise = [&](const auto& mask) {
        Eigen::VectorXd f(3 * nv);
        for (int v = 0; v < nv; ++v)
            for (int k = 0; k < 3; ++k)
                f[3 * v + k] = normal(rng) * mask(v);
        smooth_field(f, grid, options.smoothing_passes);
        return f;
    };
    const auto uniform_mask = [](int) { return 1.0; };
    const auto expression_mask = [&grid](int v) {
        const double phi = grid.azimuth[v], theta = grid.elevation[v];
        return 0.15 + bump(phi, theta, 0.0, 0.5, 0.45, 0.25) + 0.7 * bump(std::abs(phi), theta, 0.38, -0.28, 0.3, 0.15);
    };

    Eigen::MatrixXd shape_fields(3 * nv, m1 + m2);
    for (int j = 0; j < m1; ++j)
        shape_fields.col(j) = smooth_noise(uniform_mask);
    for (int j = 0; j < m2; ++j)
        shape_fields.col(m1 + j) = smooth_noise(expression_mask);
    const Eigen::MatrixXd shape_q = orthonormal_columns(shape_fields);
    model.id_basis = shape_q.leftCols(m1);
    model.exp_basis = shape_q.rightCols(m2);

    Eigen::MatrixXd albedo_fields(3 * nv, m1);
    for (int j = 0; j < m1; ++j)
        albedo_fields.col(j) = smooth_noise(uniform_mask);
    model.alb_basis = orthonormal_columns(albedo_fields);

    const double root_n = std::sqrt(static_cast<double>(nv));
    model.id_eigen.resize(m1);
    model.exp_eigen.resize(m2);
    for (int k = 0; k < m1; ++k)
        model.id_eigen[k] = std::pow(options.id_sigma * root_n * std::pow(options.decay, k), 2);
    for (int k = 0; k < m2; ++k)
        model.exp_eigen[k] = std::pow(options.exp_sigma * root_n * std::pow(options.decay, k), 2);

    // Sparse landmarks: snap anatomical targets to the nearest unused grid vertex.
    std::vector<char> used(nv, 0);
    for (const auto& target : landmark68_targets()) {
        int best = -1;
        double best_d = std::numeric_limits<double>::infinity();
        for (int v = 0; v < nv; ++v) {
            if (used[v])
                continue;
            const double dp = grid.azimuth[v] - target.phi;
            const double dt = grid.elevation[v] - target.theta;
            const double d = dp * dp + dt * dt;
            if (d < best_d) {
                best_d = d;
                best = v;
            }
        }
        used[best] = 1;
        model.landmarks68.push_back(best);
    }

    // Dense landmarks: farthest-point sampling over the frontal region, seeded with the 68.
    const Eigen::Map<const Eigen::Matrix3Xd> mean(model.mean_shape.data(), 3, nv);
    std::vector<int> pool;
    for (int v = 0; v < nv; ++v)
        if (!used[v] && std::abs(grid.azimuth[v]) <= 1.2 && grid.elevation[v] >= -0.9 && grid.elevation[v] <= 0.95)
            pool.push_back(v);
    if (static_cast<int>(pool.size()) < 160 - 68) {
        pool.clear();
        for (int v = 0; v < nv; ++v)
            if (!used[v])
                pool.push_back(v);
    }
    model.landmarks160 = model.landmarks68;
    std::vector<double> nearest(pool.size(), std::numeric_limits<double>::infinity());
    const auto update_nearest = [&](int chosen) {
        for (std::size_t i = 0; i < pool.size(); ++i)
            nearest[i] = std::min(nearest[i], (mean.col(pool[i]) - mean.col(chosen)).squaredNorm());
    };
    for (int v : model.landmarks68)
        update_nearest(v);
    while (model.landmarks160.size() < 160) {
        std::size_t best = 0;
        for (std::size_t i = 1; i < pool.size(); ++i)
            if (nearest[i] > nearest[best])
                best = i;
        const int chosen = pool[best];
        model.landmarks160.push_back(chosen);
        nearest[best] = -1.0;
        update_nearest(chosen);
        nearest[best] = -1.0;
    }

    model.validate();
    return model;
}

} // namespace dff::face
