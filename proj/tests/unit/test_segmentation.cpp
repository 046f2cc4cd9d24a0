#include "doctest.h"

#include "dff/segmentation.hpp"

#include <map>
#include <queue>
#include <set>

using namespace dff;
using namespace dff::seg;

namespace {

const face::FaceMesh& face_mesh()
{
    static const face::FaceMesh mesh = [] {
        const auto m = face::generate_synthetic_model(2, 1500, 8, 6);
        return face::synthesize_shape(m, face::ShapeParams::zero(m));
    }();
    return mesh;
}

// Flat strip of 2 x 2n unit squares. Diagonals mirror about x = n so the strip is left/right symmetric.
face::FaceMesh mirrored_strip(int n)
{
    const int cols = 2 * n;
    face::FaceMesh m;
    m.vertices.resize(3, 3 * (cols + 1));
    for (int r = 0; r <= 2; ++r)
        for (int c = 0; c <= cols; ++c)
            m.vertices.col(r * (cols + 1) + c) = Eigen::Vector3d(c, r, 0);
    const auto id = [&](int r, int c) { return r * (cols + 1) + c; };
    for (int r = 0; r < 2; ++r)
        for (int c = 0; c < cols; ++c) {
            const int a = id(r, c), b = id(r, c + 1), d = id(r + 1, c), e = id(r + 1, c + 1);
            if (c < n) {
                m.triangles.push_back({a, b, e});
                m.triangles.push_back({a, e, d});
            } else {
                m.triangles.push_back({a, b, d});
                m.triangles.push_back({b, e, d});
            }
        }
    return m;
}

double centroid_x(const face::FaceMesh& m, int t)
{
    double x = 0.0;
    for (int v : m.triangles[static_cast<std::size_t>(t)])
        x += m.vertices(0, v);
    return x / 3.0;
}

// Components of one patch found by flood fill over shared edges.
int component_count(const face::FaceMesh& m, const Segmentation& s, std::uint32_t patch)
{
    std::map<std::pair<int, int>, std::vector<int>> by_edge;
    for (int t = 0; t < m.triangle_count(); ++t) {
        const auto& tri = m.triangles[static_cast<std::size_t>(t)];
        for (int k = 0; k < 3; ++k)
            by_edge[std::minmax(tri[k], tri[(k + 1) % 3])].push_back(t);
    }
    std::vector<std::vector<int>> adj(static_cast<std::size_t>(m.triangle_count()));
    for (const auto& [e, ts] : by_edge)
        for (int a : ts)
            for (int b : ts)
                if (a != b)
                    adj[static_cast<std::size_t>(a)].push_back(b);
    std::vector<char> seen(adj.size(), 0);
    int comps = 0;
    for (int t = 0; t < m.triangle_count(); ++t) {
        if (seen[static_cast<std::size_t>(t)] || s.patch_of[static_cast<std::size_t>(t)] != patch)
            continue;
        ++comps;
        std::queue<int> q;
        q.push(t);
        seen[static_cast<std::size_t>(t)] = 1;
        while (!q.empty()) {
            const int u = q.front();
            q.pop();
            for (int w : adj[static_cast<std::size_t>(u)])
                if (!seen[static_cast<std::size_t>(w)] && s.patch_of[static_cast<std::size_t>(w)] == patch) {
                    seen[static_cast<std::size_t>(w)] = 1;
                    q.push(w);
                }
        }
    }
    return comps;
}

} // namespace

TEST_CASE("dual graph of a single quad")
{
    face::FaceMesh m;
    m.vertices.resize(3, 4);
    m.vertices << 0, 1, 0, 1, 0, 0, 1, 1, 0, 0, 0, 0;
    m.triangles = {{0, 1, 2}, {1, 3, 2}};
    const DualGraph g = build_dual_graph(m);
    REQUIRE(g.neighbors.size() == 2);
    REQUIRE(g.neighbors[0].size() == 1);
    CHECK(g.neighbors[0][0].to == 1);
    // Centroids (1/3, 1/3) and (2/3, 2/3).
    CHECK(g.neighbors[0][0].weight == doctest::Approx(std::sqrt(2.0) / 3.0));
    CHECK(g.areas[0] == doctest::Approx(0.5));
}

TEST_CASE("one patch holds every triangle")
{
    const Segmentation s = cvt_segment(face_mesh(), 1, 5);
    CHECK(s.patch_count == 1);
    for (auto p : s.patch_of)
        CHECK(p == 0u);
    CHECK(check_partition(face_mesh(), s).empty());
}

TEST_CASE("mirrored generators split a symmetric strip into halves")
{
    const int n = 6;
    const face::FaceMesh m = mirrored_strip(n);
    // Generators: leftmost and rightmost triangle of the bottom row.
    const int left = 0, right = 2 * (2 * n) - 1;
    CHECK(centroid_x(m, right) > 2 * n - 1);
    const Segmentation s = lloyd_segment(m, {left, right});
    CHECK(check_partition(m, s).empty());
    for (int t = 0; t < m.triangle_count(); ++t) {
        const std::uint32_t want = centroid_x(m, t) < n ? 0u : 1u;
        CHECK(s.patch_of[static_cast<std::size_t>(t)] == want);
    }
}

TEST_CASE("lloyd energy never increases on the synthetic face")
{
    CvtTrace trace;
    const Segmentation s = cvt_segment(face_mesh(), 32, 17, &trace);
    REQUIRE(trace.energy.size() >= 2);
    for (std::size_t i = 1; i < trace.energy.size(); ++i)
        CHECK(trace.energy[i] <= trace.energy[i - 1] * (1.0 + 1e-12));
    CHECK(trace.iterations <= 50);
    CHECK(trace.final_energy > 0.0);
    CHECK(check_partition(face_mesh(), s).empty());
}

TEST_CASE("partitions are complete, non-empty and connected")
{
    const face::FaceMesh& m = face_mesh();
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        const Segmentation s = cvt_segment(m, 32, seed);
        std::vector<int> sizes(32, 0);
        for (auto p : s.patch_of) {
            REQUIRE(p < 32u);
            ++sizes[p];
        }
        int total = 0;
        for (int k = 0; k < 32; ++k) {
            CHECK(sizes[static_cast<std::size_t>(k)] > 0);
            CHECK(component_count(m, s, static_cast<std::uint32_t>(k)) == 1);
            total += sizes[static_cast<std::size_t>(k)];
        }
        CHECK(total == m.triangle_count());
    }
}

TEST_CASE("segmentation is deterministic in the seed")
{
    const face::FaceMesh& m = face_mesh();
    CHECK(cvt_segment(m, 32, 9) == cvt_segment(m, 32, 9));
    CHECK(cvt_segment(m, 32, 9).patch_of != cvt_segment(m, 32, 10).patch_of);
    const auto a = generate_segmentation_bank(m, 2, 16, 4);
    const auto b = generate_segmentation_bank(m, 2, 16, 4);
    REQUIRE(a.size() == 2);
    CHECK(a == b);
    CHECK(a[0].seed != a[1].seed);
}

TEST_CASE("check_partition reports violations")
{
    const face::FaceMesh& m = face_mesh();
    Segmentation s = cvt_segment(m, 4, 1);
    Segmentation empty = s;
    empty.patch_count = 5;
    CHECK_FALSE(check_partition(m, empty).empty());
    Segmentation range = s;
    range.patch_of[0] = 7;
    CHECK_FALSE(check_partition(m, range).empty());
    Segmentation short_labels = s;
    short_labels.patch_of.pop_back();
    CHECK_FALSE(check_partition(m, short_labels).empty());
    // Two opposite corners of the grid in one patch, everything else in the other.
    Segmentation split{std::vector<std::uint32_t>(m.triangles.size(), 0), 2, 0};
    split.patch_of.front() = 1;
    split.patch_of.back() = 1;
    CHECK(check_partition(m, split).find("connected") != std::string::npos);
}

TEST_CASE("argument checks")
{
    CHECK_THROWS_AS(cvt_segment(face_mesh(), 0, 1), std::invalid_argument);
    CHECK_THROWS_AS(cvt_segment(face_mesh(), face_mesh().triangle_count() + 1, 1), std::invalid_argument);
    CHECK_THROWS_AS(generate_segmentation_bank(face_mesh(), -1, 4, 1), std::invalid_argument);
}

TEST_CASE("full-size bank of 100 segmentations with 500 patches")
{
    const face::FaceMesh& m = face_mesh();
    const auto bank = generate_segmentation_bank(m, 100, 500, 2024);
    REQUIRE(bank.size() == 100);
    for (const auto& s : bank) {
        CHECK(s.patch_count == 500);
        CHECK(check_partition(m, s).empty());
    }
}
