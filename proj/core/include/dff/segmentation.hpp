#pragma once

#include "dff/face_model.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace dff::seg {

/// Partition of a mesh's triangles into K patches. Shared by every shape of a model.
struct Segmentation
{
    std::vector<std::uint32_t> patch_of; // per triangle, in [0, K)
    int patch_count = 0;
    std::uint64_t seed = 0;

    bool operator==(const Segmentation&) const = default;
};

/// Triangle adjacency through shared edges, with centroid-distance weights.
struct DualGraph
{
    struct Edge
    {
        int to;
        double weight;
    };
    std::vector<std::vector<Edge>> neighbors;
    std::vector<Eigen::Vector3d> centroids;
    std::vector<double> areas;
};

DualGraph build_dual_graph(const face::FaceMesh& mesh);

/// Diagnostics of one Lloyd run.
struct CvtTrace
{
    std::vector<double> energy; ///< after each assignment step, before repair
    int iterations = 0;
    int repairs = 0;
    double final_energy = 0.0; ///< after repair
};

/**
 * Lloyd iteration on the dual graph starting from explicit generator
 * triangles. Energy is sum over triangles of area * (graph distance to the
 * patch generator)^2; the assignment step takes each triangle to its
 * nearest generator and the update step moves a generator to the patch
 * triangle nearest the area-weighted patch centroid whenever that does not
 * raise the patch energy. Stops when assignments repeat or after
 * `max_iterations`. Empty or disconnected patches are repaired afterwards.
 */
Segmentation lloyd_segment(const face::FaceMesh& mesh, const std::vector<int>& generators, int max_iterations = 50,
                           CvtTrace* trace = nullptr);

/// Random-generator CVT partition into K patches. Deterministic in seed.
Segmentation cvt_segment(const face::FaceMesh& mesh, int patch_count, std::uint64_t seed, CvtTrace* trace = nullptr);

/// `count` independent segmentations with per-member seeds drawn from `seed`.
std::vector<Segmentation> generate_segmentation_bank(const face::FaceMesh& mesh, int count, int patch_count,
                                                     std::uint64_t seed);

/// Empty string when the partition invariants hold, otherwise a description of the first violation.
std::string check_partition(const face::FaceMesh& mesh, const Segmentation& segmentation);

} // namespace dff::seg
