#include "dff/segmentation.hpp"

#include "Eigen/Geometry"

#include <algorithm>
#include <cstdint>
#include <functional>
#include <limits>
#include <queue>
#include <random>
#include <stdexcept>
#include <tuple>
#include <unordered_map>

namespace dff::seg {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::uint32_t kUnassigned = std::numeric_limits<std::uint32_t>::max();

struct Assignment
{
    std::vector<std::uint32_t> patch;
    std::vector<double> distance;
};

// Multi-source Dijkstra. Ties go to the lower generator index, so every cell is a shortest-path subtree.
Assignment assign_to_generators(const DualGraph& g, const std::vector<int>& generators)
{
    const std::size_t t_count = g.neighbors.size();
    Assignment a{std::vector<std::uint32_t>(t_count, kUnassigned), std::vector<double>(t_count, kInf)};
    using Item = std::tuple<double, std::uint32_t, int>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> queue;
    std::vector<char> done(t_count, 0);
    for (std::size_t k = 0; k < generators.size(); ++k) {
        a.distance[generators[k]] = 0.0;
        a.patch[generators[k]] = static_cast<std::uint32_t>(k);
        queue.emplace(0.0, static_cast<std::uint32_t>(k), generators[k]);
    }
    while (!queue.empty()) {
        const auto [d, k, t] = queue.top();
        queue.pop();
        if (done[t])
            continue;
        done[t] = 1;
        for (const auto& e : g.neighbors[t]) {
            const double nd = d + e.weight;
            if (!done[e.to] && (nd < a.distance[e.to] || (nd == a.distance[e.to] && k < a.patch[e.to]))) {
                a.distance[e.to] = nd;
                a.patch[e.to] = k;
                queue.emplace(nd, k, e.to);
            }
        }
    }
    return a;
}

// Area-weighted squared graph distance from `source` to the triangles of one patch.
double patch_energy_from(const DualGraph& g, const std::vector<std::uint32_t>& patch_of, std::uint32_t patch,
                         int members, int source)
{
    std::unordered_map<int, double> dist;
    using Item = std::pair<double, int>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> queue;
    dist[source] = 0.0;
    queue.emplace(0.0, source);
    std::unordered_map<int, char> done;
    double energy = 0.0;
    int settled = 0;
    while (!queue.empty() && settled < members) {
        const auto [d, t] = queue.top();
        queue.pop();
        if (done[t])
            continue;
        done[t] = 1;
        if (patch_of[t] == patch) {
            energy += g.areas[t] * d * d;
            ++settled;
        }
        for (const auto& e : g.neighbors[t]) {
            const double nd = d + e.weight;
            auto it = dist.find(e.to);
            if (it == dist.end() || nd < it->second) {
                dist[e.to] = nd;
                queue.emplace(nd, e.to);
            }
        }
    }
    return settled < members ? kInf : energy;
}

// Connected components of one patch in the dual graph.
std::vector<std::vector<int>> patch_components(const DualGraph& g, const std::vector<std::uint32_t>& patch_of,
                                               std::uint32_t patch)
{
    std::vector<std::vector<int>> components;
    std::vector<char> seen(patch_of.size(), 0);
    for (std::size_t start = 0; start < patch_of.size(); ++start) {
        if (patch_of[start] != patch || seen[start])
            continue;
        std::vector<int> comp;
        std::vector<int> stack{static_cast<int>(start)};
        seen[start] = 1;
        while (!stack.empty()) {
            const int t = stack.back();
            stack.pop_back();
            comp.push_back(t);
            for (const auto& e : g.neighbors[t]) {
                if (!seen[e.to] && patch_of[e.to] == patch) {
                    seen[e.to] = 1;
                    stack.push_back(e.to);
                }
            }
        }
        components.push_back(std::move(comp));
    }
    return components;
}

// Fixes unassigned triangles, empty patches and split patches. Returns the number of repairs made.
int repair(const DualGraph& g, std::vector<std::uint32_t>& patch_of, std::vector<int>& generators)
{
    const int patch_count = static_cast<int>(generators.size());
    int repairs = 0;

    for (std::size_t t = 0; t < patch_of.size(); ++t) {
        if (patch_of[t] != kUnassigned)
            continue;
        // Unreachable in the dual graph: nearest generator by centroid distance.
        std::uint32_t best = 0;
        double best_d = kInf;
        for (int k = 0; k < patch_count; ++k) {
            const double d = (g.centroids[t] - g.centroids[generators[k]]).squaredNorm();
            if (d < best_d) {
                best_d = d;
                best = static_cast<std::uint32_t>(k);
            }
        }
        patch_of[t] = best;
        ++repairs;
    }

    std::vector<int> sizes(patch_count, 0);
    for (auto p : patch_of)
        ++sizes[p];
    for (int k = 0; k < patch_count; ++k) {
        if (sizes[k] > 0)
            continue;
        // Reseed from the largest patch, taking a triangle other than its generator.
        const int largest = static_cast<int>(std::max_element(sizes.begin(), sizes.end()) - sizes.begin());
        for (std::size_t t = 0; t < patch_of.size(); ++t) {
            if (static_cast<int>(patch_of[t]) == largest && static_cast<int>(t) != generators[largest]) {
                patch_of[t] = static_cast<std::uint32_t>(k);
                generators[k] = static_cast<int>(t);
                --sizes[largest];
                ++sizes[k];
                ++repairs;
                break;
            }
        }
    }

    bool changed = true;
    while (changed) {
        changed = false;
        for (int k = 0; k < patch_count; ++k) {
            auto comps = patch_components(g, patch_of, static_cast<std::uint32_t>(k));
            if (comps.size() <= 1)
                continue;
            // Keep the component holding the generator (else the largest); merge the rest into neighbours.
            std::size_t keep = 0;
            for (std::size_t c = 0; c < comps.size(); ++c) {
                if (std::find(comps[c].begin(), comps[c].end(), generators[k]) != comps[c].end()) {
                    keep = c;
                    break;
                }
                if (comps[c].size() > comps[keep].size())
                    keep = c;
            }
            for (std::size_t c = 0; c < comps.size(); ++c) {
                if (c == keep)
                    continue;
                std::unordered_map<std::uint32_t, int> contact;
                for (int t : comps[c])
                    for (const auto& e : g.neighbors[t])
                        if (patch_of[e.to] != static_cast<std::uint32_t>(k))
                            ++contact[patch_of[e.to]];
                if (contact.empty())
                    continue; // isolated island, nothing to merge into
                std::uint32_t target = contact.begin()->first;
                for (const auto& [p, cnt] : contact)
                    if (cnt > contact[target] || (cnt == contact[target] && p < target))
                        target = p;
                for (int t : comps[c])
                    patch_of[t] = target;
                ++repairs;
                changed = true;
            }
        }
    }
    return repairs;
}

double total_energy(const DualGraph& g, const std::vector<std::uint32_t>& patch_of, const std::vector<int>& generators)
{
    std::vector<int> sizes(generators.size(), 0);
    for (auto p : patch_of)
        ++sizes[p];
    double e = 0.0;
    for (std::size_t k = 0; k < generators.size(); ++k)
        e += patch_energy_from(g, patch_of, static_cast<std::uint32_t>(k), sizes[k], generators[k]);
    return e;
}

} // namespace

DualGraph build_dual_graph(const face::FaceMesh& mesh)
{
    DualGraph g;
    const int t_count = mesh.triangle_count();
    g.neighbors.resize(t_count);
    g.centroids.resize(t_count);
    g.areas.resize(t_count);
    std::unordered_map<std::uint64_t, std::vector<int>> edge_owners;
    for (int t = 0; t < t_count; ++t) {
        const auto& tri = mesh.triangles[t];
        const Eigen::Vector3d a = mesh.vertices.col(tri[0]);
        const Eigen::Vector3d b = mesh.vertices.col(tri[1]);
        const Eigen::Vector3d c = mesh.vertices.col(tri[2]);
        g.centroids[t] = (a + b + c) / 3.0;
        g.areas[t] = 0.5 * (b - a).cross(c - a).norm();
        for (int k = 0; k < 3; ++k) {
            const auto u = static_cast<std::uint64_t>(std::min(tri[k], tri[(k + 1) % 3]));
            const auto v = static_cast<std::uint64_t>(std::max(tri[k], tri[(k + 1) % 3]));
            edge_owners[(u << 32) | v].push_back(t);
        }
    }
    for (const auto& [key, owners] : edge_owners) {
        for (std::size_t i = 0; i < owners.size(); ++i) {
            for (std::size_t j = i + 1; j < owners.size(); ++j) {
                const double w = (g.centroids[owners[i]] - g.centroids[owners[j]]).norm();
                g.neighbors[owners[i]].push_back({owners[j], w});
                g.neighbors[owners[j]].push_back({owners[i], w});
            }
        }
    }
    // Hash-map iteration order is unspecified; sort for deterministic traversal.
    for (auto& adj : g.neighbors)
        std::sort(adj.begin(), adj.end(), [](const auto& x, const auto& y) { return x.to < y.to; });
    return g;
}

Segmentation lloyd_segment(const face::FaceMesh& mesh, const std::vector<int>& initial, int max_iterations,
                           CvtTrace* trace)
{
    const int t_count = mesh.triangle_count();
    const int patch_count = static_cast<int>(initial.size());
    if (patch_count < 1)
        throw std::invalid_argument("lloyd_segment: need at least one generator");
    if (patch_count > t_count)
        throw std::invalid_argument("lloyd_segment: more patches than triangles");
    {
        std::vector<int> sorted = initial;
        std::sort(sorted.begin(), sorted.end());
        if (sorted.front() < 0 || sorted.back() >= t_count)
            throw std::invalid_argument("lloyd_segment: generator out of range");
        if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
            throw std::invalid_argument("lloyd_segment: generators must be distinct");
    }

    const DualGraph g = build_dual_graph(mesh);
    std::vector<int> generators = initial;
    CvtTrace local;
    CvtTrace& tr = trace ? *trace : local;
    tr = CvtTrace{};

    Assignment current;
    for (int it = 0; it < max_iterations; ++it) {
        Assignment next = assign_to_generators(g, generators);
        double energy = 0.0;
        for (int t = 0; t < t_count; ++t)
            if (next.patch[t] != kUnassigned)
                energy += g.areas[t] * next.distance[t] * next.distance[t];
        tr.energy.push_back(energy);
        tr.iterations = it + 1;
        const bool stable = !current.patch.empty() && next.patch == current.patch;
        current = std::move(next);
        if (stable)
            break;

        // Update: centroid-nearest triangle, accepted only if it lowers the patch energy.
        std::vector<Eigen::Vector3d> weighted(patch_count, Eigen::Vector3d::Zero());
        std::vector<double> area(patch_count, 0.0);
        std::vector<double> current_energy(patch_count, 0.0);
        std::vector<int> sizes(patch_count, 0);
        for (int t = 0; t < t_count; ++t) {
            const auto k = current.patch[t];
            if (k == kUnassigned)
                continue;
            weighted[k] += g.areas[t] * g.centroids[t];
            area[k] += g.areas[t];
            current_energy[k] += g.areas[t] * current.distance[t] * current.distance[t];
            ++sizes[k];
        }
        std::vector<int> candidate(patch_count, -1);
        std::vector<double> best(patch_count, kInf);
        for (int t = 0; t < t_count; ++t) {
            const auto k = current.patch[t];
            if (k == kUnassigned || area[k] <= 0.0)
                continue;
            const double d = (g.centroids[t] - weighted[k] / area[k]).squaredNorm();
            if (d < best[k]) {
                best[k] = d;
                candidate[k] = t;
            }
        }
        for (int k = 0; k < patch_count; ++k) {
            if (candidate[k] < 0 || candidate[k] == generators[k])
                continue;
            const double e = patch_energy_from(g, current.patch, static_cast<std::uint32_t>(k), sizes[k], candidate[k]);
            if (e < current_energy[k])
                generators[k] = candidate[k];
        }
    }

    Segmentation s;
    s.patch_of = current.patch;
    s.patch_count = patch_count;
    tr.repairs = repair(g, s.patch_of, generators);
    tr.final_energy = total_energy(g, s.patch_of, generators);
    return s;
}

Segmentation cvt_segment(const face::FaceMesh& mesh, int patch_count, std::uint64_t seed, CvtTrace* trace)
{
    const int t_count = mesh.triangle_count();
    if (patch_count < 1)
        throw std::invalid_argument("cvt_segment: patch count must be at least 1");
    if (patch_count > t_count)
        throw std::invalid_argument("cvt_segment: patch count exceeds triangle count");

    // Partial Fisher-Yates draw of distinct generator triangles.
    std::mt19937_64 rng(seed);
    std::vector<int> order(t_count);
    for (int t = 0; t < t_count; ++t)
        order[t] = t;
    for (int k = 0; k < patch_count; ++k) {
        std::uniform_int_distribution<int> pick(k, t_count - 1);
        std::swap(order[k], order[pick(rng)]);
    }
    order.resize(patch_count);

    Segmentation s = lloyd_segment(mesh, order, 50, trace);
    s.seed = seed;
    return s;
}

std::vector<Segmentation> generate_segmentation_bank(const face::FaceMesh& mesh, int count, int patch_count,
                                                     std::uint64_t seed)
{
    if (count < 0)
        throw std::invalid_argument("generate_segmentation_bank: count must be non-negative");
    std::mt19937_64 rng(seed);
    std::vector<std::uint64_t> seeds(count);
    for (auto& s : seeds)
        s = rng();
    std::vector<Segmentation> bank;
    bank.reserve(count);
    for (auto s : seeds)
        bank.push_back(cvt_segment(mesh, patch_count, s));
    return bank;
}

std::string check_partition(const face::FaceMesh& mesh, const Segmentation& segmentation)
{
    if (segmentation.patch_of.size() != mesh.triangles.size())
        return "label count differs from triangle count";
    if (segmentation.patch_count < 1)
        return "patch count must be positive";
    std::vector<int> sizes(segmentation.patch_count, 0);
    for (auto p : segmentation.patch_of) {
        if (p >= static_cast<std::uint32_t>(segmentation.patch_count))
            return "label out of range";
        ++sizes[p];
    }
    for (int k = 0; k < segmentation.patch_count; ++k)
        if (sizes[k] == 0)
            return "patch " + std::to_string(k) + " is empty";
    const DualGraph g = build_dual_graph(mesh);
    for (int k = 0; k < segmentation.patch_count; ++k)
        if (patch_components(g, segmentation.patch_of, static_cast<std::uint32_t>(k)).size() != 1)
            return "patch " + std::to_string(k) + " is not connected";
    return {};
}

} // namespace dff::seg
