#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <vector>

#include "crease/global_merge.hpp"
#include "crease/grid.hpp"
#include "crease/mesh.hpp"
#include "crease/spatial_hash.hpp"

namespace crease {

struct AutoseedParams
{
    double d_max = 15.0;
    double boundary_margin_frac = 0.10;
    double seed_spacing_frac = 0.40;
    std::size_t limit = 0; ///< stop after this many candidates; 0 = all
    int inset = 0;         ///< pinhole seeds keep this many voxels from the grid boundary
};

struct SeedCandidate
{
    Index3 position{};
    std::uint32_t vertex = 0;
    Vec3 source{}; ///< position of that vertex
    double seed_distance = 0.0; ///< distance from the source vertex to the nearest seed
};

/// Next seed candidates on the current mesh: vertices far enough from the
/// mesh boundary and from every seed (and excluded point), snapped to the
/// highest-p voxel within one voxel along the normal, picked greedily by
/// decreasing seed distance with mutual spacing. Empty means converged.
inline std::vector<SeedCandidate> next_seeds(const TriangleMesh& mesh, const std::vector<Vec3>& seeds,
                                             const Grid<float>& p, const AutoseedParams& params,
                                             const std::vector<Vec3>& excluded = {})
{
    std::vector<SeedCandidate> out;
    if (mesh.triangles.empty())
        return out;
    const double margin = params.boundary_margin_frac * params.d_max;
    const double spacing = params.seed_spacing_frac * params.d_max;

    SpatialHash boundary(std::max(margin, 1e-6));
    for (auto v : boundary_vertices(mesh))
        boundary.insert(mesh.vertices[v]);
    SpatialHash seed_hash(std::max(spacing, 1e-6));
    for (const auto& s : seeds)
        seed_hash.insert(s);
    SpatialHash excluded_hash(std::max(spacing, 1e-6));
    for (const auto& e : excluded)
        excluded_hash.insert(e);

    std::vector<char> used(mesh.vertices.size(), 0);
    for (const auto& t : mesh.triangles)
        for (auto v : t)
            used[v] = 1;

    std::vector<SeedCandidate> pool;
    for (std::uint32_t v = 0; v < mesh.vertices.size(); ++v) {
        if (!used[v])
            continue;
        const Vec3& x = mesh.vertices[v];
        if (boundary.any_within(x, margin) || seed_hash.any_within(x, spacing) ||
            excluded_hash.any_within(x, spacing))
            continue;
        pool.push_back({{}, v, x, seed_hash.nearest(x)});
    }
    std::stable_sort(pool.begin(), pool.end(),
                     [](const auto& a, const auto& b) { return a.seed_distance > b.seed_distance; });
    if (pool.empty())
        return out;

    const auto normals = vertex_normals(mesh);
    const Spacing& sp = p.spacing();
    const Dims& dims = p.dims();
    SpatialHash chosen(std::max(spacing, 1e-6));
    for (auto& c : pool) {
        const Vec3& x = mesh.vertices[c.vertex];
        if (chosen.any_within(x, spacing))
            continue;
        Vec3 n{normals[c.vertex][0] / sp.sx, normals[c.vertex][1] / sp.sy, normals[c.vertex][2] / sp.sz};
        const double len = norm(n);
        if (len > 0)
            n = (1.0 / len) * n;
        double best = -1;
        Index3 pick{};
        for (int k : {0, -1, 1}) {
            Index3 q{};
            for (int a = 0; a < 3; ++a)
                q[a] = static_cast<int>(std::lround(x[a] / sp[a] + k * n[a]));
            if (!dims.contains(q))
                continue;
            const double pv = p.at(q);
            if (pv > best) {
                best = pv;
                pick = q;
            }
        }
        if (!(best > 0))
            continue;
        c.position = pick;
        chosen.insert(x);
        out.push_back(c);
        if (params.limit && out.size() >= params.limit)
            break;
    }
    return out;
}

/// Seeds for pinholes: boundary loops whose bounding box diagonal is below
/// the seed spacing (or twice the margin, if larger) get no regular
/// candidate, so each proposes a high-p voxel next to the loop centroid,
/// preferring unlabeled ones.
inline std::vector<SeedCandidate> hole_seeds(const TriangleMesh& mesh, const GlobalFields& g, const Grid<float>& p,
                                             const AutoseedParams& params, const std::vector<Vec3>& excluded = {})
{
    std::vector<SeedCandidate> out;
    const double margin = params.boundary_margin_frac * params.d_max;
    const double small = std::max(2 * margin, params.seed_spacing_frac * params.d_max);
    std::map<std::uint64_t, int> edge_use;
    for (const auto& t : mesh.triangles)
        for (int k = 0; k < 3; ++k)
            ++edge_use[detail::edge_key(t[k], t[(k + 1) % 3])];
    detail::UnionFind uf(mesh.vertices.size());
    std::vector<char> on_boundary(mesh.vertices.size(), 0);
    for (const auto& [e, n] : edge_use) {
        if (n != 1)
            continue;
        const auto a = static_cast<std::uint32_t>(e >> 32), b = static_cast<std::uint32_t>(e & 0xffffffffu);
        uf.unite(a, b);
        on_boundary[a] = on_boundary[b] = 1;
    }
    std::map<std::size_t, std::vector<std::uint32_t>> loops;
    for (std::uint32_t v = 0; v < mesh.vertices.size(); ++v)
        if (on_boundary[v])
            loops[uf.find(v)].push_back(v);

    SpatialHash excluded_hash(std::max(margin, 1e-6));
    for (const auto& e : excluded)
        excluded_hash.insert(e);
    const Spacing& sp = p.spacing();
    const Dims& dims = p.dims();
    std::vector<std::vector<std::uint32_t>> ordered;
    for (auto& [root, vs] : loops)
        ordered.push_back(std::move(vs));
    std::sort(ordered.begin(), ordered.end(), [](const auto& a, const auto& b) { return a.front() < b.front(); });
    for (const auto& vs : ordered) {
        Vec3 lo = mesh.vertices[vs.front()], hi = lo, c{0, 0, 0};
        for (auto v : vs) {
            for (int a = 0; a < 3; ++a) {
                lo[a] = std::min(lo[a], mesh.vertices[v][a]);
                hi[a] = std::max(hi[a], mesh.vertices[v][a]);
            }
            c = c + mesh.vertices[v];
        }
        c = (1.0 / static_cast<double>(vs.size())) * c;
        if (norm(hi - lo) >= small || excluded_hash.any_within(mesh.vertices[vs.front()], margin))
            continue;
        // nearest voxel to the centroid kept inside the inset, then the
        // unlabeled (else any) voxel of highest p around it
        Index3 base{};
        for (int a = 0; a < 3; ++a) {
            const int lo_i = std::min(params.inset, (dims[a] - 1) / 2);
            base[a] = std::clamp(static_cast<int>(std::lround(c[a] / sp[a])), lo_i, dims[a] - 1 - lo_i);
        }
        double best = 0;
        Index3 pick{};
        bool unlabeled = false;
        for (int dz = -1; dz <= 1; ++dz)
            for (int dy = -1; dy <= 1; ++dy)
                for (int dx = -1; dx <= 1; ++dx) {
                    const Index3 q = base + Index3{dx, dy, dz};
                    bool inside = dims.contains(q);
                    for (int a = 0; a < 3 && inside; ++a)
                        inside = q[a] >= std::min(params.inset, (dims[a] - 1) / 2) &&
                                 q[a] <= dims[a] - 1 - std::min(params.inset, (dims[a] - 1) / 2);
                    if (!inside)
                        continue;
                    const bool free = g.l[dims.linear(q)] == 0;
                    const double pv = p.at(q);
                    if (std::make_pair(free, pv) > std::make_pair(unlabeled, best)) {
                        best = pv;
                        pick = q;
                        unlabeled = free;
                    }
                }
        if (best > 0)
            out.push_back({pick, vs.front(), mesh.vertices[vs.front()], 0.0});
    }
    return out;
}

/// Starting seed when none is given: the highest-p voxel on the central
/// column along z (lowest z wins ties).
inline Index3 central_seed(const Grid<float>& p)
{
    const Dims& d = p.dims();
    Index3 best{d.nx / 2, d.ny / 2, 0};
    float best_p = -1.0f;
    for (int z = 0; z < d.nz; ++z) {
        const Index3 q{d.nx / 2, d.ny / 2, z};
        if (p.at(q) > best_p) {
            best_p = p.at(q);
            best = q;
        }
    }
    return best;
}

} // namespace crease
