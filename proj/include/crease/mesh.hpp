#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <numeric>
#include <vector>

#include "crease/grid.hpp"

namespace crease {

/// Indexed triangle set in physical coordinates. `provenance` holds the
/// owning grid cube for extracted meshes and is empty otherwise.
struct TriangleMesh
{
    std::vector<Vec3> vertices;
    std::vector<std::array<std::uint32_t, 3>> triangles;
    std::vector<VoxelIndex> provenance;

    [[nodiscard]] bool empty() const noexcept { return triangles.empty(); }

    friend bool operator==(const TriangleMesh&, const TriangleMesh&) = default;
};

struct TopologyReport
{
    std::size_t vertices = 0;
    std::size_t edges = 0;
    std::size_t faces = 0;
    long long euler = 0;
    std::size_t non_manifold_count = 0; ///< vertices whose star is not a single fan
    std::size_t non_manifold_edges = 0; ///< edges with more than two triangles
    bool orientable = true;
    std::size_t connected_components = 0;
    std::size_t boundary_loop_count = 0;

    [[nodiscard]] bool is_manifold() const noexcept { return non_manifold_count == 0 && non_manifold_edges == 0; }
};

namespace detail {

class UnionFind
{
public:
    explicit UnionFind(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), std::size_t{0}); }

    std::size_t find(std::size_t x)
    {
        while (parent_[x] != x)
            x = parent_[x] = parent_[parent_[x]];
        return x;
    }

    void unite(std::size_t a, std::size_t b)
    {
        a = find(a);
        b = find(b);
        if (a != b)
            parent_[std::max(a, b)] = std::min(a, b);
    }

private:
    std::vector<std::size_t> parent_;
};

struct HalfEdge
{
    std::uint64_t key; // min << 32 | max
    std::uint32_t tri;
    std::uint32_t from;
};

inline std::uint64_t edge_key(std::uint32_t a, std::uint32_t b)
{
    return (static_cast<std::uint64_t>(std::min(a, b)) << 32) | std::max(a, b);
}

} // namespace detail

/// Counts, manifoldness, orientability, components and boundary loops of a
/// welded mesh.
inline TopologyReport topology_report(const TriangleMesh& mesh)
{
    TopologyReport rep;
    const auto& tris = mesh.triangles;
    rep.faces = tris.size();
    if (tris.empty())
        return rep;

    std::vector<char> used(mesh.vertices.size(), 0);
    for (const auto& t : tris)
        for (auto v : t)
            used[v] = 1;
    rep.vertices = static_cast<std::size_t>(std::count(used.begin(), used.end(), 1));

    std::vector<detail::HalfEdge> half;
    half.reserve(tris.size() * 3);
    for (std::uint32_t f = 0; f < tris.size(); ++f)
        for (int k = 0; k < 3; ++k) {
            const auto a = tris[f][k], b = tris[f][(k + 1) % 3];
            half.push_back({detail::edge_key(a, b), f, a});
        }
    std::sort(half.begin(), half.end(), [](const auto& l, const auto& r) {
        return l.key != r.key ? l.key < r.key : l.tri < r.tri;
    });

    detail::UnionFind components(tris.size());
    detail::UnionFind boundary(mesh.vertices.size());
    std::vector<char> boundary_vertex(mesh.vertices.size(), 0);
    std::vector<char> bad_vertex(mesh.vertices.size(), 0);
    // manifold edge adjacency: (tri, neighbour tri, consistent winding?)
    std::vector<std::array<std::int64_t, 3>> neighbours(tris.size(), {-1, -1, -1});
    std::vector<std::array<char, 3>> consistent(tris.size(), {1, 1, 1});

    auto slot = [&](std::uint32_t tri, std::uint64_t key) {
        for (int k = 0; k < 3; ++k)
            if (detail::edge_key(tris[tri][k], tris[tri][(k + 1) % 3]) == key)
                return k;
        return 0;
    };

    for (std::size_t i = 0; i < half.size();) {
        std::size_t j = i;
        while (j < half.size() && half[j].key == half[i].key)
            ++j;
        const std::size_t count = j - i;
        ++rep.edges;
        const auto a = static_cast<std::uint32_t>(half[i].key >> 32);
        const auto b = static_cast<std::uint32_t>(half[i].key & 0xffffffffu);
        for (std::size_t k = i + 1; k < j; ++k)
            components.unite(half[i].tri, half[k].tri);
        if (count == 1) {
            boundary.unite(a, b);
            boundary_vertex[a] = boundary_vertex[b] = 1;
        } else if (count == 2) {
            const auto t0 = half[i].tri, t1 = half[i + 1].tri;
            const bool same_dir = half[i].from == half[i + 1].from;
            neighbours[t0][slot(t0, half[i].key)] = t1;
            neighbours[t1][slot(t1, half[i].key)] = t0;
            consistent[t0][slot(t0, half[i].key)] = !same_dir;
            consistent[t1][slot(t1, half[i].key)] = !same_dir;
        } else {
            ++rep.non_manifold_edges;
            bad_vertex[a] = bad_vertex[b] = 1;
        }
        i = j;
    }

    // vertex stars: triangles around v linked through manifold edges that contain v
    std::vector<std::vector<std::uint32_t>> star(mesh.vertices.size());
    for (std::uint32_t f = 0; f < tris.size(); ++f)
        for (auto v : tris[f])
            star[v].push_back(f);
    for (std::size_t v = 0; v < star.size(); ++v) {
        if (star[v].empty() || bad_vertex[v])
            continue;
        const auto& s = star[v];
        detail::UnionFind fan(s.size());
        for (std::size_t i = 0; i < s.size(); ++i) {
            const auto f = s[i];
            for (int k = 0; k < 3; ++k) {
                const auto a = tris[f][k], b = tris[f][(k + 1) % 3];
                if ((a != v && b != v) || neighbours[f][k] < 0)
                    continue;
                const auto g = static_cast<std::uint32_t>(neighbours[f][k]);
                const auto it = std::find(s.begin(), s.end(), g);
                if (it != s.end())
                    fan.unite(i, static_cast<std::size_t>(it - s.begin()));
            }
        }
        std::size_t roots = 0;
        for (std::size_t i = 0; i < s.size(); ++i)
            roots += fan.find(i) == i;
        if (roots != 1)
            bad_vertex[v] = 1;
    }
    rep.non_manifold_count = static_cast<std::size_t>(std::count(bad_vertex.begin(), bad_vertex.end(), 1));

    // orientability: propagate a flip flag across manifold edges
    std::vector<signed char> flip(tris.size(), -1);
    std::vector<std::uint32_t> stack;
    for (std::uint32_t seed = 0; seed < tris.size() && rep.orientable; ++seed) {
        if (flip[seed] >= 0)
            continue;
        flip[seed] = 0;
        stack.push_back(seed);
        while (!stack.empty() && rep.orientable) {
            const auto f = stack.back();
            stack.pop_back();
            for (int k = 0; k < 3; ++k) {
                if (neighbours[f][k] < 0)
                    continue;
                const auto g = static_cast<std::uint32_t>(neighbours[f][k]);
                const signed char want = consistent[f][k] ? flip[f] : static_cast<signed char>(1 - flip[f]);
                if (flip[g] < 0) {
                    flip[g] = want;
                    stack.push_back(g);
                } else if (flip[g] != want) {
                    rep.orientable = false;
                }
            }
        }
    }

    for (std::uint32_t f = 0; f < tris.size(); ++f)
        rep.connected_components += components.find(f) == f;
    for (std::size_t v = 0; v < boundary_vertex.size(); ++v)
        rep.boundary_loop_count += boundary_vertex[v] && boundary.find(v) == v;

    rep.euler = static_cast<long long>(rep.vertices) - static_cast<long long>(rep.edges) +
                static_cast<long long>(rep.faces);
    return rep;
}

/// Indices of vertices lying on boundary edges.
inline std::vector<std::uint32_t> boundary_vertices(const TriangleMesh& mesh)
{
    std::vector<std::uint64_t> keys;
    keys.reserve(mesh.triangles.size() * 3);
    for (const auto& t : mesh.triangles)
        for (int k = 0; k < 3; ++k)
            keys.push_back(detail::edge_key(t[k], t[(k + 1) % 3]));
    std::sort(keys.begin(), keys.end());
    std::vector<char> mark(mesh.vertices.size(), 0);
    for (std::size_t i = 0; i < keys.size();) {
        std::size_t j = i;
        while (j < keys.size() && keys[j] == keys[i])
            ++j;
        if (j - i == 1) {
            mark[keys[i] >> 32] = 1;
            mark[keys[i] & 0xffffffffu] = 1;
        }
        i = j;
    }
    std::vector<std::uint32_t> out;
    for (std::uint32_t v = 0; v < mark.size(); ++v)
        if (mark[v])
            out.push_back(v);
    return out;
}

/// Area-weighted vertex normals (unnormalized if degenerate).
inline std::vector<Vec3> vertex_normals(const TriangleMesh& mesh)
{
    std::vector<Vec3> n(mesh.vertices.size(), Vec3{0, 0, 0});
    for (const auto& t : mesh.triangles) {
        const Vec3 fn = cross(mesh.vertices[t[1]] - mesh.vertices[t[0]], mesh.vertices[t[2]] - mesh.vertices[t[0]]);
        for (auto v : t)
            n[v] = n[v] + fn;
    }
    for (auto& v : n) {
        const double l = norm(v);
        if (l > 0)
            v = (1.0 / l) * v;
    }
    return n;
}

/// Triangles as sorted vertex-position triples with the rotation fixed so the
/// smallest position leads; equal sets mean equal meshes up to vertex order.
inline std::vector<std::array<Vec3, 3>> canonical_triangles(const TriangleMesh& mesh)
{
    std::vector<std::array<Vec3, 3>> out;
    out.reserve(mesh.triangles.size());
    for (const auto& t : mesh.triangles) {
        std::array<Vec3, 3> p{mesh.vertices[t[0]], mesh.vertices[t[1]], mesh.vertices[t[2]]};
        const auto lead = std::min_element(p.begin(), p.end()) - p.begin();
        std::rotate(p.begin(), p.begin() + lead, p.end());
        out.push_back(p);
    }
    std::sort(out.begin(), out.end());
    return out;
}

} // namespace crease
