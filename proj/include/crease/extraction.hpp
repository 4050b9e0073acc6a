#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <unordered_map>
#include <vector>

#include "crease/global_merge.hpp"
#include "crease/grid.hpp"
#include "crease/mesh.hpp"

namespace crease {

struct MeshConfig
{
    /// Give background corners the majority label of their 26 neighbors and
    /// mesh every fully labeled cube (classic marching cubes path).
    bool relabel_background = false;

    friend bool operator==(const MeshConfig&, const MeshConfig&) = default;
};

/// Cube edge: lower voxel * 3 + axis. Mesh vertices on edges use this key.
using EdgeKey = std::uint64_t;
/// Keys at or above this value name face-midpoint vertices.
inline constexpr std::uint64_t kFaceKeyBase = std::uint64_t{1} << 39;
/// Keys at or above this value name loop-center vertices: base + cube * 8 + loop.
inline constexpr std::uint64_t kCenterKeyBase = std::uint64_t{1} << 40;

/// Per-cube meshing result. Cube ids are the linear index of the lowest corner.
struct CubeEntry
{
    enum class State : std::uint8_t { eligible, gate };

    State state = State::eligible;
    std::vector<EdgeKey> crossing;                   ///< edges between labeled corners of different parity
    std::vector<std::array<std::uint64_t, 3>> tris;  ///< vertex keys
    std::vector<std::pair<std::uint64_t, Vec3>> centers;

    friend bool operator==(const CubeEntry&, const CubeEntry&) = default;
};

namespace detail {

// corner c = i + 2j + 4k sits at offset (i, j, k)
inline constexpr std::array<std::array<int, 4>, 6> kCubeFaces{{
    {0, 4, 6, 2}, // x = 0, counter-clockwise seen from outside
    {1, 3, 7, 5}, // x = 1
    {0, 1, 5, 4}, // y = 0
    {2, 6, 7, 3}, // y = 1
    {0, 2, 3, 1}, // z = 0
    {4, 5, 7, 6}, // z = 1
}};

inline constexpr Index3 corner_offset(int c) noexcept { return {c & 1, (c >> 1) & 1, (c >> 2) & 1}; }

/// Local edge index (0..11) of the cube edge joining corners a and b.
inline int local_edge(int a, int b) noexcept
{
    const int lo = std::min(a, b), hi = std::max(a, b);
    const int axis = (hi - lo) == 1 ? 0 : ((hi - lo) == 2 ? 1 : 2);
    // the 4 edges along an axis are indexed by the two remaining offset bits of the lower corner
    int slot = 0, bit = 0;
    for (int ax = 0; ax < 3; ++ax)
        if (ax != axis)
            slot |= ((lo >> ax) & 1) << bit++;
    return axis * 4 + slot;
}

/// Lower corner and axis of a local edge.
inline std::pair<int, int> edge_corner_axis(int e) noexcept
{
    const int axis = e / 4, slot = e % 4;
    int corner = 0, bit = 0;
    for (int ax = 0; ax < 3; ++ax)
        if (ax != axis)
            corner |= ((slot >> bit++) & 1) << ax;
    return {corner, axis};
}

/// Bitmask of the two cube faces containing a local edge.
inline int edge_faces(int e) noexcept
{
    const auto [corner, axis] = edge_corner_axis(e);
    int mask = 0;
    for (int ax = 0; ax < 3; ++ax)
        if (ax != axis)
            mask |= 1 << (2 * ax + ((corner >> ax) & 1));
    return mask;
}

inline Label corner_label(const GlobalFields& g, Index3 q, bool relabel)
{
    const Label l = g.l[g.dims.linear(q)];
    if (l != 0 || !relabel)
        return l;
    std::array<std::pair<Label, int>, 26> votes{};
    int n = 0;
    for (int dz = -1; dz <= 1; ++dz)
        for (int dy = -1; dy <= 1; ++dy)
            for (int dx = -1; dx <= 1; ++dx) {
                const Index3 nq = q + Index3{dx, dy, dz};
                if ((dx | dy | dz) == 0 || !g.dims.contains(nq))
                    continue;
                const Label nl = g.l[g.dims.linear(nq)];
                if (nl == 0)
                    continue;
                int k = 0;
                while (k < n && votes[k].first != nl)
                    ++k;
                if (k == n)
                    votes[n++] = {nl, 0};
                ++votes[k].second;
            }
    Label best = 0;
    int count = 0;
    for (int k = 0; k < n; ++k)
        if (votes[k].second > count || (votes[k].second == count && votes[k].first < best)) {
            best = votes[k].first;
            count = votes[k].second;
        }
    return best;
}

} // namespace detail

inline Vec3 edge_vertex_position(const Dims& dims, const Spacing& sp, EdgeKey e)
{
    const Index3 q = dims.coords(static_cast<VoxelIndex>(e / 3));
    const int axis = static_cast<int>(e % 3);
    Vec3 p{double(q.x), double(q.y), double(q.z)};
    p[axis] += 0.5;
    return {p[0] * sp.sx, p[1] * sp.sy, p[2] * sp.sz};
}

/// Midpoint of a cube face: lower voxel * 3 + normal axis, offset by kFaceKeyBase.
inline Vec3 face_vertex_position(const Dims& dims, const Spacing& sp, std::uint64_t key)
{
    const std::uint64_t f = key - kFaceKeyBase;
    const Index3 q = dims.coords(static_cast<VoxelIndex>(f / 3));
    const int axis = static_cast<int>(f % 3);
    Vec3 p{double(q.x) + 0.5, double(q.y) + 0.5, double(q.z) + 0.5};
    p[axis] -= 0.5;
    return {p[0] * sp.sx, p[1] * sp.sy, p[2] * sp.sz};
}

/// Meshes one cube. Returns false when the cube has no crossing edge.
///
/// Background corners take no part in the interface. On a face with a
/// background corner every crossing is joined to the face midpoint, and each
/// open chain that results is closed through its own center vertex.
inline bool evaluate_cube(const GlobalFields& g, const NeighborhoodGraph& graph, VoxelIndex cube,
                          const MeshConfig& cfg, CubeEntry& out)
{
    const Dims& dims = g.dims;
    const Index3 base = dims.coords(cube);
    std::array<Label, 8> lab{};
    std::array<std::uint8_t, 8> cls{};
    for (int c = 0; c < 8; ++c) {
        lab[c] = detail::corner_label(g, base + detail::corner_offset(c), cfg.relabel_background);
        cls[c] = parity_class(lab[c]);
    }
    out = CubeEntry{};
    // local vertex ids: 0..11 edges, 12..17 face midpoints
    std::array<std::uint64_t, 18> key{};
    std::array<bool, 12> crosses{};
    for (int e = 0; e < 12; ++e) {
        const auto [corner, axis] = detail::edge_corner_axis(e);
        const int other = corner | (1 << axis);
        key[e] = static_cast<EdgeKey>(dims.linear(base + detail::corner_offset(corner))) * 3 + axis;
        crosses[e] = cls[corner] && cls[other] && cls[corner] != cls[other];
        if (crosses[e])
            out.crossing.push_back(key[e]);
    }
    if (out.crossing.empty())
        return false;
    std::sort(out.crossing.begin(), out.crossing.end());
    for (int f = 0; f < 6; ++f) {
        const int axis = f / 2;
        Index3 q = base;
        q[axis] += f % 2;
        key[12 + f] = kFaceKeyBase + static_cast<std::uint64_t>(dims.linear(q)) * 3 + axis;
    }

    std::array<SeedIndex, 8> doms{};
    int nd = 0;
    for (int c = 0; c < 8; ++c) {
        if (lab[c] == 0)
            continue;
        const SeedIndex d = dom_from_label(lab[c]);
        if (std::find(doms.begin(), doms.begin() + nd, d) == doms.begin() + nd)
            doms[nd++] = d;
    }
    for (int i = 0; i < nd; ++i)
        for (int j = i + 1; j < nd; ++j)
            if (!graph.adjacent(doms[i], doms[j])) {
                out.state = CubeEntry::State::gate;
                return true;
            }

    // per face: pair each 1->2 crossing with the next 2->1 crossing along the
    // counter-clockwise walk; the segment runs from the first to the second
    std::array<int, 18> next{};
    std::array<bool, 18> has_in{};
    next.fill(-1);
    for (int f = 0; f < 6; ++f) {
        const auto& face = detail::kCubeFaces[f];
        const bool open = cls[face[0]] == 0 || cls[face[1]] == 0 || cls[face[2]] == 0 || cls[face[3]] == 0;
        int order[4], types[4], n = 0;
        for (int k = 0; k < 4; ++k) {
            const int a = face[k], b = face[(k + 1) % 4];
            if (!cls[a] || !cls[b] || cls[a] == cls[b])
                continue;
            order[n] = detail::local_edge(a, b);
            types[n++] = cls[a] == 1 ? 1 : 2;
        }
        for (int i = 0; i < n; ++i) {
            if (open) {
                if (types[i] == 1)
                    next[order[i]] = 12 + f;
                else
                    next[12 + f] = order[i];
                has_in[types[i] == 1 ? 12 + f : order[i]] = true;
                continue;
            }
            if (types[i] != 1)
                continue;
            for (int j = 1; j < n; ++j) {
                const int k = (i + j) % n;
                if (types[k] == 2) {
                    next[order[i]] = order[k];
                    has_in[order[k]] = true;
                    break;
                }
            }
        }
    }
    auto faces_of = [](int v) { return v < 12 ? detail::edge_faces(v) : 1 << (v - 12); };

    std::array<bool, 18> used{};
    int loop_index = 0;
    auto add_center = [&](const std::vector<int>& loop) {
        const std::uint64_t ck = kCenterKeyBase + static_cast<std::uint64_t>(cube) * 8 + loop_index;
        Vec3 center{0, 0, 0};
        for (int v : loop)
            center = center + (v < 12 ? edge_vertex_position(dims, g.spacing, key[v])
                                      : face_vertex_position(dims, g.spacing, key[v]));
        out.centers.push_back({ck, (1.0 / static_cast<double>(loop.size())) * center});
        return ck;
    };
    // open chains start at a face midpoint without an incoming segment
    for (int start = 12; start < 18; ++start) {
        if (next[start] < 0 || has_in[start])
            continue;
        std::vector<int> path;
        for (int v = start; v >= 0 && !used[v]; v = next[v]) {
            used[v] = true;
            path.push_back(v);
        }
        const std::uint64_t ck = add_center(path);
        for (std::size_t i = 0; i + 1 < path.size(); ++i)
            out.tris.push_back({ck, key[path[i]], key[path[i + 1]]});
        ++loop_index;
    }
    for (int start = 0; start < 18; ++start) {
        if (next[start] < 0 || used[start])
            continue;
        std::vector<int> loop;
        for (int v = start; v >= 0 && !used[v]; v = next[v]) {
            used[v] = true;
            loop.push_back(v);
        }
        const std::size_t k = loop.size();
        if (k < 3)
            continue; // cannot happen for a consistent corner classification
        // fan from a vertex whose diagonals avoid the cube faces, else from the loop center
        int apex = -1;
        std::vector<std::size_t> rot(k);
        for (std::size_t r = 0; r < k; ++r)
            rot[r] = r;
        std::sort(rot.begin(), rot.end(), [&](std::size_t a, std::size_t b) { return key[loop[a]] < key[loop[b]]; });
        for (std::size_t r : rot) {
            bool ok = true;
            for (std::size_t i = 2; i + 1 < k && ok; ++i)
                ok = (faces_of(loop[r]) & faces_of(loop[(r + i) % k])) == 0;
            if (ok) {
                apex = static_cast<int>(r);
                break;
            }
        }
        if (apex >= 0) {
            for (std::size_t i = 1; i + 1 < k; ++i)
                out.tris.push_back({key[loop[apex]], key[loop[(apex + i) % k]], key[loop[(apex + i + 1) % k]]});
        } else {
            const std::uint64_t ck = add_center(loop);
            for (std::size_t i = 0; i < k; ++i)
                out.tris.push_back({ck, key[loop[i]], key[loop[(i + 1) % k]]});
        }
        ++loop_index;
    }
    out.state = CubeEntry::State::eligible;
    return true;
}

/// Meshing results per cube, kept so that updates only revisit affected cubes.
class MeshStore
{
public:
    MeshStore() = default;
    explicit MeshStore(MeshConfig cfg) : cfg_(cfg) {}

    [[nodiscard]] const MeshConfig& config() const noexcept { return cfg_; }
    [[nodiscard]] const std::map<VoxelIndex, CubeEntry>& cubes() const noexcept { return cubes_; }

    void clear()
    {
        cubes_.clear();
        gate_blocked_.clear();
    }

    /// Re-evaluates every cube of the grid.
    void rebuild(const GlobalFields& g, const NeighborhoodGraph& graph)
    {
        clear();
        dims_ = g.dims;
        spacing_ = g.spacing;
        const Dims& d = g.dims;
        for (int z = 0; z + 1 < d.nz; ++z)
            for (int y = 0; y + 1 < d.ny; ++y)
                for (int x = 0; x + 1 < d.nx; ++x) {
                    const VoxelIndex c = d.linear({x, y, z});
                    // cheap reject: a crossing needs a labeled corner
                    bool any = false;
                    for (int k = 0; k < 8 && !any; ++k)
                        any = g.l[d.linear(Index3{x, y, z} + detail::corner_offset(k))] != 0;
                    if (!any && !cfg_.relabel_background)
                        continue;
                    set_cube(g, graph, c);
                }
    }

    /// Re-evaluates cubes with a corner in `touched` plus every cube blocked
    /// by the graph gate (the graph only gains edges between rebuilds).
    void update(const GlobalFields& g, const NeighborhoodGraph& graph, std::span<const VoxelIndex> touched)
    {
        dims_ = g.dims;
        spacing_ = g.spacing;
        const Dims& d = g.dims;
        std::vector<VoxelIndex> affected;
        const int reach = cfg_.relabel_background ? 2 : 1;
        for (VoxelIndex v : touched) {
            const Index3 q = d.coords(v);
            for (int dz = -reach; dz < reach; ++dz)
                for (int dy = -reach; dy < reach; ++dy)
                    for (int dx = -reach; dx < reach; ++dx) {
                        const Index3 c = q + Index3{dx, dy, dz};
                        if (c.x < 0 || c.y < 0 || c.z < 0 || c.x + 1 >= d.nx || c.y + 1 >= d.ny || c.z + 1 >= d.nz)
                            continue;
                        affected.push_back(d.linear(c));
                    }
        }
        affected.insert(affected.end(), gate_blocked_.begin(), gate_blocked_.end());
        std::sort(affected.begin(), affected.end());
        affected.erase(std::unique(affected.begin(), affected.end()), affected.end());
        for (VoxelIndex c : affected)
            set_cube(g, graph, c);
    }

    /// Cubes left out to keep every vertex star a single fan: where only two
    /// diagonally opposite cubes around a crossing edge emit triangles, the
    /// one with the larger id is dropped, repeatedly.
    [[nodiscard]] std::set<VoxelIndex> deselected() const
    {
        std::set<VoxelIndex> off;
        std::set<EdgeKey> work;
        for (const auto& [id, e] : cubes_)
            if (e.state != CubeEntry::State::eligible)
                work.insert(e.crossing.begin(), e.crossing.end());
        auto on = [&](long long id) {
            if (id < 0)
                return false;
            const auto it = cubes_.find(static_cast<VoxelIndex>(id));
            return it != cubes_.end() && it->second.state == CubeEntry::State::eligible &&
                   !off.count(static_cast<VoxelIndex>(id));
        };
        while (!work.empty()) {
            const EdgeKey e = *work.begin();
            work.erase(work.begin());
            const Index3 q = dims_.coords(static_cast<VoxelIndex>(e / 3));
            const int axis = static_cast<int>(e % 3);
            const int b = (axis + 1) % 3, c = (axis + 2) % 3;
            // cubes around the edge in cyclic order
            std::array<long long, 4> ids{};
            const int db[4] = {0, 1, 1, 0}, dc[4] = {0, 0, 1, 1};
            for (int k = 0; k < 4; ++k) {
                Index3 m = q;
                m[b] -= db[k];
                m[c] -= dc[k];
                const bool valid = m[b] >= 0 && m[c] >= 0 && m[b] + 1 < dims_[b] && m[c] + 1 < dims_[c] &&
                                   m[axis] + 1 < dims_[axis];
                ids[k] = valid ? static_cast<long long>(dims_.linear(m)) : -1;
            }
            std::array<bool, 4> s{};
            for (int k = 0; k < 4; ++k)
                s[k] = on(ids[k]);
            long long drop = -1;
            if (s[0] && s[2] && !s[1] && !s[3])
                drop = std::max(ids[0], ids[2]);
            else if (s[1] && s[3] && !s[0] && !s[2])
                drop = std::max(ids[1], ids[3]);
            if (drop < 0)
                continue;
            off.insert(static_cast<VoxelIndex>(drop));
            const auto& dropped = cubes_.at(static_cast<VoxelIndex>(drop));
            work.insert(dropped.crossing.begin(), dropped.crossing.end());
        }
        return off;
    }

    /// Welded mesh over all eligible cubes in ascending cube order.
    [[nodiscard]] TriangleMesh assemble() const
    {
        const auto off = deselected();
        TriangleMesh mesh;
        std::unordered_map<std::uint64_t, std::uint32_t> index;
        for (const auto& [id, e] : cubes_) {
            if (e.state != CubeEntry::State::eligible || off.count(id))
                continue;
            for (const auto& tri : e.tris) {
                std::array<std::uint32_t, 3> t{};
                for (int k = 0; k < 3; ++k) {
                    const auto [it, fresh] = index.try_emplace(tri[k], static_cast<std::uint32_t>(mesh.vertices.size()));
                    if (fresh) {
                        if (tri[k] >= kCenterKeyBase) {
                            const auto c = std::find_if(e.centers.begin(), e.centers.end(),
                                                        [&](const auto& cp) { return cp.first == tri[k]; });
                            mesh.vertices.push_back(c->second);
                        } else if (tri[k] >= kFaceKeyBase) {
                            mesh.vertices.push_back(face_vertex_position(dims_, spacing_, tri[k]));
                        } else {
                            mesh.vertices.push_back(edge_vertex_position(dims_, spacing_, tri[k]));
                        }
                    }
                    t[k] = it->second;
                }
                mesh.triangles.push_back(t);
                mesh.provenance.push_back(id);
            }
        }
        return mesh;
    }

    friend bool operator==(const MeshStore& a, const MeshStore& b)
    {
        return a.cfg_ == b.cfg_ && a.cubes_ == b.cubes_;
    }

private:
    void set_cube(const GlobalFields& g, const NeighborhoodGraph& graph, VoxelIndex c)
    {
        CubeEntry entry;
        gate_blocked_.erase(c);
        if (!evaluate_cube(g, graph, c, cfg_, entry)) {
            cubes_.erase(c);
            return;
        }
        if (entry.state == CubeEntry::State::gate)
            gate_blocked_.insert(c);
        cubes_[c] = std::move(entry);
    }

    MeshConfig cfg_{};
    Dims dims_{};
    Spacing spacing_{};
    std::map<VoxelIndex, CubeEntry> cubes_;
    std::set<VoxelIndex> gate_blocked_;
};

/// Label-interface mesh of the global fields. With `region`, only cubes with a
/// corner in the region are meshed.
inline TriangleMesh extract_mesh(const GlobalFields& g, const NeighborhoodGraph& graph,
                                 const std::vector<VoxelIndex>* region = nullptr, MeshConfig cfg = {})
{
    MeshStore store(cfg);
    if (region)
        store.update(g, graph, *region);
    else
        store.rebuild(g, graph);
    return store.assemble();
}

} // namespace crease
