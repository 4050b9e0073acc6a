#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <queue>
#include <tuple>
#include <vector>

#include "crease/error.hpp"
#include "crease/fast_marching.hpp"
#include "crease/grid.hpp"
#include "crease/structure_tensor.hpp"

namespace crease {

/// Dense lookup from voxel to its slot in a patch, over the patch bounding box.
class PatchIndex
{
public:
    explicit PatchIndex(const MarchPatch& patch) : patch_(&patch)
    {
        Index3 lo{patch.dims.nx, patch.dims.ny, patch.dims.nz}, hi{-1, -1, -1};
        for (auto v : patch.voxels) {
            const Index3 q = patch.dims.coords(v);
            for (int a = 0; a < 3; ++a) {
                lo[a] = std::min(lo[a], q[a]);
                hi[a] = std::max(hi[a], q[a]);
            }
        }
        box_.lo = lo;
        box_.ext = {hi.x - lo.x + 1, hi.y - lo.y + 1, hi.z - lo.z + 1};
        slot_.assign(box_.ext.count(), -1);
        for (std::size_t i = 0; i < patch.voxels.size(); ++i)
            slot_[box_.local(patch.dims.coords(patch.voxels[i]))] = static_cast<std::int32_t>(i);
    }

    /// Slot of the voxel at g, or -1 when g is outside the patch or the grid.
    [[nodiscard]] std::int32_t slot(Index3 g) const noexcept
    {
        return box_.contains(g) ? slot_[box_.local(g)] : -1;
    }
    [[nodiscard]] bool contains(Index3 g) const noexcept { return slot(g) >= 0; }
    [[nodiscard]] const MarchPatch& patch() const noexcept { return *patch_; }

    /// Position of a front face in patch.front_faces, or -1.
    [[nodiscard]] std::ptrdiff_t face_slot(FaceId f) const noexcept
    {
        const auto& ff = patch_->front_faces;
        const auto it = std::lower_bound(ff.begin(), ff.end(), f);
        return (it != ff.end() && *it == f) ? it - ff.begin() : -1;
    }

private:
    const MarchPatch* patch_;
    LocalBox box_;
    std::vector<std::int32_t> slot_;
};

/// True when face f lies on the boundary of the grid. Such faces close the
/// marched region but are not part of the front seen by labeling.
inline bool is_domain_face(const Dims& dims, FaceId f) noexcept
{
    return !dims.contains(dims.coords(face_voxel(f)) + direction_step(face_direction(f)));
}

/// The four front faces sharing an edge with face f. The region is taken as
/// 6-connected and its complement as 18-connected.
inline std::array<FaceId, 4> front_face_neighbors(const PatchIndex& idx, FaceId f)
{
    const Dims& dims = idx.patch().dims;
    const VoxelIndex v = face_voxel(f);
    const int n = face_direction(f);
    const Index3 q = dims.coords(v);
    const Index3 ns = direction_step(n);
    std::array<FaceId, 4> out{};
    int k = 0;
    for (int e = 0; e < 6; ++e) {
        if (e / 2 == n / 2)
            continue;
        const Index3 side = q + direction_step(e);
        const Index3 diag = side + ns;
        if (idx.contains(side) && idx.contains(diag))
            out[k++] = make_face(dims.linear(diag), opposite_direction(e));
        else if (idx.contains(side))
            out[k++] = make_face(dims.linear(side), n);
        else
            out[k++] = make_face(v, e);
    }
    return out;
}

/// Greedy best-first growth from `start` taking the highest (t, d) voxel next;
/// returns the first front face met, ignoring faces on the grid boundary.
inline FaceId flood_to_front(const MarchPatch& patch, VoxelIndex start)
{
    const PatchIndex idx(patch);
    const std::ptrdiff_t s = patch.find(start);
    if (s < 0)
        throw Error("poles/outside-region", "flood start is not a marched voxel");
    using Key = std::tuple<float, float, std::int64_t>; // t, d, -voxel (lower index wins ties)
    std::priority_queue<std::pair<Key, std::uint32_t>> heap;
    std::vector<char> seen(patch.voxels.size(), 0);
    seen[s] = 1;
    heap.push({{patch.t[s], patch.d[s], -static_cast<std::int64_t>(start)}, static_cast<std::uint32_t>(s)});
    while (!heap.empty()) {
        const auto slot = heap.top().second;
        heap.pop();
        const VoxelIndex v = patch.voxels[slot];
        const Index3 q = patch.dims.coords(v);
        for (int dir = 0; dir < 6; ++dir) {
            const Index3 nq = q + direction_step(dir);
            if (patch.dims.contains(nq) && !idx.contains(nq))
                return make_face(v, dir);
        }
        for (int dir = 0; dir < 6; ++dir) {
            const Index3 nq = q + direction_step(dir);
            const auto ns = idx.slot(nq);
            if (ns < 0 || seen[ns])
                continue;
            seen[ns] = 1;
            heap.push({{patch.t[ns], patch.d[ns], -static_cast<std::int64_t>(patch.voxels[ns])},
                       static_cast<std::uint32_t>(ns)});
        }
    }
    throw Error("poles/no-front", "region has no front");
}

namespace detail {

/// Walks the voxels pierced by the segment from the seed center to `target`
/// (voxel coordinates). Returns the first front face crossed, or the last
/// voxel reached when the segment stays inside.
inline std::pair<bool, FaceId> walk_segment(const PatchIndex& idx, Index3 seed, const Vec3& target)
{
    const Dims& dims = idx.patch().dims;
    Index3 cur = seed;
    Vec3 dirv{}, t_max{}, t_delta{};
    int step[3];
    const Vec3 origin{double(seed.x), double(seed.y), double(seed.z)};
    for (int a = 0; a < 3; ++a) {
        dirv[a] = target[a] - origin[a];
        step[a] = dirv[a] > 0 ? 1 : (dirv[a] < 0 ? -1 : 0);
        t_delta[a] = step[a] ? 1.0 / std::abs(dirv[a]) : std::numeric_limits<double>::infinity();
        t_max[a] = step[a] ? 0.5 * t_delta[a] : std::numeric_limits<double>::infinity();
    }
    Index3 end{};
    for (int a = 0; a < 3; ++a)
        end[a] = static_cast<int>(std::lround(target[a]));
    while (!(cur == end)) {
        int a = 0;
        for (int b = 1; b < 3; ++b)
            if (t_max[b] < t_max[a])
                a = b;
        if (t_max[a] > 1.0)
            break;
        const int dir = 2 * a + (step[a] > 0 ? 1 : 0);
        Index3 next = cur;
        next[a] += step[a];
        if (!dims.contains(next))
            break;
        if (!idx.contains(next))
            return {true, make_face(dims.linear(cur), dir)};
        cur = next;
        t_max[a] += t_delta[a];
    }
    return {false, static_cast<FaceId>(dims.linear(cur))};
}

} // namespace detail

struct Poles
{
    FaceId u1 = 0;
    FaceId u2 = 0;
    Vec3 v1{};
};

/// Two front faces on opposite sides of the layer at the seed, found from
/// the structure tensor's principal direction.
inline Poles find_poles(const MarchPatch& patch, const Grid<float>& p, double lambda, double sigma_g = 1.0)
{
    if (!(lambda > 0))
        throw Error("poles/invalid-lambda", "lambda must be > 0");
    const Index3 s = patch.dims.coords(patch.seed);
    const Vec3 v1 = principal_direction(structure_tensor(p, s, sigma_g));
    const PatchIndex idx(patch);
    Poles poles;
    poles.v1 = v1;
    FaceId u[2];
    for (int k = 0; k < 2; ++k) {
        const double sign = k == 0 ? 1.0 : -1.0;
        Vec3 target{};
        for (int a = 0; a < 3; ++a)
            target[a] = s[a] + sign * lambda * v1[a] / patch.spacing[a];
        const auto [exited, value] = detail::walk_segment(idx, s, target);
        u[k] = exited ? value : flood_to_front(patch, static_cast<VoxelIndex>(value));
    }
    if (u[0] == u[1])
        throw Error("poles/coincident", "both poles map to the same front face; adjust lambda");
    poles.u1 = u[0];
    poles.u2 = u[1];
    return poles;
}

/// Side (1 or 2) per front face, parallel to patch.front_faces, with the
/// flood key (bottleneck d, hop count) that decided it.
struct FrontLabeling
{
    FaceId u1 = 0;
    FaceId u2 = 0;
    std::vector<std::uint8_t> side;
    std::vector<float> cost;
    std::vector<std::uint32_t> hops;

    friend bool operator==(const FrontLabeling&, const FrontLabeling&) = default;
};

/// Two-source flooding over the front: a face joins the pole whose path of
/// smallest maximum d (then fewest faces) reaches it first. Ties go to pole 1.
/// Faces on the grid boundary keep side 0.
inline FrontLabeling label_front(const MarchPatch& patch, FaceId u1, FaceId u2)
{
    if (u1 == u2)
        throw Error("labeling/coincident-poles", "poles must differ");
    const PatchIndex idx(patch);
    const auto s1 = idx.face_slot(u1), s2 = idx.face_slot(u2);
    if (s1 < 0 || s2 < 0 || is_domain_face(patch.dims, u1) || is_domain_face(patch.dims, u2))
        throw Error("labeling/invalid-pole", "pole is not a front face");

    const std::size_t n = patch.front_faces.size();
    FrontLabeling fl;
    fl.u1 = u1;
    fl.u2 = u2;
    fl.side.assign(n, 0);
    fl.cost.assign(n, 0.0f);
    fl.hops.assign(n, 0);

    auto face_d = [&](FaceId f) { return patch.d[patch.find(face_voxel(f))]; };
    using Entry = std::tuple<float, std::uint32_t, std::uint8_t, FaceId>;
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> heap;
    heap.push({face_d(u1), 0u, std::uint8_t{1}, u1});
    heap.push({face_d(u2), 0u, std::uint8_t{2}, u2});
    std::size_t labeled = 0, domain = 0;
    for (FaceId f : patch.front_faces)
        domain += is_domain_face(patch.dims, f);
    while (!heap.empty()) {
        const auto [c, h, side, f] = heap.top();
        heap.pop();
        const auto fs = idx.face_slot(f);
        if (fl.side[fs])
            continue;
        fl.side[fs] = side;
        fl.cost[fs] = c;
        fl.hops[fs] = h;
        ++labeled;
        for (FaceId g : front_face_neighbors(idx, f)) {
            const auto gs = idx.face_slot(g);
            if (gs < 0 || fl.side[gs] || is_domain_face(patch.dims, g))
                continue;
            heap.push({std::max(c, face_d(g)), h + 1, side, g});
        }
    }
    if (labeled + domain != n)
        throw Error("labeling/fragmented-front", "front is not edge-connected; reduce d_max");
    return fl;
}

/// Side (1 or 2) per marched voxel, parallel to patch.voxels.
struct PatchLabeling
{
    std::vector<std::uint8_t> side;

    friend bool operator==(const PatchLabeling&, const PatchLabeling&) = default;
};

namespace detail {

/// Relabels every 6-connected component of `which` except the largest.
inline void keep_largest_component(const MarchPatch& patch, const PatchIndex& idx, std::vector<std::uint8_t>& side,
                                   std::uint8_t which)
{
    const std::size_t n = side.size();
    std::vector<std::int32_t> comp(n, -1);
    std::vector<std::size_t> sizes;
    std::vector<std::uint32_t> stack;
    for (std::uint32_t i = 0; i < n; ++i) {
        if (side[i] != which || comp[i] >= 0)
            continue;
        const auto c = static_cast<std::int32_t>(sizes.size());
        sizes.push_back(0);
        comp[i] = c;
        stack.push_back(i);
        while (!stack.empty()) {
            const auto k = stack.back();
            stack.pop_back();
            ++sizes[c];
            const Index3 q = patch.dims.coords(patch.voxels[k]);
            for (int dir = 0; dir < 6; ++dir) {
                const auto ns = idx.slot(q + direction_step(dir));
                if (ns < 0 || side[ns] != which || comp[ns] >= 0)
                    continue;
                comp[ns] = c;
                stack.push_back(static_cast<std::uint32_t>(ns));
            }
        }
    }
    if (sizes.size() <= 1)
        return;
    // first component of maximal size, i.e. the one holding the lowest voxel on ties
    const auto keep = static_cast<std::int32_t>(std::max_element(sizes.begin(), sizes.end()) - sizes.begin());
    for (std::size_t i = 0; i < n; ++i)
        if (side[i] == which && comp[i] != keep)
            side[i] = static_cast<std::uint8_t>(3 - which);
}

} // namespace detail

/// Carries front labels into the region: voxels on the front take the side of
/// their incident face with the smallest flood key, then labels spread from
/// the highest-time voxels inward. Each side is finally reduced to a single
/// 6-connected component.
inline PatchLabeling propagate_inward(const MarchPatch& patch, const FrontLabeling& fl)
{
    const PatchIndex idx(patch);
    const std::size_t n = patch.voxels.size();
    PatchLabeling out;
    out.side.assign(n, 0);

    using Key = std::tuple<float, std::uint32_t, FaceId>;
    std::vector<Key> best(n, {std::numeric_limits<float>::infinity(), 0u, 0});
    for (std::size_t fi = 0; fi < patch.front_faces.size(); ++fi) {
        const FaceId f = patch.front_faces[fi];
        if (fl.side[fi] == 0)
            continue;
        const auto s = patch.find(face_voxel(f));
        const Key k{fl.cost[fi], fl.hops[fi], f};
        if (out.side[s] == 0 || k < best[s]) {
            best[s] = k;
            out.side[s] = fl.side[fi];
        }
    }

    using Entry = std::tuple<float, float, std::int64_t, std::uint32_t>; // t, d, -voxel, slot
    std::priority_queue<Entry> heap;
    for (std::uint32_t i = 0; i < n; ++i)
        if (out.side[i])
            heap.push({patch.t[i], patch.d[i], -static_cast<std::int64_t>(patch.voxels[i]), i});
    while (!heap.empty()) {
        const auto slot = std::get<3>(heap.top());
        heap.pop();
        const Index3 q = patch.dims.coords(patch.voxels[slot]);
        for (int dir = 0; dir < 6; ++dir) {
            const auto ns = idx.slot(q + direction_step(dir));
            if (ns < 0 || out.side[ns])
                continue;
            out.side[ns] = out.side[slot];
            heap.push({patch.t[ns], patch.d[ns], -static_cast<std::int64_t>(patch.voxels[ns]),
                       static_cast<std::uint32_t>(ns)});
        }
    }
    for (auto s : out.side)
        if (!s)
            throw Error("labeling/unreachable-voxel", "marched region is not 6-connected");

    detail::keep_largest_component(patch, idx, out.side, 1);
    detail::keep_largest_component(patch, idx, out.side, 2);
    return out;
}

/// Whole per-seed labeling step.
struct LabeledPatch
{
    Poles poles;
    FrontLabeling front;
    PatchLabeling labels;
};

inline LabeledPatch label_patch(const MarchPatch& patch, const Grid<float>& p, double lambda, double sigma_g = 1.0)
{
    LabeledPatch out;
    out.poles = find_poles(patch, p, lambda, sigma_g);
    out.front = label_front(patch, out.poles.u1, out.poles.u2);
    out.labels = propagate_inward(patch, out.front);
    return out;
}

} // namespace crease
