#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <map>
#include <set>
#include <unordered_map>
#include <utility>
#include <vector>

#include "crease/error.hpp"
#include "crease/fast_marching.hpp"
#include "crease/grid.hpp"
#include "crease/patch_labeling.hpp"

namespace crease {

using SeedIndex = std::uint32_t;
using Label = std::uint32_t;

/// Seed owning a label: floor((l - 1) / 2).
inline SeedIndex dom_from_label(Label l)
{
    if (l == 0)
        throw Error("merge/background-label", "background has no dominating seed");
    return (l - 1) / 2;
}

/// Label of `side` (1 or 2) of seed i, after an optional parity swap.
constexpr Label make_label(SeedIndex i, std::uint8_t side, bool swapped) noexcept
{
    const std::uint8_t s = swapped ? static_cast<std::uint8_t>(3 - side) : side;
    return 2 * i + s;
}

/// Parity class of a label: 1 for odd, 2 for even.
constexpr std::uint8_t parity_class(Label l) noexcept { return l == 0 ? 0 : static_cast<std::uint8_t>((l - 1) % 2 + 1); }

/// Volume-wide merged time and label fields.
struct GlobalFields
{
    Dims dims{};
    Spacing spacing{};
    std::vector<float> t;           ///< +inf where unlabeled
    std::vector<Label> l;           ///< 0 = background
    std::vector<std::uint8_t> swapped; ///< parity flag per seed index
    std::vector<std::uint8_t> merged;  ///< 1 once the seed is merged

    GlobalFields() = default;
    GlobalFields(Dims d, Spacing s)
        : dims(d), spacing(s), t(d.count(), std::numeric_limits<float>::infinity()), l(d.count(), 0)
    {}

    [[nodiscard]] bool is_merged(SeedIndex i) const noexcept { return i < merged.size() && merged[i]; }
    [[nodiscard]] bool any_merged() const noexcept
    {
        return std::find(merged.begin(), merged.end(), 1) != merged.end();
    }

    friend bool operator==(const GlobalFields&, const GlobalFields&) = default;
};

struct ParityDecision
{
    bool swapped = false;
    long long c_rel = 0;
    std::size_t overlap = 0;
};

/// Compares a new patch labeling against merged labels on the overlap and
/// decides whether the seed's two labels must be swapped.
inline ParityDecision align_parity(const GlobalFields& g, const MarchPatch& patch, const PatchLabeling& labels)
{
    long long agree = 0, cross = 0;
    ParityDecision out;
    for (std::size_t i = 0; i < patch.voxels.size(); ++i) {
        const Label existing = g.l[patch.voxels[i]];
        if (existing == 0)
            continue;
        ++out.overlap;
        if (parity_class(existing) == labels.side[i])
            ++agree;
        else
            ++cross;
    }
    out.c_rel = agree - cross;
    if (out.overlap == 0) {
        if (g.any_merged())
            throw Error("merge/disconnected", "patch does not overlap any merged patch");
        return out;
    }
    if (out.c_rel == 0)
        throw Error("merge/ambiguous-parity", "c_rel = 0 on a non-empty overlap; patch is probably wrong");
    out.swapped = out.c_rel < 0;
    return out;
}

/// Writes the patch into the fields where it arrives strictly earlier.
/// Returns the voxels whose label changed.
inline std::vector<VoxelIndex> merge_patch(GlobalFields& g, const MarchPatch& patch, const PatchLabeling& labels,
                                           SeedIndex i, bool swapped)
{
    if (g.is_merged(i))
        throw Error("merge/seed-collision", "seed index already merged");
    if (labels.side.size() != patch.voxels.size())
        throw Error("merge/incomplete-labeling", "labeling does not cover the patch");
    if (g.merged.size() <= i) {
        g.merged.resize(i + 1, 0);
        g.swapped.resize(i + 1, 0);
    }
    g.merged[i] = 1;
    g.swapped[i] = swapped ? 1 : 0;
    std::vector<VoxelIndex> touched;
    for (std::size_t k = 0; k < patch.voxels.size(); ++k) {
        const VoxelIndex v = patch.voxels[k];
        if (!(patch.t[k] < g.t[v]))
            continue;
        g.t[v] = patch.t[k];
        const Label nl = make_label(i, labels.side[k], swapped);
        if (g.l[v] != nl) {
            g.l[v] = nl;
            touched.push_back(v);
        }
    }
    return touched;
}

/// Interior face between two voxels, keyed by the lower voxel: v * 3 + axis.
using BorderFace = std::uint64_t;

/// Faces between a patch's own side-1 and side-2 voxels.
inline std::vector<BorderFace> border_faces(const MarchPatch& patch, const PatchLabeling& labels)
{
    const PatchIndex idx(patch);
    std::vector<BorderFace> out;
    for (std::size_t k = 0; k < patch.voxels.size(); ++k) {
        const Index3 q = patch.dims.coords(patch.voxels[k]);
        for (int a = 0; a < 3; ++a) {
            const auto ns = idx.slot(q + direction_step(2 * a + 1));
            if (ns >= 0 && labels.side[ns] != labels.side[k])
                out.push_back(static_cast<BorderFace>(patch.voxels[k]) * 3 + a);
        }
    }
    return out; // sorted: voxels ascend and axes ascend per voxel
}

/// Undirected seed adjacency: seeds are neighbors when their patch
/// interfaces share at least one grid face.
class NeighborhoodGraph
{
public:
    void add_vertex(SeedIndex i) { vertices_.insert(i); }

    /// Registers seed i's border faces and links it to every seed sharing one.
    /// Returns the new edges.
    std::vector<std::pair<SeedIndex, SeedIndex>> add_seed(SeedIndex i, const std::vector<BorderFace>& faces)
    {
        add_vertex(i);
        std::set<SeedIndex> hits;
        for (BorderFace f : faces) {
            auto& owners = owners_[f];
            for (SeedIndex j : owners)
                if (j != i)
                    hits.insert(j);
            if (std::find(owners.begin(), owners.end(), i) == owners.end())
                owners.push_back(i);
        }
        std::vector<std::pair<SeedIndex, SeedIndex>> added;
        for (SeedIndex j : hits)
            if (edges_.insert(ordered(i, j)).second)
                added.push_back(ordered(i, j));
        return added;
    }

    void clear()
    {
        vertices_.clear();
        edges_.clear();
        owners_.clear();
    }

    [[nodiscard]] bool adjacent(SeedIndex a, SeedIndex b) const
    {
        return a == b || edges_.count(ordered(a, b)) != 0;
    }
    [[nodiscard]] const std::set<SeedIndex>& vertices() const noexcept { return vertices_; }
    [[nodiscard]] const std::set<std::pair<SeedIndex, SeedIndex>>& edges() const noexcept { return edges_; }

    /// Restores vertices and edges without face ownership (loaded snapshots).
    void assign(std::set<SeedIndex> vertices, std::set<std::pair<SeedIndex, SeedIndex>> edges)
    {
        clear();
        vertices_ = std::move(vertices);
        edges_ = std::move(edges);
    }

    friend bool operator==(const NeighborhoodGraph& a, const NeighborhoodGraph& b)
    {
        return a.vertices_ == b.vertices_ && a.edges_ == b.edges_;
    }

private:
    static std::pair<SeedIndex, SeedIndex> ordered(SeedIndex a, SeedIndex b) { return {std::min(a, b), std::max(a, b)}; }

    std::set<SeedIndex> vertices_;
    std::set<std::pair<SeedIndex, SeedIndex>> edges_;
    std::unordered_map<BorderFace, std::vector<SeedIndex>> owners_;
};

/// Pairwise signed agreement of two labeled patches on their overlap, in the
/// merged label frame (parity flags applied).
inline long long pairwise_c_rel(const MarchPatch& a, const PatchLabeling& la, bool swapped_a, const MarchPatch& b,
                                const PatchLabeling& lb, bool swapped_b)
{
    long long c = 0;
    std::size_t i = 0, j = 0;
    while (i < a.voxels.size() && j < b.voxels.size()) {
        if (a.voxels[i] < b.voxels[j])
            ++i;
        else if (b.voxels[j] < a.voxels[i])
            ++j;
        else {
            const auto pa = parity_class(make_label(0, la.side[i], swapped_a));
            const auto pb = parity_class(make_label(0, lb.side[j], swapped_b));
            c += pa == pb ? 1 : -1;
            ++i;
            ++j;
        }
    }
    return c;
}

} // namespace crease
