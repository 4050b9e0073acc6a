#include <gtest/gtest.h>

#include <algorithm>
#include <array>
#include <cmath>

#include "crease/fast_marching.hpp"
#include "crease/generators.hpp"
#include "crease/global_merge.hpp"
#include "crease/patch_labeling.hpp"
#include "crease/probability.hpp"

using namespace crease;

namespace {

constexpr double kDmax = 10.0;
constexpr double kLambda = 3.0;

struct Labeled
{
    MarchPatch patch;
    PatchLabeling labels;
};

const ProbabilityField& plane()
{
    static const ProbabilityField p = to_probability(gen_plane({48, 40, 24}, 1.5, {1, 1, 1}), 0.0, 1.1);
    return p;
}

Labeled labeled(const ProbabilityField& p, Index3 s)
{
    Labeled out;
    out.patch = march(p, s, kDmax);
    out.labels = label_patch(out.patch, p, kLambda).labels;
    return out;
}

/// Synthetic patch over voxels [0, n) of a 1D grid with the given sides.
Labeled line_patch(int n, const std::vector<std::uint8_t>& sides, float t0 = 1.0f)
{
    Labeled out;
    out.patch.dims = {n, 1, 1};
    out.patch.spacing = {1, 1, 1};
    for (int i = 0; i < n; ++i) {
        out.patch.voxels.push_back(static_cast<VoxelIndex>(i));
        out.patch.t.push_back(t0 + i);
        out.patch.d.push_back(static_cast<float>(i));
    }
    out.labels.side = sides;
    return out;
}

} // namespace

TEST(DomFromLabel, ParityPairs)
{
    EXPECT_EQ(dom_from_label(1), 0u);
    EXPECT_EQ(dom_from_label(2), 0u);
    EXPECT_EQ(dom_from_label(3), 1u);
    EXPECT_EQ(dom_from_label(4), 1u);
    for (Label k = 0; k <= 10; ++k) {
        EXPECT_EQ(dom_from_label(2 * k + 1), k);
        EXPECT_EQ(dom_from_label(2 * k + 2), k);
    }
    EXPECT_THROW(dom_from_label(0), Error);
    EXPECT_EQ(make_label(3, 1, false), 7u);
    EXPECT_EQ(make_label(3, 1, true), 8u);
    EXPECT_EQ(parity_class(7), 1);
    EXPECT_EQ(parity_class(8), 2);
}

TEST(MergePatch, EmptyFieldsTakeLabelsVerbatim)
{
    const auto a = labeled(plane(), {24, 20, 11});
    GlobalFields g(plane().dims(), plane().spacing());
    const auto touched = merge_patch(g, a.patch, a.labels, 0, false);
    EXPECT_EQ(touched.size(), a.patch.size());
    for (std::size_t k = 0; k < a.patch.size(); ++k) {
        EXPECT_EQ(g.t[a.patch.voxels[k]], a.patch.t[k]);
        EXPECT_EQ(g.l[a.patch.voxels[k]], a.labels.side[k]);
    }
    for (std::size_t v = 0; v < g.l.size(); ++v)
        EXPECT_EQ(g.l[v] == 0, std::isinf(g.t[v]));
}

TEST(MergePatch, TiesKeepTheIncumbent)
{
    const auto a = labeled(plane(), {24, 20, 11});
    GlobalFields g(plane().dims(), plane().spacing());
    merge_patch(g, a.patch, a.labels, 0, false);
    const auto before = g.l;
    const auto touched = merge_patch(g, a.patch, a.labels, 1, false);
    EXPECT_TRUE(touched.empty());
    EXPECT_EQ(g.l, before);
    EXPECT_THROW(merge_patch(g, a.patch, a.labels, 1, false), Error);
}

TEST(MergePatch, DisjointPatchesUnion)
{
    const auto a = line_patch(4, {1, 1, 2, 2});
    auto b = line_patch(4, {2, 1, 1, 2});
    for (auto& v : b.patch.voxels)
        v += 4;
    GlobalFields g({8, 1, 1}, {1, 1, 1});
    merge_patch(g, a.patch, a.labels, 0, false);
    b.patch.dims = {8, 1, 1};
    merge_patch(g, b.patch, b.labels, 1, true);
    EXPECT_EQ(g.l, (std::vector<Label>{1, 1, 2, 2, 3, 4, 4, 3}));
}

TEST(AlignParity, CountArithmetic)
{
    GlobalFields g({20, 1, 1}, {1, 1, 1});
    std::vector<std::uint8_t> sides(20);
    for (int i = 0; i < 20; ++i)
        sides[i] = i < 10 ? 1 : 2;
    const auto first = line_patch(20, sides);
    EXPECT_EQ(align_parity(g, first.patch, first.labels).overlap, 0u);
    merge_patch(g, first.patch, first.labels, 0, false);

    const auto same = line_patch(20, sides);
    const auto d1 = align_parity(g, same.patch, same.labels);
    EXPECT_EQ(d1.c_rel, 20);
    EXPECT_FALSE(d1.swapped);

    std::vector<std::uint8_t> inverted(20);
    for (int i = 0; i < 20; ++i)
        inverted[i] = static_cast<std::uint8_t>(3 - sides[i]);
    const auto inv = line_patch(20, inverted);
    const auto d2 = align_parity(g, inv.patch, inv.labels);
    EXPECT_EQ(d2.c_rel, -20);
    EXPECT_TRUE(d2.swapped);

    std::vector<std::uint8_t> half(20);
    for (int i = 0; i < 20; ++i)
        half[i] = static_cast<std::uint8_t>(i % 2 + 1);
    const auto h = line_patch(20, half);
    try {
        align_parity(g, h.patch, h.labels);
        FAIL() << "expected ambiguous parity";
    } catch (const Error& e) {
        EXPECT_EQ(e.stage(), "merge/ambiguous-parity");
    }
}

TEST(AlignParity, ZeroOverlapIsRejectedAfterTheFirstSeed)
{
    GlobalFields g({8, 1, 1}, {1, 1, 1});
    const auto a = line_patch(4, {1, 1, 2, 2});
    merge_patch(g, a.patch, a.labels, 0, false);
    auto b = line_patch(4, {1, 1, 2, 2});
    b.patch.dims = {8, 1, 1};
    for (auto& v : b.patch.voxels)
        v += 4;
    try {
        align_parity(g, b.patch, b.labels);
        FAIL() << "expected disconnected";
    } catch (const Error& e) {
        EXPECT_EQ(e.stage(), "merge/disconnected");
    }
}

TEST(Merge, FieldsAreTheMinimumOverSeeds)
{
    const std::array<Index3, 3> seeds{Index3{16, 20, 11}, Index3{24, 20, 11}, Index3{32, 20, 11}};
    std::vector<Labeled> patches;
    GlobalFields g(plane().dims(), plane().spacing());
    for (SeedIndex i = 0; i < seeds.size(); ++i) {
        patches.push_back(labeled(plane(), seeds[i]));
        const auto d = align_parity(g, patches[i].patch, patches[i].labels);
        merge_patch(g, patches[i].patch, patches[i].labels, i, d.swapped);
    }
    for (std::size_t v = 0; v < g.t.size(); ++v) {
        float best = std::numeric_limits<float>::infinity();
        for (const auto& p : patches)
            if (const auto k = p.patch.find(static_cast<VoxelIndex>(v)); k >= 0)
                best = std::min(best, p.patch.t[k]);
        ASSERT_EQ(g.t[v], best);
        if (g.l[v] != 0) {
            const SeedIndex dom = dom_from_label(g.l[v]);
            ASSERT_LT(dom, patches.size());
            EXPECT_TRUE(patches[dom].patch.contains(static_cast<VoxelIndex>(v)));
        }
    }
    for (SeedIndex i = 0; i < 3; ++i)
        for (SeedIndex j = i + 1; j < 3; ++j)
            EXPECT_GT(pairwise_c_rel(patches[i].patch, patches[i].labels, g.swapped[i], patches[j].patch,
                                     patches[j].labels, g.swapped[j]),
                      0);
}

TEST(Merge, OrderIndependentUpToGlobalFlip)
{
    const std::array<Index3, 3> seeds{Index3{16, 20, 11}, Index3{24, 18, 11}, Index3{31, 21, 12}};
    std::vector<Labeled> patches;
    for (const auto& s : seeds)
        patches.push_back(labeled(plane(), s));
    std::array<SeedIndex, 3> order{0, 1, 2};
    std::optional<GlobalFields> reference;
    do {
        GlobalFields g(plane().dims(), plane().spacing());
        for (SeedIndex i : order) {
            const auto d = align_parity(g, patches[i].patch, patches[i].labels);
            merge_patch(g, patches[i].patch, patches[i].labels, i, d.swapped);
        }
        if (!reference) {
            reference = g;
            continue;
        }
        EXPECT_EQ(g.t, reference->t);
        std::size_t same = 0, flipped = 0, labeled_voxels = 0;
        for (std::size_t v = 0; v < g.l.size(); ++v) {
            if (g.l[v] == 0)
                continue;
            ++labeled_voxels;
            same += parity_class(g.l[v]) == parity_class(reference->l[v]);
            flipped += parity_class(g.l[v]) != parity_class(reference->l[v]);
        }
        EXPECT_TRUE(same == labeled_voxels || flipped == labeled_voxels)
            << "order " << order[0] << order[1] << order[2] << ": same " << same << " flipped " << flipped;
    } while (std::next_permutation(order.begin(), order.end()));
}

TEST(Merge, RemergingIsIdempotent)
{
    const auto a = labeled(plane(), {20, 20, 11});
    const auto b = labeled(plane(), {28, 20, 11});
    GlobalFields g(plane().dims(), plane().spacing());
    merge_patch(g, a.patch, a.labels, 0, false);
    const auto d = align_parity(g, b.patch, b.labels);
    merge_patch(g, b.patch, b.labels, 1, d.swapped);
    GlobalFields h = g;
    h.merged[1] = 0;
    EXPECT_TRUE(merge_patch(h, b.patch, b.labels, 1, d.swapped).empty());
    EXPECT_EQ(h, g);
}

TEST(NeighborhoodGraph, SingleSeedAndCoplanarOverlap)
{
    const auto a = labeled(plane(), {20, 20, 11});
    const auto b = labeled(plane(), {28, 20, 11});
    NeighborhoodGraph graph;
    EXPECT_TRUE(graph.add_seed(0, border_faces(a.patch, a.labels)).empty());
    EXPECT_EQ(graph.vertices().size(), 1u);
    EXPECT_TRUE(graph.edges().empty());
    const auto added = graph.add_seed(1, border_faces(b.patch, b.labels));
    ASSERT_EQ(added.size(), 1u);
    EXPECT_EQ(added[0], (std::pair<SeedIndex, SeedIndex>{0, 1}));
    EXPECT_TRUE(graph.adjacent(1, 0));
}

TEST(NeighborhoodGraph, OppositeFoldLayersStayApart)
{
    FoldParams fp;
    const auto ds = make_folded_dataset(fp);
    const auto p = to_probability(ds.volume, 0.0, 1.1);
    const double zc = fp.center_z();
    auto best_z = [&](int x, int y, int lo, int hi) {
        int bz = lo;
        for (int z = lo; z <= hi; ++z)
            if (p.at({x, y, z}) > p.at({x, y, bz}))
                bz = z;
        return bz;
    };
    const int zl = best_z(30, 32, 0, static_cast<int>(zc));
    const int zu = best_z(30, 32, static_cast<int>(zc) + 1, fp.dims.nz - 1);
    auto mk = [&](Index3 s) {
        Labeled out;
        out.patch = march(p, s, 5.0);
        out.labels = label_patch(out.patch, p, 1.5).labels;
        return out;
    };
    const auto lower = mk({30, 32, zl});
    const auto upper = mk({30, 32, zu});
    NeighborhoodGraph graph;
    graph.add_seed(0, border_faces(lower.patch, lower.labels));
    EXPECT_TRUE(graph.add_seed(1, border_faces(upper.patch, upper.labels)).empty());
    EXPECT_FALSE(graph.adjacent(0, 1));
    const auto near = mk({34, 32, best_z(34, 32, 0, static_cast<int>(zc))});
    EXPECT_EQ(graph.add_seed(2, border_faces(near.patch, near.labels)).size(), 1u);
    EXPECT_TRUE(graph.adjacent(0, 2));
}
