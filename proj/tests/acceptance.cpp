// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <random>
#include <sstream>
#include <string>

#include "crease/autoseed.hpp"
#include "crease/extraction.hpp"
#include "crease/fast_marching.hpp"
#include "crease/generators.hpp"
#include "crease/global_merge.hpp"
#include "crease/mesh_distance.hpp"
#include "crease/patch_labeling.hpp"
#include "crease/probability.hpp"
#include "crease/session.hpp"
#include "support/dijkstra_oracle.hpp"

using namespace crease;
namespace fs = std::filesystem;

namespace {

struct Outcome
{
    bool pass = true;
    std::ostringstream detail;

    void require(bool ok, const std::string& what)
    {
        if (!ok) {
            pass = false;
            detail << " [failed: " << what << "]";
        }
    }
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Reconstruction
{
    TriangleMesh mesh;
    TopologyReport topology;
    std::size_t seeds = 0;
    bool converged = false;
    double seconds = 0;
};

/// One manual seed on the central column, then automation to convergence.
Reconstruction reconstruct(const Volume& volume)
{
    const auto t0 = Clock::now();
    const auto [lo, hi] = auto_clamp(volume);
    Session s = Session::from_volume(volume, lo, hi);
    s.add_seed(central_seed(s.probability()));
    const auto r = s.run_automation(1 << 30);
    Reconstruction out;
    out.mesh = s.mesh();
    out.topology = topology_report(out.mesh);
    out.seeds = s.active_seed_count();
    out.converged = r.converged;
    out.seconds = seconds_since(t0);
    return out;
}

bool is_disc(const TopologyReport& t) { return t.euler == 1 && t.non_manifold_count == 0 && t.orientable; }

void plane_suite_topology(Outcome& o)
{
    for (const auto& name : plane_dataset_names()) {
        const auto ds = make_plane_dataset(name, {100, 100, 40}, {0.5, 0.5, 0.5}, 1);
        const auto r = reconstruct(ds.volume);
        o.detail << ' ' << name << ":chi=" << r.topology.euler << ",nm=" << r.topology.non_manifold_count
                 << ",or=" << (r.topology.orientable ? "yes" : "no") << ",seeds=" << r.seeds;
        char t[32];
        std::snprintf(t, sizeof t, ",%.1fs", r.seconds);
        o.detail << t;
        o.require(r.converged, name + " converged");
        o.require(is_disc(r.topology), name + " disc topology");
        o.require(r.seconds < 60, name + " under 60 s");
    }
}

void plane_suite_accuracy(Outcome& o)
{
    struct Case
    {
        const char* name;
        double mean, hausdorff;
    };
    for (const Case c : {Case{"original", 0.5, 4.0}, Case{"ws400.gf100", 1.5, 12.0}}) {
        const auto ds = make_plane_dataset(c.name, {400, 400, 80}, {0.5, 0.5, 0.5}, 1);
        const auto r = reconstruct(ds.volume);
        const auto d = mesh_distance(r.mesh, ds.ground_truth);
        char buf[160];
        std::snprintf(buf, sizeof buf, " %s:mean=%.3f,hausdorff=%.3f,seeds=%zu,%.1fs", c.name, d.mean, d.hausdorff,
                      r.seeds, r.seconds);
        o.detail << buf;
        o.require(d.mean <= c.mean, std::string(c.name) + " mean");
        o.require(d.hausdorff <= c.hausdorff, std::string(c.name) + " hausdorff");
        o.require(r.seconds <= 300, std::string(c.name) + " within 5 min");
    }
}

void folded_sheet(Outcome& o)
{
    const auto ds = make_folded_dataset(FoldParams{});
    const auto r = reconstruct(ds.volume);
    const auto& t = r.topology;
    o.detail << " components=" << t.connected_components << ",chi=" << t.euler << ",nm=" << t.non_manifold_count
             << ",or=" << (t.orientable ? "yes" : "no") << ",seeds=" << r.seeds
             << ",converged=" << (r.converged ? "yes" : "no");
    o.require(r.converged, "converged");
    o.require(t.connected_components == 1, "one component");
    o.require(is_disc(t), "disc topology");
}

void fmm_correctness(Outcome& o)
{
    const Grid<float> uniform({41, 41, 41}, {1, 1, 1}, 0.5f);
    const Index3 s{20, 20, 20};
    const auto m = march(uniform, s, 1000.0);
    double worst = 0, axis_err = 0;
    for (std::size_t i = 0; i < m.size(); ++i) {
        const Index3 q = uniform.dims().coords(m.voxels[i]);
        const Index3 o3 = q - s;
        const double e = std::sqrt(double(o3.x) * o3.x + double(o3.y) * o3.y + double(o3.z) * o3.z);
        if (e >= 5)
            worst = std::max(worst, std::abs(m.t[i] - e) / e);
        if ((o3.x != 0) + (o3.y != 0) + (o3.z != 0) <= 1)
            axis_err = std::max(axis_err, std::abs(m.t[i] - e));
    }
    o.require(m.size() == uniform.size(), "whole grid reached");
    o.require(worst <= 0.10, "relative error");
    o.require(axis_err <= 1e-4, "axes exact");

    std::mt19937 rng(1234);
    std::uniform_real_distribution<float> u(0.05f, 1.0f);
    std::uniform_int_distribution<int> pos(0, 15), coin(0, 4);
    int matched = 0;
    for (int trial = 0; trial < 20; ++trial) {
        Grid<float> p({16, 16, 16}, {1, 1, 1}, 0.0f);
        for (auto& v : p.data())
            v = coin(rng) == 0 ? 0.0f : u(rng);
        // a wall with a small opening
        const int axis = trial % 3, at = 4 + pos(rng) % 8;
        const int hx = pos(rng), hy = pos(rng);
        for (int a = 0; a < 16; ++a)
            for (int b = 0; b < 16; ++b) {
                if (trial % 2 == 0 && std::abs(a - hx) <= 1 && std::abs(b - hy) <= 1)
                    continue;
                Index3 q{};
                q[axis] = at;
                q[(axis + 1) % 3] = a;
                q[(axis + 2) % 3] = b;
                p.at(q) = 0.0f;
            }
        Index3 seed{8, 8, 8};
        seed[axis] = at < 8 ? at + 3 : at - 3;
        p.at(seed) = 1.0f;
        const auto oracle = oracle::dijkstra_oracle(p, seed, 1e9);
        std::size_t reach = 0;
        for (double t : oracle.t)
            reach += std::isfinite(t);
        bool same = true;
        try {
            const auto fm = march(p, seed, 1e9, {.fill_cavities = false});
            same = fm.size() == reach;
            for (VoxelIndex v : fm.voxels)
                same = same && std::isfinite(oracle.t[v]);
        } catch (const Error& e) {
            same = reach == 1 && e.stage() == "march/isolated-seed";
        }
        matched += same;
    }
    o.detail << " max_rel_err=" << worst << ",axis_err=" << axis_err << ",reachable_sets=" << matched << "/20";
    o.require(matched == 20, "reachable sets");
}

void merge_algebra(Outcome& o)
{
    bool inverts = true;
    for (SeedIndex i = 0; i < 11; ++i)
        for (std::uint8_t side : {1, 2})
            for (bool sw : {false, true}) {
                const Label l = make_label(i, side, sw);
                inverts = inverts && l >= 1 && l <= 22 && dom_from_label(l) == i;
            }
    o.require(inverts, "dom_from_label inverts labels 1..22");

    const auto p = to_probability(gen_plane({48, 40, 24}, 1.5, {1, 1, 1}), 0.0, 1.1);
    const std::array<std::array<Index3, 3>, 4> configs{{
        {Index3{16, 20, 11}, Index3{24, 20, 11}, Index3{32, 20, 11}},
        {Index3{18, 14, 11}, Index3{28, 16, 12}, Index3{22, 25, 11}},
        {Index3{15, 15, 12}, Index3{15, 24, 11}, Index3{24, 15, 11}},
        {Index3{20, 20, 11}, Index3{26, 22, 12}, Index3{30, 15, 11}},
    }};
    std::size_t orders = 0, consistent = 0, positive = 0, pairs = 0, idempotent = 0;
    for (const auto& seeds : configs) {
        std::vector<MarchPatch> patches;
        std::vector<PatchLabeling> labels;
        for (const auto& s : seeds) {
            patches.push_back(march(p, s, 10.0));
            labels.push_back(label_patch(patches.back(), p, 3.0).labels);
        }
        std::array<SeedIndex, 3> order{0, 1, 2};
        std::optional<GlobalFields> reference;
        do {
            ++orders;
            GlobalFields g(p.dims(), p.spacing());
            for (SeedIndex i : order) {
                const auto d = align_parity(g, patches[i], labels[i]);
                merge_patch(g, patches[i], labels[i], i, d.swapped);
            }
            for (SeedIndex i = 0; i < 3; ++i)
                for (SeedIndex j = i + 1; j < 3; ++j) {
                    ++pairs;
                    positive += pairwise_c_rel(patches[i], labels[i], g.swapped[i], patches[j], labels[j],
                                               g.swapped[j]) > 0;
                }
            GlobalFields again = g;
            bool unchanged = true;
            for (SeedIndex i = 0; i < 3; ++i) {
                again.merged[i] = 0;
                unchanged = unchanged && merge_patch(again, patches[i], labels[i], i, g.swapped[i]).empty();
            }
            idempotent += unchanged && again == g;
            if (!reference) {
                reference = g;
                ++consistent;
                continue;
            }
            std::size_t same = 0, flipped = 0, n = 0;
            for (std::size_t v = 0; v < g.l.size(); ++v) {
                if (!g.l[v] && !reference->l[v])
                    continue;
                ++n;
                same += parity_class(g.l[v]) == parity_class(reference->l[v]);
                flipped += g.l[v] && reference->l[v] && parity_class(g.l[v]) != parity_class(reference->l[v]);
            }
            consistent += g.t == reference->t && (same == n || flipped == n);
        } while (std::next_permutation(order.begin(), order.end()));
    }
    o.detail << " orders=" << orders << ",order_independent=" << consistent << ",c_rel_positive=" << positive << "/"
             << pairs << ",idempotent=" << idempotent;
    o.require(consistent == orders, "insertion-order independence");
    o.require(positive == pairs, "pairwise c_rel > 0");
    o.require(idempotent == orders, "idempotent re-merge");
}

void incremental_equals_fresh(Outcome& o)
{
    const auto ds = make_folded_dataset(FoldParams{});
    const auto [lo, hi] = auto_clamp(ds.volume);
    Session s = Session::from_volume(ds.volume, lo, hi);
    auto next_candidate = [&]() -> std::optional<Index3> {
        const auto c = s.propose(1);
        if (c.empty())
            return std::nullopt;
        return c.front().position;
    };
    auto newest_active = [&]() {
        for (auto it = s.seeds().rbegin(); it != s.seeds().rend(); ++it)
            if (it->status == SeedStatus::active)
                return it->id;
        return SeedIndex{0};
    };
    const std::vector<std::function<std::string()>> script{
        [&] {
            s.add_seed(central_seed(s.probability()));
            return "add";
        },
        [&] {
            s.run_automation(1);
            return "auto1";
        },
        [&] {
            s.run_automation(1);
            return "auto1";
        },
        [&] {
            s.run_automation(2);
            return "auto2";
        },
        [&] {
            s.remove_seed(1);
            return "remove1";
        },
        [&] {
            if (const auto c = next_candidate())
                s.add_seed(*c);
            return "add";
        },
        [&] {
            s.run_automation(3);
            return "auto3";
        },
        [&] {
            s.remove_seed(newest_active());
            return "remove";
        },
        [&] {
            if (const auto c = next_candidate())
                s.add_seed(*c);
            return "add";
        },
        [&] {
            s.remove_seed(2);
            return "remove2";
        },
    };
    int good = 0;
    for (const auto& op : script) {
        const auto name = op();
        MeshStore fresh(s.store().config());
        fresh.rebuild(s.fields(), s.graph());
        bool ok = fresh == s.store() && canonical_triangles(s.mesh()) == canonical_triangles(s.fresh_mesh());
        try {
            s.verify();
        } catch (const Error&) {
            ok = false;
        }
        good += ok;
        o.detail << ' ' << name << (ok ? ":ok" : ":MISMATCH");
    }
    o.detail << " seeds=" << s.active_seed_count() << ",triangles=" << s.mesh().triangles.size();
    o.require(good == static_cast<int>(script.size()), "incremental mesh and fields after every operation");
}

void gating(Outcome& o)
{
    // two non-adjacent patches whose opposite labels touch across x = 9.5
    const Dims dims{20, 12, 10};
    GlobalFields g(dims, {1, 1, 1});
    g.merged = {1, 1};
    g.swapped = {0, 0};
    for (int z = 0; z < dims.nz; ++z)
        for (int y = 0; y < dims.ny; ++y)
            for (int x = 0; x < dims.nx; ++x) {
                const VoxelIndex v = dims.linear({x, y, z});
                g.t[v] = 1.0f;
                g.l[v] = x < 10 ? (z < 5 ? make_label(0, 1, false) : make_label(0, 2, false))
                                : (z < 5 ? make_label(1, 2, false) : make_label(1, 1, false));
            }
    auto gap_triangles = [&](const TriangleMesh& m) {
        std::size_t n = 0;
        for (VoxelIndex c : m.provenance)
            n += dims.coords(c).x == 9;
        return n;
    };
    NeighborhoodGraph apart;
    apart.assign({0, 1}, {});
    NeighborhoodGraph linked;
    linked.assign({0, 1}, {{0, 1}});
    const auto gated = extract_mesh(g, apart);
    const auto ungated = extract_mesh(g, linked);
    o.detail << " gap_triangles=" << gap_triangles(gated) << ",without_gating=" << gap_triangles(ungated)
             << ",interface_triangles=" << gated.triangles.size();
    o.require(gap_triangles(gated) == 0, "no triangles between non-adjacent dominators");
    o.require(gap_triangles(ungated) > 0, "construction produces the unwanted wall without gating");
    o.require(!gated.empty(), "true interface meshed");
}

void determinism_and_persistence(Outcome& o)
{
    const auto ds = make_plane_dataset("g10", {100, 100, 40}, {0.5, 0.5, 0.5}, 1);
    const auto [lo, hi] = auto_clamp(ds.volume);
    Session s = Session::from_volume(ds.volume, lo, hi);
    s.add_seed(central_seed(s.probability()));
    s.run_automation(6);
    s.remove_seed(3);
    s.run_automation(1 << 30);

    const Session replayed = s.replay(s.oplog());
    const bool replay_ok = replayed.fields() == s.fields() && replayed.mesh() == s.mesh();
    o.require(replay_ok, "replay");

    const auto path = fs::temp_directory_path() / "crease_acceptance.crs";
    s.save(path);
    Session loaded = Session::load(path);
    const bool load_ok = loaded.fields() == s.fields() && loaded.mesh() == s.mesh() && loaded == s;
    o.require(load_ok, "save/load");

    // behaves as if never saved
    const auto c = s.propose_holes();
    Index3 q = central_seed(s.probability());
    q.y = std::max(0, q.y - 7);
    for (auto* x : {&s, &loaded}) {
        try {
            x->add_seed(c.empty() ? q : c.front().position);
        } catch (const Error&) {
        }
    }
    const bool after_ok = loaded == s;
    o.require(after_ok, "operations after load");
    fs::remove(path);
    o.detail << " ops=" << s.oplog().size() << ",seeds=" << s.active_seed_count() << ",replay="
             << (replay_ok ? "identical" : "differs") << ",load=" << (load_ok ? "identical" : "differs")
             << ",continue=" << (after_ok ? "identical" : "differs");
}

} // namespace

int main()
{
    const std::vector<std::pair<const char*, std::function<void(Outcome&)>>> criteria{
        {"P1 plane-suite topology", plane_suite_topology},
        {"P2 plane-suite accuracy", plane_suite_accuracy},
        {"P3 folded sheet", folded_sheet},
        {"P4 fast marching", fmm_correctness},
        {"P5 merge algebra", merge_algebra},
        {"P6 incremental equals fresh", incremental_equals_fresh},
        {"P7 graph gating", gating},
        {"P8 determinism and persistence", determinism_and_persistence},
    };
    int failed = 0;
    for (const auto& [name, run] : criteria) {
        Outcome o;
        const auto t0 = Clock::now();
        try {
            run(o);
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail << " [error: " << e.what() << "]";
        }
        char t[32];
        std::snprintf(t, sizeof t, " (%.1fs)", seconds_since(t0));
        std::printf("%s %s:%s%s\n", o.pass ? "PASS" : "FAIL", name, o.detail.str().c_str(), t);
        std::fflush(stdout);
        failed += !o.pass;
    }
    return failed ? 1 : 0;
}
