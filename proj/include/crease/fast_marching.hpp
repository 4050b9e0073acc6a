#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <queue>
#include <string>
#include <vector>

#include "crease/error.hpp"
#include "crease/grid.hpp"

namespace crease {

/// Times at or above this value are never accepted.
inline constexpr double kTimeSentinel = 1e30;

/// Face of a voxel: voxel * 6 + direction (see direction_step).
using FaceId = std::uint64_t;

constexpr FaceId make_face(VoxelIndex v, int dir) noexcept { return static_cast<FaceId>(v) * 6 + dir; }
constexpr VoxelIndex face_voxel(FaceId f) noexcept { return static_cast<VoxelIndex>(f / 6); }
constexpr int face_direction(FaceId f) noexcept { return static_cast<int>(f % 6); }

/// Eikonal cost of a probability: (1-p)/p, infinite where p = 0.
inline double cost_fm(double p)
{
    if (!(p >= 0.0 && p <= 1.0))
        throw Error("march/invalid-probability", "probability outside [0,1]");
    if (p == 0.0)
        return std::numeric_limits<double>::infinity();
    return (1.0 - p) / p;
}

/// Axis-aligned voxel box inside a grid, with its own x-fastest indexing.
struct LocalBox
{
    Index3 lo{};
    Dims ext{};

    static LocalBox around(const Dims& dims, Index3 c, Index3 radius)
    {
        LocalBox b;
        Index3 hi{};
        for (int a = 0; a < 3; ++a) {
            b.lo[a] = std::max(0, c[a] - radius[a]);
            hi[a] = std::min(dims[a] - 1, c[a] + radius[a]);
        }
        b.ext = {hi.x - b.lo.x + 1, hi.y - b.lo.y + 1, hi.z - b.lo.z + 1};
        return b;
    }

    [[nodiscard]] bool contains(Index3 g) const noexcept { return ext.contains(g - lo); }
    [[nodiscard]] std::uint32_t local(Index3 g) const noexcept { return ext.linear(g - lo); }
    [[nodiscard]] Index3 global(std::uint32_t l) const noexcept { return ext.coords(l) + lo; }
};

/// Result of marching from one seed. Voxels are sorted by global index with
/// t and d stored alongside.
struct MarchPatch
{
    Dims dims{};
    Spacing spacing{};
    VoxelIndex seed = 0;
    std::vector<VoxelIndex> voxels;
    std::vector<float> t;
    std::vector<float> d;
    std::vector<FaceId> front_faces; ///< sorted
    float t_tilde = 0.0f;            ///< largest marched time
    float d_tilde = 0.0f;            ///< largest marched path length
    std::size_t cavity_voxels = 0;   ///< enclosed voxels added after marching
    std::vector<VoxelIndex> order;   ///< acceptance order, only when requested

    [[nodiscard]] std::size_t size() const noexcept { return voxels.size(); }

    /// Position of v in `voxels`, or -1.
    [[nodiscard]] std::ptrdiff_t find(VoxelIndex v) const noexcept
    {
        const auto it = std::lower_bound(voxels.begin(), voxels.end(), v);
        return (it != voxels.end() && *it == v) ? it - voxels.begin() : -1;
    }
    [[nodiscard]] bool contains(VoxelIndex v) const noexcept { return find(v) >= 0; }

    friend bool operator==(const MarchPatch&, const MarchPatch&) = default;
};

struct MarchOptions
{
    double cost_scale = 1.0;   ///< multiplies c_fm
    bool fill_cavities = true; ///< add enclosed non-marched voxels to the region
    bool record_order = false;
    /// Voxels within this many voxels of the seed (and 6-connected to it
    /// inside that ball) start from straight-line times.
    double init_radius = 3.0;
};

namespace detail {

struct Upwind
{
    double t;
    double d;
    double h;
};

/// Quadratic upwind solve sum((x - v_a)/h_a)^2 = c^2 on values shifted by
/// their mean. Falls back to fewer axes (dropping the largest value) when the
/// solution would not lie above every participating value. Returns the value
/// and the number of axes used (entries must be sorted ascending by value).
template <class Get>
std::pair<double, int> upwind_solve(const std::array<Upwind, 3>& nb, int m, double c, Get value)
{
    for (int k = m; k >= 2; --k) {
        double mean = 0;
        for (int i = 0; i < k; ++i)
            mean += value(nb[i]);
        mean /= k;
        double A = 0, B = 0, C = -c * c, top = -std::numeric_limits<double>::infinity();
        for (int i = 0; i < k; ++i) {
            const double w = 1.0 / (nb[i].h * nb[i].h);
            const double u = value(nb[i]) - mean;
            A += w;
            B -= 2 * w * u;
            C += w * u * u;
            top = std::max(top, u);
        }
        const double disc = B * B - 4 * A * C;
        if (disc < 0)
            continue;
        const double x = (-B + std::sqrt(disc)) / (2 * A);
        if (x >= top)
            return {x + mean, k};
    }
    return {value(nb[0]) + c * nb[0].h, 1};
}

} // namespace detail

/// Fast marching from `seed` until the first voxel with path length above
/// d_max comes off the heap. Heap order is (t, d, voxel index).
inline MarchPatch march(const Grid<float>& p, Index3 seed, double d_max, const MarchOptions& opt = {})
{
    const Dims dims = p.dims();
    const Spacing sp = p.spacing();
    if (!dims.contains(seed))
        throw Error("march/out-of-bounds", "seed outside the volume");
    if (!(d_max > 0))
        throw Error("march/invalid-dmax", "d_max must be > 0");
    if (!(p.at(seed) > 0))
        throw Error("march/zero-probability", "seed has p = 0");

    Index3 radius{};
    for (int a = 0; a < 3; ++a)
        radius[a] = static_cast<int>(std::ceil(d_max / sp[a])) + 3;
    const LocalBox box = LocalBox::around(dims, seed, radius);
    const std::size_t n = box.ext.count();

    enum : std::uint8_t { kFar, kTrial, kAccepted };
    std::vector<double> T(n, kTimeSentinel), D(n, kTimeSentinel);
    std::vector<std::uint8_t> state(n, kFar);

    struct Entry
    {
        double t, d;
        std::uint32_t l;
        bool operator>(const Entry& o) const
        {
            if (t != o.t)
                return t > o.t;
            if (d != o.d)
                return d > o.d;
            return l > o.l;
        }
    };
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> heap;

    const std::uint32_t ls = box.local(seed);
    T[ls] = D[ls] = 0;
    heap.push({0, 0, ls});
    if (opt.init_radius > 0) {
        // straight-line start values; t integrates the cost along the segment
        const int r = static_cast<int>(std::floor(opt.init_radius));
        const double r2 = opt.init_radius * opt.init_radius;
        std::vector<Index3> stack{seed};
        std::vector<Index3> ball;
        auto in_ball = [&](Index3 g) {
            const Index3 o = g - seed;
            return std::abs(o.x) <= r && std::abs(o.y) <= r && std::abs(o.z) <= r &&
                   double(o.x) * o.x + double(o.y) * o.y + double(o.z) * o.z <= r2;
        };
        std::vector<char> seen(n, 0);
        seen[ls] = 1;
        while (!stack.empty()) {
            const Index3 g = stack.back();
            stack.pop_back();
            ball.push_back(g);
            for (int dir = 0; dir < 6; ++dir) {
                const Index3 ng = g + direction_step(dir);
                if (!box.contains(ng) || !in_ball(ng) || seen[box.local(ng)] || !(p.at(ng) > 0))
                    continue;
                seen[box.local(ng)] = 1;
                stack.push_back(ng);
            }
        }
        const Vec3 s0 = p.physical(seed);
        auto length = [&](Index3 g) { return norm(p.physical(g) - s0); };
        // nearest first, so every start value can be lifted to its closer neighbours
        std::sort(ball.begin(), ball.end(), [&](Index3 a, Index3 b) {
            const double la = length(a), lb = length(b);
            return la != lb ? la < lb : dims.linear(a) < dims.linear(b);
        });
        for (const Index3 g : ball) {
            if (g == seed)
                continue;
            const double len = length(g);
            if (len > d_max)
                continue;
            double lift = kTimeSentinel;
            bool has_closer = false;
            for (int dir = 0; dir < 6; ++dir) {
                const Index3 ng = g + direction_step(dir);
                if (!box.contains(ng) || !(length(ng) < len))
                    continue;
                const std::uint32_t nl = box.local(ng);
                if (state[nl] == kTrial || nl == ls) {
                    has_closer = true;
                    lift = std::min(lift, T[nl]);
                }
            }
            if (!has_closer)
                continue;
            constexpr int kSamples = 16;
            double acc = 0;
            for (int i = 0; i <= kSamples; ++i) {
                const double f = static_cast<double>(i) / kSamples;
                Index3 v{};
                for (int a = 0; a < 3; ++a)
                    v[a] = seed[a] + static_cast<int>(std::lround(f * (g[a] - seed[a])));
                const double pv = p.at(v);
                const double cv = pv > 0 ? cost_fm(pv) : cost_fm(p.at(g));
                acc += (i == 0 || i == kSamples ? 0.5 : 1.0) * cv;
            }
            const double tn = std::min(std::max(len * opt.cost_scale * acc / kSamples, lift), kTimeSentinel);
            const std::uint32_t l = box.local(g);
            T[l] = tn;
            D[l] = len;
            state[l] = kTrial;
            heap.push({tn, len, l});
        }
    }

    std::vector<std::uint32_t> accepted;
    const int stride[3] = {1, box.ext.nx, box.ext.nx * box.ext.ny};

    while (!heap.empty()) {
        const Entry e = heap.top();
        heap.pop();
        if (state[e.l] == kAccepted || e.t != T[e.l] || e.d != D[e.l])
            continue;
        if (e.t >= kTimeSentinel || e.d > d_max)
            break;
        state[e.l] = kAccepted;
        accepted.push_back(e.l);
        const Index3 q = box.ext.coords(e.l);

        for (int dir = 0; dir < 6; ++dir) {
            const Index3 nq = q + direction_step(dir);
            if (!box.ext.contains(nq))
                continue;
            const std::uint32_t nl = box.ext.linear(nq);
            if (state[nl] == kAccepted)
                continue;
            const double pn = p.at(nq + box.lo);
            if (!(pn > 0))
                continue;
            const double c = cost_fm(pn) * opt.cost_scale;

            std::array<detail::Upwind, 3> nb{};
            int m = 0;
            for (int a = 0; a < 3; ++a) {
                bool found = false;
                detail::Upwind best{};
                for (int s = -1; s <= 1; s += 2) {
                    const int coord = nq[a] + s;
                    if (coord < 0 || coord >= box.ext[a])
                        continue;
                    const std::uint32_t al = nl + s * stride[a];
                    if (state[al] != kAccepted)
                        continue;
                    if (!found || T[al] < best.t || (T[al] == best.t && D[al] < best.d)) {
                        best = {T[al], D[al], sp[a]};
                        found = true;
                    }
                }
                if (found)
                    nb[m++] = best;
            }
            std::sort(nb.begin(), nb.begin() + m, [](const auto& x, const auto& y) {
                return x.t != y.t ? x.t < y.t : x.d < y.d;
            });
            auto [tn, k] = detail::upwind_solve(nb, m, c, [](const detail::Upwind& u) { return u.t; });
            std::sort(nb.begin(), nb.begin() + k, [](const auto& x, const auto& y) { return x.d < y.d; });
            double dn = detail::upwind_solve(nb, k, 1.0, [](const detail::Upwind& u) { return u.d; }).first;
            if (!(tn < kTimeSentinel))
                tn = kTimeSentinel;
            if (tn < T[nl] || (tn == T[nl] && dn < D[nl])) {
                T[nl] = tn;
                D[nl] = dn;
                state[nl] = kTrial;
                heap.push({tn, dn, nl});
            }
        }
    }

    if (accepted.size() <= 1)
        throw Error("march/isolated-seed", "marched region is the seed alone");

    MarchPatch patch;
    patch.dims = dims;
    patch.spacing = sp;
    patch.seed = dims.linear(seed);
    std::vector<char> region(n, 0);
    double t_tilde = 0, d_tilde = 0;
    for (auto l : accepted) {
        region[l] = 1;
        t_tilde = std::max(t_tilde, T[l]);
        d_tilde = std::max(d_tilde, D[l]);
    }
    if (opt.record_order)
        for (auto l : accepted)
            patch.order.push_back(dims.linear(box.global(l)));

    if (opt.fill_cavities) {
        // exterior = 18-connected flood through non-region cells of the box padded by one layer
        const Dims pad{box.ext.nx + 2, box.ext.ny + 2, box.ext.nz + 2};
        std::vector<char> outside(pad.count(), 0);
        std::vector<std::uint32_t> stack;
        auto is_region = [&](Index3 pq) {
            const Index3 bq = pq - Index3{1, 1, 1};
            return box.ext.contains(bq) && region[box.ext.linear(bq)];
        };
        for (int z = 0; z < pad.nz; ++z)
            for (int y = 0; y < pad.ny; ++y)
                for (int x = 0; x < pad.nx; ++x)
                    if (x == 0 || y == 0 || z == 0 || x == pad.nx - 1 || y == pad.ny - 1 || z == pad.nz - 1) {
                        const auto l = pad.linear({x, y, z});
                        outside[l] = 1;
                        stack.push_back(l);
                    }
        while (!stack.empty()) {
            const Index3 q = pad.coords(stack.back());
            stack.pop_back();
            for (int dz = -1; dz <= 1; ++dz)
                for (int dy = -1; dy <= 1; ++dy)
                    for (int dx = -1; dx <= 1; ++dx) {
                        const int manhattan = std::abs(dx) + std::abs(dy) + std::abs(dz);
                        if (manhattan == 0 || manhattan == 3)
                            continue;
                        const Index3 nq = q + Index3{dx, dy, dz};
                        if (!pad.contains(nq))
                            continue;
                        const auto l = pad.linear(nq);
                        if (outside[l] || is_region(nq))
                            continue;
                        outside[l] = 1;
                        stack.push_back(l);
                    }
        }
        for (std::uint32_t l = 0; l < n; ++l) {
            if (region[l])
                continue;
            if (!outside[pad.linear(box.ext.coords(l) + Index3{1, 1, 1})]) {
                region[l] = 1;
                T[l] = t_tilde;
                D[l] = d_tilde;
                ++patch.cavity_voxels;
            }
        }
    }

    // box order is global order, so a linear scan yields sorted voxels
    for (std::uint32_t l = 0; l < n; ++l) {
        if (!region[l])
            continue;
        const Index3 g = box.global(l);
        const VoxelIndex v = dims.linear(g);
        patch.voxels.push_back(v);
        patch.t.push_back(static_cast<float>(T[l]));
        patch.d.push_back(static_cast<float>(D[l]));
        const Index3 q = box.ext.coords(l);
        for (int dir = 0; dir < 6; ++dir) {
            const Index3 nq = q + direction_step(dir);
            if (!box.ext.contains(nq) || !region[box.ext.linear(nq)])
                patch.front_faces.push_back(make_face(v, dir));
        }
    }
    patch.t_tilde = static_cast<float>(t_tilde);
    patch.d_tilde = static_cast<float>(d_tilde);
    return patch;
}

} // namespace crease
