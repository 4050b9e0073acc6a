#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "crease/error.hpp"
#include "crease/mesh.hpp"

namespace crease {

struct DistanceReport
{
    double mean = 0.0;
    double hausdorff = 0.0;
    std::size_t samples = 0;
};

/// Squared distance from p to triangle abc (closest-point region test).
inline double point_triangle_distance2(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c)
{
    const Vec3 ab = b - a, ac = c - a, ap = p - a;
    const double d1 = dot(ab, ap), d2 = dot(ac, ap);
    auto sq = [](const Vec3& v) { return dot(v, v); };
    if (d1 <= 0 && d2 <= 0)
        return sq(ap);
    const Vec3 bp = p - b;
    const double d3 = dot(ab, bp), d4 = dot(ac, bp);
    if (d3 >= 0 && d4 <= d3)
        return sq(bp);
    const double vc = d1 * d4 - d3 * d2;
    if (vc <= 0 && d1 >= 0 && d3 <= 0) {
        const double v = d1 / (d1 - d3);
        return sq(p - (a + v * ab));
    }
    const Vec3 cp = p - c;
    const double d5 = dot(ab, cp), d6 = dot(ac, cp);
    if (d6 >= 0 && d5 <= d6)
        return sq(cp);
    const double vb = d5 * d2 - d1 * d6;
    if (vb <= 0 && d2 >= 0 && d6 <= 0) {
        const double w = d2 / (d2 - d6);
        return sq(p - (a + w * ac));
    }
    const double va = d3 * d6 - d5 * d4;
    if (va <= 0 && (d4 - d3) >= 0 && (d5 - d6) >= 0) {
        const double w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return sq(p - (b + w * (c - b)));
    }
    const double denom = 1.0 / (va + vb + vc);
    const double v = vb * denom, w = vc * denom;
    return sq(p - (a + v * ab + w * ac));
}

/// Uniform-grid bucket structure for nearest-triangle queries.
class TriangleLocator
{
public:
    explicit TriangleLocator(const TriangleMesh& mesh) : mesh_(mesh)
    {
        if (mesh.triangles.empty())
            throw Error("metrics/empty-mesh", "reference mesh has no triangles");
        lo_ = hi_ = mesh.vertices[mesh.triangles[0][0]];
        for (const auto& t : mesh.triangles)
            for (auto v : t)
                for (int a = 0; a < 3; ++a) {
                    lo_[a] = std::min(lo_[a], mesh.vertices[v][a]);
                    hi_[a] = std::max(hi_[a], mesh.vertices[v][a]);
                }
        double extent = 0;
        for (int a = 0; a < 3; ++a)
            extent = std::max(extent, hi_[a] - lo_[a]);
        extent = std::max(extent, 1e-9);
        // about two edge lengths per cell, with the cell count capped
        double edge = 0;
        for (const auto& t : mesh.triangles)
            edge += norm(mesh.vertices[t[1]] - mesh.vertices[t[0]]);
        cell_ = std::max(2.0 * edge / static_cast<double>(mesh.triangles.size()), extent / 1024.0);
        for (;;) {
            double count = 1;
            for (int a = 0; a < 3; ++a) {
                n_[a] = std::max(1, static_cast<int>(std::ceil((hi_[a] - lo_[a]) / cell_)));
                count *= n_[a];
            }
            if (count <= 4.0e6)
                break;
            cell_ *= 1.25;
        }
        cells_.resize(static_cast<std::size_t>(n_[0]) * n_[1] * n_[2]);
        for (std::uint32_t f = 0; f < mesh.triangles.size(); ++f) {
            Index3 a0{}, a1{};
            for (int a = 0; a < 3; ++a) {
                double mn = std::numeric_limits<double>::max(), mx = -mn;
                for (auto v : mesh.triangles[f]) {
                    mn = std::min(mn, mesh.vertices[v][a]);
                    mx = std::max(mx, mesh.vertices[v][a]);
                }
                a0[a] = cell_coord(mn, a);
                a1[a] = cell_coord(mx, a);
            }
            for (int z = a0.z; z <= a1.z; ++z)
                for (int y = a0.y; y <= a1.y; ++y)
                    for (int x = a0.x; x <= a1.x; ++x)
                        cells_[cell_index({x, y, z})].push_back(f);
        }
        stamp_.assign(mesh.triangles.size(), 0);
    }

    /// Distance from p to the nearest triangle.
    double distance(const Vec3& p)
    {
        ++query_;
        Index3 c{};
        double outside2 = 0;
        for (int a = 0; a < 3; ++a) {
            c[a] = cell_coord(p[a], a);
            const double o = std::max({lo_[a] - p[a], 0.0, p[a] - hi_[a]});
            outside2 += o * o;
        }
        const double outside = std::sqrt(outside2);
        double best2 = std::numeric_limits<double>::infinity();
        const int max_ring = std::max({n_[0], n_[1], n_[2]});
        for (int r = 0; r <= max_ring; ++r) {
            for (int z = c.z - r; z <= c.z + r; ++z)
                for (int y = c.y - r; y <= c.y + r; ++y)
                    for (int x = c.x - r; x <= c.x + r; ++x) {
                        if (std::max({std::abs(x - c.x), std::abs(y - c.y), std::abs(z - c.z)}) != r)
                            continue;
                        if (x < 0 || y < 0 || z < 0 || x >= n_[0] || y >= n_[1] || z >= n_[2])
                            continue;
                        for (auto f : cells_[cell_index({x, y, z})]) {
                            if (stamp_[f] == query_)
                                continue;
                            stamp_[f] = query_;
                            const auto& t = mesh_.triangles[f];
                            best2 = std::min(best2, point_triangle_distance2(p, mesh_.vertices[t[0]],
                                                                             mesh_.vertices[t[1]],
                                                                             mesh_.vertices[t[2]]));
                        }
                    }
            const double reach = outside + r * cell_;
            if (best2 <= reach * reach)
                break;
        }
        return std::sqrt(best2);
    }

private:
    int cell_coord(double v, int a) const
    {
        return std::clamp(static_cast<int>(std::floor((v - lo_[a]) / cell_)), 0, n_[a] - 1);
    }
    std::size_t cell_index(Index3 c) const
    {
        return static_cast<std::size_t>(c.x) + static_cast<std::size_t>(n_[0]) * (c.y + static_cast<std::size_t>(n_[1]) * c.z);
    }

    const TriangleMesh& mesh_;
    Vec3 lo_{}, hi_{};
    double cell_ = 1.0;
    Index3 n_{};
    std::vector<std::vector<std::uint32_t>> cells_;
    std::vector<std::uint32_t> stamp_;
    std::uint32_t query_ = 0;
};

/// Vertices plus a barycentric lattice on every face with spacing at most h.
inline std::vector<Vec3> surface_samples(const TriangleMesh& mesh, double h)
{
    std::vector<Vec3> out;
    std::vector<char> used(mesh.vertices.size(), 0);
    for (const auto& t : mesh.triangles)
        for (auto v : t)
            if (!used[v]) {
                used[v] = 1;
                out.push_back(mesh.vertices[v]);
            }
    for (const auto& t : mesh.triangles) {
        const Vec3 &a = mesh.vertices[t[0]], &b = mesh.vertices[t[1]], &c = mesh.vertices[t[2]];
        const double longest = std::max({norm(b - a), norm(c - b), norm(a - c)});
        const int n = std::max(1, static_cast<int>(std::ceil(longest / h)));
        if (n == 1) {
            out.push_back((1.0 / 3.0) * (a + b + c));
            continue;
        }
        for (int i = 0; i <= n; ++i)
            for (int j = 0; i + j <= n; ++j) {
                const int k = n - i - j;
                if ((i == n) || (j == n) || (k == n))
                    continue; // corners already sampled as vertices
                out.push_back((1.0 / n) * (static_cast<double>(i) * a + static_cast<double>(j) * b +
                                           static_cast<double>(k) * c));
            }
    }
    return out;
}

inline double mean_edge_length(const TriangleMesh& mesh)
{
    double sum = 0;
    std::size_t n = 0;
    for (const auto& t : mesh.triangles)
        for (int k = 0; k < 3; ++k) {
            sum += norm(mesh.vertices[t[(k + 1) % 3]] - mesh.vertices[t[k]]);
            ++n;
        }
    return n ? sum / static_cast<double>(n) : 0.0;
}

/// Symmetric sampled surface distance. `h` is the face sampling step; zero
/// picks the smaller mean edge length of the two meshes.
inline DistanceReport mesh_distance(const TriangleMesh& a, const TriangleMesh& b, double h = 0.0)
{
    if (a.triangles.empty() || b.triangles.empty())
        throw Error("metrics/empty-mesh", "distance needs two non-empty meshes");
    if (h <= 0)
        h = std::min(mean_edge_length(a), mean_edge_length(b));
    h = std::max(h, 1e-6);

    DistanceReport rep;
    double sum = 0;
    auto one_way = [&](const TriangleMesh& from, const TriangleMesh& to) {
        TriangleLocator loc(to);
        for (const auto& p : surface_samples(from, h)) {
            const double d = loc.distance(p);
            sum += d;
            rep.hausdorff = std::max(rep.hausdorff, d);
            ++rep.samples;
        }
    };
    one_way(a, b);
    one_way(b, a);
    rep.mean = sum / static_cast<double>(rep.samples);
    return rep;
}

} // namespace crease
