#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "crease/error.hpp"
#include "crease/grid.hpp"
#include "crease/mesh.hpp"

namespace crease {

/// 8-bit grayscale image, row-major.
struct SliceImage
{
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels;

    [[nodiscard]] std::uint8_t at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
};

inline constexpr std::uint8_t kContourValue = 255;
inline constexpr std::uint8_t kSeedValue = 0;
/// p is mapped onto [0, kMaxFieldValue] so overlays stay distinguishable.
inline constexpr std::uint8_t kMaxFieldValue = 200;

inline int parse_axis(const std::string& axis)
{
    if (axis == "x")
        return 0;
    if (axis == "y")
        return 1;
    if (axis == "z")
        return 2;
    throw Error("slice/invalid-axis", "axis must be x, y or z");
}

/// Slice of p perpendicular to `axis` at voxel `index`, with the mesh
/// intersection contour and a cross at every seed lying in the slice.
/// Image columns/rows follow the two remaining axes in increasing order.
inline SliceImage render_slice(const Grid<float>& p, const TriangleMesh& mesh, const std::vector<Index3>& seeds,
                               int axis, int index)
{
    const Dims& d = p.dims();
    if (axis < 0 || axis > 2)
        throw Error("slice/invalid-axis", "axis must be 0, 1 or 2");
    if (index < 0 || index >= d[axis])
        throw Error("slice/out-of-bounds", "slice index outside the volume");
    const int u = axis == 0 ? 1 : 0, v = axis == 2 ? 1 : 2;
    SliceImage img;
    img.width = d[u];
    img.height = d[v];
    img.pixels.assign(static_cast<std::size_t>(img.width) * img.height, 0);
    for (int j = 0; j < img.height; ++j)
        for (int i = 0; i < img.width; ++i) {
            Index3 q{};
            q[axis] = index;
            q[u] = i;
            q[v] = j;
            img.pixels[static_cast<std::size_t>(j) * img.width + i] =
                static_cast<std::uint8_t>(std::lround(std::clamp(p.at(q), 0.0f, 1.0f) * kMaxFieldValue));
        }

    const Spacing& sp = p.spacing();
    const double plane = index * sp[axis];
    auto plot = [&](double pu, double pv, std::uint8_t value) {
        const int i = static_cast<int>(std::lround(pu / sp[u])), j = static_cast<int>(std::lround(pv / sp[v]));
        if (i >= 0 && j >= 0 && i < img.width && j < img.height)
            img.pixels[static_cast<std::size_t>(j) * img.width + i] = value;
    };
    for (const auto& t : mesh.triangles) {
        // points where triangle edges cross the slice plane
        Vec3 hits[3];
        int n = 0;
        for (int k = 0; k < 3 && n < 3; ++k) {
            const Vec3& a = mesh.vertices[t[k]];
            const Vec3& b = mesh.vertices[t[(k + 1) % 3]];
            const double da = a[axis] - plane, db = b[axis] - plane;
            if ((da < 0) == (db < 0) && da != 0)
                continue;
            if (da == db)
                continue;
            const double s = da / (da - db);
            hits[n++] = a + s * (b - a);
        }
        if (n < 2)
            continue;
        const Vec3 &a = hits[0], &b = hits[1];
        const double len = std::max(std::abs(b[u] - a[u]) / sp[u], std::abs(b[v] - a[v]) / sp[v]);
        const int steps = std::max(1, static_cast<int>(std::ceil(len * 2)));
        for (int s = 0; s <= steps; ++s) {
            const double f = static_cast<double>(s) / steps;
            plot(a[u] + f * (b[u] - a[u]), a[v] + f * (b[v] - a[v]), kContourValue);
        }
    }
    for (const auto& s : seeds) {
        if (s[axis] != index)
            continue;
        for (int k = -2; k <= 2; ++k) {
            plot((s[u] + k) * sp[u], s[v] * sp[v], kSeedValue);
            plot(s[u] * sp[u], (s[v] + k) * sp[v], kSeedValue);
        }
    }
    return img;
}

/// Binary PGM (P5) encoding.
inline std::string encode_pgm(const SliceImage& img)
{
    std::string out = "P5\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
    out.append(reinterpret_cast<const char*>(img.pixels.data()), img.pixels.size());
    return out;
}

} // namespace crease
