#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "crease/error.hpp"
#include "crease/filters.hpp"
#include "crease/grid.hpp"
#include "crease/mesh.hpp"
#include "crease/noise.hpp"

namespace crease {

/// Min-max rescale to [0,1]. A constant grid becomes all zeros.
template <class G>
void normalize_unit(G& v)
{
    if (v.empty())
        return;
    const auto [lo, hi] = std::minmax_element(v.data().begin(), v.data().end());
    const double a = *lo, b = *hi;
    for (auto& x : v.data())
        x = b > a ? static_cast<float>((x - a) / (b - a)) : 0.0f;
}

/// Height of the synthetic plane in voxel coordinates. For even nz it falls
/// on a voxel boundary, so rasterization marks two layers.
inline double plane_height(const Dims& dims) { return dims.nz / 2.0 - 0.5; }

/// Binary plane z = plane_height spanning the full xy extent: a voxel is set
/// iff its cube [k-0.5, k+0.5] touches the plane.
inline Volume rasterize_plane(Dims dims, Spacing spacing)
{
    Volume v(dims, spacing, 0.0f);
    const double z0 = plane_height(dims);
    for (int z = 0; z < dims.nz; ++z) {
        if (std::abs(z - z0) > 0.5)
            continue;
        for (int y = 0; y < dims.ny; ++y)
            for (int x = 0; x < dims.nx; ++x)
                v.at({x, y, z}) = 1.0f;
    }
    return v;
}

inline Volume gen_plane(Dims dims, double thickness_sigma, Spacing spacing = {0.5, 0.5, 0.5})
{
    if (dims.nz < 3)
        throw Error("volume/invalid-dims", "plane needs nz >= 3");
    Volume v = gaussian_filter(rasterize_plane(dims, spacing), thickness_sigma);
    normalize_unit(v);
    return v;
}

/// Regular grid of triangles over a parametric patch given in voxel coords.
template <class F>
TriangleMesh tessellate(int nu, int nv, const Spacing& spacing, F&& point)
{
    TriangleMesh m;
    for (int j = 0; j <= nv; ++j)
        for (int i = 0; i <= nu; ++i) {
            const Vec3 p = point(i, j);
            m.vertices.push_back({p[0] * spacing.sx, p[1] * spacing.sy, p[2] * spacing.sz});
        }
    auto id = [&](int i, int j) { return static_cast<std::uint32_t>(j * (nu + 1) + i); };
    for (int j = 0; j < nv; ++j)
        for (int i = 0; i < nu; ++i) {
            m.triangles.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
            m.triangles.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
        }
    return m;
}

/// The quad that generated gen_plane, over the voxel-center extent.
inline TriangleMesh plane_ground_truth(Dims dims, Spacing spacing)
{
    const double z0 = plane_height(dims);
    const double x1 = dims.nx - 1, y1 = dims.ny - 1;
    return tessellate(1, 1, spacing, [&](int i, int j) { return Vec3{i * x1, j * y1, z0}; });
}

struct FoldParams
{
    Dims dims{96, 64, 48};
    Spacing spacing{0.5, 0.5, 0.5};
    double radius = 8.0;          ///< voxels; sheets sit at zc +- radius
    double fold_x = -1.0;         ///< axis of the fold in voxels; negative picks nx - 1 - radius - 10
    double thickness_sigma = 1.5; ///< voxels
    double warp_strength = 1.5;   ///< voxels
    double warp_frequency = 0.04;
    std::uint64_t rng_seed = 1;

    [[nodiscard]] double fold_axis() const { return fold_x >= 0 ? fold_x : dims.nx - 1 - radius - 10.0; }
    [[nodiscard]] double center_z() const { return plane_height(dims); }
};

/// Sheet folded once around the y axis: two parallel slabs at zc +- r for
/// x <= fold, joined by a half cylinder. Voxels hold max(0, 1 - distance) to
/// the profile, so the blurred intensity is the same along flat and bent parts.
inline Volume rasterize_fold(const FoldParams& fp)
{
    const Dims d = fp.dims;
    Volume v(d, fp.spacing, 0.0f);
    const double xf = fp.fold_axis(), zc = fp.center_z(), r = fp.radius;
    for (int z = 0; z < d.nz; ++z)
        for (int x = 0; x < d.nx; ++x) {
            double dist = std::numeric_limits<double>::infinity();
            for (double zs : {zc - r, zc + r})
                dist = std::min(dist, x <= xf ? std::abs(z - zs) : std::hypot(x - xf, z - zs));
            if (x >= xf)
                dist = std::min(dist, std::abs(std::hypot(x - xf, z - zc) - r));
            const auto value = static_cast<float>(std::max(0.0, 1.0 - dist));
            if (value > 0)
                for (int y = 0; y < d.ny; ++y)
                    v.at({x, y, z}) = value;
        }
    return v;
}

inline Volume gen_folded_sheet(const FoldParams& fp)
{
    Volume v = gaussian_filter(rasterize_fold(fp), fp.thickness_sigma);
    normalize_unit(v);
    v = domain_warp(v, fp.warp_strength, fp.warp_frequency, fp.rng_seed);
    normalize_unit(v);
    return v;
}

/// Point q of the unwarped image shows up at x with x + s*w(x) = q.
inline Vec3 invert_warp(const WarpField& field, double strength, const Vec3& q)
{
    Vec3 x = q;
    for (int it = 0; it < 32; ++it)
        x = q - strength * field.direction(x);
    return x;
}

inline TriangleMesh folded_ground_truth(const FoldParams& fp, double step = 0.5)
{
    const double xf = fp.fold_axis(), zc = fp.center_z(), r = fp.radius;
    const double arc = std::numbers::pi * r;
    const double total = 2 * xf + arc;
    const int nu = static_cast<int>(std::ceil(total / step));
    const int nv = static_cast<int>(std::ceil((fp.dims.ny - 1) / (2 * step)));
    const WarpField field(fp.warp_frequency, fp.rng_seed);
    auto profile = [&](double s) -> std::array<double, 2> {
        if (s <= xf)
            return {s, zc - r};
        if (s <= xf + arc) {
            const double a = -std::numbers::pi / 2 + (s - xf) / r;
            return {xf + r * std::cos(a), zc + r * std::sin(a)};
        }
        return {xf - (s - xf - arc), zc + r};
    };
    return tessellate(nu, nv, fp.spacing, [&](int i, int j) {
        const auto xz = profile(total * i / nu);
        const Vec3 q{xz[0], (fp.dims.ny - 1.0) * j / nv, xz[1]};
        return fp.warp_strength > 0 ? invert_warp(field, fp.warp_strength, q) : q;
    });
}

/// Noise and filter stages applied on top of the plane image.
struct DatasetRecipe
{
    double gaussian_noise = 0.0;
    double simplex_amplitude = 0.0;
    double simplex_frequency = 0.04;
    int simplex_octaves = 5;
    double warp_strength = 0.0;
    double warp_frequency = 0.04;
    double post_filter_sigma = 0.0;
};

inline const std::vector<std::string>& plane_dataset_names()
{
    static const std::vector<std::string> names{"original", "g10",   "g10.gf100", "s30",        "s50",
                                                "ws200",    "ws200.gf100", "ws400", "ws400.gf100"};
    return names;
}

inline DatasetRecipe plane_recipe(const std::string& name)
{
    DatasetRecipe r;
    std::string base = name;
    if (const auto dot = name.find(".gf100"); dot != std::string::npos && dot + 6 == name.size()) {
        r.post_filter_sigma = 1.0;
        base = name.substr(0, dot);
    }
    if (base == "original")
        ;
    else if (base == "g10")
        r.gaussian_noise = 0.1;
    else if (base == "s30")
        r.simplex_amplitude = 0.3;
    else if (base == "s50")
        r.simplex_amplitude = 0.5;
    else if (base == "ws200")
        r.warp_strength = 2.0;
    else if (base == "ws400")
        r.warp_strength = 4.0;
    else
        throw Error("gen/unknown-dataset", "unknown dataset '" + name + "'");
    if (r.post_filter_sigma > 0 && base != "g10" && base != "ws200" && base != "ws400")
        throw Error("gen/unknown-dataset", "unknown dataset '" + name + "'");
    return r;
}

inline Volume apply_recipe(Volume v, const DatasetRecipe& r, std::uint64_t rng_seed)
{
    if (r.gaussian_noise > 0)
        v = add_gaussian_noise(v, r.gaussian_noise, rng_seed);
    if (r.simplex_amplitude > 0)
        v = add_simplex_noise(v, r.simplex_amplitude, r.simplex_frequency, r.simplex_octaves, rng_seed + 1);
    if (r.warp_strength > 0)
        v = domain_warp(v, r.warp_strength, r.warp_frequency, rng_seed + 2);
    if (r.post_filter_sigma > 0)
        v = gaussian_filter(v, r.post_filter_sigma);
    normalize_unit(v);
    return v;
}

struct Dataset
{
    std::string name;
    Volume volume;
    TriangleMesh ground_truth;
};

/// Desk scale by default; the full-size plane set is 400 x 400 x 80.
inline Dataset make_plane_dataset(const std::string& name, Dims dims = {100, 100, 40},
                                  Spacing spacing = {0.5, 0.5, 0.5}, std::uint64_t rng_seed = 1,
                                  double thickness_sigma = 1.5)
{
    const DatasetRecipe recipe = plane_recipe(name);
    return {name, apply_recipe(gen_plane(dims, thickness_sigma, spacing), recipe, rng_seed),
            plane_ground_truth(dims, spacing)};
}

inline Dataset make_folded_dataset(const FoldParams& fp = {})
{
    return {"folded", gen_folded_sheet(fp), folded_ground_truth(fp)};
}

} // namespace crease
