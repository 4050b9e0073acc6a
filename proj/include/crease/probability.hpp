#pragma once

#include <algorithm>
#include <utility>

#include "crease/error.hpp"
#include "crease/grid.hpp"

namespace crease {

/// Clamped linear map of intensities onto [0,1]: lo -> 0, hi -> 1.
inline ProbabilityField to_probability(const Grid<float>& v, double lo, double hi)
{
    if (!(lo < hi))
        throw Error("probability/invalid-range", "clamp range requires lo < hi");
    ProbabilityField p(v.dims(), v.spacing(), 0.0f);
    const double scale = 1.0 / (hi - lo);
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double x = (static_cast<double>(v[static_cast<VoxelIndex>(i)]) - lo) * scale;
        p[static_cast<VoxelIndex>(i)] = static_cast<float>(std::clamp(x, 0.0, 1.0));
    }
    return p;
}

/// Default clamp range: [min, max + 10% of the range]. The headroom keeps the
/// brightest voxels below p = 1, where the marching cost would vanish.
inline std::pair<double, double> auto_clamp(const Grid<float>& v)
{
    if (v.size() == 0)
        throw Error("probability/invalid-range", "empty volume");
    const auto [mn, mx] = std::minmax_element(v.values().begin(), v.values().end());
    const double lo = *mn, hi = *mx;
    if (!(lo < hi))
        throw Error("probability/invalid-range", "constant volume has no clamp range");
    return {lo, hi + 0.1 * (hi - lo)};
}

} // namespace crease
