#pragma once

#include <vector>

#include "crease/grid.hpp"

namespace crease {

/// Separable Gaussian convolution with clamp-to-edge borders. The kernel is
/// truncated at ceil(4 sigma) and normalized to unit sum.
template <class G>
G gaussian_filter(const G& v, double sigma)
{
    if (sigma < 0)
        throw Error("filter/invalid-sigma", "sigma must be >= 0");
    if (sigma == 0)
        return v;

    const int r = static_cast<int>(std::ceil(4.0 * sigma));
    std::vector<double> kernel(2 * r + 1);
    double sum = 0;
    for (int i = -r; i <= r; ++i)
        sum += kernel[i + r] = std::exp(-(i * i) / (2 * sigma * sigma));
    for (auto& k : kernel)
        k /= sum;

    const Dims d = v.dims();
    std::vector<double> cur(v.values().begin(), v.values().end());
    std::vector<double> next(cur.size());
    std::vector<double> line;
    for (int axis = 0; axis < 3; ++axis) {
        const int n = d[axis];
        line.resize(n);
        const int o1 = (axis + 1) % 3, o2 = (axis + 2) % 3;
        for (int b = 0; b < d[o2]; ++b)
            for (int a = 0; a < d[o1]; ++a) {
                Index3 p{};
                p[o1] = a;
                p[o2] = b;
                for (int i = 0; i < n; ++i) {
                    p[axis] = i;
                    line[i] = cur[d.linear(p)];
                }
                for (int i = 0; i < n; ++i) {
                    double acc = 0;
                    for (int k = -r; k <= r; ++k)
                        acc += kernel[k + r] * line[std::clamp(i + k, 0, n - 1)];
                    p[axis] = i;
                    next[d.linear(p)] = acc;
                }
            }
        cur.swap(next);
    }
    G out = v;
    for (std::size_t i = 0; i < cur.size(); ++i)
        out[static_cast<VoxelIndex>(i)] = static_cast<typename G::value_type>(cur[i]);
    return out;
}

} // namespace crease
