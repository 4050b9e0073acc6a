#pragma once

#include <Eigen/Eigenvalues>

#include "crease/grid.hpp"

namespace crease {

/// Symmetric 3x3 tensor, six independent components.
struct SymTensor3
{
    double xx = 0, xy = 0, xz = 0, yy = 0, yz = 0, zz = 0;

    [[nodiscard]] Eigen::Matrix3d matrix() const
    {
        Eigen::Matrix3d m;
        m << xx, xy, xz, xy, yy, yz, xz, yz, zz;
        return m;
    }
    [[nodiscard]] double trace() const noexcept { return xx + yy + zz; }
};

inline int structure_tensor_radius(double sigma_g) { return static_cast<int>(std::ceil(3.0 * sigma_g)); }

/// Gaussian-weighted average of grad(p) grad(p)^T over a cubic window around x.
/// Gradients are central differences in physical units.
inline SymTensor3 structure_tensor(const Grid<float>& p, Index3 x, double sigma_g)
{
    if (sigma_g < 0)
        throw Error("tensor/invalid-sigma", "sigma_g must be >= 0");
    const int r = structure_tensor_radius(sigma_g);
    const int margin = r + 1;
    const Dims& dims = p.dims();
    for (int a = 0; a < 3; ++a)
        if (x[a] - margin < 0 || x[a] + margin >= dims[a])
            throw Error("tensor/near-boundary", "window does not fit inside the grid at this voxel");

    const Spacing& sp = p.spacing();
    SymTensor3 acc;
    double wsum = 0;
    for (int dz = -r; dz <= r; ++dz)
        for (int dy = -r; dy <= r; ++dy)
            for (int dx = -r; dx <= r; ++dx) {
                const double r2 = dx * dx + dy * dy + dz * dz;
                const double w = sigma_g > 0 ? std::exp(-r2 / (2 * sigma_g * sigma_g)) : 1.0;
                const Index3 c = x + Index3{dx, dy, dz};
                double g[3];
                for (int a = 0; a < 3; ++a) {
                    Index3 plus = c, minus = c;
                    plus[a] += 1;
                    minus[a] -= 1;
                    g[a] = (static_cast<double>(p.at(plus)) - p.at(minus)) / (2 * sp[a]);
                }
                acc.xx += w * g[0] * g[0];
                acc.xy += w * g[0] * g[1];
                acc.xz += w * g[0] * g[2];
                acc.yy += w * g[1] * g[1];
                acc.yz += w * g[1] * g[2];
                acc.zz += w * g[2] * g[2];
                wsum += w;
            }
    acc.xx /= wsum;
    acc.xy /= wsum;
    acc.xz /= wsum;
    acc.yy /= wsum;
    acc.yz /= wsum;
    acc.zz /= wsum;
    return acc;
}

/// Unit eigenvector of the largest eigenvalue; first nonzero component positive.
inline Vec3 principal_direction(const SymTensor3& a)
{
    const auto m = a.matrix();
    if (m.cwiseAbs().maxCoeff() <= 1e-300)
        throw Error("poles/degenerate-tensor", "structure tensor is zero (featureless neighborhood)");
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> solver(m);
    Eigen::Vector3d v = solver.eigenvectors().col(2).normalized();
    for (int i = 0; i < 3; ++i) {
        if (std::abs(v[i]) > 1e-12) {
            if (v[i] < 0)
                v = -v;
            break;
        }
    }
    return {v[0], v[1], v[2]};
}

} // namespace crease
