#pragma once

#include <array>
#include <numbers>
#include <numeric>
#include <random>

#include "crease/grid.hpp"

namespace crease {

/// 3D simplex gradient noise with a seed-shuffled permutation table.
/// Output is roughly in [-1,1].
class SimplexNoise
{
public:
    explicit SimplexNoise(std::uint64_t seed)
    {
        std::array<std::uint8_t, 256> p{};
        std::iota(p.begin(), p.end(), 0);
        std::mt19937_64 rng(seed);
        for (int i = 255; i > 0; --i) {
            std::uniform_int_distribution<int> pick(0, i);
            std::swap(p[i], p[pick(rng)]);
        }
        for (int i = 0; i < 512; ++i)
            perm_[i] = p[i & 255];
    }

    double operator()(double x, double y, double z) const noexcept
    {
        constexpr double F3 = 1.0 / 3.0;
        constexpr double G3 = 1.0 / 6.0;
        const double s = (x + y + z) * F3;
        const int i = static_cast<int>(std::floor(x + s));
        const int j = static_cast<int>(std::floor(y + s));
        const int k = static_cast<int>(std::floor(z + s));
        const double t = (i + j + k) * G3;
        const double x0 = x - (i - t), y0 = y - (j - t), z0 = z - (k - t);

        int i1, j1, k1, i2, j2, k2;
        if (x0 >= y0) {
            if (y0 >= z0)      { i1 = 1; j1 = 0; k1 = 0; i2 = 1; j2 = 1; k2 = 0; }
            else if (x0 >= z0) { i1 = 1; j1 = 0; k1 = 0; i2 = 1; j2 = 0; k2 = 1; }
            else               { i1 = 0; j1 = 0; k1 = 1; i2 = 1; j2 = 0; k2 = 1; }
        } else {
            if (y0 < z0)       { i1 = 0; j1 = 0; k1 = 1; i2 = 0; j2 = 1; k2 = 1; }
            else if (x0 < z0)  { i1 = 0; j1 = 1; k1 = 0; i2 = 0; j2 = 1; k2 = 1; }
            else               { i1 = 0; j1 = 1; k1 = 0; i2 = 1; j2 = 1; k2 = 0; }
        }

        const double x1 = x0 - i1 + G3, y1 = y0 - j1 + G3, z1 = z0 - k1 + G3;
        const double x2 = x0 - i2 + 2 * G3, y2 = y0 - j2 + 2 * G3, z2 = z0 - k2 + 2 * G3;
        const double x3 = x0 - 1 + 3 * G3, y3 = y0 - 1 + 3 * G3, z3 = z0 - 1 + 3 * G3;

        const int ii = i & 255, jj = j & 255, kk = k & 255;
        const int g0 = perm_[ii + perm_[jj + perm_[kk]]] % 12;
        const int g1 = perm_[ii + i1 + perm_[jj + j1 + perm_[kk + k1]]] % 12;
        const int g2 = perm_[ii + i2 + perm_[jj + j2 + perm_[kk + k2]]] % 12;
        const int g3 = perm_[ii + 1 + perm_[jj + 1 + perm_[kk + 1]]] % 12;

        return 32.0 * (corner(g0, x0, y0, z0) + corner(g1, x1, y1, z1) + corner(g2, x2, y2, z2) +
                       corner(g3, x3, y3, z3));
    }

    /// Octave sum with halving amplitude and doubling frequency, clamped to [-1,1].
    double fractal(double x, double y, double z, int octaves) const noexcept
    {
        double sum = 0, amp = 1, norm = 0, f = 1;
        for (int o = 0; o < octaves; ++o) {
            sum += amp * (*this)(x * f, y * f, z * f);
            norm += amp;
            amp *= 0.5;
            f *= 2;
        }
        return std::clamp(sum / norm, -1.0, 1.0);
    }

private:
    static double corner(int g, double x, double y, double z) noexcept
    {
        static constexpr int grad[12][3] = {{1, 1, 0}, {-1, 1, 0}, {1, -1, 0}, {-1, -1, 0}, {1, 0, 1}, {-1, 0, 1},
                                            {1, 0, -1}, {-1, 0, -1}, {0, 1, 1}, {0, -1, 1}, {0, 1, -1}, {0, -1, -1}};
        double t = 0.6 - x * x - y * y - z * z;
        if (t < 0)
            return 0;
        t *= t;
        return t * t * (grad[g][0] * x + grad[g][1] * y + grad[g][2] * z);
    }

    std::array<std::uint8_t, 512> perm_{};
};

/// v + amplitude * N(0,1) per voxel, clamped to [0,1].
template <class G>
G add_gaussian_noise(const G& v, double amplitude, std::uint64_t rng_seed)
{
    if (amplitude < 0)
        throw Error("noise/invalid-amplitude", "amplitude must be >= 0");
    G out = v;
    if (amplitude == 0)
        return out;
    std::mt19937_64 rng(rng_seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (std::size_t i = 0; i < out.size(); ++i) {
        auto& x = out[static_cast<VoxelIndex>(i)];
        x = static_cast<float>(std::clamp(x + amplitude * normal(rng), 0.0, 1.0));
    }
    return out;
}

/// v plus fractal simplex noise in [-amplitude, amplitude], clamped to [0,1].
/// `frequency` is in cycles per voxel.
template <class G>
G add_simplex_noise(const G& v, double amplitude, double frequency, int octaves, std::uint64_t rng_seed)
{
    if (amplitude < 0)
        throw Error("noise/invalid-amplitude", "amplitude must be >= 0");
    if (octaves < 1)
        throw Error("noise/invalid-octaves", "octaves must be >= 1");
    G out = v;
    if (amplitude == 0)
        return out;
    const SimplexNoise noise(rng_seed);
    const Dims d = v.dims();
    for (int z = 0; z < d.nz; ++z)
        for (int y = 0; y < d.ny; ++y)
            for (int x = 0; x < d.nx; ++x) {
                auto& val = out.at({x, y, z});
                const double n = noise.fractal(x * frequency, y * frequency, z * frequency, octaves);
                val = static_cast<float>(std::clamp(val + amplitude * n, 0.0, 1.0));
            }
    return out;
}

/// Unit-vector field driven by two noise channels: azimuth and cos(polar angle).
class WarpField
{
public:
    WarpField(double frequency, std::uint64_t rng_seed)
        : frequency_(frequency), azimuth_(rng_seed), elevation_(rng_seed ^ 0x9e3779b97f4a7c15ull)
    {}

    [[nodiscard]] Vec3 direction(const Vec3& p) const noexcept
    {
        const double f = frequency_;
        const double phi = std::numbers::pi * azimuth_.fractal(p[0] * f, p[1] * f, p[2] * f, 2);
        const double cz = elevation_.fractal(p[0] * f + 31.7, p[1] * f + 17.3, p[2] * f + 5.9, 2);
        const double rxy = std::sqrt(std::max(0.0, 1.0 - cz * cz));
        return {rxy * std::cos(phi), rxy * std::sin(phi), cz};
    }

private:
    double frequency_;
    SimplexNoise azimuth_;
    SimplexNoise elevation_;
};

/// Trilinear sample at a continuous voxel coordinate, clamped to the grid.
template <class G>
double sample_trilinear(const G& v, const Vec3& p) noexcept
{
    const Dims d = v.dims();
    double c[3];
    int i0[3];
    double f[3];
    for (int a = 0; a < 3; ++a) {
        c[a] = std::clamp(p[a], 0.0, static_cast<double>(d[a] - 1));
        i0[a] = std::min(static_cast<int>(std::floor(c[a])), std::max(d[a] - 2, 0));
        f[a] = c[a] - i0[a];
    }
    double acc = 0;
    for (int k = 0; k < 2; ++k)
        for (int j = 0; j < 2; ++j)
            for (int i = 0; i < 2; ++i) {
                const double w = (i ? f[0] : 1 - f[0]) * (j ? f[1] : 1 - f[1]) * (k ? f[2] : 1 - f[2]);
                if (w == 0)
                    continue;
                acc += w * v.clamped({i0[0] + i, i0[1] + j, i0[2] + k});
            }
    return acc;
}

/// Resamples v at x + strength * w(x) (voxel units) with trilinear interpolation.
template <class G>
G domain_warp(const G& v, double strength, double frequency, std::uint64_t rng_seed)
{
    if (strength < 0)
        throw Error("noise/invalid-strength", "strength must be >= 0");
    G out = v;
    if (strength == 0)
        return out;
    const WarpField field(frequency, rng_seed);
    const Dims d = v.dims();
    for (int z = 0; z < d.nz; ++z)
        for (int y = 0; y < d.ny; ++y)
            for (int x = 0; x < d.nx; ++x) {
                const Vec3 p{double(x), double(y), double(z)};
                const Vec3 w = field.direction(p);
                out.at({x, y, z}) = static_cast<float>(sample_trilinear(v, p + strength * w));
            }
    return out;
}

} // namespace crease
