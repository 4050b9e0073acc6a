#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "crease/error.hpp"

namespace crease {

using VoxelIndex = std::uint32_t;

struct Index3
{
    int x = 0;
    int y = 0;
    int z = 0;

    constexpr int operator[](int axis) const noexcept { return axis == 0 ? x : (axis == 1 ? y : z); }
    constexpr int& operator[](int axis) noexcept { return axis == 0 ? x : (axis == 1 ? y : z); }

    friend constexpr Index3 operator+(Index3 a, Index3 b) noexcept { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
    friend constexpr Index3 operator-(Index3 a, Index3 b) noexcept { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
    friend constexpr bool operator==(Index3, Index3) noexcept = default;
};

/// Unit step along one of the six face directions: 0:-x 1:+x 2:-y 3:+y 4:-z 5:+z.
constexpr Index3 direction_step(int dir) noexcept
{
    Index3 s{};
    s[dir / 2] = (dir % 2 == 0) ? -1 : 1;
    return s;
}

constexpr int opposite_direction(int dir) noexcept { return dir ^ 1; }

struct Dims
{
    int nx = 0;
    int ny = 0;
    int nz = 0;

    constexpr int operator[](int axis) const noexcept { return axis == 0 ? nx : (axis == 1 ? ny : nz); }

    [[nodiscard]] constexpr std::size_t count() const noexcept
    {
        return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny) * static_cast<std::size_t>(nz);
    }

    [[nodiscard]] constexpr bool contains(Index3 p) const noexcept
    {
        return p.x >= 0 && p.y >= 0 && p.z >= 0 && p.x < nx && p.y < ny && p.z < nz;
    }

    [[nodiscard]] constexpr VoxelIndex linear(Index3 p) const noexcept
    {
        return static_cast<VoxelIndex>(p.x + nx * (p.y + static_cast<std::size_t>(ny) * p.z));
    }

    [[nodiscard]] constexpr Index3 coords(VoxelIndex i) const noexcept
    {
        const auto slab = static_cast<VoxelIndex>(nx) * static_cast<VoxelIndex>(ny);
        const auto z = i / slab;
        const auto rem = i - z * slab;
        return {static_cast<int>(rem % nx), static_cast<int>(rem / nx), static_cast<int>(z)};
    }

    friend constexpr bool operator==(const Dims&, const Dims&) noexcept = default;
};

/// Physical size of one voxel along each axis.
struct Spacing
{
    double sx = 1.0;
    double sy = 1.0;
    double sz = 1.0;

    constexpr double operator[](int axis) const noexcept { return axis == 0 ? sx : (axis == 1 ? sy : sz); }
    [[nodiscard]] constexpr double min() const noexcept { return std::min(sx, std::min(sy, sz)); }

    friend constexpr bool operator==(const Spacing&, const Spacing&) noexcept = default;
};

using Vec3 = std::array<double, 3>;

inline Vec3 operator+(const Vec3& a, const Vec3& b) { return {a[0] + b[0], a[1] + b[1], a[2] + b[2]}; }
inline Vec3 operator-(const Vec3& a, const Vec3& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
inline Vec3 operator*(double s, const Vec3& a) { return {s * a[0], s * a[1], s * a[2]}; }
inline double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
inline Vec3 cross(const Vec3& a, const Vec3& b)
{
    return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}
inline double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }

inline void validate_geometry(const Dims& dims, const Spacing& spacing)
{
    if (dims.nx < 1 || dims.ny < 1 || dims.nz < 1)
        throw Error("volume/invalid-dims", "all dimensions must be >= 1");
    if (!(spacing.sx > 0 && spacing.sy > 0 && spacing.sz > 0))
        throw Error("volume/invalid-spacing", "spacing components must be > 0");
    if (dims.count() > 0xFFFFFFF0ull)
        throw Error("volume/invalid-dims", "volume too large for 32-bit voxel indices");
}

/// Dense scalar grid, x fastest. Voxel centers sit at index * spacing.
template <class T>
class Grid
{
public:
    using value_type = T;

    Grid() = default;

    Grid(Dims dims, Spacing spacing, T fill = T{})
        : dims_(dims), spacing_(spacing)
    {
        validate_geometry(dims, spacing);
        values_.assign(dims.count(), fill);
    }

    Grid(Dims dims, Spacing spacing, std::vector<T> values)
        : dims_(dims), spacing_(spacing), values_(std::move(values))
    {
        validate_geometry(dims, spacing);
        if (values_.size() != dims.count())
            throw Error("volume/size-mismatch", "value count does not match dims");
    }

    [[nodiscard]] const Dims& dims() const noexcept { return dims_; }
    [[nodiscard]] const Spacing& spacing() const noexcept { return spacing_; }
    [[nodiscard]] std::size_t size() const noexcept { return values_.size(); }
    [[nodiscard]] bool empty() const noexcept { return values_.empty(); }

    T& operator[](VoxelIndex i) noexcept { return values_[i]; }
    const T& operator[](VoxelIndex i) const noexcept { return values_[i]; }
    T& at(Index3 p) noexcept { return values_[dims_.linear(p)]; }
    const T& at(Index3 p) const noexcept { return values_[dims_.linear(p)]; }

    /// Value at p with coordinates clamped into the grid.
    [[nodiscard]] T clamped(Index3 p) const noexcept
    {
        p.x = std::clamp(p.x, 0, dims_.nx - 1);
        p.y = std::clamp(p.y, 0, dims_.ny - 1);
        p.z = std::clamp(p.z, 0, dims_.nz - 1);
        return values_[dims_.linear(p)];
    }

    [[nodiscard]] std::span<const T> values() const noexcept { return values_; }
    [[nodiscard]] std::vector<T>& data() noexcept { return values_; }
    [[nodiscard]] const std::vector<T>& data() const noexcept { return values_; }

    [[nodiscard]] Vec3 physical(Index3 p) const noexcept
    {
        return {p.x * spacing_.sx, p.y * spacing_.sy, p.z * spacing_.sz};
    }

    friend bool operator==(const Grid&, const Grid&) = default;

private:
    Dims dims_{};
    Spacing spacing_{};
    std::vector<T> values_;
};

enum class ScalarType : std::uint8_t { u8, u16, f32 };

/// Scanned or synthetic intensities. Integer payloads are held exactly.
struct Volume : Grid<float>
{
    using Grid<float>::Grid;
    ScalarType dtype = ScalarType::f32;

    friend bool operator==(const Volume&, const Volume&) = default;
};

/// Per-voxel likelihood that the sought surface passes through, in [0,1].
struct ProbabilityField : Grid<float>
{
    using Grid<float>::Grid;

    friend bool operator==(const ProbabilityField&, const ProbabilityField&) = default;
};

} // namespace crease
