#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <unordered_map>
#include <vector>

#include "crease/grid.hpp"

namespace crease {

/// Bucketed point set for radius and nearest-point queries.
class SpatialHash
{
public:
    explicit SpatialHash(double cell) : cell_(cell > 0 ? cell : 1.0) {}

    void insert(const Vec3& p)
    {
        buckets_[key(cell_of(p))].push_back(static_cast<std::uint32_t>(points_.size()));
        points_.push_back(p);
    }

    [[nodiscard]] bool empty() const noexcept { return points_.empty(); }
    [[nodiscard]] const std::vector<Vec3>& points() const noexcept { return points_; }

    /// True if some stored point lies strictly closer than r.
    [[nodiscard]] bool any_within(const Vec3& p, double r) const
    {
        const int reach = static_cast<int>(std::ceil(r / cell_));
        const Index3 c = cell_of(p);
        for (int dz = -reach; dz <= reach; ++dz)
            for (int dy = -reach; dy <= reach; ++dy)
                for (int dx = -reach; dx <= reach; ++dx) {
                    const auto it = buckets_.find(key(c + Index3{dx, dy, dz}));
                    if (it == buckets_.end())
                        continue;
                    for (auto i : it->second)
                        if (norm(points_[i] - p) < r)
                            return true;
                }
        return false;
    }

    /// Distance to the nearest stored point (infinity when empty).
    [[nodiscard]] double nearest(const Vec3& p) const
    {
        double best = std::numeric_limits<double>::infinity();
        if (points_.empty())
            return best;
        const Index3 c = cell_of(p);
        for (int r = 0;; ++r) {
            for (int dz = -r; dz <= r; ++dz)
                for (int dy = -r; dy <= r; ++dy)
                    for (int dx = -r; dx <= r; ++dx) {
                        if (std::max({std::abs(dx), std::abs(dy), std::abs(dz)}) != r)
                            continue;
                        const auto it = buckets_.find(key(c + Index3{dx, dy, dz}));
                        if (it == buckets_.end())
                            continue;
                        for (auto i : it->second)
                            best = std::min(best, norm(points_[i] - p));
                    }
            // every unvisited cell is at least r cells away
            if (best <= r * cell_ || r > max_ring_)
                return best;
        }
    }

private:
    [[nodiscard]] Index3 cell_of(const Vec3& p) const
    {
        return {static_cast<int>(std::floor(p[0] / cell_)), static_cast<int>(std::floor(p[1] / cell_)),
                static_cast<int>(std::floor(p[2] / cell_))};
    }
    static std::uint64_t key(Index3 c)
    {
        auto u = [](int v) { return static_cast<std::uint64_t>(static_cast<std::uint32_t>(v + (1 << 20))) & 0x1FFFFF; };
        return u(c.x) | (u(c.y) << 21) | (u(c.z) << 42);
    }

    double cell_;
    int max_ring_ = 4096;
    std::vector<Vec3> points_;
    std::unordered_map<std::uint64_t, std::vector<std::uint32_t>> buckets_;
};

} // namespace crease
