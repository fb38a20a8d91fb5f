#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <unordered_map>
#include <vector>

#include "poincare/geometry.hpp"

namespace poincare {

/// Uniform hash grid over a point cloud for radius and nearest queries.
class PointIndex {
public:
    PointIndex() = default;
    PointIndex(const std::vector<Vec3>& points, double cell) : points_(points), cell_(cell) {
        for (std::size_t i = 0; i < points_.size(); ++i) cells_[key(points_[i])].push_back(i);
    }

    bool empty() const { return points_.empty(); }
    double cell() const { return cell_; }

    /// Distance to the nearest point within one cell ring; +inf if none there.
    double nearest_distance(const Vec3& x) const {
        double best = std::numeric_limits<double>::infinity();
        for_each_near(x, [&](std::size_t i) { best = std::min(best, (points_[i] - x).norm()); });
        return best;
    }

    template <class F>
    void for_each_near(const Vec3& x, F&& f) const {
        auto c = coords(x);
        for (int dx = -1; dx <= 1; ++dx)
            for (int dy = -1; dy <= 1; ++dy)
                for (int dz = -1; dz <= 1; ++dz) {
                    auto it = cells_.find(pack(c[0] + dx, c[1] + dy, c[2] + dz));
                    if (it == cells_.end()) continue;
                    for (std::size_t i : it->second) f(i);
                }
    }

private:
    std::array<std::int64_t, 3> coords(const Vec3& x) const {
        return {static_cast<std::int64_t>(std::floor(x.x() / cell_)),
                static_cast<std::int64_t>(std::floor(x.y() / cell_)),
                static_cast<std::int64_t>(std::floor(x.z() / cell_))};
    }
    static std::uint64_t pack(std::int64_t a, std::int64_t b, std::int64_t c) {
        auto u = [](std::int64_t v) { return static_cast<std::uint64_t>(v + (1 << 20)) & 0x1FFFFF; };
        return (u(a) << 42) | (u(b) << 21) | u(c);
    }
    std::uint64_t key(const Vec3& x) const {
        auto c = coords(x);
        return pack(c[0], c[1], c[2]);
    }

    std::vector<Vec3> points_;
    double cell_ = 1.0;
    std::unordered_map<std::uint64_t, std::vector<std::size_t>> cells_;
};

}  // namespace poincare
