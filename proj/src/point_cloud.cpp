#include "pcdream/point_cloud.hpp"

#include "pcdream/rng.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>

namespace pcdream {

void check_finite(const PointCloud& pc, const char* context) {
    for (std::size_t i = 0; i < pc.points.size(); ++i) {
        const Point3& p = pc.points[i];
        if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.z)) {
            throw std::invalid_argument(std::string(context) + ": non-finite coordinate at point " +
                                        std::to_string(i));
        }
    }
}

PointCloud set_union(const PointCloud& a, const PointCloud& b) {
    PointCloud out;
    out.points.reserve(a.count() + b.count());
    out.points.insert(out.points.end(), a.points.begin(), a.points.end());
    out.points.insert(out.points.end(), b.points.begin(), b.points.end());
    return out;
}

PointCloud normalize_unit_sphere(const PointCloud& pc) {
    if (pc.empty()) {
        throw std::invalid_argument("empty cloud");
    }
    double cx = 0.0, cy = 0.0, cz = 0.0;
    for (const Point3& p : pc.points) {
        cx += p.x;
        cy += p.y;
        cz += p.z;
    }
    const double n = static_cast<double>(pc.count());
    cx /= n;
    cy /= n;
    cz /= n;

    double max_r2 = 0.0;
    for (const Point3& p : pc.points) {
        const double dx = p.x - cx, dy = p.y - cy, dz = p.z - cz;
        max_r2 = std::max(max_r2, dx * dx + dy * dy + dz * dz);
    }

    // All points coincident: map everything to the origin.
    const double inv_r = max_r2 > 0.0 ? 1.0 / std::sqrt(max_r2) : 1.0;

    PointCloud out;
    out.points.reserve(pc.count());
    for (const Point3& p : pc.points) {
        out.points.push_back({static_cast<float>((p.x - cx) * inv_r),
                              static_cast<float>((p.y - cy) * inv_r),
                              static_cast<float>((p.z - cz) * inv_r)});
    }
    return out;
}

PointCloud downsample_random(const PointCloud& pc, std::size_t n, std::uint64_t seed) {
    if (n >= pc.count()) {
        return pc;
    }
    std::vector<std::size_t> idx(pc.count());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    SplitMix64 rng(seed);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.next_below(pc.count() - i));
        std::swap(idx[i], idx[j]);
    }
    PointCloud out;
    out.points.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        out.points.push_back(pc.points[idx[i]]);
    }
    return out;
}

PointCloud apply_placement(const PointCloud& pc, const Placement& p) {
    if (!(p.scale > 0.0f) || !std::isfinite(p.scale) || !std::isfinite(p.dx) ||
        !std::isfinite(p.dy) || !std::isfinite(p.dz)) {
        throw std::invalid_argument("apply_placement: scale must be positive and finite");
    }
    PointCloud out;
    out.points.reserve(pc.count());
    for (const Point3& q : pc.points) {
        out.points.push_back({q.x * p.scale + p.dx, q.y * p.scale + p.dy, q.z * p.scale + p.dz});
    }
    return out;
}

} // namespace pcdream
