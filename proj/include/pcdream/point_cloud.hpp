#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace pcdream {

struct Point3 {
    float x = 0.0f;
    float y = 0.0f;
    float z = 0.0f;
};

// An unordered multiset of 3D points, stored in a fixed order so operations
// stay deterministic. Coordinates are 32-bit floats and must be finite.
struct PointCloud {
    std::vector<Point3> points;

    std::size_t count() const { return points.size(); }
    bool empty() const { return points.empty(); }
};

// Throws std::invalid_argument if any coordinate is NaN or infinite.
void check_finite(const PointCloud& pc, const char* context);

// Rigid-ish placement: uniform scale followed by translation. Composes
// multi-object inputs before amalgamation.
struct Placement {
    float scale = 1.0f;
    float dx = 0.0f;
    float dy = 0.0f;
    float dz = 0.0f;
};

// Multiset concatenation: all points of a followed by all points of b.
// Coincident points are kept, so |a ∪ b| = |a| + |b| always.
PointCloud set_union(const PointCloud& a, const PointCloud& b);

// Translate the centroid to the origin and scale so the farthest point sits
// at distance 1. A cloud whose points all coincide maps to the origin.
// Throws std::invalid_argument("empty cloud") on an empty input.
PointCloud normalize_unit_sphere(const PointCloud& pc);

// Pick n points without replacement using a Fisher-Yates prefix driven by
// splitmix64(seed). Returns a copy in original order when n >= count.
PointCloud downsample_random(const PointCloud& pc, std::size_t n, std::uint64_t seed);

// Each point q maps to q * scale + translation. Throws on non-positive scale.
PointCloud apply_placement(const PointCloud& pc, const Placement& p);

} // namespace pcdream
