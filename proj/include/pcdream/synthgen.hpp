#pragma once

#include "pcdream/dataset.hpp"
#include "pcdream/point_cloud.hpp"

#include <array>
#include <cstdint>
#include <string>

namespace pcdream {

// Canonical label indices, in this order. The names are persisted in
// manifests and checkpoints, so targets are addressed by name everywhere.
enum class ShapeKind : int { Sphere = 0, Cube = 1, Cone = 2, Cylinder = 3, Torus = 4 };

inline constexpr std::array<const char*, 5> kShapeNames = {"sphere", "cube", "cone", "cylinder",
                                                           "torus"};
inline constexpr std::size_t kShapeCount = kShapeNames.size();

struct DatasetSpec {
    std::size_t per_class = 200;
    std::size_t points_per_cloud = 1024;
    double jitter_sigma = 0.01;
    double train_fraction = 0.8;
    std::uint64_t seed = 0;
};

// n points uniform on the surface of the canonical primitive:
//   sphere: unit radius
//   cube: axis-aligned, half-side 1
//   cone: base radius 1, height 2 (apex z=+1, base disk z=-1)
//   cylinder: radius 1, height 2 (caps at z=+-1)
//   torus: major radius 1, minor radius 0.35 (rejection-sampled for
//   uniform surface density)
PointCloud sample_primitive(ShapeKind kind, std::size_t n, std::uint64_t seed);

// Labeled clouds for all five primitives: sampled, normalized to the unit
// sphere, jittered with per-coordinate Gaussian noise, and split per class
// by a seeded shuffle. Content is a pure function of the DatasetSpec.
Dataset build_dataset(const DatasetSpec& spec);

} // namespace pcdream
