#include "pcdream/synthgen.hpp"

#include "pcdream/rng.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace pcdream {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kTorusMinor = 0.35;

Point3 to_point(double x, double y, double z) {
    return {static_cast<float>(x), static_cast<float>(y), static_cast<float>(z)};
}

Point3 sphere_point(SplitMix64& rng) {
    const double z = 2.0 * rng.next_double() - 1.0;
    const double theta = 2.0 * kPi * rng.next_double();
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    return to_point(r * std::cos(theta), r * std::sin(theta), z);
}

Point3 cube_point(SplitMix64& rng) {
    const std::uint64_t face = rng.next_below(6);
    const double a = 2.0 * rng.next_double() - 1.0;
    const double b = 2.0 * rng.next_double() - 1.0;
    switch (face) {
        case 0: return to_point(1.0, a, b);
        case 1: return to_point(-1.0, a, b);
        case 2: return to_point(a, 1.0, b);
        case 3: return to_point(a, -1.0, b);
        case 4: return to_point(a, b, 1.0);
        default: return to_point(a, b, -1.0);
    }
}

Point3 cone_point(SplitMix64& rng) {
    // Lateral area pi*r*slant with r=1, slant=sqrt(5); base disk area pi.
    const double lateral = kPi * std::sqrt(5.0);
    const double base = kPi;
    if (rng.next_double() * (lateral + base) < lateral) {
        // Unrolled lateral surface is a sector; uniform there means the
        // radial fraction from the apex goes as sqrt(u).
        const double s = std::sqrt(rng.next_double());
        const double theta = 2.0 * kPi * rng.next_double();
        return to_point(s * std::cos(theta), s * std::sin(theta), 1.0 - 2.0 * s);
    }
    const double rho = std::sqrt(rng.next_double());
    const double theta = 2.0 * kPi * rng.next_double();
    return to_point(rho * std::cos(theta), rho * std::sin(theta), -1.0);
}

Point3 cylinder_point(SplitMix64& rng) {
    // Lateral 4*pi, caps pi each.
    const double u = rng.next_double() * 6.0;
    if (u < 4.0) {
        const double theta = 2.0 * kPi * rng.next_double();
        const double z = 2.0 * rng.next_double() - 1.0;
        return to_point(std::cos(theta), std::sin(theta), z);
    }
    const double z = u < 5.0 ? 1.0 : -1.0;
    const double rho = std::sqrt(rng.next_double());
    const double theta = 2.0 * kPi * rng.next_double();
    return to_point(rho * std::cos(theta), rho * std::sin(theta), z);
}

Point3 torus_point(SplitMix64& rng) {
    const double theta = 2.0 * kPi * rng.next_double();
    // Surface density along the minor angle is proportional to
    // 1 + (r/R) cos(phi); rejection keeps the sampling uniform.
    double phi = 0.0;
    for (;;) {
        phi = 2.0 * kPi * rng.next_double();
        const double accept = (1.0 + kTorusMinor * std::cos(phi)) / (1.0 + kTorusMinor);
        if (rng.next_double() <= accept) break;
    }
    const double ring = 1.0 + kTorusMinor * std::cos(phi);
    return to_point(ring * std::cos(theta), ring * std::sin(theta), kTorusMinor * std::sin(phi));
}

} // namespace

PointCloud sample_primitive(ShapeKind kind, std::size_t n, std::uint64_t seed) {
    if (n < 1) {
        throw std::invalid_argument("sample_primitive: n must be >= 1");
    }
    SplitMix64 rng(seed);
    PointCloud pc;
    pc.points.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        switch (kind) {
            case ShapeKind::Sphere: pc.points.push_back(sphere_point(rng)); break;
            case ShapeKind::Cube: pc.points.push_back(cube_point(rng)); break;
            case ShapeKind::Cone: pc.points.push_back(cone_point(rng)); break;
            case ShapeKind::Cylinder: pc.points.push_back(cylinder_point(rng)); break;
            case ShapeKind::Torus: pc.points.push_back(torus_point(rng)); break;
        }
    }
    return pc;
}

Dataset build_dataset(const DatasetSpec& spec) {
    if (spec.per_class < 1 || spec.points_per_cloud < 1) {
        throw std::invalid_argument("build_dataset: per_class and points_per_cloud must be >= 1");
    }
    if (!(spec.train_fraction > 0.0) || !(spec.train_fraction < 1.0)) {
        throw std::invalid_argument("build_dataset: train_fraction must be in (0, 1)");
    }
    if (spec.jitter_sigma < 0.0) {
        throw std::invalid_argument("build_dataset: jitter_sigma must be >= 0");
    }

    Dataset ds;
    ds.labels.assign(kShapeNames.begin(), kShapeNames.end());

    for (std::size_t c = 0; c < kShapeCount; ++c) {
        const std::uint64_t class_seed = derive_seed(spec.seed, c);

        std::vector<LabeledCloud> clouds;
        clouds.reserve(spec.per_class);
        for (std::size_t i = 0; i < spec.per_class; ++i) {
            const std::uint64_t cloud_seed = derive_seed(class_seed, i);
            PointCloud pc = sample_primitive(static_cast<ShapeKind>(c), spec.points_per_cloud,
                                             derive_seed(cloud_seed, 0));
            pc = normalize_unit_sphere(pc);
            if (spec.jitter_sigma > 0.0) {
                SplitMix64 jitter(derive_seed(cloud_seed, 1));
                for (Point3& p : pc.points) {
                    p.x += static_cast<float>(spec.jitter_sigma * jitter.next_gaussian());
                    p.y += static_cast<float>(spec.jitter_sigma * jitter.next_gaussian());
                    p.z += static_cast<float>(spec.jitter_sigma * jitter.next_gaussian());
                }
            }
            clouds.push_back({std::move(pc), static_cast<int>(c)});
        }

        // Seeded shuffle decides the split; balance is exact whenever
        // train_fraction * per_class is an integer.
        std::vector<std::size_t> order(spec.per_class);
        std::iota(order.begin(), order.end(), std::size_t{0});
        SplitMix64 rng(derive_seed(spec.seed, 1000 + c));
        for (std::size_t i = 0; i + 1 < order.size(); ++i) {
            const std::size_t j = i + static_cast<std::size_t>(rng.next_below(order.size() - i));
            std::swap(order[i], order[j]);
        }
        const std::size_t n_train =
            static_cast<std::size_t>(std::llround(spec.train_fraction * spec.per_class));
        for (std::size_t i = 0; i < order.size(); ++i) {
            auto& dst = i < n_train ? ds.train : ds.test;
            dst.push_back(std::move(clouds[order[i]]));
        }
    }
    return ds;
}

} // namespace pcdream
