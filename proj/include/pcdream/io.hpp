#pragma once

#include "pcdream/point_cloud.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <string>
#include <string_view>
#include <vector>

namespace pcdream {

// Triangle mesh read from OFF files; source geometry for surface sampling.
struct TriMesh {
    std::vector<Point3> vertices;
    std::vector<std::array<std::uint32_t, 3>> faces;
};

// XYZ: one point per line, three whitespace-separated numbers. Blank lines
// and lines whose first non-space character is '#' are skipped. Errors carry
// the 1-based line number.
PointCloud parse_xyz(std::istream& in);
PointCloud parse_xyz(std::string_view text);
std::string write_xyz(const PointCloud& pc);

// ASCII PLY 1.0, vertex-only, float x/y/z properties, 6 significant digits.
std::string write_ply(const PointCloud& pc);
PointCloud parse_ply(std::istream& in);
PointCloud parse_ply(std::string_view text);

// OFF reader tolerant of the ModelNet quirk where the counts are glued to
// the magic token ("OFF492 1000 0"). Polygon faces are fan-triangulated.
TriMesh parse_off(std::istream& in);
TriMesh parse_off(std::string_view text);

// n points sampled area-weighted across triangles, uniform within each
// triangle (sqrt-of-uniform barycentric), deterministic in (mesh, n, seed).
// Throws if the mesh has zero total surface area or n < 1.
PointCloud sample_surface(const TriMesh& mesh, std::size_t n, std::uint64_t seed);

// Reads a cloud by extension: .xyz or .ply directly, .off sampled to
// `mesh_points` surface points with `seed`.
PointCloud read_cloud_file(const std::filesystem::path& path, std::size_t mesh_points,
                           std::uint64_t seed);

// Writes via a temp file in the same directory followed by a rename, so
// partially written outputs never appear under the final name.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

std::string read_file(const std::filesystem::path& path);

} // namespace pcdream
