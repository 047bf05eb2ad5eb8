#include "pcdream/io.hpp"

#include "pcdream/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace pcdream {

namespace {

bool is_blank_or_comment(const std::string& line) {
    for (char c : line) {
        if (c == '#') return true;
        if (!std::isspace(static_cast<unsigned char>(c))) return false;
    }
    return true;
}

[[noreturn]] void parse_fail(const char* what, std::size_t line_no, const std::string& line) {
    throw std::runtime_error(std::string(what) + " at line " + std::to_string(line_no) + ": '" +
                             line + "'");
}

void append_coord_line(PointCloud& pc, const std::string& line, std::size_t line_no,
                       const char* format_name) {
    std::istringstream ls(line);
    double x, y, z;
    if (!(ls >> x >> y >> z)) {
        parse_fail((std::string(format_name) + " parse error").c_str(), line_no, line);
    }
    std::string extra;
    if (ls >> extra) {
        parse_fail((std::string(format_name) + " parse error (extra tokens)").c_str(), line_no,
                   line);
    }
    if (!std::isfinite(x) || !std::isfinite(y) || !std::isfinite(z)) {
        parse_fail((std::string(format_name) + " non-finite coordinate").c_str(), line_no, line);
    }
    pc.points.push_back(
        {static_cast<float>(x), static_cast<float>(y), static_cast<float>(z)});
}

std::string format_coord(float v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6g", static_cast<double>(v));
    return buf;
}

} // namespace

PointCloud parse_xyz(std::istream& in) {
    PointCloud pc;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (is_blank_or_comment(line)) continue;
        append_coord_line(pc, line, line_no, "xyz");
    }
    return pc;
}

PointCloud parse_xyz(std::string_view text) {
    std::istringstream in{std::string(text)};
    return parse_xyz(in);
}

std::string write_xyz(const PointCloud& pc) {
    std::string out;
    out.reserve(pc.count() * 24);
    for (const Point3& p : pc.points) {
        out += format_coord(p.x);
        out += ' ';
        out += format_coord(p.y);
        out += ' ';
        out += format_coord(p.z);
        out += '\n';
    }
    return out;
}

std::string write_ply(const PointCloud& pc) {
    std::string out;
    out += "ply\n";
    out += "format ascii 1.0\n";
    out += "element vertex " + std::to_string(pc.count()) + "\n";
    out += "property float x\n";
    out += "property float y\n";
    out += "property float z\n";
    out += "end_header\n";
    for (const Point3& p : pc.points) {
        out += format_coord(p.x);
        out += ' ';
        out += format_coord(p.y);
        out += ' ';
        out += format_coord(p.z);
        out += '\n';
    }
    return out;
}

PointCloud parse_ply(std::istream& in) {
    std::string line;
    std::size_t line_no = 0;

    if (!std::getline(in, line) || line.substr(0, 3) != "ply") {
        throw std::runtime_error("ply parse error: missing 'ply' magic");
    }
    ++line_no;

    std::size_t vertex_count = 0;
    bool have_vertex_element = false;
    bool in_vertex_element = false;
    std::vector<std::string> vertex_props;
    while (std::getline(in, line)) {
        ++line_no;
        std::istringstream ls(line);
        std::string tok;
        ls >> tok;
        if (tok == "end_header") break;
        if (tok == "comment" || tok.empty()) continue;
        if (tok == "format") {
            std::string kind;
            ls >> kind;
            if (kind != "ascii") {
                throw std::runtime_error("ply parse error: only ascii format supported");
            }
            continue;
        }
        if (tok == "element") {
            std::string name;
            long long count = -1;
            ls >> name >> count;
            in_vertex_element = (name == "vertex");
            if (in_vertex_element) {
                if (count < 0) {
                    parse_fail("ply bad vertex count", line_no, line);
                }
                vertex_count = static_cast<std::size_t>(count);
                have_vertex_element = true;
            }
            continue;
        }
        if (tok == "property" && in_vertex_element) {
            std::string type, name;
            ls >> type >> name;
            vertex_props.push_back(name);
            continue;
        }
    }
    if (!have_vertex_element) {
        throw std::runtime_error("ply parse error: no vertex element");
    }
    for (const char* required : {"x", "y", "z"}) {
        if (std::find(vertex_props.begin(), vertex_props.end(), required) == vertex_props.end()) {
            throw std::runtime_error(std::string("ply parse error: missing vertex property ") +
                                     required);
        }
    }

    PointCloud pc;
    pc.points.reserve(vertex_count);
    while (pc.count() < vertex_count) {
        if (!std::getline(in, line)) {
            throw std::runtime_error("ply parse error: truncated vertex list (expected " +
                                     std::to_string(vertex_count) + " vertices, got " +
                                     std::to_string(pc.count()) + ")");
        }
        ++line_no;
        if (is_blank_or_comment(line)) continue;
        append_coord_line(pc, line, line_no, "ply");
    }
    return pc;
}

PointCloud parse_ply(std::string_view text) {
    std::istringstream in{std::string(text)};
    return parse_ply(in);
}

TriMesh parse_off(std::istream& in) {
    std::string magic;
    if (!(in >> magic) || magic.substr(0, 3) != "OFF") {
        throw std::runtime_error("off parse error: missing OFF header");
    }

    long long nv = -1, nf = -1, ne = -1;
    // ModelNet quirk: counts may be glued to the magic ("OFF492 1000 0").
    if (magic.size() > 3) {
        std::istringstream glued(magic.substr(3));
        if (!(glued >> nv)) {
            throw std::runtime_error("off parse error: bad token after OFF: '" + magic + "'");
        }
        if (!(in >> nf >> ne)) {
            throw std::runtime_error("off parse error: missing face/edge counts");
        }
    } else {
        if (!(in >> nv >> nf >> ne)) {
            throw std::runtime_error("off parse error: missing counts (expected three integers)");
        }
    }
    if (nv < 0 || nf < 0) {
        throw std::runtime_error("off parse error: negative counts");
    }

    TriMesh mesh;
    mesh.vertices.reserve(static_cast<std::size_t>(nv));
    for (long long i = 0; i < nv; ++i) {
        double x, y, z;
        if (!(in >> x >> y >> z)) {
            throw std::runtime_error("off parse error: truncated vertex " + std::to_string(i));
        }
        if (!std::isfinite(x) || !std::isfinite(y) || !std::isfinite(z)) {
            throw std::runtime_error("off parse error: non-finite vertex " + std::to_string(i));
        }
        mesh.vertices.push_back(
            {static_cast<float>(x), static_cast<float>(y), static_cast<float>(z)});
    }

    for (long long f = 0; f < nf; ++f) {
        long long k;
        if (!(in >> k) || k < 3) {
            throw std::runtime_error("off parse error: bad vertex count in face " +
                                     std::to_string(f));
        }
        std::vector<std::uint32_t> poly(static_cast<std::size_t>(k));
        for (long long j = 0; j < k; ++j) {
            long long v;
            if (!(in >> v)) {
                throw std::runtime_error("off parse error: truncated face " + std::to_string(f));
            }
            if (v < 0 || v >= nv) {
                throw std::runtime_error("off parse error: face " + std::to_string(f) +
                                         " references vertex " + std::to_string(v) +
                                         " out of range (" + std::to_string(nv) + " vertices)");
            }
            poly[static_cast<std::size_t>(j)] = static_cast<std::uint32_t>(v);
        }
        // Fan triangulation (v0, vi, vi+1).
        for (std::size_t j = 1; j + 1 < poly.size(); ++j) {
            mesh.faces.push_back({poly[0], poly[j], poly[j + 1]});
        }
    }
    return mesh;
}

TriMesh parse_off(std::string_view text) {
    std::istringstream in{std::string(text)};
    return parse_off(in);
}

namespace {

double triangle_area(const Point3& a, const Point3& b, const Point3& c) {
    const double ux = static_cast<double>(b.x) - a.x;
    const double uy = static_cast<double>(b.y) - a.y;
    const double uz = static_cast<double>(b.z) - a.z;
    const double vx = static_cast<double>(c.x) - a.x;
    const double vy = static_cast<double>(c.y) - a.y;
    const double vz = static_cast<double>(c.z) - a.z;
    const double cx = uy * vz - uz * vy;
    const double cy = uz * vx - ux * vz;
    const double cz = ux * vy - uy * vx;
    return 0.5 * std::sqrt(cx * cx + cy * cy + cz * cz);
}

} // namespace

PointCloud sample_surface(const TriMesh& mesh, std::size_t n, std::uint64_t seed) {
    if (n < 1) {
        throw std::invalid_argument("sample_surface: n must be >= 1");
    }
    std::vector<double> cumulative;
    cumulative.reserve(mesh.faces.size());
    double total = 0.0;
    for (const auto& f : mesh.faces) {
        total += triangle_area(mesh.vertices[f[0]], mesh.vertices[f[1]], mesh.vertices[f[2]]);
        cumulative.push_back(total);
    }
    if (!(total > 0.0)) {
        throw std::invalid_argument("sample_surface: mesh has zero total surface area");
    }

    SplitMix64 rng(seed);
    PointCloud pc;
    pc.points.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double target = rng.next_double() * total;
        const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), target);
        const std::size_t face_idx = std::min(
            static_cast<std::size_t>(it - cumulative.begin()), mesh.faces.size() - 1);
        const auto& f = mesh.faces[face_idx];
        const Point3& a = mesh.vertices[f[0]];
        const Point3& b = mesh.vertices[f[1]];
        const Point3& c = mesh.vertices[f[2]];

        const double su = std::sqrt(rng.next_double());
        const double v = rng.next_double();
        const double wa = 1.0 - su;
        const double wb = su * (1.0 - v);
        const double wc = su * v;
        pc.points.push_back({static_cast<float>(wa * a.x + wb * b.x + wc * c.x),
                             static_cast<float>(wa * a.y + wb * b.y + wc * c.y),
                             static_cast<float>(wa * a.z + wb * b.z + wc * c.z)});
    }
    return pc;
}

PointCloud read_cloud_file(const std::filesystem::path& path, std::size_t mesh_points,
                           std::uint64_t seed) {
    const std::string ext = path.extension().string();
    const std::string text = read_file(path);
    if (ext == ".xyz") return parse_xyz(text);
    if (ext == ".ply") return parse_ply(text);
    if (ext == ".off") return sample_surface(parse_off(text), mesh_points, seed);
    throw std::invalid_argument("unrecognized point-cloud extension '" + ext + "' for " +
                                path.string());
}

void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw std::runtime_error("cannot open for writing: " + tmp.string());
        }
        out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
        if (!out) {
            throw std::runtime_error("write failed: " + tmp.string());
        }
    }
    std::filesystem::rename(tmp, path);
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot open: " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace pcdream
