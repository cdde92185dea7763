#include "cfreg/cloud_io.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace cfreg {

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& msg) {
    throw std::runtime_error(path + ": " + msg);
}

std::size_t scalar_size(const std::string& type) {
    if (type == "char" || type == "uchar" || type == "int8" || type == "uint8") return 1;
    if (type == "short" || type == "ushort" || type == "int16" || type == "uint16") return 2;
    if (type == "int" || type == "uint" || type == "int32" || type == "uint32" || type == "float" ||
        type == "float32")
        return 4;
    if (type == "double" || type == "float64") return 8;
    return 0;
}

struct PlyProperty {
    std::string type;
    std::string name;
};

}  // namespace

PointCloud read_ply(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(path, "cannot open");
    std::string line;
    if (!std::getline(in, line) || line.substr(0, 3) != "ply") fail(path, "not a PLY file");

    std::string format;
    std::size_t vertex_count = 0;
    std::vector<PlyProperty> props;
    bool in_vertex = false;
    bool header_done = false;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::istringstream ls(line);
        std::string tok;
        ls >> tok;
        if (tok == "comment" || tok.empty()) continue;
        if (tok == "format") {
            ls >> format;
        } else if (tok == "element") {
            std::string name;
            std::size_t count;
            ls >> name >> count;
            in_vertex = (name == "vertex");
            if (in_vertex) vertex_count = count;
        } else if (tok == "property") {
            if (!in_vertex) continue;
            std::string type, name;
            ls >> type >> name;
            if (type == "list") fail(path, "list properties on vertex element are unsupported");
            props.push_back({type, name});
        } else if (tok == "end_header") {
            header_done = true;
            break;
        }
    }
    if (!header_done) fail(path, "missing end_header");
    if (format != "ascii" && format != "binary_little_endian")
        fail(path, "unsupported PLY format " + format);

    int ix = -1, iy = -1, iz = -1;
    for (std::size_t i = 0; i < props.size(); ++i) {
        if (props[i].name == "x") ix = static_cast<int>(i);
        if (props[i].name == "y") iy = static_cast<int>(i);
        if (props[i].name == "z") iz = static_cast<int>(i);
    }
    if (ix < 0 || iy < 0 || iz < 0) fail(path, "vertex element lacks x/y/z properties");

    PointCloud cloud;
    cloud.points.reserve(vertex_count);

    if (format == "ascii") {
        for (std::size_t v = 0; v < vertex_count; ++v) {
            std::vector<double> vals(props.size());
            for (std::size_t p = 0; p < props.size(); ++p)
                if (!(in >> vals[p])) fail(path, "truncated vertex data");
            cloud.points.emplace_back(vals[ix], vals[iy], vals[iz]);
        }
    } else {
        std::vector<std::size_t> sizes(props.size());
        std::size_t stride = 0;
        for (std::size_t p = 0; p < props.size(); ++p) {
            sizes[p] = scalar_size(props[p].type);
            if (sizes[p] == 0) fail(path, "unknown property type " + props[p].type);
            stride += sizes[p];
        }
        std::vector<char> row(stride);
        for (std::size_t v = 0; v < vertex_count; ++v) {
            if (!in.read(row.data(), static_cast<std::streamsize>(stride)))
                fail(path, "truncated vertex data");
            std::array<double, 3> xyz{};
            std::size_t off = 0;
            for (std::size_t p = 0; p < props.size(); ++p) {
                const bool want = static_cast<int>(p) == ix || static_cast<int>(p) == iy ||
                                  static_cast<int>(p) == iz;
                if (want) {
                    double val;
                    if (props[p].type == "double" || props[p].type == "float64") {
                        double d;
                        std::memcpy(&d, row.data() + off, 8);
                        val = d;
                    } else if (props[p].type == "float" || props[p].type == "float32") {
                        float f;
                        std::memcpy(&f, row.data() + off, 4);
                        val = static_cast<double>(f);
                    } else {
                        fail(path, "x/y/z must be float or double");
                    }
                    if (static_cast<int>(p) == ix) xyz[0] = val;
                    if (static_cast<int>(p) == iy) xyz[1] = val;
                    if (static_cast<int>(p) == iz) xyz[2] = val;
                }
                off += sizes[p];
            }
            cloud.points.emplace_back(xyz[0], xyz[1], xyz[2]);
        }
    }
    if (!cloud.all_finite()) fail(path, "non-finite coordinate");
    return cloud;
}

void write_ply(const std::string& path, const PointCloud& c, bool binary) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(path, "cannot open for writing");
    out << "ply\nformat " << (binary ? "binary_little_endian" : "ascii") << " 1.0\n"
        << "element vertex " << c.size() << "\n"
        << "property float x\nproperty float y\nproperty float z\nend_header\n";
    if (binary) {
        for (const auto& p : c.points) {
            float xyz[3] = {static_cast<float>(p.x()), static_cast<float>(p.y()),
                            static_cast<float>(p.z())};
            out.write(reinterpret_cast<const char*>(xyz), sizeof(xyz));
        }
    } else {
        out.precision(9);
        for (const auto& p : c.points)
            out << static_cast<float>(p.x()) << " " << static_cast<float>(p.y()) << " "
                << static_cast<float>(p.z()) << "\n";
    }
    if (!out) fail(path, "write failed");
}

PointCloud read_csv_cloud(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(path, "cannot open");
    PointCloud cloud;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream ls(line);
        double x, y, z;
        if (!(ls >> x >> y >> z))
            fail(path, "line " + std::to_string(lineno) + ": expected x,y,z");
        cloud.points.emplace_back(x, y, z);
    }
    if (!cloud.all_finite()) fail(path, "non-finite coordinate");
    return cloud;
}

void write_csv_cloud(const std::string& path, const PointCloud& c) {
    std::ofstream out(path);
    if (!out) fail(path, "cannot open for writing");
    out.precision(17);
    for (const auto& p : c.points) out << p.x() << "," << p.y() << "," << p.z() << "\n";
    if (!out) fail(path, "write failed");
}

PointCloud read_cloud(const std::string& path) {
    auto dot = path.find_last_of('.');
    std::string ext = dot == std::string::npos ? "" : path.substr(dot + 1);
    for (auto& ch : ext) ch = static_cast<char>(std::tolower(ch));
    if (ext == "ply") return read_ply(path);
    if (ext == "csv" || ext == "xyz" || ext == "txt") return read_csv_cloud(path);
    fail(path, "unknown cloud extension ." + ext);
}

RigidTransform read_pose(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(path, "cannot open");
    Eigen::Matrix4d m;
    for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c)
            if (!(in >> m(r, c))) fail(path, "expected 16 whitespace-separated values");
    return RigidTransform::from_matrix(m);
}

void write_pose(const std::string& path, const RigidTransform& t) {
    std::ofstream out(path);
    if (!out) fail(path, "cannot open for writing");
    out.precision(17);
    const Eigen::Matrix4d m = t.matrix();
    for (int r = 0; r < 4; ++r) {
        for (int c = 0; c < 4; ++c) out << m(r, c) << (c == 3 ? "" : " ");
        out << "\n";
    }
    if (!out) fail(path, "write failed");
}

}  // namespace cfreg
