#include "fluoroforge/mesh.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>
#include <unordered_map>

#include "fluoroforge/error.hpp"

namespace fluoroforge {

namespace fs = std::filesystem;

const char* to_string(ObjectKind kind) {
    switch (kind) {
        case ObjectKind::organ: return "organ";
        case ObjectKind::tool: return "tool";
        case ObjectKind::group: return "group";
    }
    return "organ";
}

ObjectKind object_kind_from_string(const std::string& s) {
    if (s == "organ") return ObjectKind::organ;
    if (s == "tool") return ObjectKind::tool;
    if (s == "group") return ObjectKind::group;
    throw LoadError("unknown object kind '" + s + "'");
}

Aabb SurfaceMesh::bounds() const {
    Aabb b;
    for (const auto& v : vertices) b.extend(v);
    return b;
}

double SurfaceMesh::signed_volume() const {
    double vol = 0.0;
    for (const auto& t : triangles) {
        vol += vertices[t[0]].dot(vertices[t[1]].cross(vertices[t[2]]));
    }
    return vol / 6.0;
}

Vec3 SurfaceMesh::centroid() const {
    double vol = 0.0;
    Vec3 acc = Vec3::Zero();
    for (const auto& t : triangles) {
        const Vec3& a = vertices[t[0]];
        const Vec3& b = vertices[t[1]];
        const Vec3& c = vertices[t[2]];
        const double v = a.dot(b.cross(c)) / 6.0;
        vol += v;
        acc += v * (a + b + c) / 4.0;
    }
    if (std::abs(vol) > 1e-12) return acc / vol;
    Vec3 mean = Vec3::Zero();
    for (const auto& v : vertices) mean += v;
    return vertices.empty() ? mean : Vec3(mean / double(vertices.size()));
}

namespace {

struct CellKey {
    long long x, y, z;
    bool operator==(const CellKey&) const = default;
};

struct CellHash {
    std::size_t operator()(const CellKey& k) const {
        std::size_t h = std::hash<long long>{}(k.x);
        h ^= std::hash<long long>{}(k.y) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
        h ^= std::hash<long long>{}(k.z) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
        return h;
    }
};

CellKey cell_of(const Vec3& p) {
    return {(long long)std::floor(p.x() / kVertexMergeTolerance), (long long)std::floor(p.y() / kVertexMergeTolerance),
            (long long)std::floor(p.z() / kVertexMergeTolerance)};
}

std::uint64_t edge_key(std::uint32_t a, std::uint32_t b) { return (std::uint64_t(a) << 32) | b; }

}  // namespace

void finalize_mesh(SurfaceMesh& mesh) {
    if (mesh.triangles.empty() || mesh.vertices.empty()) throw GeometryError("mesh '" + mesh.name + "' is empty");
    for (const auto& t : mesh.triangles) {
        for (auto i : t) {
            if (i >= mesh.vertices.size()) throw GeometryError("triangle index out of range in mesh '" + mesh.name + "'");
        }
    }

    // Vertex merge on a tolerance-sized grid, checking the 27 neighboring cells.
    std::unordered_map<CellKey, std::vector<std::uint32_t>, CellHash> grid;
    std::vector<Vec3> merged;
    std::vector<std::uint32_t> remap(mesh.vertices.size());
    for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
        const Vec3& p = mesh.vertices[i];
        const CellKey c = cell_of(p);
        std::int64_t found = -1;
        for (long long dx = -1; dx <= 1 && found < 0; ++dx)
            for (long long dy = -1; dy <= 1 && found < 0; ++dy)
                for (long long dz = -1; dz <= 1 && found < 0; ++dz) {
                    auto it = grid.find({c.x + dx, c.y + dy, c.z + dz});
                    if (it == grid.end()) continue;
                    for (auto idx : it->second) {
                        if ((merged[idx] - p).norm() <= kVertexMergeTolerance) {
                            found = idx;
                            break;
                        }
                    }
                }
        if (found < 0) {
            found = std::int64_t(merged.size());
            merged.push_back(p);
            grid[c].push_back(std::uint32_t(found));
        }
        remap[i] = std::uint32_t(found);
    }

    std::vector<Triangle> tris;
    tris.reserve(mesh.triangles.size());
    for (const auto& t : mesh.triangles) {
        Triangle r{remap[t[0]], remap[t[1]], remap[t[2]]};
        if (r[0] == r[1] || r[1] == r[2] || r[0] == r[2]) continue;
        const Vec3 n = (merged[r[1]] - merged[r[0]]).cross(merged[r[2]] - merged[r[0]]);
        if (n.squaredNorm() <= 1e-24) continue;
        tris.push_back(r);
    }
    if (tris.empty()) throw GeometryError("mesh '" + mesh.name + "' has no non-degenerate triangles");

    // Drop vertices no longer referenced.
    std::vector<std::int64_t> compact(merged.size(), -1);
    std::vector<Vec3> verts;
    for (auto& t : tris) {
        for (auto& i : t) {
            if (compact[i] < 0) {
                compact[i] = std::int64_t(verts.size());
                verts.push_back(merged[i]);
            }
            i = std::uint32_t(compact[i]);
        }
    }

    std::unordered_map<std::uint64_t, int> directed;
    std::unordered_map<std::uint64_t, int> undirected;
    for (const auto& t : tris) {
        for (int e = 0; e < 3; ++e) {
            const auto a = t[e], b = t[(e + 1) % 3];
            ++directed[edge_key(a, b)];
            ++undirected[edge_key(std::min(a, b), std::max(a, b))];
        }
    }
    for (const auto& [key, count] : undirected) {
        if (count != 2) {
            throw GeometryError("mesh '" + mesh.name + "' is not watertight: edge (" + std::to_string(key >> 32) + ", " +
                                std::to_string(key & 0xffffffffu) + ") is shared by " + std::to_string(count) +
                                " triangles");
        }
    }
    for (const auto& [key, count] : directed) {
        if (count != 1) throw GeometryError("mesh '" + mesh.name + "' has inconsistent triangle orientation");
    }

    mesh.vertices = std::move(verts);
    mesh.triangles = std::move(tris);
    if (mesh.signed_volume() < 0.0) {
        for (auto& t : mesh.triangles) std::swap(t[1], t[2]);
    }
}

SurfaceMesh read_stl(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw LoadError("cannot open mesh: " + path.string());
    std::vector<char> buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (buf.size() < 84) throw LoadError("malformed STL (truncated header): " + path.string());
    std::uint32_t count = 0;
    std::memcpy(&count, buf.data() + 80, 4);
    if (buf.size() != 84 + std::size_t(count) * 50) {
        throw LoadError("malformed STL (record count does not match file size): " + path.string());
    }
    SurfaceMesh mesh;
    mesh.name = path.stem().string();
    mesh.vertices.reserve(std::size_t(count) * 3);
    mesh.triangles.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        const char* rec = buf.data() + 84 + std::size_t(i) * 50 + 12;
        Triangle t{};
        for (int k = 0; k < 3; ++k) {
            float xyz[3];
            std::memcpy(xyz, rec + 12 * k, 12);
            t[k] = std::uint32_t(mesh.vertices.size());
            mesh.vertices.emplace_back(xyz[0], xyz[1], xyz[2]);
        }
        mesh.triangles.push_back(t);
    }
    return mesh;
}

SurfaceMesh read_obj(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw LoadError("cannot open mesh: " + path.string());
    SurfaceMesh mesh;
    mesh.name = path.stem().string();
    std::vector<std::array<long long, 3>> faces;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::istringstream ls(line);
        std::string tag;
        if (!(ls >> tag) || tag[0] == '#') continue;
        if (tag == "v") {
            double x, y, z;
            if (!(ls >> x >> y >> z)) throw LoadError("malformed OBJ vertex at line " + std::to_string(lineno));
            mesh.vertices.emplace_back(x, y, z);
        } else if (tag == "f") {
            std::vector<long long> idx;
            std::string tok;
            while (ls >> tok) {
                try {
                    idx.push_back(std::stoll(tok.substr(0, tok.find('/'))));
                } catch (const std::exception&) {
                    throw LoadError("malformed OBJ face at line " + std::to_string(lineno));
                }
            }
            if (idx.size() != 3) throw LoadError("OBJ face at line " + std::to_string(lineno) + " is not a triangle");
            faces.push_back({idx[0], idx[1], idx[2]});
        } else {
            throw LoadError("unsupported OBJ statement '" + tag + "' at line " + std::to_string(lineno));
        }
    }
    for (const auto& f : faces) {
        Triangle t{};
        for (int k = 0; k < 3; ++k) {
            if (f[k] < 1 || f[k] > (long long)mesh.vertices.size()) throw LoadError("OBJ face index out of range");
            t[k] = std::uint32_t(f[k] - 1);
        }
        mesh.triangles.push_back(t);
    }
    return mesh;
}

SurfaceMesh load_mesh(const fs::path& path) {
    auto ext = path.extension().string();
    for (auto& c : ext) c = char(std::tolower(c));
    SurfaceMesh mesh;
    if (ext == ".stl") {
        mesh = read_stl(path);
    } else if (ext == ".obj") {
        mesh = read_obj(path);
    } else {
        throw LoadError("unsupported mesh format: " + path.string());
    }
    try {
        finalize_mesh(mesh);
    } catch (const GeometryError& e) {
        throw LoadError(path.string() + ": " + e.what());
    }
    return mesh;
}

void write_stl(const SurfaceMesh& mesh, const fs::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw LoadError("cannot write mesh: " + path.string());
    char header[80] = {};
    std::snprintf(header, sizeof(header), "fluoroforge %s", mesh.name.c_str());
    out.write(header, 80);
    const auto count = std::uint32_t(mesh.triangles.size());
    out.write(reinterpret_cast<const char*>(&count), 4);
    for (const auto& t : mesh.triangles) {
        const Vec3& a = mesh.vertices[t[0]];
        const Vec3& b = mesh.vertices[t[1]];
        const Vec3& c = mesh.vertices[t[2]];
        Vec3 n = (b - a).cross(c - a);
        if (n.norm() > 0) n.normalize();
        float rec[12] = {float(n.x()), float(n.y()), float(n.z()), float(a.x()), float(a.y()), float(a.z()),
                         float(b.x()), float(b.y()), float(b.z()), float(c.x()), float(c.y()), float(c.z())};
        out.write(reinterpret_cast<const char*>(rec), sizeof(rec));
        const std::uint16_t attr = 0;
        out.write(reinterpret_cast<const char*>(&attr), 2);
    }
}

void write_obj(const SurfaceMesh& mesh, const fs::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw LoadError("cannot write mesh: " + path.string());
    out.precision(17);
    for (const auto& v : mesh.vertices) out << "v " << v.x() << ' ' << v.y() << ' ' << v.z() << '\n';
    for (const auto& t : mesh.triangles) out << "f " << t[0] + 1 << ' ' << t[1] + 1 << ' ' << t[2] + 1 << '\n';
}

SurfaceMesh transformed(const SurfaceMesh& mesh, const Mat3& rotation, const Vec3& translation) {
    SurfaceMesh out = mesh;
    for (auto& v : out.vertices) v = rotation * v + translation;
    if (rotation.determinant() < 0) {
        for (auto& t : out.triangles) std::swap(t[1], t[2]);
    }
    return out;
}

SurfaceMesh make_box(const Vec3& center, const Vec3& half) {
    SurfaceMesh m;
    m.name = "box";
    for (int i = 0; i < 8; ++i) {
        m.vertices.push_back(center + Vec3((i & 1) ? half.x() : -half.x(), (i & 2) ? half.y() : -half.y(),
                                           (i & 4) ? half.z() : -half.z()));
    }
    // Outward-facing quads as pairs of triangles.
    const int quads[6][4] = {{0, 2, 3, 1}, {4, 5, 7, 6}, {0, 1, 5, 4}, {2, 6, 7, 3}, {0, 4, 6, 2}, {1, 3, 7, 5}};
    for (const auto& q : quads) {
        m.triangles.push_back({std::uint32_t(q[0]), std::uint32_t(q[1]), std::uint32_t(q[2])});
        m.triangles.push_back({std::uint32_t(q[0]), std::uint32_t(q[2]), std::uint32_t(q[3])});
    }
    finalize_mesh(m);
    return m;
}

SurfaceMesh make_icosphere(const Vec3& center, double radius, int subdivisions) {
    const double t = (1.0 + std::sqrt(5.0)) / 2.0;
    std::vector<Vec3> v = {{-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0}, {0, -1, t}, {0, 1, t},
                           {0, -1, -t}, {0, 1, -t}, {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1}};
    for (auto& p : v) p.normalize();
    std::vector<Triangle> f = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11}, {1, 5, 9}, {5, 11, 4},
                               {11, 10, 2}, {10, 7, 6}, {7, 1, 8},   {3, 9, 4}, {3, 4, 2},   {3, 2, 6}, {3, 6, 8},
                               {3, 8, 9},  {4, 9, 5},  {2, 4, 11},  {6, 2, 10}, {8, 6, 7},   {9, 8, 1}};
    for (int s = 0; s < subdivisions; ++s) {
        std::map<std::pair<std::uint32_t, std::uint32_t>, std::uint32_t> mid;
        auto midpoint = [&](std::uint32_t a, std::uint32_t b) {
            auto key = std::minmax(a, b);
            auto it = mid.find(key);
            if (it != mid.end()) return it->second;
            v.push_back((v[a] + v[b]).normalized());
            const auto idx = std::uint32_t(v.size() - 1);
            mid.emplace(key, idx);
            return idx;
        };
        std::vector<Triangle> next;
        next.reserve(f.size() * 4);
        for (const auto& tri : f) {
            const auto ab = midpoint(tri[0], tri[1]);
            const auto bc = midpoint(tri[1], tri[2]);
            const auto ca = midpoint(tri[2], tri[0]);
            next.push_back({tri[0], ab, ca});
            next.push_back({tri[1], bc, ab});
            next.push_back({tri[2], ca, bc});
            next.push_back({ab, bc, ca});
        }
        f = std::move(next);
    }
    SurfaceMesh m;
    m.name = "sphere";
    for (const auto& p : v) m.vertices.push_back(center + radius * p);
    m.triangles = std::move(f);
    finalize_mesh(m);
    return m;
}

SurfaceMesh make_cylinder(const Vec3& center, const Vec3& axis, double radius, double length, int segments) {
    Vec3 n = axis.normalized();
    Vec3 u, w;
    orthonormal_basis(n, u, w);
    SurfaceMesh m;
    m.name = "cylinder";
    const Vec3 bottom = center - 0.5 * length * n;
    const Vec3 top = center + 0.5 * length * n;
    for (int i = 0; i < segments; ++i) {
        const double a = 2.0 * std::numbers::pi * i / segments;
        const Vec3 r = radius * (std::cos(a) * u + std::sin(a) * w);
        m.vertices.push_back(bottom + r);
        m.vertices.push_back(top + r);
    }
    const auto cb = std::uint32_t(m.vertices.size());
    m.vertices.push_back(bottom);
    const auto ct = std::uint32_t(m.vertices.size());
    m.vertices.push_back(top);
    for (int i = 0; i < segments; ++i) {
        const auto j = (i + 1) % segments;
        const auto b0 = std::uint32_t(2 * i), t0 = std::uint32_t(2 * i + 1);
        const auto b1 = std::uint32_t(2 * j), t1 = std::uint32_t(2 * j + 1);
        m.triangles.push_back({b0, b1, t1});
        m.triangles.push_back({b0, t1, t0});
        m.triangles.push_back({cb, b1, b0});
        m.triangles.push_back({ct, t0, t1});
    }
    finalize_mesh(m);
    return m;
}

}  // namespace fluoroforge
