#include "fluoroforge/surfacing.hpp"

#include <unordered_map>

#include "fluoroforge/catalog.hpp"
#include "fluoroforge/error.hpp"

namespace fluoroforge {

namespace {

// Kuhn split of the unit cube into six tetrahedra sharing the 0-7 diagonal.
// Corner bit 0 = x, bit 1 = y, bit 2 = z.
constexpr int kTets[6][4] = {{0, 1, 3, 7}, {0, 1, 5, 7}, {0, 2, 3, 7}, {0, 2, 6, 7}, {0, 4, 5, 7}, {0, 4, 6, 7}};

}  // namespace

SurfaceMesh voxelize_labels_to_meshes(const CtVolume& vol, int class_id, const ObjectCatalog* catalog) {
    if (!vol.has_labels()) throw LoadError("volume '" + vol.id + "' has no label field");
    std::size_t count = 0;
    for (auto l : vol.labels) count += (l == class_id);
    if (count == 0) throw LoadError("class " + std::to_string(class_id) + " is absent from volume '" + vol.id + "'");
    if (count < kMinLabelVoxels) {
        throw LoadError("class " + std::to_string(class_id) + " region is too small (" + std::to_string(count) +
                        " voxels, need at least " + std::to_string(kMinLabelVoxels) + ")");
    }

    // Padded lattice: grid point (i, j, k) maps to voxel (i - 1, j - 1, k - 1).
    const int nx = vol.dims[0] + 2, ny = vol.dims[1] + 2, nz = vol.dims[2] + 2;
    auto inside = [&](int i, int j, int k) -> bool {
        if (i < 1 || j < 1 || k < 1 || i > vol.dims[0] || j > vol.dims[1] || k > vol.dims[2]) return false;
        return vol.labels[vol.index(i - 1, j - 1, k - 1)] == class_id;
    };
    auto lattice_id = [&](int i, int j, int k) {
        return std::uint64_t(i) + std::uint64_t(nx) * (std::uint64_t(j) + std::uint64_t(ny) * std::uint64_t(k));
    };
    auto position = [&](int i, int j, int k) { return vol.voxel_center(i - 1, j - 1, k - 1); };

    // Restrict the sweep to the label's bounding box plus one cell.
    int lo[3] = {nx, ny, nz}, hi[3] = {0, 0, 0};
    for (int k = 0; k < vol.dims[2]; ++k)
        for (int j = 0; j < vol.dims[1]; ++j)
            for (int i = 0; i < vol.dims[0]; ++i) {
                if (vol.labels[vol.index(i, j, k)] != class_id) continue;
                const int p[3] = {i + 1, j + 1, k + 1};
                for (int a = 0; a < 3; ++a) {
                    lo[a] = std::min(lo[a], p[a] - 1);
                    hi[a] = std::max(hi[a], p[a] + 1);
                }
            }

    SurfaceMesh mesh;
    mesh.kind = ObjectKind::organ;
    mesh.class_id = class_id;
    mesh.name = "class_" + std::to_string(class_id);
    if (catalog) {
        const auto& e = catalog->organ(class_id);
        mesh.name = e.name;
        mesh.description = e.description;
    }

    struct PairHash {
        std::size_t operator()(const std::pair<std::uint64_t, std::uint64_t>& p) const {
            return std::hash<std::uint64_t>{}(p.first * 0x9e3779b97f4a7c15ULL ^ p.second);
        }
    };
    std::unordered_map<std::pair<std::uint64_t, std::uint64_t>, std::uint32_t, PairHash> edge_vertex;

    struct Corner {
        int i, j, k;
        bool in;
        std::uint64_t id;
        Vec3 p;
    };
    auto crossing = [&](const Corner& a, const Corner& b) {
        auto key = std::minmax(a.id, b.id);
        auto it = edge_vertex.find(key);
        if (it != edge_vertex.end()) return it->second;
        const auto idx = std::uint32_t(mesh.vertices.size());
        mesh.vertices.push_back(0.5 * (a.p + b.p));
        edge_vertex.emplace(key, idx);
        return idx;
    };
    auto emit = [&](std::uint32_t a, std::uint32_t b, std::uint32_t c, const Vec3& in_c, const Vec3& out_c) {
        const Vec3 n = (mesh.vertices[b] - mesh.vertices[a]).cross(mesh.vertices[c] - mesh.vertices[a]);
        if (n.dot(out_c - in_c) >= 0) {
            mesh.triangles.push_back({a, b, c});
        } else {
            mesh.triangles.push_back({a, c, b});
        }
    };

    for (int k = lo[2]; k < hi[2]; ++k)
        for (int j = lo[1]; j < hi[1]; ++j)
            for (int i = lo[0]; i < hi[0]; ++i) {
                Corner c[8];
                int n_in = 0;
                for (int b = 0; b < 8; ++b) {
                    const int ci = i + (b & 1), cj = j + ((b >> 1) & 1), ck = k + ((b >> 2) & 1);
                    c[b] = {ci, cj, ck, inside(ci, cj, ck), lattice_id(ci, cj, ck), position(ci, cj, ck)};
                    n_in += c[b].in;
                }
                if (n_in == 0 || n_in == 8) continue;
                for (const auto& tet : kTets) {
                    const Corner* ins[4];
                    const Corner* outs[4];
                    int ni = 0, no = 0;
                    for (int v : tet) {
                        if (c[v].in) {
                            ins[ni++] = &c[v];
                        } else {
                            outs[no++] = &c[v];
                        }
                    }
                    if (ni == 0 || no == 0) continue;
                    Vec3 in_c = Vec3::Zero(), out_c = Vec3::Zero();
                    for (int a = 0; a < ni; ++a) in_c += ins[a]->p / ni;
                    for (int a = 0; a < no; ++a) out_c += outs[a]->p / no;
                    if (ni == 1) {
                        emit(crossing(*ins[0], *outs[0]), crossing(*ins[0], *outs[1]), crossing(*ins[0], *outs[2]), in_c,
                             out_c);
                    } else if (no == 1) {
                        emit(crossing(*ins[0], *outs[0]), crossing(*ins[1], *outs[0]), crossing(*ins[2], *outs[0]), in_c,
                             out_c);
                    } else {
                        const auto a = crossing(*ins[0], *outs[0]);
                        const auto b = crossing(*ins[0], *outs[1]);
                        const auto d = crossing(*ins[1], *outs[1]);
                        const auto e = crossing(*ins[1], *outs[0]);
                        emit(a, b, d, in_c, out_c);
                        emit(a, d, e, in_c, out_c);
                    }
                }
            }
    finalize_mesh(mesh);
    return mesh;
}

}  // namespace fluoroforge
