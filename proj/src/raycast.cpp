#include "fluoroforge/raycast.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fluoroforge/error.hpp"

namespace fluoroforge {

RayShear::RayShear(const Ray& ray) : origin(ray.origin) {
    const Vec3& d = ray.direction;
    kz = 0;
    if (std::abs(d.y()) > std::abs(d[kz])) kz = 1;
    if (std::abs(d.z()) > std::abs(d[kz])) kz = 2;
    kx = (kz + 1) % 3;
    ky = (kx + 1) % 3;
    if (d[kz] < 0.0) std::swap(kx, ky);
    sx = d[kx] / d[kz];
    sy = d[ky] / d[kz];
    sz = 1.0 / d[kz];
}

namespace {

int edge_sign(double e, double px, double py, double qx, double qy) {
    if (e > 0.0) return 1;
    if (e < 0.0) return -1;
    const double dx = qx - px;
    const double dy = qy - py;
    return (dy > 0.0 || (dy == 0.0 && dx > 0.0)) ? 1 : -1;
}

}  // namespace

bool intersect_line_triangle(const RayShear& s, const Vec3& a, const Vec3& b, const Vec3& c, double& t) {
    const Vec3 A = a - s.origin;
    const Vec3 B = b - s.origin;
    const Vec3 C = c - s.origin;
    const double ax = A[s.kx] - s.sx * A[s.kz];
    const double ay = A[s.ky] - s.sy * A[s.kz];
    const double bx = B[s.kx] - s.sx * B[s.kz];
    const double by = B[s.ky] - s.sy * B[s.kz];
    const double cx = C[s.kx] - s.sx * C[s.kz];
    const double cy = C[s.ky] - s.sy * C[s.kz];

    const double U = cx * by - cy * bx;  // edge b -> c
    const double V = ax * cy - ay * cx;  // edge c -> a
    const double W = bx * ay - by * ax;  // edge a -> b

    const int su = edge_sign(U, bx, by, cx, cy);
    const int sv = edge_sign(V, cx, cy, ax, ay);
    const int sw = edge_sign(W, ax, ay, bx, by);
    if (su != sv || sv != sw) return false;

    const double det = U + V + W;
    if (det == 0.0) return false;
    const double az = s.sz * A[s.kz];
    const double bz = s.sz * B[s.kz];
    const double cz = s.sz * C[s.kz];
    t = (U * az + V * bz + W * cz) / det;
    return std::isfinite(t);
}

double interior_length(const std::vector<double>& crossings, const std::string& mesh_name) {
    if (crossings.size() % 2 != 0) {
        throw GeometryError("odd crossing count (" + std::to_string(crossings.size()) + ") against mesh '" + mesh_name +
                            "'; surface is not watertight along this ray");
    }
    double length = 0.0;
    for (std::size_t i = 0; i < crossings.size(); i += 2) {
        const double t0 = std::max(crossings[i], 0.0);
        const double t1 = crossings[i + 1];
        if (t1 > t0) length += t1 - t0;
    }
    return length;
}

double ray_mesh_path_length(const SurfaceMesh& mesh, const Ray& ray) {
    const RayShear shear(ray);
    std::vector<double> hits;
    for (const auto& tri : mesh.triangles) {
        double t;
        if (intersect_line_triangle(shear, mesh.vertices[tri[0]], mesh.vertices[tri[1]], mesh.vertices[tri[2]], t)) {
            hits.push_back(t);
        }
    }
    std::sort(hits.begin(), hits.end());
    return interior_length(hits, mesh.name);
}

MeshRayCaster::MeshRayCaster(SurfaceMesh mesh) : mesh_(std::move(mesh)) {
    if (mesh_.triangles.empty()) throw GeometryError("cannot ray cast an empty mesh");
    std::vector<Vec3> centroids;
    centroids.reserve(mesh_.triangles.size());
    for (const auto& t : mesh_.triangles) {
        centroids.push_back((mesh_.vertices[t[0]] + mesh_.vertices[t[1]] + mesh_.vertices[t[2]]) / 3.0);
    }
    order_.resize(mesh_.triangles.size());
    std::iota(order_.begin(), order_.end(), 0);
    nodes_.reserve(2 * mesh_.triangles.size() / 4 + 1);
    build(0, int(order_.size()), centroids);
}

int MeshRayCaster::build(int first, int count, std::vector<Vec3>& centroids) {
    const int index = int(nodes_.size());
    nodes_.emplace_back();
    Aabb box, cbox;
    for (int i = first; i < first + count; ++i) {
        const auto& t = mesh_.triangles[order_[i]];
        for (auto v : t) box.extend(mesh_.vertices[v]);
        cbox.extend(centroids[order_[i]]);
    }
    // Pad so that lines grazing a face are never culled before the exact test.
    const double pad = 1e-9 * std::max(1.0, (box.hi - box.lo).maxCoeff());
    box.lo.array() -= pad;
    box.hi.array() += pad;
    nodes_[index].box = box;

    if (count <= 4) {
        nodes_[index].first = first;
        nodes_[index].count = count;
        return index;
    }
    int axis = 0;
    const Vec3 ext = cbox.hi - cbox.lo;
    if (ext.y() > ext[axis]) axis = 1;
    if (ext.z() > ext[axis]) axis = 2;
    const int mid = first + count / 2;
    std::nth_element(order_.begin() + first, order_.begin() + mid, order_.begin() + first + count, [&](int a, int b) {
        if (centroids[a][axis] != centroids[b][axis]) return centroids[a][axis] < centroids[b][axis];
        return a < b;
    });
    const int left = build(first, mid - first, centroids);
    const int right = build(mid, first + count - mid, centroids);
    nodes_[index].left = left;
    nodes_[index].right = right;
    return index;
}

std::vector<double> MeshRayCaster::crossings(const Ray& ray) const {
    const RayShear shear(ray);
    std::vector<double> hits;
    int stack[128];
    int top = 0;
    stack[top++] = 0;
    while (top > 0) {
        const Node& n = nodes_[stack[--top]];
        double t0, t1;
        if (!clip_line_to_box(ray, n.box, t0, t1)) continue;
        if (n.left < 0) {
            for (int i = n.first; i < n.first + n.count; ++i) {
                const auto& tri = mesh_.triangles[order_[i]];
                double t;
                if (intersect_line_triangle(shear, mesh_.vertices[tri[0]], mesh_.vertices[tri[1]], mesh_.vertices[tri[2]],
                                            t)) {
                    hits.push_back(t);
                }
            }
        } else {
            stack[top++] = n.left;
            stack[top++] = n.right;
        }
    }
    std::sort(hits.begin(), hits.end());
    return hits;
}

double MeshRayCaster::path_length(const Ray& ray) const { return interior_length(crossings(ray), mesh_.name); }

}  // namespace fluoroforge
