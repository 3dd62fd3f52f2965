#pragma once

#include <string>
#include <vector>

#include "fluoroforge/mesh.hpp"

namespace fluoroforge {

// Shear-transformed ray used by the watertight triangle test.
struct RayShear {
    Vec3 origin;
    int kx = 0, ky = 1, kz = 2;
    double sx = 0.0, sy = 0.0, sz = 1.0;

    explicit RayShear(const Ray& ray);
};

// Line/triangle test in the ray's sheared frame. Edge functions of an edge
// shared by two triangles are exact negatives of each other; zero values are
// resolved by a top-left style rule on the projected edge direction, so a line
// through a shared edge or vertex registers on exactly one of the front-facing
// triangles. `t` is the line parameter of the hit (may be negative).
bool intersect_line_triangle(const RayShear& shear, const Vec3& a, const Vec3& b, const Vec3& c, double& t);

// BVH-accelerated crossing queries against one watertight mesh.
class MeshRayCaster {
public:
    explicit MeshRayCaster(SurfaceMesh mesh);

    // Sorted line parameters of every surface crossing along the infinite line.
    std::vector<double> crossings(const Ray& ray) const;
    // Length (mm) of the ray's t >= 0 part inside the mesh.
    // Throws GeometryError if the crossing count is odd.
    double path_length(const Ray& ray) const;

    const SurfaceMesh& mesh() const { return mesh_; }
    const Aabb& bounds() const { return nodes_.front().box; }

private:
    struct Node {
        Aabb box;
        int left = -1;  // child index, or -1 for a leaf
        int right = -1;
        int first = 0;  // leaf triangle range into order_
        int count = 0;
    };
    int build(int first, int count, std::vector<Vec3>& centroids);

    SurfaceMesh mesh_;
    std::vector<Node> nodes_;
    std::vector<int> order_;
};

// Pairs sorted crossings into entry/exit intervals and sums their t >= 0 part.
double interior_length(const std::vector<double>& crossings, const std::string& mesh_name);

// Unaccelerated path length; tests every triangle.
double ray_mesh_path_length(const SurfaceMesh& mesh, const Ray& ray);

}  // namespace fluoroforge
