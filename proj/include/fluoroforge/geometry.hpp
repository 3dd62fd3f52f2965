#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <algorithm>
#include <limits>

namespace fluoroforge {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

struct Ray {
    Vec3 origin;
    Vec3 direction;  // unit length
};

struct Aabb {
    Vec3 lo = Vec3::Constant(std::numeric_limits<double>::infinity());
    Vec3 hi = Vec3::Constant(-std::numeric_limits<double>::infinity());

    void extend(const Vec3& p) {
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
    }
    void extend(const Aabb& b) {
        lo = lo.cwiseMin(b.lo);
        hi = hi.cwiseMax(b.hi);
    }
    bool valid() const { return (lo.array() <= hi.array()).all(); }
    Vec3 center() const { return 0.5 * (lo + hi); }
};

// Parametric interval [t0, t1] where the infinite line intersects the box.
// Returns false on a miss.
inline bool clip_line_to_box(const Ray& ray, const Aabb& box, double& t0, double& t1) {
    t0 = -std::numeric_limits<double>::infinity();
    t1 = std::numeric_limits<double>::infinity();
    for (int a = 0; a < 3; ++a) {
        const double d = ray.direction[a];
        const double o = ray.origin[a];
        if (d == 0.0) {
            if (o < box.lo[a] || o > box.hi[a]) return false;
            continue;
        }
        double ta = (box.lo[a] - o) / d;
        double tb = (box.hi[a] - o) / d;
        if (ta > tb) std::swap(ta, tb);
        t0 = std::max(t0, ta);
        t1 = std::min(t1, tb);
        if (t0 > t1) return false;
    }
    return true;
}

// Orthonormal pair perpendicular to a unit vector.
inline void orthonormal_basis(const Vec3& n, Vec3& u, Vec3& v) {
    const Vec3 helper = std::abs(n.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
    u = n.cross(helper).normalized();
    v = n.cross(u);
}

}  // namespace fluoroforge
