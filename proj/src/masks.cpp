#include "fluoroforge/masks.hpp"

#include <algorithm>
#include <cmath>

#include "fluoroforge/parallel.hpp"
#include "fluoroforge/raycast.hpp"

namespace fluoroforge {

std::string object_key(ObjectKind kind, int id) { return std::string(to_string(kind)) + ":" + std::to_string(id); }

std::string group_key(const std::string& group_name) { return "group:" + group_name; }

const MaskEntry* MaskSet::find(const std::string& key) const {
    for (const auto& e : entries) {
        if (e.key == key) return &e;
    }
    return nullptr;
}

namespace {

struct PixelRect {
    int u0, u1, v0, v1;  // inclusive
};

// Conservative pixel rectangle covering the projected mesh bounding box.
PixelRect footprint(const Aabb& box, const CArmCamera& cam) {
    const PixelRect full{0, cam.width - 1, 0, cam.height - 1};
    const Vec3 d = cam.principal_ray();
    double umin = 1e300, umax = -1e300, vmin = 1e300, vmax = -1e300;
    for (int c = 0; c < 8; ++c) {
        const Vec3 p((c & 1) ? box.hi.x() : box.lo.x(), (c & 2) ? box.hi.y() : box.lo.y(),
                     (c & 4) ? box.hi.z() : box.lo.z());
        if ((p - cam.source).dot(d) <= 1e-6) return full;
        const auto px = project_point(cam, p);
        umin = std::min(umin, px.u);
        umax = std::max(umax, px.u);
        vmin = std::min(vmin, px.v);
        vmax = std::max(vmax, px.v);
    }
    PixelRect r;
    r.u0 = int(std::max(0.0, std::floor(umin) - 2));
    r.v0 = int(std::max(0.0, std::floor(vmin) - 2));
    r.u1 = int(std::min(double(cam.width - 1), std::ceil(umax) + 2));
    r.v1 = int(std::min(double(cam.height - 1), std::ceil(vmax) + 2));
    return r;
}

}  // namespace

Mask project_mask(const MeshRayCaster& caster, const CArmCamera& cam, int threads) {
    validate_camera(cam);
    Mask mask(cam.width, cam.height, 0);
    const PixelRect r = footprint(caster.bounds(), cam);
    if (r.u0 > r.u1 || r.v0 > r.v1) return mask;
    parallel_for(r.v1 - r.v0 + 1, threads, [&](int row) {
        const int v = r.v0 + row;
        for (int u = r.u0; u <= r.u1; ++u) {
            if (caster.path_length(ray_through_pixel(cam, u, v)) > 0.0) mask.at(u, v) = 1;
        }
    });
    return mask;
}

Mask project_mask(const SurfaceMesh& mesh, const CArmCamera& cam, int threads) {
    return project_mask(MeshRayCaster(mesh), cam, threads);
}

MaskSet project_all(const std::vector<SurfaceMesh>& meshes, const CArmCamera& cam, std::size_t min_area_px,
                    int threads) {
    MaskSet set;
    set.width = cam.width;
    set.height = cam.height;
    for (const auto& m : meshes) {
        Mask mask = project_mask(m, cam, threads);
        if (mask.area() < min_area_px) continue;
        set.entries.push_back({object_key(m.kind, m.class_id), m.name, m.kind, m.class_id, std::move(mask)});
    }
    return set;
}

}  // namespace fluoroforge
