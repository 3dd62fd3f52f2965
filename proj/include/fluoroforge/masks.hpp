#pragma once

#include <string>
#include <vector>

#include "fluoroforge/camera.hpp"
#include "fluoroforge/image.hpp"
#include "fluoroforge/mesh.hpp"

namespace fluoroforge {

class MeshRayCaster;

// "organ:<id>", "tool:<id>" or "group:<name>".
std::string object_key(ObjectKind kind, int id);
std::string group_key(const std::string& group_name);

struct MaskEntry {
    std::string key;
    std::string name;
    ObjectKind kind = ObjectKind::organ;
    int id = 0;
    Mask mask;
};

// Per-object masks; entries may overlap arbitrarily.
struct MaskSet {
    int width = 0;
    int height = 0;
    std::vector<MaskEntry> entries;

    const MaskEntry* find(const std::string& key) const;
};

// Pixel is set iff the ray through its center has a positive chord inside
// the mesh.
Mask project_mask(const MeshRayCaster& caster, const CArmCamera& cam, int threads = 1);
Mask project_mask(const SurfaceMesh& mesh, const CArmCamera& cam, int threads = 1);

// One entry per mesh with area >= min_area_px, in input order.
MaskSet project_all(const std::vector<SurfaceMesh>& meshes, const CArmCamera& cam, std::size_t min_area_px = 0,
                    int threads = 1);

}  // namespace fluoroforge
