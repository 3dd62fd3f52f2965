#pragma once

#include "fluoroforge/mesh.hpp"
#include "fluoroforge/volume.hpp"

namespace fluoroforge {

struct ObjectCatalog;

inline constexpr std::size_t kMinLabelVoxels = 8;

// Extracts the 0.5 iso-surface of the binary field (labels == class_id) as a
// watertight mesh in world coordinates. The field is zero-padded so regions
// touching the volume border still close. Name and description come from the
// catalog when one is supplied.
SurfaceMesh voxelize_labels_to_meshes(const CtVolume& vol, int class_id, const ObjectCatalog* catalog = nullptr);

}  // namespace fluoroforge
