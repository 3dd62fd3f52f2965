#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "fluoroforge/mesh.hpp"
#include "fluoroforge/volume.hpp"

namespace fluoroforge {

// Cube of water (HU 0) with the given edge centered at the origin, surrounded
// by `padding_mm` of air (HU -1000). Edge and padding should be multiples of
// the spacing. Voxels inside the cube carry label `label_id`.
CtVolume make_water_cube_phantom(double edge_mm = 100.0, double spacing_mm = 1.0, double padding_mm = 10.0,
                                 std::uint16_t label_id = 5);

// Coarse synthetic torso: soft-tissue body with labeled lungs, heart, liver,
// spleen, stomach, kidneys, lumbar and lower thoracic vertebrae, sacrum, hip
// bones and proximal femurs, using the shipped catalog's class ids.
// The seed perturbs organ sizes and positions.
CtVolume make_torso_phantom(std::uint64_t seed, double spacing_mm = 4.0);

// Surgical tool meshes for the phantom tool library: (file stem, mesh).
std::vector<std::pair<std::string, SurfaceMesh>> make_phantom_tools();

}  // namespace fluoroforge
