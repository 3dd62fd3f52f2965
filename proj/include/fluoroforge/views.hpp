#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fluoroforge/camera.hpp"
#include "fluoroforge/mesh.hpp"
#include "fluoroforge/rng.hpp"

namespace fluoroforge {

struct ObjectCatalog;

struct StandardViewSpec {
    std::string name;
    std::string target_group;
    Vec3 direction = -kAnterior;  // principal ray in the anatomical frame
    double sid_mm = 1020.0;
    double sad_mm = 700.0;
    double rot_jitter_deg = 10.0;
    double iso_jitter_mm = 25.0;
    double sid_jitter_frac = 0.05;
};

struct ViewBounds {
    double cap_half_angle_deg = 60.0;
    Vec3 cap_axis = kAnterior;
    double iso_jitter_mm = 25.0;
    double sid_mm = 1020.0;
    double sad_mm = 700.0;
    double sid_jitter_frac = 0.05;
};

// Direction drawn uniformly from the spherical cap of the given half-angle
// around `axis`, by inverting the CDF of cos(angle).
Vec3 sample_cap_direction(Rng& rng, const Vec3& axis, double half_angle_rad);

CArmCamera sample_random_view(Rng& rng, const SurfaceMesh& focus_mesh, const ViewBounds& bounds,
                              const DetectorSpec& detector);

// Meshes are the organ meshes present in the anatomy. Throws ViewUnavailable
// when none of them belongs to the target group.
CArmCamera sample_standard_view(const StandardViewSpec& spec, const std::vector<SurfaceMesh>& meshes,
                                const ObjectCatalog& catalog, Rng& rng, const DetectorSpec& detector);

bool standard_view_applicable(const StandardViewSpec& spec, const std::vector<int>& present_class_ids,
                              const ObjectCatalog& catalog);

std::vector<StandardViewSpec> load_view_catalog(const std::filesystem::path& path);
std::vector<StandardViewSpec> view_catalog_from_json(const nlohmann::json& j);
nlohmann::json view_catalog_to_json(const std::vector<StandardViewSpec>& views);

}  // namespace fluoroforge
