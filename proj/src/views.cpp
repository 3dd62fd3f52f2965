#include "fluoroforge/views.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>

#include "fluoroforge/catalog.hpp"
#include "fluoroforge/error.hpp"

namespace fluoroforge {

using json = nlohmann::json;

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

Vec3 jitter_point(Rng& rng, const Vec3& center, double half_width) {
    const double x = rng.uniform(-half_width, half_width);
    const double y = rng.uniform(-half_width, half_width);
    const double z = rng.uniform(-half_width, half_width);
    return center + Vec3(x, y, z);
}

}  // namespace

Vec3 sample_cap_direction(Rng& rng, const Vec3& axis, double half_angle_rad) {
    const Vec3 a = axis.normalized();
    const double cos_max = std::cos(half_angle_rad);
    const double u1 = rng.uniform();
    const double u2 = rng.uniform();
    const double cos_t = 1.0 - u1 * (1.0 - cos_max);
    const double sin_t = std::sqrt(std::max(0.0, 1.0 - cos_t * cos_t));
    const double phi = 2.0 * std::numbers::pi * u2;
    if (sin_t == 0.0) return a;
    Vec3 e1, e2;
    orthonormal_basis(a, e1, e2);
    return (cos_t * a + sin_t * (std::cos(phi) * e1 + std::sin(phi) * e2)).normalized();
}

CArmCamera sample_random_view(Rng& rng, const SurfaceMesh& focus_mesh, const ViewBounds& bounds,
                              const DetectorSpec& detector) {
    if (focus_mesh.vertices.empty()) throw GeometryError("focus mesh is empty");
    const Vec3 iso = jitter_point(rng, focus_mesh.centroid(), bounds.iso_jitter_mm);
    const Vec3 dir = sample_cap_direction(rng, bounds.cap_axis, bounds.cap_half_angle_deg * kDegToRad);
    const double scale = 1.0 + rng.uniform(-bounds.sid_jitter_frac, bounds.sid_jitter_frac);
    return make_camera(iso, dir, bounds.sad_mm * scale, bounds.sid_mm * scale, detector);
}

bool standard_view_applicable(const StandardViewSpec& spec, const std::vector<int>& present, const ObjectCatalog& catalog) {
    auto it = catalog.groups.find(spec.target_group);
    if (it == catalog.groups.end()) return false;
    return std::any_of(it->second.begin(), it->second.end(),
                       [&](int id) { return std::find(present.begin(), present.end(), id) != present.end(); });
}

CArmCamera sample_standard_view(const StandardViewSpec& spec, const std::vector<SurfaceMesh>& meshes,
                                const ObjectCatalog& catalog, Rng& rng, const DetectorSpec& detector) {
    auto git = catalog.groups.find(spec.target_group);
    if (git == catalog.groups.end()) {
        throw ViewUnavailable("view '" + spec.name + "': group '" + spec.target_group + "' is not in the catalog");
    }
    Aabb box;
    for (const auto& m : meshes) {
        if (m.kind != ObjectKind::organ) continue;
        if (std::find(git->second.begin(), git->second.end(), m.class_id) == git->second.end()) continue;
        box.extend(m.bounds());
    }
    if (!box.valid()) {
        throw ViewUnavailable("view '" + spec.name + "': no mesh of group '" + spec.target_group + "' is present");
    }
    const Vec3 iso = jitter_point(rng, box.center(), spec.iso_jitter_mm);
    const Vec3 dir = sample_cap_direction(rng, spec.direction, spec.rot_jitter_deg * kDegToRad);
    const double scale = 1.0 + rng.uniform(-spec.sid_jitter_frac, spec.sid_jitter_frac);
    return make_camera(iso, dir, spec.sad_mm * scale, spec.sid_mm * scale, detector);
}

std::vector<StandardViewSpec> view_catalog_from_json(const json& j) {
    std::vector<StandardViewSpec> out;
    try {
        for (const auto& e : j) {
            StandardViewSpec s;
            s.name = e.at("name").get<std::string>();
            s.target_group = e.at("target_group").get<std::string>();
            const auto d = e.at("direction").get<std::vector<double>>();
            if (d.size() != 3) throw LoadError("view '" + s.name + "': direction must have 3 components");
            s.direction = Vec3(d[0], d[1], d[2]);
            if (s.direction.norm() == 0.0) throw LoadError("view '" + s.name + "': zero direction");
            s.direction.normalize();
            s.sid_mm = e.value("sid_mm", s.sid_mm);
            s.sad_mm = e.value("sad_mm", s.sad_mm);
            s.rot_jitter_deg = e.value("rot_jitter_deg", s.rot_jitter_deg);
            s.iso_jitter_mm = e.value("iso_jitter_mm", s.iso_jitter_mm);
            s.sid_jitter_frac = e.value("sid_jitter_frac", s.sid_jitter_frac);
            if (!(s.sad_mm > 0.0 && s.sad_mm < s.sid_mm)) throw LoadError("view '" + s.name + "': need 0 < sad_mm < sid_mm");
            out.push_back(std::move(s));
        }
    } catch (const json::exception& e) {
        throw LoadError(std::string("invalid view catalog: ") + e.what());
    }
    return out;
}

std::vector<StandardViewSpec> load_view_catalog(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw LoadError("cannot open view catalog: " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw LoadError("malformed view catalog " + path.string() + ": " + e.what());
    }
    return view_catalog_from_json(j);
}

json view_catalog_to_json(const std::vector<StandardViewSpec>& views) {
    json j = json::array();
    for (const auto& s : views) {
        j.push_back({{"name", s.name},
                     {"target_group", s.target_group},
                     {"direction", {s.direction.x(), s.direction.y(), s.direction.z()}},
                     {"sid_mm", s.sid_mm},
                     {"sad_mm", s.sad_mm},
                     {"rot_jitter_deg", s.rot_jitter_deg},
                     {"iso_jitter_mm", s.iso_jitter_mm},
                     {"sid_jitter_frac", s.sid_jitter_frac}});
    }
    return j;
}

}  // namespace fluoroforge
