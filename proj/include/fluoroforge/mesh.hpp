#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "fluoroforge/geometry.hpp"

namespace fluoroforge {

enum class ObjectKind { organ, tool, group };

const char* to_string(ObjectKind kind);
ObjectKind object_kind_from_string(const std::string& s);

using Triangle = std::array<std::uint32_t, 3>;

// Closed, consistently oriented triangle surface with outward normals.
struct SurfaceMesh {
    std::vector<Vec3> vertices;
    std::vector<Triangle> triangles;
    ObjectKind kind = ObjectKind::organ;
    int class_id = 0;
    std::string name;
    std::string description;
    std::string material;  // tools only

    Aabb bounds() const;
    // Enclosed volume via the divergence theorem; positive for outward orientation.
    double signed_volume() const;
    // Solid centroid; falls back to the vertex mean for near-zero volume.
    Vec3 centroid() const;
};

inline constexpr double kVertexMergeTolerance = 1e-6;

// Merges vertices closer than kVertexMergeTolerance, drops degenerate
// triangles, rejects non-watertight or inconsistently oriented surfaces and
// flips the mesh when its signed volume is negative. Throws GeometryError.
void finalize_mesh(SurfaceMesh& mesh);

// Binary STL or OBJ (v/f lines only), chosen by extension.
SurfaceMesh load_mesh(const std::filesystem::path& path);
SurfaceMesh read_stl(const std::filesystem::path& path);
SurfaceMesh read_obj(const std::filesystem::path& path);
void write_stl(const SurfaceMesh& mesh, const std::filesystem::path& path);
void write_obj(const SurfaceMesh& mesh, const std::filesystem::path& path);

// Rigid transform p -> rotation * p + translation.
SurfaceMesh transformed(const SurfaceMesh& mesh, const Mat3& rotation, const Vec3& translation);

SurfaceMesh make_box(const Vec3& center, const Vec3& half_extent);
SurfaceMesh make_icosphere(const Vec3& center, double radius, int subdivisions = 3);
SurfaceMesh make_cylinder(const Vec3& center, const Vec3& axis, double radius, double length, int segments = 24);

}  // namespace fluoroforge
