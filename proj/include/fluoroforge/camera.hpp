#pragma once

#include "fluoroforge/geometry.hpp"

namespace fluoroforge {

// Patient anatomical frame in volume coordinates.
inline const Vec3 kAnterior{0.0, -1.0, 0.0};
inline const Vec3 kSuperior{0.0, 0.0, 1.0};
inline const Vec3 kLeft{1.0, 0.0, 0.0};

struct DetectorSpec {
    int width = 512;
    int height = 512;
    double pixel_size_mm = 0.8;
};

// Cone-beam C-arm: point source and a flat detector whose center lies on the
// principal ray at distance `sid` from the source. (detector_u, detector_v,
// principal ray) form a right-handed orthonormal frame.
struct CArmCamera {
    Vec3 source = Vec3::Zero();
    Vec3 detector_center = Vec3::UnitZ();
    Vec3 detector_u = Vec3::UnitX();
    Vec3 detector_v = Vec3::UnitY();
    double sid = 1.0;
    double sad = 0.5;
    double pixel_size = 1.0;
    int width = 1;
    int height = 1;

    Vec3 principal_ray() const { return (detector_center - source) / sid; }
    Vec3 isocenter() const { return source + sad * principal_ray(); }
    double cx() const { return (width - 1) / 2.0; }
    double cy() const { return (height - 1) / 2.0; }

    bool operator==(const CArmCamera&) const = default;
};

struct PixelCoord {
    double u = 0.0;
    double v = 0.0;
};

// `direction` is the principal ray (source toward detector). The detector v
// axis follows the projection of -up so that `up` points toward image row 0.
CArmCamera make_camera(const Vec3& isocenter, const Vec3& direction, double sad, double sid, const DetectorSpec& detector,
                       const Vec3& up = kSuperior);

// Throws GeometryError when a camera violates its frame invariants.
void validate_camera(const CArmCamera& cam);

// Throws GeometryError for points at or behind the source plane.
PixelCoord project_point(const CArmCamera& cam, const Vec3& p);

// Ray from the source through the detector location of pixel (u, v).
// Throws GeometryError outside [0, W) x [0, H).
Ray ray_through_pixel(const CArmCamera& cam, double u, double v);

}  // namespace fluoroforge
