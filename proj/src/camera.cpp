#include "fluoroforge/camera.hpp"

#include <cmath>
#include <string>

#include "fluoroforge/error.hpp"

namespace fluoroforge {

CArmCamera make_camera(const Vec3& isocenter, const Vec3& direction, double sad, double sid, const DetectorSpec& detector,
                       const Vec3& up) {
    if (!(sad > 0.0) || !(sid > sad)) throw GeometryError("camera requires 0 < sad < sid");
    if (detector.width < 1 || detector.height < 1 || !(detector.pixel_size_mm > 0.0)) {
        throw GeometryError("invalid detector parameters");
    }
    const Vec3 d = direction.normalized();
    Vec3 down = -(up - up.dot(d) * d);
    Vec3 u, v;
    if (down.norm() < 1e-9) {
        orthonormal_basis(d, u, v);
    } else {
        v = down.normalized();
        u = v.cross(d);
    }
    CArmCamera cam;
    cam.source = isocenter - sad * d;
    cam.detector_center = cam.source + sid * d;
    cam.detector_u = u.normalized();
    cam.detector_v = v;
    cam.sid = sid;
    cam.sad = sad;
    cam.pixel_size = detector.pixel_size_mm;
    cam.width = detector.width;
    cam.height = detector.height;
    return cam;
}

void validate_camera(const CArmCamera& cam) {
    const double tol = 1e-9;
    if (!(cam.sid > 0.0) || !(cam.pixel_size > 0.0) || cam.width < 1 || cam.height < 1) {
        throw GeometryError("camera has non-positive sid, pixel size or image dims");
    }
    if (std::abs((cam.detector_center - cam.source).norm() - cam.sid) > 1e-6) {
        throw GeometryError("detector center is not at distance sid from the source");
    }
    const Vec3 d = cam.principal_ray().normalized();
    if (std::abs(cam.detector_u.norm() - 1.0) > tol || std::abs(cam.detector_v.norm() - 1.0) > tol ||
        std::abs(cam.detector_u.dot(cam.detector_v)) > tol || std::abs(cam.detector_u.dot(d)) > tol ||
        std::abs(cam.detector_v.dot(d)) > tol) {
        throw GeometryError("detector axes are not orthonormal to the principal ray");
    }
}

PixelCoord project_point(const CArmCamera& cam, const Vec3& p) {
    const Vec3 d = cam.principal_ray();
    const Vec3 rel = p - cam.source;
    const double depth = rel.dot(d);
    if (!(depth > 0.0)) throw GeometryError("point lies at or behind the source plane; projection undefined");
    const double scale = cam.sid / depth / cam.pixel_size;
    return {cam.cx() + scale * rel.dot(cam.detector_u), cam.cy() + scale * rel.dot(cam.detector_v)};
}

Ray ray_through_pixel(const CArmCamera& cam, double u, double v) {
    if (!(u >= 0.0 && u < cam.width && v >= 0.0 && v < cam.height)) {
        throw GeometryError("pixel (" + std::to_string(u) + ", " + std::to_string(v) + ") is outside the image");
    }
    const Vec3 target = cam.detector_center + (u - cam.cx()) * cam.pixel_size * cam.detector_u +
                        (v - cam.cy()) * cam.pixel_size * cam.detector_v;
    return {cam.source, (target - cam.source).normalized()};
}

}  // namespace fluoroforge
