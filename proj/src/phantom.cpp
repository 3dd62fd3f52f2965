#include "fluoroforge/phantom.hpp"

#include <cmath>
#include <functional>

#include "fluoroforge/rng.hpp"

namespace fluoroforge {

CtVolume make_water_cube_phantom(double edge_mm, double spacing_mm, double padding_mm, std::uint16_t label_id) {
    CtVolume vol;
    vol.id = "water_cube";
    const int n = int(std::lround((edge_mm + 2.0 * padding_mm) / spacing_mm));
    vol.dims = {n, n, n};
    vol.spacing = Vec3::Constant(spacing_mm);
    vol.origin = Vec3::Constant(-(n - 1) * spacing_mm / 2.0);
    vol.hu.assign(vol.voxel_count(), -1000);
    vol.labels.assign(vol.voxel_count(), 0);
    const double half = edge_mm / 2.0;
    for (int k = 0; k < n; ++k)
        for (int j = 0; j < n; ++j)
            for (int i = 0; i < n; ++i) {
                const Vec3 c = vol.voxel_center(i, j, k);
                if ((c.array().abs() < half).all()) {
                    vol.hu[vol.index(i, j, k)] = 0;
                    vol.labels[vol.index(i, j, k)] = label_id;
                }
            }
    return vol;
}

namespace {

struct Shape {
    std::uint16_t label;
    std::int16_t hu;
    std::function<bool(const Vec3&)> inside;
};

std::function<bool(const Vec3&)> ellipsoid(const Vec3& c, const Vec3& r) {
    return [=](const Vec3& p) { return ((p - c).cwiseQuotient(r)).squaredNorm() <= 1.0; };
}

std::function<bool(const Vec3&)> box(const Vec3& c, const Vec3& half) {
    return [=](const Vec3& p) { return ((p - c).array().abs() <= half.array()).all(); };
}

std::function<bool(const Vec3&)> z_cylinder(const Vec3& c, double radius, double half_len) {
    return [=](const Vec3& p) {
        const Vec3 d = p - c;
        return d.x() * d.x() + d.y() * d.y() <= radius * radius && std::abs(d.z()) <= half_len;
    };
}

}  // namespace

CtVolume make_torso_phantom(std::uint64_t seed, double spacing_mm) {
    Rng rng(seed);
    auto jit = [&](double s) { return rng.uniform(-s, s); };
    const double scale = 1.0 + jit(0.06);

    CtVolume vol;
    vol.id = "torso_" + std::to_string(seed);
    const Vec3 lo(-170, -120, -260), hi(170, 120, 250);
    for (int a = 0; a < 3; ++a) vol.dims[a] = int(std::floor((hi[a] - lo[a]) / spacing_mm)) + 1;
    vol.spacing = Vec3::Constant(spacing_mm);
    vol.origin = lo;
    vol.hu.assign(vol.voxel_count(), -1000);
    vol.labels.assign(vol.voxel_count(), 0);

    auto S = [&](double x, double y, double z) -> Vec3 { return Vec3(x + jit(5), y + jit(5), z + jit(5)) * scale; };
    auto R = [&](double x, double y, double z) -> Vec3 { return Vec3(x, y, z) * scale * (1.0 + jit(0.08)); };

    std::vector<Shape> shapes;
    // Body outline: elliptic cylinder of soft tissue.
    const double bx = 155 * scale, by = 105 * scale;
    shapes.push_back({0, 30, [=](const Vec3& p) {
                          return (p.x() * p.x()) / (bx * bx) + (p.y() * p.y()) / (by * by) <= 1.0 && p.z() > -250 &&
                                 p.z() < 240;
                      }});
    const Vec3 ll = S(70, 0, 130), rl = S(-70, 0, 130);
    const Vec3 lr = R(50, 65, 90), rr = R(55, 65, 95);
    shapes.push_back({10, -800, [=](const Vec3& p) { return ellipsoid(ll, lr)(p) && p.z() >= ll.z(); }});
    shapes.push_back({11, -800, [=](const Vec3& p) { return ellipsoid(ll, lr)(p) && p.z() < ll.z(); }});
    shapes.push_back({12, -800, [=](const Vec3& p) { return ellipsoid(rl, rr)(p) && p.z() >= rl.z() + 20; }});
    shapes.push_back({13, -800, [=](const Vec3& p) {
                          return ellipsoid(rl, rr)(p) && p.z() < rl.z() + 20 && p.z() >= rl.z() - 20 && p.y() < rl.y();
                      }});
    shapes.push_back({14, -800, [=](const Vec3& p) {
                          return ellipsoid(rl, rr)(p) && (p.z() < rl.z() - 20 || (p.z() < rl.z() + 20 && p.y() >= rl.y()));
                      }});
    shapes.push_back({51, 45, ellipsoid(S(10, -35, 95), R(45, 40, 45))});
    shapes.push_back({5, 60, ellipsoid(S(-55, -10, 10), R(75, 55, 45))});
    shapes.push_back({1, 50, ellipsoid(S(85, 25, 25), R(28, 24, 38))});
    shapes.push_back({6, 25, ellipsoid(S(45, -45, 40), R(38, 28, 32))});
    shapes.push_back({3, 35, ellipsoid(S(70, 50, -20), R(24, 20, 45))});
    shapes.push_back({2, 35, ellipsoid(S(-70, 50, -30), R(24, 20, 45))});
    // Vertebral column: L5 (27) .. L1 (31), T12 (32) .. T8 (36), stacked upward.
    const Vec3 spine = S(0, 65, 0);
    for (int v = 0; v < 10; ++v) {
        const double zc = -110 * scale + v * 30.0 * scale;
        shapes.push_back({std::uint16_t(27 + v), 700, box(Vec3(spine.x(), spine.y(), zc), Vec3(20, 16, 12) * scale)});
    }
    shapes.push_back({25, 650, ellipsoid(S(0, 60, -160), R(35, 22, 35))});
    shapes.push_back({77, 600, ellipsoid(S(85, 30, -160), R(40, 45, 45))});
    shapes.push_back({78, 600, ellipsoid(S(-85, 30, -160), R(40, 45, 45))});
    shapes.push_back({75, 900, z_cylinder(S(100, 15, -225), 17 * scale, 30)});
    shapes.push_back({76, 900, z_cylinder(S(-100, 15, -225), 17 * scale, 30)});

    for (int k = 0; k < vol.dims[2]; ++k)
        for (int j = 0; j < vol.dims[1]; ++j)
            for (int i = 0; i < vol.dims[0]; ++i) {
                const Vec3 p = vol.voxel_center(i, j, k);
                const auto idx = vol.index(i, j, k);
                for (const auto& s : shapes) {
                    if (s.inside(p)) {
                        vol.hu[idx] = s.hu;
                        vol.labels[idx] = s.label;
                    }
                }
            }
    return vol;
}

std::vector<std::pair<std::string, SurfaceMesh>> make_phantom_tools() {
    std::vector<std::pair<std::string, SurfaceMesh>> tools;
    tools.emplace_back("cannulated_screw", make_cylinder(Vec3::Zero(), Vec3::UnitZ(), 3.5, 70.0, 16));
    tools.emplace_back("kirschner_wire", make_cylinder(Vec3::Zero(), Vec3::UnitZ(), 1.0, 150.0, 12));
    tools.emplace_back("bone_plate", make_box(Vec3::Zero(), Vec3(6.0, 45.0, 1.5)));
    tools.emplace_back("catheter_tip", make_cylinder(Vec3::Zero(), Vec3::UnitZ(), 2.0, 120.0, 12));
    tools.emplace_back("acetabular_cup", make_icosphere(Vec3::Zero(), 24.0, 2));
    return tools;
}

}  // namespace fluoroforge
