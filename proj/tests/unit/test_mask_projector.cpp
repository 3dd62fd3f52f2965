#include "doctest.h"

#include <cmath>
#include <numbers>

#include "fluoroforge/camera.hpp"
#include "fluoroforge/masks.hpp"
#include "fluoroforge/mesh.hpp"
#include "fluoroforge/surfacing.hpp"
#include "fluoroforge/volume.hpp"
#include "projection_oracles.hpp"
#include "support.hpp"

using namespace fluoroforge;
using testing::on_silhouette;
using testing::random_blob_mesh;
using testing::ray_meets_interior;

namespace {

CArmCamera test_camera(int size = 101, double pixel = 1.0) {
    return make_camera(Vec3::Zero(), -kAnterior, 700, 1000, DetectorSpec{size, size, pixel});
}

SurfaceMesh tagged(SurfaceMesh m, int id) {
    m.class_id = id;
    m.name = "object " + std::to_string(id);
    return m;
}

}  // namespace

TEST_CASE("sphere silhouette matches cone tangency") {
    const auto cam = test_camera();
    const auto sphere = make_icosphere(cam.isocenter(), 20.0, 4);
    const Mask m = project_mask(sphere, cam);
    const double expected = 20.0 * (1000.0 / 700.0) / std::sqrt(1.0 - (20.0 / 700.0) * (20.0 / 700.0));
    CHECK(expected == doctest::Approx(28.58).epsilon(1e-3));
    const double measured = std::sqrt(double(m.area()) / std::numbers::pi);
    CHECK(std::abs(measured - expected) < 1.0);
    // Extremal extent along the principal axes.
    int right = 0;
    while (right + 51 < cam.width && m.at(50 + right + 1, 50)) ++right;
    CHECK(std::abs(right + 0.5 - expected) < 1.0);
}

TEST_CASE("mesh outside the frustum projects to nothing") {
    const auto cam = test_camera();
    CHECK(project_mask(make_icosphere(Vec3(400, 0, 0), 10.0, 2), cam).empty());
    CHECK(project_mask(make_icosphere(cam.source - 50.0 * cam.principal_ray(), 10.0, 2), cam).empty());
}

TEST_CASE("parity oracle agreement on random meshes") {
    Rng rng(21);
    const auto cam = test_camera(64, 1.6);
    std::size_t pixels = 0, mismatches = 0, off_boundary = 0;
    for (int n = 0; n < 12; ++n) {
        SurfaceMesh mesh;
        switch (n % 3) {
            case 0: mesh = random_blob_mesh(rng); break;
            case 1: {
                const Mat3 rot = Eigen::AngleAxisd(rng.uniform(0, 3), Vec3(rng.uniform(-1, 1), rng.uniform(-1, 1), 1).normalized())
                                     .toRotationMatrix();
                mesh = transformed(make_box(Vec3::Zero(), Vec3(rng.uniform(5, 30), rng.uniform(5, 30), rng.uniform(5, 30))),
                                   rot, Vec3(rng.uniform(-10, 10), rng.uniform(-10, 10), rng.uniform(-10, 10)));
                break;
            }
            default:
                mesh = make_cylinder(Vec3(rng.uniform(-10, 10), 0, rng.uniform(-10, 10)),
                                     Vec3(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)).normalized(),
                                     rng.uniform(3, 10), rng.uniform(20, 60), 16);
        }
        const Mask got = project_mask(mesh, cam);
        Mask oracle(cam.width, cam.height);
        for (int v = 0; v < cam.height; ++v)
            for (int u = 0; u < cam.width; ++u) oracle.at(u, v) = ray_meets_interior(mesh, ray_through_pixel(cam, u, v));
        for (int v = 0; v < cam.height; ++v)
            for (int u = 0; u < cam.width; ++u) {
                ++pixels;
                if (got.at(u, v) != oracle.at(u, v)) {
                    ++mismatches;
                    off_boundary += !on_silhouette(oracle, u, v);
                }
            }
        CHECK(oracle.area() > 0);
    }
    CHECK(double(mismatches) / double(pixels) < 1e-3);
    CHECK(off_boundary == 0);
}

TEST_CASE("project_all") {
    const auto cam = test_camera();
    SUBCASE("empty list") { CHECK(project_all({}, cam).entries.empty()); }
    SUBCASE("min area zero keeps every mesh") {
        const std::vector<SurfaceMesh> meshes = {tagged(make_icosphere(Vec3::Zero(), 5, 2), 1),
                                                 tagged(make_icosphere(Vec3(900, 0, 0), 5, 2), 2)};
        const auto set = project_all(meshes, cam, 0);
        REQUIRE(set.entries.size() == 2);
        CHECK(set.entries[0].key == "organ:1");
        CHECK(set.entries[1].mask.empty());
        CHECK(project_all(meshes, cam, 1).entries.size() == 1);
    }
    SUBCASE("overlapping spheres are projected independently") {
        const auto a = tagged(make_icosphere(Vec3(-6, 0, 0), 12, 3), 1);
        const auto b = tagged(make_icosphere(Vec3(6, 0, 0), 12, 3), 2);
        const auto set = project_all({a, b}, cam);
        REQUIRE(set.entries.size() == 2);
        CHECK(set.entries[0].mask.bits == project_mask(a, cam).bits);
        CHECK(set.entries[1].mask.bits == project_mask(b, cam).bits);
        std::size_t overlap = 0;
        for (std::size_t i = 0; i < set.entries[0].mask.bits.size(); ++i)
            overlap += set.entries[0].mask.bits[i] && set.entries[1].mask.bits[i];
        CHECK(overlap > 0);
        // Adding other content never changes a mask.
        const auto c = tagged(make_box(Vec3(0, 30, 0), Vec3(20, 5, 20)), 3);
        CHECK(project_all({a, c, b}, cam).entries[0].mask.bits == set.entries[0].mask.bits);
    }
    SUBCASE("object keys") {
        CHECK(object_key(ObjectKind::tool, 3) == "tool:3");
        CHECK(group_key("lungs") == "group:lungs");
    }
}

TEST_CASE("moving toward the source never shrinks the silhouette") {
    const auto cam = test_camera(96, 1.0);
    Rng rng(22);
    for (int n = 0; n < 5; ++n) {
        const Mat3 rot = Eigen::AngleAxisd(rng.uniform(0, 3), Vec3(1, rng.uniform(-1, 1), 0.5).normalized()).toRotationMatrix();
        const auto base = transformed(make_box(Vec3::Zero(), Vec3(8, 4, 6)), rot, Vec3(rng.uniform(-5, 5), 0, 0));
        std::size_t prev = 0;
        for (double t = 0; t <= 400; t += 100) {
            const auto moved = transformed(base, Mat3::Identity(), -t * cam.principal_ray());
            const auto area = project_mask(moved, cam).area();
            CHECK(area >= prev);
            prev = area;
        }
    }
}

TEST_CASE("mask projection is identical across thread counts") {
    Rng rng(23);
    const auto mesh = random_blob_mesh(rng);
    const auto cam = test_camera(80, 1.2);
    CHECK(project_mask(mesh, cam, 1).bits == project_mask(mesh, cam, 4).bits);
}
