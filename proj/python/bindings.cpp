#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "fluoroforge/augmentation.hpp"
#include "fluoroforge/camera.hpp"
#include "fluoroforge/drr.hpp"
#include "fluoroforge/error.hpp"
#include "fluoroforge/evaluation.hpp"
#include "fluoroforge/masks.hpp"
#include "fluoroforge/mesh.hpp"
#include "fluoroforge/metrics.hpp"
#include "fluoroforge/phantom.hpp"
#include "fluoroforge/pipeline.hpp"
#include "fluoroforge/prompts.hpp"
#include "fluoroforge/rle.hpp"
#include "fluoroforge/shipped_data.hpp"
#include "fluoroforge/views.hpp"
#include "fluoroforge/volume.hpp"
#include "fluoroforge/vq.hpp"

namespace py = pybind11;
using namespace fluoroforge;

namespace {

using MaskArray = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>;
using ImageArray = py::array_t<double, py::array::c_style | py::array::forcecast>;

Mask to_mask(const MaskArray& a) {
    if (a.ndim() != 2) throw py::value_error("mask must be a 2-D array (height, width)");
    Mask m(int(a.shape(1)), int(a.shape(0)));
    const auto* p = a.data();
    for (std::size_t i = 0; i < m.size(); ++i) m.bits[i] = p[i] != 0;
    return m;
}

py::array_t<std::uint8_t> from_mask(const Mask& m) {
    py::array_t<std::uint8_t> out({m.height, m.width});
    std::copy(m.bits.begin(), m.bits.end(), out.mutable_data());
    return out;
}

Image to_image(const ImageArray& a) {
    if (a.ndim() != 2) throw py::value_error("image must be a 2-D array (height, width)");
    Image img(int(a.shape(1)), int(a.shape(0)));
    std::copy(a.data(), a.data() + img.size(), img.pixels.begin());
    return img;
}

py::array_t<double> from_image(const Image& img) {
    py::array_t<double> out({img.height, img.width});
    std::copy(img.pixels.begin(), img.pixels.end(), out.mutable_data());
    return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Synthetic fluoroscopy generation, projection and evaluation";

    auto error = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    py::register_exception<LoadError>(m, "LoadError", error);
    py::register_exception<GeometryError>(m, "GeometryError", error);
    py::register_exception<ViewUnavailable>(m, "ViewUnavailable", error);
    py::register_exception<ConfigError>(m, "ConfigError", error);
    py::register_exception<MismatchError>(m, "MismatchError", error);
    py::register_exception<UndefinedMetric>(m, "UndefinedMetric", error);

    py::class_<CtVolume>(m, "Volume")
        .def_readonly("id", &CtVolume::id)
        .def_readonly("dims", &CtVolume::dims)
        .def_readonly("spacing", &CtVolume::spacing)
        .def_readonly("origin", &CtVolume::origin)
        .def_property_readonly("hu",
                               [](const CtVolume& v) {
                                   // (z, y, x) so that the x-fastest storage is C order.
                                   py::array_t<std::int16_t> out({v.dims[2], v.dims[1], v.dims[0]});
                                   std::copy(v.hu.begin(), v.hu.end(), out.mutable_data());
                                   return out;
                               })
        .def_property_readonly("labels", [](const CtVolume& v) -> py::object {
            if (!v.has_labels()) return py::none();
            py::array_t<std::uint16_t> out({v.dims[2], v.dims[1], v.dims[0]});
            std::copy(v.labels.begin(), v.labels.end(), out.mutable_data());
            return out;
        });
    m.def("load_volume", [](const std::filesystem::path& p) { return load_volume(p); }, py::arg("header_path"));
    m.def("write_volume", &write_volume, py::arg("volume"), py::arg("header_path"));
    m.def("water_cube_phantom", &make_water_cube_phantom, py::arg("edge_mm") = 100.0, py::arg("spacing_mm") = 1.0,
          py::arg("padding_mm") = 10.0, py::arg("label_id") = 5);
    m.def("torso_phantom", &make_torso_phantom, py::arg("seed"), py::arg("spacing_mm") = 4.0);

    py::class_<SurfaceMesh>(m, "Mesh")
        .def_readonly("name", &SurfaceMesh::name)
        .def_property_readonly("vertices",
                               [](const SurfaceMesh& s) {
                                   py::array_t<double> out({py::ssize_t(s.vertices.size()), py::ssize_t(3)});
                                   auto r = out.mutable_unchecked<2>();
                                   for (std::size_t i = 0; i < s.vertices.size(); ++i)
                                       for (int a = 0; a < 3; ++a) r(py::ssize_t(i), a) = s.vertices[i][a];
                                   return out;
                               })
        .def_property_readonly("triangle_count", [](const SurfaceMesh& s) { return s.triangles.size(); })
        .def("signed_volume", &SurfaceMesh::signed_volume)
        .def("centroid", &SurfaceMesh::centroid);
    m.def("load_mesh", [](const std::filesystem::path& p) { return load_mesh(p); }, py::arg("path"));
    m.def("icosphere", &make_icosphere, py::arg("center"), py::arg("radius"), py::arg("subdivisions") = 3);
    m.def("box", &make_box, py::arg("center"), py::arg("half_extent"));
    m.def("cylinder", &make_cylinder, py::arg("center"), py::arg("axis"), py::arg("radius"), py::arg("length"),
          py::arg("segments") = 24);

    py::class_<CArmCamera>(m, "Camera")
        .def_readonly("source", &CArmCamera::source)
        .def_readonly("detector_center", &CArmCamera::detector_center)
        .def_readonly("detector_u", &CArmCamera::detector_u)
        .def_readonly("detector_v", &CArmCamera::detector_v)
        .def_readonly("sid", &CArmCamera::sid)
        .def_readonly("sad", &CArmCamera::sad)
        .def_readonly("pixel_size", &CArmCamera::pixel_size)
        .def_readonly("width", &CArmCamera::width)
        .def_readonly("height", &CArmCamera::height)
        .def("principal_ray", &CArmCamera::principal_ray)
        .def("isocenter", &CArmCamera::isocenter)
        .def("project", [](const CArmCamera& c, const Vec3& p) {
            const auto px = project_point(c, p);
            return py::make_tuple(px.u, px.v);
        })
        .def("ray", [](const CArmCamera& c, double u, double v) {
            const auto r = ray_through_pixel(c, u, v);
            return py::make_tuple(r.origin, r.direction);
        });
    m.def(
        "make_camera",
        [](const Vec3& isocenter, const Vec3& direction, double sad, double sid, int width, int height,
           double pixel_size_mm, const Vec3& up) {
            return make_camera(isocenter, direction, sad, sid, DetectorSpec{width, height, pixel_size_mm}, up);
        },
        py::arg("isocenter"), py::arg("direction"), py::arg("sad") = 700.0, py::arg("sid") = 1020.0,
        py::arg("width") = 512, py::arg("height") = 512, py::arg("pixel_size_mm") = 0.8, py::arg("up") = kSuperior);
    m.def(
        "random_view",
        [](const SurfaceMesh& focus, std::uint64_t seed, int width, int height, double pixel_size_mm) {
            Rng rng(seed);
            return sample_random_view(rng, focus, ViewBounds{}, DetectorSpec{width, height, pixel_size_mm});
        },
        py::arg("focus"), py::arg("seed"), py::arg("width") = 512, py::arg("height") = 512,
        py::arg("pixel_size_mm") = 0.8);

    m.def(
        "render_drr",
        [](const CtVolume& vol, const CArmCamera& cam, const std::vector<SurfaceMesh>& tools, double step_mm,
           double mu_water_per_cm, int threads) {
            RenderOptions opt;
            opt.step_mm = step_mm;
            opt.spectrum.mu_water_per_cm = mu_water_per_cm;
            opt.threads = threads;
            Radiograph r;
            {
                py::gil_scoped_release release;
                r = render(vol, tools, cam, opt);
            }
            return from_image(r.image);
        },
        py::arg("volume"), py::arg("camera"), py::arg("tools") = std::vector<SurfaceMesh>{}, py::arg("step_mm") = 1.0,
        py::arg("mu_water_per_cm") = 0.2, py::arg("threads") = 1,
        "Transmitted fraction per pixel as a (height, width) float64 array.");
    m.def(
        "project_mask",
        [](const SurfaceMesh& mesh, const CArmCamera& cam) {
            Mask mask;
            {
                py::gil_scoped_release release;
                mask = project_mask(mesh, cam);
            }
            return from_mask(mask);
        },
        py::arg("mesh"), py::arg("camera"));

    m.def("rle_encode", [](const MaskArray& a) { return rle_encode(to_mask(a)); }, py::arg("mask"));
    m.def(
        "rle_decode",
        [](const std::vector<std::uint64_t>& runs, int height, int width) {
            return from_mask(rle_decode(runs, width, height));
        },
        py::arg("counts"), py::arg("height"), py::arg("width"));

    m.def("iou", [](const MaskArray& a, const MaskArray& b) { return iou(to_mask(a), to_mask(b)); });
    m.def("dice", [](const MaskArray& a, const MaskArray& b) { return dice(to_mask(a), to_mask(b)); });
    m.def(
        "hausdorff",
        [](const MaskArray& a, const MaskArray& b, double spacing, std::optional<double> percentile) {
            return hausdorff(to_mask(a), to_mask(b), spacing, percentile);
        },
        py::arg("a"), py::arg("b"), py::arg("spacing") = 1.0, py::arg("percentile") = py::none());
    m.def(
        "dice_loss", [](const ImageArray& p, const MaskArray& g, double eps) { return dice_loss(to_image(p), to_mask(g), eps); },
        py::arg("pred"), py::arg("gt"), py::arg("eps") = 1.0);
    m.def(
        "focal_loss",
        [](const ImageArray& p, const MaskArray& g, double alpha, double gamma) {
            return focal_loss(to_image(p), to_mask(g), alpha, gamma);
        },
        py::arg("pred"), py::arg("gt"), py::arg("alpha") = 0.25, py::arg("gamma") = 2.0);

    m.def(
        "quantize",
        [](const MatX& entries, const VecX& z) {
            const auto q = Codebook(entries, 0.25).nearest(z);
            return py::make_tuple(q.index, q.e);
        },
        py::arg("codebook"), py::arg("z"), "Nearest codebook row (lowest index on ties) and its value.");
    m.def(
        "vq_loss",
        [](const VecX& z, const VecX& e, double beta) {
            const auto l = vq_loss(z, e, beta);
            return py::make_tuple(l.total, l.codebook, l.commitment);
        },
        py::arg("z_e"), py::arg("e"), py::arg("beta") = 0.25);

    m.def(
        "describe",
        [](const std::string& canonical, std::uint64_t seed, int max_variants) {
            static const TemplateBank bank = template_bank_from_json(nlohmann::json::parse(shipped_templates_json()));
            Rng rng(seed);
            return augment_description(canonical, bank, rng, max_variants);
        },
        py::arg("canonical"), py::arg("seed") = 0, py::arg("max_variants") = kMaxPromptVariants,
        "Template variants of an object description from the shipped template bank.");
    m.def(
        "augment",
        [](const ImageArray& img, std::uint64_t seed) {
            const auto plan = plan_from_json(nlohmann::json::parse(shipped_plan_json()));
            AugmentationPlan seeded = plan;
            seeded.seed = seed;
            return from_image(apply_plan(to_image(img), seeded));
        },
        py::arg("image"), py::arg("seed"), "Applies the shipped domain-randomization plan.");

    // Dataset-level operations exchange JSON text; the Python package decodes it.
    m.def("write_phantom_inputs", &write_phantom_inputs, py::arg("directory"), py::arg("seed") = 7);
    m.def(
        "run_generation_json",
        [](const std::filesystem::path& config_path, std::optional<std::filesystem::path> output,
           std::optional<int> workers, bool offline) {
            auto cfg = load_generation_config(config_path);
            if (output) cfg.output = *output;
            if (workers) cfg.workers = *workers;
            cfg.offline = cfg.offline || offline;
            py::gil_scoped_release release;
            return report_to_json(run_generation(cfg)).dump();
        },
        py::arg("config"), py::arg("output") = py::none(), py::arg("workers") = py::none(), py::arg("offline") = false);
    m.def(
        "dataset_stats_json", [](const std::filesystem::path& root) { return stats_to_json(compute_dataset_stats(root)).dump(); },
        py::arg("root"));
    m.def(
        "evaluate_json",
        [](const std::filesystem::path& pred, const std::filesystem::path& gt, double min_mask_frac,
           const std::string& hdd_unit, std::optional<double> percentile) {
            EvalConfig cfg;
            cfg.min_mask_frac = min_mask_frac;
            cfg.hdd_unit = hdd_unit;
            cfg.hdd_percentile = percentile;
            return eval_report_to_json(evaluate_run(pred, gt, cfg)).dump();
        },
        py::arg("pred"), py::arg("gt"), py::arg("min_mask_frac") = 0.025, py::arg("hdd_unit") = "px",
        py::arg("hdd_percentile") = py::none());
}
