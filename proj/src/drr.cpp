#include "fluoroforge/drr.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fluoroforge/catalog.hpp"
#include "fluoroforge/error.hpp"
#include "fluoroforge/parallel.hpp"
#include "fluoroforge/raycast.hpp"

namespace fluoroforge {

const char* to_string(Photometric p) {
    switch (p) {
        case Photometric::attenuation_line_integral: return "attenuation_line_integral";
        case Photometric::transmitted_fraction: return "transmitted_fraction";
        case Photometric::negative_log_normalized: return "negative_log_normalized";
    }
    return "transmitted_fraction";
}

double hu_to_mu(double hu, const Spectrum& spectrum) {
    return std::max(0.0, spectrum.mu_water_per_cm * (1.0 + hu / 1000.0));
}

double sample_mu(const CtVolume& vol, const Vec3& p, const Spectrum& spectrum) {
    const Vec3 g = (p - vol.origin).cwiseQuotient(vol.spacing);
    int i0[3], i1[3];
    double f[3];
    for (int a = 0; a < 3; ++a) {
        const double c = std::clamp(g[a], 0.0, double(vol.dims[a] - 1));
        int base = std::min(int(c), std::max(vol.dims[a] - 2, 0));
        i0[a] = base;
        i1[a] = std::min(base + 1, vol.dims[a] - 1);
        f[a] = c - base;
    }
    auto mu = [&](int i, int j, int k) { return hu_to_mu(vol.hu[vol.index(i, j, k)], spectrum); };
    const double c00 = mu(i0[0], i0[1], i0[2]) * (1 - f[0]) + mu(i1[0], i0[1], i0[2]) * f[0];
    const double c10 = mu(i0[0], i1[1], i0[2]) * (1 - f[0]) + mu(i1[0], i1[1], i0[2]) * f[0];
    const double c01 = mu(i0[0], i0[1], i1[2]) * (1 - f[0]) + mu(i1[0], i0[1], i1[2]) * f[0];
    const double c11 = mu(i0[0], i1[1], i1[2]) * (1 - f[0]) + mu(i1[0], i1[1], i1[2]) * f[0];
    const double c0 = c00 * (1 - f[1]) + c10 * f[1];
    const double c1 = c01 * (1 - f[1]) + c11 * f[1];
    return c0 * (1 - f[2]) + c1 * f[2];
}

double line_integral(const CtVolume& vol, const Ray& ray, const Spectrum& spectrum, double step_mm) {
    if (!(step_mm > 0.0)) throw Error("line_integral: step_mm must be positive");
    double t0, t1;
    if (!clip_line_to_box(ray, vol.bounds(), t0, t1)) return 0.0;
    t0 = std::max(t0, 0.0);
    if (!(t1 > t0)) return 0.0;
    const double length = t1 - t0;
    const auto n = std::max<long long>(1, (long long)std::ceil(length / step_mm));
    const double h = length / double(n);
    double sum = 0.5 * (sample_mu(vol, ray.origin + t0 * ray.direction, spectrum) +
                        sample_mu(vol, ray.origin + t1 * ray.direction, spectrum));
    for (long long i = 1; i < n; ++i) {
        sum += sample_mu(vol, ray.origin + (t0 + double(i) * h) * ray.direction, spectrum);
    }
    // mu is per cm, distances are mm.
    return sum * h / 10.0;
}

Radiograph render(const CtVolume& vol, const std::vector<SurfaceMesh>& tools, const CArmCamera& cam,
                  const RenderOptions& options) {
    validate_camera(cam);
    if (!(options.step_mm > 0.0)) throw Error("render: step_mm must be positive");
    const auto materials = options.materials_mu_per_cm.empty() ? default_materials() : options.materials_mu_per_cm;

    std::vector<MeshRayCaster> casters;
    std::vector<double> tool_mu;
    casters.reserve(tools.size());
    for (const auto& t : tools) {
        auto it = materials.find(t.material);
        if (it == materials.end()) throw LoadError("tool '" + t.name + "' has unknown material '" + t.material + "'");
        casters.emplace_back(t);
        tool_mu.push_back(it->second);
    }

    Radiograph out;
    out.image = Image(cam.width, cam.height, 1.0);
    out.photometric = Photometric::transmitted_fraction;
    out.camera = cam;
    out.spectrum = options.spectrum;
    out.ct_id = vol.id;

    parallel_for(cam.height, options.threads, [&](int v) {
        for (int u = 0; u < cam.width; ++u) {
            const Ray ray = ray_through_pixel(cam, u, v);
            double total = line_integral(vol, ray, options.spectrum, options.step_mm);
            for (std::size_t k = 0; k < casters.size(); ++k) {
                total += tool_mu[k] * casters[k].path_length(ray) / 10.0;
            }
            out.image.at(u, v) = std::max(std::exp(-total), std::numeric_limits<double>::min());
        }
    });
    return out;
}

Radiograph negative_log_normalize(const Radiograph& r) {
    if (r.photometric != Photometric::transmitted_fraction) {
        throw Error("negative_log_normalize expects a transmitted_fraction radiograph");
    }
    Radiograph out = r;
    out.photometric = Photometric::negative_log_normalized;
    if (r.image.pixels.empty()) return out;
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (auto& p : out.image.pixels) {
        p = -std::log(p);
        lo = std::min(lo, p);
        hi = std::max(hi, p);
    }
    const double range = hi - lo;
    for (auto& p : out.image.pixels) p = range > 0.0 ? std::clamp((p - lo) / range, 0.0, 1.0) : 0.0;
    return out;
}

}  // namespace fluoroforge
