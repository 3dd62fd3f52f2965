#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "fluoroforge/camera.hpp"
#include "fluoroforge/image.hpp"
#include "fluoroforge/mesh.hpp"
#include "fluoroforge/volume.hpp"

namespace fluoroforge {

struct Spectrum {
    double energy_kev = 60.0;
    double mu_water_per_cm = 0.2;
};

enum class Photometric { attenuation_line_integral, transmitted_fraction, negative_log_normalized };

const char* to_string(Photometric p);

struct Radiograph {
    Image image;
    Photometric photometric = Photometric::transmitted_fraction;
    CArmCamera camera;
    Spectrum spectrum;
    std::uint64_t seed = 0;
    std::string ct_id;
    std::string view_name;
};

struct RenderOptions {
    Spectrum spectrum;
    double step_mm = 1.0;
    int threads = 1;
    std::map<std::string, double> materials_mu_per_cm;  // empty -> default table
};

// Linear attenuation (1/cm) from the HU definition, clamped below at zero.
double hu_to_mu(double hu, const Spectrum& spectrum);

// Trilinearly interpolated attenuation, clamped to the voxel-center lattice.
double sample_mu(const CtVolume& vol, const Vec3& p, const Spectrum& spectrum);

// Trapezoidal estimate of the dimensionless integral of mu along the t >= 0
// part of the ray inside the volume box. The segment is split into
// ceil(length / step_mm) equal steps.
double line_integral(const CtVolume& vol, const Ray& ray, const Spectrum& spectrum, double step_mm);

// Per pixel: exp(-(line integral + sum over tools of mu_material * chord / 10)).
// Output photometric is transmitted_fraction. Result does not depend on
// options.threads.
Radiograph render(const CtVolume& vol, const std::vector<SurfaceMesh>& tools, const CArmCamera& cam,
                  const RenderOptions& options);

// -log p rescaled to [0, 1]; a constant image maps to zeros.
Radiograph negative_log_normalize(const Radiograph& r);

}  // namespace fluoroforge
