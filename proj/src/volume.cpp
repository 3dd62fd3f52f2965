#include "fluoroforge/volume.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>

#include "fluoroforge/catalog.hpp"
#include "fluoroforge/error.hpp"

namespace fluoroforge {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

static_assert(std::endian::native == std::endian::little, "raw volume I/O assumes a little-endian host");

template <typename T>
std::vector<T> read_raw(const fs::path& path, std::size_t count) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw LoadError("cannot open raw file: " + path.string());
    in.seekg(0, std::ios::end);
    const auto bytes = std::size_t(in.tellg());
    if (bytes != count * sizeof(T)) {
        throw LoadError("size mismatch in " + path.string() + ": header declares " + std::to_string(count) +
                        " values, file holds " + std::to_string(bytes / sizeof(T)));
    }
    in.seekg(0);
    std::vector<T> out(count);
    in.read(reinterpret_cast<char*>(out.data()), std::streamsize(bytes));
    return out;
}

template <typename T>
void write_raw(const fs::path& path, const std::vector<T>& data) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw LoadError("cannot write raw file: " + path.string());
    out.write(reinterpret_cast<const char*>(data.data()), std::streamsize(data.size() * sizeof(T)));
}

Vec3 read_vec3(const json& j, const char* key) {
    if (!j.contains(key) || !j[key].is_array() || j[key].size() != 3) {
        throw LoadError(std::string("volume header field '") + key + "' must be a 3-element array");
    }
    return Vec3(j[key][0].get<double>(), j[key][1].get<double>(), j[key][2].get<double>());
}

}  // namespace

Aabb CtVolume::bounds() const {
    Aabb b;
    b.lo = origin - 0.5 * spacing;
    b.hi = origin + spacing.cwiseProduct(Vec3(dims[0] - 0.5, dims[1] - 0.5, dims[2] - 0.5));
    return b;
}

double CtVolume::sample_hu(const Vec3& p) const {
    const Vec3 g = (p - origin).cwiseQuotient(spacing);
    int i0[3];
    double f[3];
    for (int a = 0; a < 3; ++a) {
        const double c = std::clamp(g[a], 0.0, double(dims[a] - 1));
        int base = int(std::floor(c));
        if (base >= dims[a] - 1) base = std::max(dims[a] - 2, 0);
        i0[a] = base;
        f[a] = dims[a] > 1 ? c - base : 0.0;
    }
    const int i1x = std::min(i0[0] + 1, dims[0] - 1);
    const int i1y = std::min(i0[1] + 1, dims[1] - 1);
    const int i1z = std::min(i0[2] + 1, dims[2] - 1);
    auto v = [&](int i, int j, int k) { return double(hu[index(i, j, k)]); };
    const double c00 = v(i0[0], i0[1], i0[2]) * (1 - f[0]) + v(i1x, i0[1], i0[2]) * f[0];
    const double c10 = v(i0[0], i1y, i0[2]) * (1 - f[0]) + v(i1x, i1y, i0[2]) * f[0];
    const double c01 = v(i0[0], i0[1], i1z) * (1 - f[0]) + v(i1x, i0[1], i1z) * f[0];
    const double c11 = v(i0[0], i1y, i1z) * (1 - f[0]) + v(i1x, i1y, i1z) * f[0];
    const double c0 = c00 * (1 - f[1]) + c10 * f[1];
    const double c1 = c01 * (1 - f[1]) + c11 * f[1];
    return c0 * (1 - f[2]) + c1 * f[2];
}

void validate_volume(const CtVolume& vol, const ObjectCatalog* catalog) {
    for (int a = 0; a < 3; ++a) {
        if (vol.dims[a] <= 0) throw LoadError("volume dims must be positive");
        if (!(vol.spacing[a] > 0.0)) throw LoadError("volume spacing must be positive");
    }
    if (vol.hu.size() != vol.voxel_count()) throw LoadError("hu array size does not match dims");
    if (vol.has_labels() && vol.labels.size() != vol.voxel_count()) {
        throw LoadError("label array size does not match dims");
    }
    if (catalog && vol.has_labels()) {
        std::vector<bool> seen(65536, false);
        for (auto l : vol.labels) seen[l] = true;
        for (int id = 1; id < 65536; ++id) {
            if (seen[id] && !catalog->organs.contains(id)) {
                throw LoadError("label id " + std::to_string(id) + " is not in the organ table");
            }
        }
    }
}

CtVolume load_volume(const fs::path& header_path, const ObjectCatalog* catalog) {
    std::ifstream in(header_path);
    if (!in) throw LoadError("cannot open volume header: " + header_path.string());
    json h;
    try {
        in >> h;
    } catch (const json::exception& e) {
        throw LoadError("malformed volume header " + header_path.string() + ": " + e.what());
    }

    CtVolume vol;
    vol.id = header_path.stem().string();
    try {
        const auto& d = h.at("dims");
        if (!d.is_array() || d.size() != 3) throw LoadError("volume header 'dims' must have 3 entries");
        for (int a = 0; a < 3; ++a) {
            const auto v = d[a].get<long long>();
            if (v <= 0) throw LoadError("volume dims must be positive");
            vol.dims[a] = int(v);
        }
        vol.spacing = read_vec3(h, "spacing_mm");
        vol.origin = read_vec3(h, "origin_mm");
        const auto dtype = h.value("dtype", std::string("int16"));
        if (dtype != "int16") throw LoadError("unknown element type '" + dtype + "'");
        for (int a = 0; a < 3; ++a) {
            if (!(vol.spacing[a] > 0.0)) throw LoadError("volume spacing must be positive");
        }
        const fs::path dir = header_path.parent_path();
        vol.hu = read_raw<std::int16_t>(dir / h.at("data").get<std::string>(), vol.voxel_count());
        if (h.contains("labels") && !h["labels"].is_null()) {
            vol.labels = read_raw<std::uint16_t>(dir / h["labels"].get<std::string>(), vol.voxel_count());
        }
    } catch (const json::exception& e) {
        throw LoadError("invalid volume header " + header_path.string() + ": " + e.what());
    }
    for (auto& v : vol.hu) v = std::clamp(v, kHuMin, kHuMax);
    validate_volume(vol, catalog);
    return vol;
}

void write_volume(const CtVolume& vol, const fs::path& header_path) {
    validate_volume(vol);
    const std::string stem = header_path.stem().string();
    const fs::path dir = header_path.parent_path();
    json h;
    h["dims"] = {vol.dims[0], vol.dims[1], vol.dims[2]};
    h["spacing_mm"] = {vol.spacing[0], vol.spacing[1], vol.spacing[2]};
    h["origin_mm"] = {vol.origin[0], vol.origin[1], vol.origin[2]};
    h["dtype"] = "int16";
    h["data"] = stem + ".raw";
    if (vol.has_labels()) h["labels"] = stem + ".lbl.raw";
    {
        std::ofstream out(header_path, std::ios::trunc);
        if (!out) throw LoadError("cannot write volume header: " + header_path.string());
        out << h.dump(2) << '\n';
    }
    write_raw(dir / (stem + ".raw"), vol.hu);
    if (vol.has_labels()) write_raw(dir / (stem + ".lbl.raw"), vol.labels);
}

}  // namespace fluoroforge
