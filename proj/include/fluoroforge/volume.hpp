#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "fluoroforge/geometry.hpp"

namespace fluoroforge {

struct ObjectCatalog;

inline constexpr std::int16_t kHuMin = -1024;
inline constexpr std::int16_t kHuMax = 3071;

// Scalar CT field with an optional co-registered label field. Voxel (i, j, k)
// has its center at origin + (i, j, k) * spacing; storage is x-fastest.
struct CtVolume {
    std::string id;
    std::array<int, 3> dims{0, 0, 0};
    Vec3 spacing = Vec3::Ones();
    Vec3 origin = Vec3::Zero();
    std::vector<std::int16_t> hu;
    std::vector<std::uint16_t> labels;  // empty when absent; 0 = background

    std::size_t voxel_count() const { return std::size_t(dims[0]) * std::size_t(dims[1]) * std::size_t(dims[2]); }
    std::size_t index(int i, int j, int k) const {
        return std::size_t(i) + std::size_t(dims[0]) * (std::size_t(j) + std::size_t(dims[1]) * std::size_t(k));
    }
    bool has_labels() const { return !labels.empty(); }

    Vec3 voxel_center(int i, int j, int k) const {
        return origin + spacing.cwiseProduct(Vec3(i, j, k));
    }
    // Physical extent: voxel centers padded by half a voxel on each side.
    Aabb bounds() const;

    // Trilinear HU sample at a world point, clamped to the voxel-center lattice.
    double sample_hu(const Vec3& p) const;

    bool operator==(const CtVolume&) const = default;
};

// Reads `<name>.volhdr` plus its raw payload(s). HU values are clamped to
// [kHuMin, kHuMax]. When a catalog is given, label ids are checked against it.
CtVolume load_volume(const std::filesystem::path& header_path, const ObjectCatalog* catalog = nullptr);

// Writes `<stem>.volhdr`, `<stem>.raw` and, when labels exist, `<stem>.lbl.raw`.
void write_volume(const CtVolume& vol, const std::filesystem::path& header_path);

void validate_volume(const CtVolume& vol, const ObjectCatalog* catalog = nullptr);

}  // namespace fluoroforge
