#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fluoroforge/augmentation.hpp"
#include "fluoroforge/camera.hpp"
#include "fluoroforge/masks.hpp"
#include "fluoroforge/prompts.hpp"

namespace fluoroforge {

inline constexpr int kManifestSchema = 1;

enum class ViewKind { standard, random };
const char* to_string(ViewKind kind);
ViewKind view_kind_from_string(const std::string& s);

struct ToolPlacement {
    std::string key;  // "tool:<id>"
    int tool_id = 0;
    std::string name;
    std::string material;
    Mat3 rotation = Mat3::Identity();
    Vec3 translation = Vec3::Zero();

    bool operator==(const ToolPlacement&) const = default;
};

struct SampleManifest {
    std::string id;
    std::string ct_id;
    std::string view_name;
    ViewKind view_kind = ViewKind::random;
    int view_index = 0;
    std::uint64_t seed = 0;
    CArmCamera camera;
    std::string image;  // relative to the dataset root
    MaskSet masks;      // organ, tool and group entries
    std::vector<PromptRecord> prompts;
    std::vector<ToolPlacement> tools;
    std::string augmentation_plan;  // plan name or path as configured
    std::uint64_t augmentation_seed = 0;
    std::vector<AppliedOp> augmentation_applied;
};

nlohmann::json camera_to_json(const CArmCamera& cam);
CArmCamera camera_from_json(const nlohmann::json& j);

// Structural checks: schema version, required fields and types, RLE dims equal
// to the declared image dims, unique mask keys, every prompt target present
// as a mask or negative. With `root`, the image file must also exist.
std::vector<std::string> validate_manifest(const nlohmann::json& j, const std::filesystem::path* root = nullptr);

nlohmann::json manifest_to_json(const SampleManifest& m);
// Throws LoadError listing every validation problem.
SampleManifest manifest_from_json(const nlohmann::json& j);
SampleManifest load_manifest(const std::filesystem::path& path);

}  // namespace fluoroforge
