#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace fluoroforge {

struct OrganEntry {
    int class_id = 0;
    std::string name;
    std::string description;
};

struct ToolEntry {
    int tool_id = 0;
    std::string name;
    std::filesystem::path mesh_path;  // resolved against the catalog file's directory
    std::string description;
    std::string material;
};

// Organ taxonomy, tool library, organ groups and tool material attenuation.
struct ObjectCatalog {
    std::map<int, OrganEntry> organs;
    std::map<int, ToolEntry> tools;
    std::map<std::string, std::vector<int>> groups;
    std::map<std::string, double> materials_mu_per_cm;

    const OrganEntry& organ(int class_id) const;
    const ToolEntry& tool(int tool_id) const;
    const std::vector<int>& group(const std::string& name) const;
    double material_mu(const std::string& material) const;

    void validate() const;
};

// Default tool attenuation table (1/cm).
std::map<std::string, double> default_materials();

ObjectCatalog load_catalog(const std::filesystem::path& path);
ObjectCatalog catalog_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
nlohmann::json catalog_to_json(const ObjectCatalog& catalog, const std::filesystem::path& base_dir = {});

}  // namespace fluoroforge
