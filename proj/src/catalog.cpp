#include "fluoroforge/catalog.hpp"

#include <fstream>

#include "fluoroforge/error.hpp"

namespace fluoroforge {

namespace fs = std::filesystem;
using json = nlohmann::json;

std::map<std::string, double> default_materials() {
    return {{"titanium", 1.0}, {"steel", 2.4}, {"pmma", 0.22}};
}

const OrganEntry& ObjectCatalog::organ(int class_id) const {
    auto it = organs.find(class_id);
    if (it == organs.end()) throw LoadError("unknown organ class id " + std::to_string(class_id));
    return it->second;
}

const ToolEntry& ObjectCatalog::tool(int tool_id) const {
    auto it = tools.find(tool_id);
    if (it == tools.end()) throw LoadError("unknown tool id " + std::to_string(tool_id));
    return it->second;
}

const std::vector<int>& ObjectCatalog::group(const std::string& name) const {
    auto it = groups.find(name);
    if (it == groups.end()) throw LoadError("unknown organ group '" + name + "'");
    return it->second;
}

double ObjectCatalog::material_mu(const std::string& material) const {
    auto it = materials_mu_per_cm.find(material);
    if (it == materials_mu_per_cm.end()) throw LoadError("unknown tool material '" + material + "'");
    return it->second;
}

void ObjectCatalog::validate() const {
    for (const auto& [name, members] : groups) {
        if (members.empty()) throw LoadError("organ group '" + name + "' has no members");
        for (int id : members) {
            if (!organs.contains(id)) {
                throw LoadError("organ group '" + name + "' references unknown class id " + std::to_string(id));
            }
        }
    }
    for (const auto& [id, t] : tools) {
        if (!materials_mu_per_cm.contains(t.material)) {
            throw LoadError("tool " + std::to_string(id) + " uses unknown material '" + t.material + "'");
        }
    }
}

ObjectCatalog catalog_from_json(const json& j, const fs::path& base_dir) {
    ObjectCatalog c;
    try {
        for (const auto& o : j.at("organs")) {
            OrganEntry e;
            e.class_id = o.at("id").get<int>();
            e.name = o.at("name").get<std::string>();
            e.description = o.value("description", e.name);
            if (e.class_id <= 0) throw LoadError("organ ids must be positive");
            if (!c.organs.emplace(e.class_id, e).second) {
                throw LoadError("duplicate organ id " + std::to_string(e.class_id));
            }
        }
        if (j.contains("tools")) {
            for (const auto& t : j["tools"]) {
                ToolEntry e;
                e.tool_id = t.at("id").get<int>();
                e.name = t.at("name").get<std::string>();
                e.mesh_path = base_dir / t.at("mesh").get<std::string>();
                e.description = t.value("description", e.name);
                e.material = t.at("material").get<std::string>();
                if (!c.tools.emplace(e.tool_id, e).second) {
                    throw LoadError("duplicate tool id " + std::to_string(e.tool_id));
                }
            }
        }
        if (j.contains("groups")) {
            for (const auto& [name, members] : j["groups"].items()) c.groups[name] = members.get<std::vector<int>>();
        }
        c.materials_mu_per_cm = default_materials();
        if (j.contains("materials")) {
            for (const auto& [name, mu] : j["materials"].items()) c.materials_mu_per_cm[name] = mu.get<double>();
        }
    } catch (const json::exception& e) {
        throw LoadError(std::string("invalid catalog: ") + e.what());
    }
    c.validate();
    return c;
}

ObjectCatalog load_catalog(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw LoadError("cannot open catalog: " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw LoadError("malformed catalog " + path.string() + ": " + e.what());
    }
    return catalog_from_json(j, path.parent_path());
}

json catalog_to_json(const ObjectCatalog& c, const fs::path& base_dir) {
    json j;
    j["organs"] = json::array();
    for (const auto& [id, o] : c.organs) {
        j["organs"].push_back({{"id", id}, {"name", o.name}, {"description", o.description}});
    }
    j["tools"] = json::array();
    for (const auto& [id, t] : c.tools) {
        const auto rel = base_dir.empty() ? t.mesh_path : t.mesh_path.lexically_relative(base_dir);
        j["tools"].push_back({{"id", id},
                              {"name", t.name},
                              {"mesh", rel.generic_string()},
                              {"description", t.description},
                              {"material", t.material}});
    }
    j["groups"] = json::object();
    for (const auto& [name, members] : c.groups) j["groups"][name] = members;
    j["materials"] = c.materials_mu_per_cm;
    return j;
}

}  // namespace fluoroforge
