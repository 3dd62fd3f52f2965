#include <string>

#include "fluoroforge/files.hpp"
#include "fluoroforge/phantom.hpp"
#include "fluoroforge/pipeline.hpp"
#include "fluoroforge/rng.hpp"
#include "fluoroforge/shipped_data.hpp"

namespace fluoroforge {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kPhantomCts = 4;
constexpr int kPhantomRandomViews = 12;

const char* tool_material(const std::string& stem) {
    if (stem == "kirschner_wire") return "steel";
    if (stem == "catheter_tip") return "pmma";
    return "titanium";
}

}  // namespace

fs::path write_phantom_inputs(const fs::path& dir, std::uint64_t seed) {
    fs::create_directories(dir / "cts");
    fs::create_directories(dir / "tools");

    json catalog = json::parse(shipped_catalog_json());
    catalog["tools"] = json::array();
    int tool_id = 1;
    for (const auto& [stem, mesh] : make_phantom_tools()) {
        const auto rel = "tools/" + stem + ".stl";
        write_stl(mesh, dir / rel);
        std::string name = stem;
        for (auto& ch : name)
            if (ch == '_') ch = ' ';
        catalog["tools"].push_back(
            {{"id", tool_id++}, {"name", name}, {"mesh", rel}, {"material", tool_material(stem)}, {"description", "a " + name}});
    }
    write_file_atomic(dir / "catalog.json", catalog.dump(2) + "\n");

    json cts = json::array();
    for (int k = 0; k < kPhantomCts; ++k) {
        const std::string id = "torso_" + std::to_string(k);
        CtVolume vol = make_torso_phantom(derive_seed(seed, "torso", std::uint64_t(k)), 4.0);
        vol.id = id;
        write_volume(vol, dir / "cts" / (id + ".volhdr"));
        cts.push_back({{"id", id}, {"volume", "cts/" + id + ".volhdr"}});
    }

    const json config = {{"cts", cts},
                         {"catalog", "catalog.json"},
                         {"random_views_per_ct", kPhantomRandomViews},
                         {"tool_count", {0, 2}},
                         {"resolution", 128},
                         {"step_mm", 2.0},
                         {"seed", seed},
                         {"output", "dataset"},
                         {"workers", 1}};
    const fs::path config_path = dir / "phantom.json";
    write_file_atomic(config_path, config.dump(2) + "\n");
    return config_path;
}

}  // namespace fluoroforge
