#pragma once

// Small generation setups and output snapshots shared by the pipeline tests.

#include <filesystem>
#include <map>
#include <string>

#include <nlohmann/json.hpp>

#include "fluoroforge/files.hpp"
#include "fluoroforge/pipeline.hpp"
#include "fluoroforge/shipped_data.hpp"

namespace testing {

namespace fs = std::filesystem;

// Relative path -> bytes for every file under root except report.json, which
// carries wall-clock timings.
inline std::map<std::string, std::string> snapshot(const fs::path& root) {
    std::map<std::string, std::string> files;
    for (const auto& e : fs::recursive_directory_iterator(root)) {
        if (!e.is_regular_file()) continue;
        const auto rel = fs::relative(e.path(), root).generic_string();
        if (rel == "report.json") continue;
        files[rel] = fluoroforge::read_file(e.path());
    }
    return files;
}

// Shipped view catalog restricted to the named views.
inline fs::path write_view_subset(const fs::path& dir, const std::vector<std::string>& names) {
    const auto all = nlohmann::json::parse(fluoroforge::shipped_views_json());
    nlohmann::json subset = nlohmann::json::array();
    for (const auto& v : all)
        for (const auto& n : names)
            if (v.at("name") == n) subset.push_back(v);
    const fs::path path = dir / "views_subset.json";
    fluoroforge::write_file_atomic(path, subset.dump(2));
    return path;
}

// Phantom inputs cut down to `n_cts` CTs, two standard views and
// `random_views` random views per CT at 64 x 64.
inline fluoroforge::GenerationConfig small_phantom_config(const fs::path& inputs, const fs::path& output,
                                                          int n_cts = 2, int random_views = 2) {
    auto config = fluoroforge::load_generation_config(fluoroforge::write_phantom_inputs(inputs, 11));
    config.cts.resize(std::size_t(n_cts));
    config.views = write_view_subset(inputs, {"chest PA", "pelvis AP"});
    config.random_views_per_ct = random_views;
    config.resolution = 64;
    config.step_mm = 4.0;
    config.output = output;
    config.llm = {};
    return config;
}

}  // namespace testing
