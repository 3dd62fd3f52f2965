#pragma once

#include <cstdint>
#include <exception>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "fluoroforge/augmentation.hpp"
#include "fluoroforge/catalog.hpp"
#include "fluoroforge/llm_client.hpp"
#include "fluoroforge/manifest.hpp"
#include "fluoroforge/prompts.hpp"
#include "fluoroforge/raycast.hpp"
#include "fluoroforge/views.hpp"
#include "fluoroforge/volume.hpp"

namespace fluoroforge {

struct CtSource {
    std::string id;
    std::filesystem::path volume;    // .volhdr with labels
    std::filesystem::path mesh_dir;  // optional: <class id>.stl|.obj overrides surfacing
};

// Empty paths select the data compiled into the library.
struct GenerationConfig {
    std::vector<CtSource> cts;
    std::filesystem::path catalog;
    std::filesystem::path views;
    std::filesystem::path templates;
    std::filesystem::path augmentation;
    int random_views_per_ct = 20;
    std::pair<int, int> tool_count{0, 2};
    int resolution = 512;
    double detector_mm = 409.6;
    double step_mm = 1.0;
    std::uint64_t seed = 0;
    std::filesystem::path output;
    int workers = 1;
    bool offline = false;
    double negative_prompt_rate = 0.05;
    double split_frac = 0.9;
    int llm_variants = 10;
    bool group_masks = true;
    LlmConfig llm;  // endpoint settings; config_from_json reads them from the environment
};

// The endpoint settings in effect: `offline` on either level disables it.
LlmConfig config_llm(const GenerationConfig& c);

// Relative paths resolve against base_dir. Throws ConfigError.
GenerationConfig config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
nlohmann::json config_to_json(const GenerationConfig& c);
GenerationConfig load_generation_config(const std::filesystem::path& path);
void validate_config(const GenerationConfig& c);

struct CtInventory {
    std::string id;
    std::vector<int> present_class_ids;
};

struct SampleSpec {
    std::string id;
    std::string ct_id;
    std::size_t ct_index = 0;
    ViewKind kind = ViewKind::random;
    std::string view_name;
    int view_index = 0;
    std::uint64_t seed = 0;

    bool operator==(const SampleSpec&) const = default;
};

// Per CT, in inventory order: applicable standard views in catalog order,
// then config.random_views_per_ct random views. Throws ConfigError on an
// empty inventory.
std::vector<SampleSpec> plan_samples(const GenerationConfig& config, const std::vector<StandardViewSpec>& views,
                                     const ObjectCatalog& catalog, const std::vector<CtInventory>& inventory);

// Tools from the catalog library, posed with a uniform random rotation and
// centered on a point whose projection is uniform over the detector, at a
// depth uniform in [0.5 sad, min(1.5 sad, 0.95 sid)] along the principal ray.
std::vector<SurfaceMesh> place_tools(Rng& rng, const ObjectCatalog& catalog,
                                     const std::map<int, SurfaceMesh>& tool_meshes, const CArmCamera& cam,
                                     std::pair<int, int> count_range, std::vector<ToolPlacement>* placements = nullptr);

struct CtAssets {
    std::string id;
    CtVolume volume;
    std::vector<SurfaceMesh> organs;  // ascending class id
    std::vector<std::unique_ptr<MeshRayCaster>> casters;
    std::vector<int> present_class_ids;
};

// Read-only state shared by all generation workers.
struct SceneAssets {
    ObjectCatalog catalog;
    std::vector<StandardViewSpec> views;
    TemplateBank templates;
    AugmentationPlan plan;
    std::string plan_name;
    std::map<int, SurfaceMesh> tool_meshes;
    std::vector<CtAssets> cts;

    std::vector<CtInventory> inventory() const;
};

SceneAssets load_assets(const GenerationConfig& config);
// Surfaces every labeled class present in the volume (or loads overrides).
CtAssets make_ct_assets(std::string id, CtVolume volume, const ObjectCatalog& catalog,
                        const std::filesystem::path& mesh_dir = {});

// Hooks for tests and fault injection.
struct RunHooks {
    std::function<void(const std::string& sample_id)> after_image_write;
    LlmClient* llm_client = nullptr;  // overrides the endpoint client
};

struct GeneratedSample {
    SampleManifest manifest;
    Image image;  // augmented, as stored
};

// Builds the sample in memory: camera, tools, render, masks, prompts and
// augmentation. Pure function of (spec, assets, config) unless an LLM client
// contributes variants.
GeneratedSample generate_sample(const SampleSpec& spec, const SceneAssets& assets, const GenerationConfig& config,
                                LlmClient* llm = nullptr);

// Writes images/<id>.png, then manifests/<id>.json, each atomically.
void write_sample(const GeneratedSample& sample, const std::filesystem::path& root, const RunHooks& hooks = {});

// True when manifests/<id>.json parses, validates and its image exists.
bool has_valid_manifest(const std::filesystem::path& root, const std::string& id);

struct SplitResult {
    std::vector<std::string> train_ids;
    std::vector<std::string> val_ids;
    std::vector<std::string> train_cts;
    std::vector<std::string> val_cts;
};

// (sample id, CT id) pairs. Splits at CT granularity with
// round((1 - frac) * n_ct) >= 1 validation CTs. Throws ConfigError for fewer
// than two CTs or frac outside (0, 1).
SplitResult split_dataset(const std::vector<std::pair<std::string, std::string>>& samples, double frac,
                          std::uint64_t seed);

struct ThroughputStats {
    std::size_t n = 0;
    double mean = 0.0;
    double stddev = 0.0;
};

// "X.X ± Y.Y images per second"
std::string format_throughput(const ThroughputStats& t);
ThroughputStats throughput_from_durations(const std::vector<double>& seconds);

struct SampleFailure {
    std::string id;
    std::string error;
};

struct RunReport {
    std::size_t planned = 0;
    std::size_t generated = 0;
    std::size_t resumed = 0;
    std::vector<SampleFailure> failures;
    double wall_seconds = 0.0;
    std::map<std::string, ThroughputStats> throughput;  // "standard", "random", "all"
    bool full_resume() const { return generated == 0 && failures.empty() && resumed == planned; }
};

nlohmann::json report_to_json(const RunReport& r);

// Generates every planned sample not already present, then rewrites
// index.json, splits.json and report.json. Throws Error for an unwritable
// output root, and after writing the report when every attempted sample
// failed. Exceptions not derived from std::runtime_error or std::logic_error
// abort the run unrecorded.
RunReport run_generation(const GenerationConfig& config, const RunHooks& hooks = {});

struct DatasetStats {
    std::map<std::string, std::size_t> samples_per_view_kind;
    std::size_t samples = 0;
    std::size_t masks = 0;
    std::size_t prompts = 0;
    double masks_per_image = 0.0;
    double prompts_per_mask = 0.0;
    std::map<std::string, std::size_t> tool_frequency;
    std::size_t train = 0;
    std::size_t val = 0;
};

// Reads index.json and every listed manifest. An existing directory with
// neither index nor manifests gives empty stats. A missing or corrupt index
// throws LoadError; index entries whose manifests are missing or disagree,
// and manifests absent from the index, throw MismatchError naming the ids.
DatasetStats compute_dataset_stats(const std::filesystem::path& root);
nlohmann::json stats_to_json(const DatasetStats& s);

// Writes a four-CT torso phantom (volumes, tool meshes, catalog with a tool
// library, views, templates) plus a `phantom.json` generation config that
// yields 100 samples at 128 x 128.
std::filesystem::path write_phantom_inputs(const std::filesystem::path& dir, std::uint64_t seed = 7);

}  // namespace fluoroforge
