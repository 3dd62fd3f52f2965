#include "fluoroforge/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <mutex>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>

#include <Eigen/Geometry>

#include "fluoroforge/drr.hpp"
#include "fluoroforge/error.hpp"
#include "fluoroforge/files.hpp"
#include "fluoroforge/log.hpp"
#include "fluoroforge/masks.hpp"
#include "fluoroforge/parallel.hpp"
#include "fluoroforge/png_io.hpp"
#include "fluoroforge/shipped_data.hpp"
#include "fluoroforge/surfacing.hpp"

namespace fluoroforge {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::set<std::string> kConfigKeys = {
    "cts",        "catalog",     "views",  "templates", "augmentation", "random_views_per_ct",
    "tool_count", "resolution",  "detector_mm", "step_mm",   "seed",         "output",
    "workers",    "offline",     "negative_prompt_rate", "split_frac", "llm_variants", "group_masks"};

fs::path resolve(const fs::path& base, const std::string& p) {
    if (p.empty()) return {};
    const fs::path path(p);
    return path.is_absolute() || base.empty() ? path : base / path;
}

json parse_json(std::string_view text, const std::string& what) {
    try {
        return json::parse(text);
    } catch (const json::exception& e) {
        throw LoadError(what + ": " + e.what());
    }
}

std::string two_digit(int i) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%02d", i);
    return buf;
}

// Uniformly distributed rotation from a normalized Gaussian quaternion.
Mat3 random_rotation(Rng& rng) {
    Eigen::Quaterniond q;
    double norm = 0.0;
    do {
        q = Eigen::Quaterniond(rng.normal(), rng.normal(), rng.normal(), rng.normal());
        norm = q.norm();
    } while (norm < 1e-9);
    q.normalize();
    return q.toRotationMatrix();
}

fs::path image_rel(const std::string& id) { return fs::path("images") / (id + ".png"); }
fs::path manifest_rel(const std::string& id) { return fs::path("manifests") / (id + ".json"); }

std::string dump(const json& j) { return j.dump(2) + "\n"; }

void remove_stale_temporaries(const fs::path& dir) {
    if (!fs::is_directory(dir)) return;
    for (const auto& e : fs::directory_iterator(dir)) {
        if (e.path().filename().string().find(".tmp.") != std::string::npos) fs::remove(e.path());
    }
}

void ensure_writable(const fs::path& root) {
    std::error_code ec;
    for (const char* sub : {"images", "manifests"}) {
        fs::create_directories(root / sub, ec);
        if (ec) throw Error("output root '" + root.string() + "' is not writable: " + ec.message());
    }
    try {
        write_file_atomic(root / ".write_probe", "ok");
        fs::remove(root / ".write_probe");
    } catch (const Error&) {
        throw Error("output root '" + root.string() + "' is not writable");
    }
}

}  // namespace

GenerationConfig config_from_json(const json& j, const fs::path& base_dir) {
    if (!j.is_object()) throw ConfigError("generation config must be a JSON object");
    for (const auto& [key, value] : j.items()) {
        if (!kConfigKeys.count(key)) throw ConfigError("unknown generation config key '" + key + "'");
    }
    GenerationConfig c;
    try {
        for (const auto& e : j.value("cts", json::array())) {
            CtSource src;
            src.id = e.at("id").get<std::string>();
            src.volume = resolve(base_dir, e.at("volume").get<std::string>());
            src.mesh_dir = resolve(base_dir, e.value("meshes", ""));
            c.cts.push_back(std::move(src));
        }
        c.catalog = resolve(base_dir, j.value("catalog", ""));
        c.views = resolve(base_dir, j.value("views", ""));
        c.templates = resolve(base_dir, j.value("templates", ""));
        c.augmentation = resolve(base_dir, j.value("augmentation", ""));
        c.random_views_per_ct = j.value("random_views_per_ct", c.random_views_per_ct);
        if (j.contains("tool_count")) {
            const auto r = j["tool_count"].get<std::vector<int>>();
            if (r.size() != 2) throw ConfigError("tool_count must be [min, max]");
            c.tool_count = {r[0], r[1]};
        }
        c.resolution = j.value("resolution", c.resolution);
        c.detector_mm = j.value("detector_mm", c.detector_mm);
        c.step_mm = j.value("step_mm", c.step_mm);
        c.seed = j.value("seed", c.seed);
        c.output = resolve(base_dir, j.value("output", ""));
        c.workers = j.value("workers", c.workers);
        c.offline = j.value("offline", c.offline);
        c.negative_prompt_rate = j.value("negative_prompt_rate", c.negative_prompt_rate);
        c.split_frac = j.value("split_frac", c.split_frac);
        c.llm_variants = j.value("llm_variants", c.llm_variants);
        c.group_masks = j.value("group_masks", c.group_masks);
        c.llm = LlmConfig::from_env();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("generation config: ") + e.what());
    }
    return c;
}

LlmConfig config_llm(const GenerationConfig& c) {
    LlmConfig l = c.llm;
    l.offline = l.offline || c.offline;
    return l;
}

json config_to_json(const GenerationConfig& c) {
    json cts = json::array();
    for (const auto& s : c.cts) {
        json e = {{"id", s.id}, {"volume", s.volume.generic_string()}};
        if (!s.mesh_dir.empty()) e["meshes"] = s.mesh_dir.generic_string();
        cts.push_back(e);
    }
    return {{"cts", cts},
            {"catalog", c.catalog.generic_string()},
            {"views", c.views.generic_string()},
            {"templates", c.templates.generic_string()},
            {"augmentation", c.augmentation.generic_string()},
            {"random_views_per_ct", c.random_views_per_ct},
            {"tool_count", {c.tool_count.first, c.tool_count.second}},
            {"resolution", c.resolution},
            {"detector_mm", c.detector_mm},
            {"step_mm", c.step_mm},
            {"seed", c.seed},
            {"output", c.output.generic_string()},
            {"workers", c.workers},
            {"offline", c.offline},
            {"negative_prompt_rate", c.negative_prompt_rate},
            {"split_frac", c.split_frac},
            {"llm_variants", c.llm_variants},
            {"group_masks", c.group_masks}};
}

GenerationConfig load_generation_config(const fs::path& path) {
    if (!fs::is_regular_file(path)) throw ConfigError("config file not found: " + path.string());
    json j;
    try {
        j = json::parse(read_file(path));
    } catch (const std::exception& e) {
        throw ConfigError("cannot parse config " + path.string() + ": " + e.what());
    }
    return config_from_json(j, path.parent_path());
}

void validate_config(const GenerationConfig& c) {
    if (c.cts.empty()) throw ConfigError("generation config lists no CT volumes");
    std::set<std::string> ids;
    for (const auto& s : c.cts) {
        if (s.id.empty() || s.id.find_first_of("/\\ ") != std::string::npos)
            throw ConfigError("CT id '" + s.id + "' must be non-empty without spaces or slashes");
        if (!ids.insert(s.id).second) throw ConfigError("duplicate CT id '" + s.id + "'");
    }
    if (c.resolution < 64) throw ConfigError("resolution must be at least 64");
    if (c.workers < 1) throw ConfigError("worker count must be at least 1");
    if (c.random_views_per_ct < 0) throw ConfigError("random_views_per_ct must be non-negative");
    if (c.tool_count.first < 0 || c.tool_count.second < c.tool_count.first)
        throw ConfigError("tool_count must satisfy 0 <= min <= max");
    if (!(c.detector_mm > 0)) throw ConfigError("detector_mm must be positive");
    if (!(c.step_mm > 0)) throw ConfigError("step_mm must be positive");
    if (!(c.negative_prompt_rate >= 0 && c.negative_prompt_rate <= 1))
        throw ConfigError("negative_prompt_rate must lie in [0, 1]");
    if (!(c.split_frac > 0 && c.split_frac < 1)) throw ConfigError("split_frac must lie in (0, 1)");
    if (c.llm_variants < 0 || c.llm_variants > kMaxPromptVariants)
        throw ConfigError("llm_variants must lie in [0, " + std::to_string(kMaxPromptVariants) + "]");
    if (c.output.empty()) throw ConfigError("generation config has no output root");
}

std::vector<SampleSpec> plan_samples(const GenerationConfig& config, const std::vector<StandardViewSpec>& views,
                                     const ObjectCatalog& catalog, const std::vector<CtInventory>& inventory) {
    if (inventory.empty()) throw ConfigError("cannot plan samples for an empty CT inventory");
    std::vector<SampleSpec> specs;
    for (std::size_t c = 0; c < inventory.size(); ++c) {
        const auto& ct = inventory[c];
        for (std::size_t v = 0; v < views.size(); ++v) {
            if (!standard_view_applicable(views[v], ct.present_class_ids, catalog)) continue;
            SampleSpec s;
            s.ct_id = ct.id;
            s.ct_index = c;
            s.kind = ViewKind::standard;
            s.view_name = views[v].name;
            s.view_index = int(v);
            s.id = ct.id + "_std" + two_digit(int(v));
            s.seed = derive_seed(config.seed, ct.id, v);
            specs.push_back(std::move(s));
        }
        for (int r = 0; r < config.random_views_per_ct; ++r) {
            SampleSpec s;
            s.ct_id = ct.id;
            s.ct_index = c;
            s.kind = ViewKind::random;
            s.view_name = "random";
            s.view_index = r;
            s.id = ct.id + "_rnd" + two_digit(r);
            s.seed = derive_seed(config.seed, ct.id, 100000 + std::uint64_t(r));
            specs.push_back(std::move(s));
        }
    }
    return specs;
}

std::vector<SurfaceMesh> place_tools(Rng& rng, const ObjectCatalog& catalog,
                                     const std::map<int, SurfaceMesh>& tool_meshes, const CArmCamera& cam,
                                     std::pair<int, int> count_range, std::vector<ToolPlacement>* placements) {
    std::vector<SurfaceMesh> out;
    if (count_range.second <= 0) return out;
    if (tool_meshes.empty()) throw ConfigError("tool placement requested but the catalog has no tool meshes");
    std::vector<int> ids;
    for (const auto& [id, mesh] : tool_meshes) ids.push_back(id);
    const auto count = rng.uniform_int(count_range.first, count_range.second);
    const Vec3 axis = cam.principal_ray();
    const double near = 0.5 * cam.sad, far = std::min(1.5 * cam.sad, 0.95 * cam.sid);
    for (std::int64_t n = 0; n < count; ++n) {
        const int id = ids[std::size_t(rng.uniform_int(0, std::int64_t(ids.size()) - 1))];
        const SurfaceMesh& mesh = tool_meshes.at(id);
        const Mat3 rotation = random_rotation(rng);
        const double u = rng.uniform(0.0, cam.width - 1.0), v = rng.uniform(0.0, cam.height - 1.0);
        const double depth = rng.uniform(near, far);
        const Ray ray = ray_through_pixel(cam, u, v);
        const Vec3 target = ray.origin + ray.direction * (depth / ray.direction.dot(axis));
        const Vec3 translation = target - rotation * mesh.centroid();
        SurfaceMesh posed = transformed(mesh, rotation, translation);
        posed.kind = ObjectKind::tool;
        posed.class_id = id;
        posed.name = catalog.tool(id).name;
        posed.material = catalog.tool(id).material;
        if (placements) {
            placements->push_back({object_key(ObjectKind::tool, id), id, posed.name, posed.material, rotation,
                                   translation});
        }
        out.push_back(std::move(posed));
    }
    return out;
}

std::vector<CtInventory> SceneAssets::inventory() const {
    std::vector<CtInventory> inv;
    for (const auto& ct : cts) inv.push_back({ct.id, ct.present_class_ids});
    return inv;
}

CtAssets make_ct_assets(std::string id, CtVolume volume, const ObjectCatalog& catalog, const fs::path& mesh_dir) {
    CtAssets ct;
    ct.id = std::move(id);
    if (!volume.has_labels()) throw LoadError("volume '" + ct.id + "' has no label field");
    std::map<int, std::size_t> counts;
    for (auto l : volume.labels)
        if (l) ++counts[l];
    std::map<int, fs::path> overrides;
    if (!mesh_dir.empty()) {
        if (!fs::is_directory(mesh_dir)) throw LoadError("mesh directory not found: " + mesh_dir.string());
        for (const auto& e : fs::directory_iterator(mesh_dir)) {
            const auto ext = e.path().extension().string();
            if (ext != ".stl" && ext != ".obj") continue;
            try {
                overrides[std::stoi(e.path().stem().string())] = e.path();
            } catch (const std::exception&) {
                continue;
            }
        }
    }
    volume.id = ct.id;
    for (const auto& [class_id, n] : counts) {
        if (n < kMinLabelVoxels && !overrides.count(class_id)) {
            log_warning("volume '" + ct.id + "': class " + std::to_string(class_id) + " has only " +
                        std::to_string(n) + " voxels and is skipped");
            continue;
        }
        SurfaceMesh mesh;
        if (auto it = overrides.find(class_id); it != overrides.end()) {
            mesh = load_mesh(it->second);
        } else {
            mesh = voxelize_labels_to_meshes(volume, class_id, &catalog);
        }
        mesh.kind = ObjectKind::organ;
        mesh.class_id = class_id;
        mesh.name = catalog.organ(class_id).name;
        mesh.description = catalog.organ(class_id).description;
        ct.present_class_ids.push_back(class_id);
        ct.casters.push_back(std::make_unique<MeshRayCaster>(mesh));
        ct.organs.push_back(std::move(mesh));
    }
    ct.volume = std::move(volume);
    return ct;
}

SceneAssets load_assets(const GenerationConfig& config) {
    validate_config(config);
    SceneAssets a;
    a.catalog = config.catalog.empty() ? catalog_from_json(parse_json(shipped_catalog_json(), "shipped catalog"))
                                       : load_catalog(config.catalog);
    a.catalog.validate();
    a.views = config.views.empty() ? view_catalog_from_json(parse_json(shipped_views_json(), "shipped views"))
                                   : load_view_catalog(config.views);
    a.templates = config.templates.empty()
                      ? template_bank_from_json(parse_json(shipped_templates_json(), "shipped templates"))
                      : load_template_bank(config.templates);
    if (config.augmentation.empty()) {
        a.plan = plan_from_json(parse_json(shipped_plan_json(), "shipped plan"));
        a.plan_name = "domain_randomization";
    } else {
        a.plan = load_plan(config.augmentation);
        a.plan_name = config.augmentation.filename().string();
    }
    if (config.tool_count.second > 0) {
        if (std::size_t(config.tool_count.second) > a.catalog.tools.size())
            throw ConfigError("tool_count maximum " + std::to_string(config.tool_count.second) +
                              " exceeds the catalog's " + std::to_string(a.catalog.tools.size()) + " tools");
        for (const auto& [id, entry] : a.catalog.tools) {
            SurfaceMesh mesh = load_mesh(entry.mesh_path);
            mesh.kind = ObjectKind::tool;
            mesh.class_id = id;
            mesh.name = entry.name;
            mesh.material = entry.material;
            a.tool_meshes.emplace(id, std::move(mesh));
        }
    }
    a.cts.resize(config.cts.size());
    parallel_for(int(config.cts.size()), config.workers, [&](int i) {
        const auto& src = config.cts[std::size_t(i)];
        a.cts[std::size_t(i)] = make_ct_assets(src.id, load_volume(src.volume, &a.catalog), a.catalog, src.mesh_dir);
    });
    return a;
}

GeneratedSample generate_sample(const SampleSpec& spec, const SceneAssets& assets, const GenerationConfig& config,
                                LlmClient* llm) {
    const CtAssets& ct = assets.cts.at(spec.ct_index);
    if (ct.organs.empty()) throw GeometryError("volume '" + ct.id + "' has no labeled structures");
    const ObjectCatalog& catalog = assets.catalog;
    const DetectorSpec detector{config.resolution, config.resolution, config.detector_mm / config.resolution};

    Rng camera_rng(derive_seed(spec.seed, "camera", 0));
    CArmCamera cam;
    if (spec.kind == ViewKind::standard) {
        cam = sample_standard_view(assets.views.at(std::size_t(spec.view_index)), ct.organs, catalog, camera_rng,
                                   detector);
    } else {
        const auto focus = std::size_t(camera_rng.uniform_int(0, std::int64_t(ct.organs.size()) - 1));
        cam = sample_random_view(camera_rng, ct.organs[focus], ViewBounds{}, detector);
    }

    Rng tool_rng(derive_seed(spec.seed, "tools", 0));
    std::vector<ToolPlacement> placements;
    const auto tools = place_tools(tool_rng, catalog, assets.tool_meshes, cam, config.tool_count, &placements);

    RenderOptions render_options;
    render_options.step_mm = config.step_mm;
    render_options.materials_mu_per_cm = catalog.materials_mu_per_cm;
    const Radiograph radiograph = negative_log_normalize(render(ct.volume, tools, cam, render_options));

    MaskSet masks{cam.width, cam.height, {}};
    for (std::size_t i = 0; i < ct.organs.size(); ++i) {
        Mask m = project_mask(*ct.casters[i], cam);
        if (m.empty()) continue;
        const auto& organ = ct.organs[i];
        masks.entries.push_back({object_key(ObjectKind::organ, organ.class_id), organ.name, ObjectKind::organ,
                                 organ.class_id, std::move(m)});
    }
    std::map<int, Mask> tool_masks;
    for (const auto& tool : tools) {
        const Mask m = project_mask(tool, cam);
        auto [it, fresh] = tool_masks.try_emplace(tool.class_id, m);
        if (!fresh)
            for (std::size_t p = 0; p < m.size(); ++p) it->second.bits[p] |= m.bits[p];
    }
    for (auto& [id, m] : tool_masks) {
        if (m.empty()) continue;
        masks.entries.push_back({object_key(ObjectKind::tool, id), catalog.tool(id).name, ObjectKind::tool, id,
                                 std::move(m)});
    }
    std::set<std::string> present;
    for (const auto& e : masks.entries) present.insert(e.key);
    if (config.group_masks) {
        std::vector<MaskEntry> groups;
        for (const auto& [name, members] : catalog.groups) {
            const bool any = std::any_of(members.begin(), members.end(), [&](int id) {
                return present.count(object_key(ObjectKind::organ, id)) > 0;
            });
            if (!any) continue;
            groups.push_back({group_key(name), name, ObjectKind::group, 0, group_mask(masks, name, catalog)});
        }
        for (auto& g : groups) masks.entries.push_back(std::move(g));
    }

    Rng prompt_rng(derive_seed(spec.seed, "prompts", 0));
    std::vector<PromptRecord> prompts;
    for (const auto& e : masks.entries) {
        std::vector<std::string> extra;
        if (llm) extra = fetch_llm_variants(e.name, config_llm(config), config.llm_variants, *llm);
        for (auto& r : build_prompt_records(e.key, e.name, assets.templates, prompt_rng, extra))
            prompts.push_back(std::move(r));
    }
    if (auto negative = sample_negative_prompt(present, catalog, prompt_rng, config.negative_prompt_rate))
        prompts.push_back(std::move(*negative));

    AugmentationPlan plan = assets.plan;
    plan.seed = derive_seed(spec.seed, "augment", 0);
    GeneratedSample out;
    out.image = apply_plan(radiograph.image, plan, &out.manifest.augmentation_applied);

    auto& m = out.manifest;
    m.id = spec.id;
    m.ct_id = spec.ct_id;
    m.view_name = spec.view_name;
    m.view_kind = spec.kind;
    m.view_index = spec.view_index;
    m.seed = spec.seed;
    m.camera = cam;
    m.image = image_rel(spec.id).generic_string();
    m.masks = std::move(masks);
    m.prompts = std::move(prompts);
    m.tools = std::move(placements);
    m.augmentation_plan = assets.plan_name;
    m.augmentation_seed = plan.seed;
    return out;
}

void write_sample(const GeneratedSample& sample, const fs::path& root, const RunHooks& hooks) {
    const auto& m = sample.manifest;
    PngData png = gray16_from_image(sample.image);
    png.text["Title"] = m.id;
    png.text["Source"] = "fluoroforge";
    png.text["Comment"] = "ct=" + m.ct_id + "; view=" + m.view_name + " (" + to_string(m.view_kind) + ")";
    const fs::path image = root / image_rel(m.id);
    write_png(image, png);
    try {
        if (hooks.after_image_write) hooks.after_image_write(m.id);
        write_file_atomic(root / manifest_rel(m.id), dump(manifest_to_json(m)));
    } catch (const std::runtime_error&) {
        std::error_code ec;
        fs::remove(image, ec);
        throw;
    } catch (const std::logic_error&) {
        std::error_code ec;
        fs::remove(image, ec);
        throw;
    }
}

bool has_valid_manifest(const fs::path& root, const std::string& id) {
    const fs::path path = root / manifest_rel(id);
    if (!fs::is_regular_file(path)) return false;
    try {
        const json j = json::parse(read_file(path));
        return validate_manifest(j, &root).empty() && j.at("id") == id;
    } catch (const std::exception&) {
        return false;
    }
}

SplitResult split_dataset(const std::vector<std::pair<std::string, std::string>>& samples, double frac,
                          std::uint64_t seed) {
    if (!(frac > 0 && frac < 1)) throw ConfigError("split fraction must lie in (0, 1)");
    std::set<std::string> ct_set;
    for (const auto& s : samples) ct_set.insert(s.second);
    if (ct_set.size() < 2) throw ConfigError("a CT-level split needs at least two CTs");
    std::vector<std::string> cts(ct_set.begin(), ct_set.end());
    Rng rng(seed);
    shuffle(cts, rng);
    const auto n = cts.size();
    const auto n_val = std::clamp<std::size_t>(std::size_t(std::llround((1.0 - frac) * double(n))), 1, n - 1);
    SplitResult r;
    const std::set<std::string> val(cts.begin(), cts.begin() + std::ptrdiff_t(n_val));
    for (const auto& c : ct_set) (val.count(c) ? r.val_cts : r.train_cts).push_back(c);
    for (const auto& [id, ct] : samples) (val.count(ct) ? r.val_ids : r.train_ids).push_back(id);
    std::sort(r.train_ids.begin(), r.train_ids.end());
    std::sort(r.val_ids.begin(), r.val_ids.end());
    return r;
}

ThroughputStats throughput_from_durations(const std::vector<double>& seconds) {
    ThroughputStats t;
    std::vector<double> rates;
    for (double s : seconds)
        if (s > 0) rates.push_back(1.0 / s);
    t.n = rates.size();
    if (rates.empty()) return t;
    t.mean = std::accumulate(rates.begin(), rates.end(), 0.0) / double(rates.size());
    double ss = 0;
    for (double r : rates) ss += (r - t.mean) * (r - t.mean);
    t.stddev = rates.size() > 1 ? std::sqrt(ss / double(rates.size() - 1)) : 0.0;
    return t;
}

std::string format_throughput(const ThroughputStats& t) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "%.1f ± %.1f images per second", t.mean, t.stddev);
    return buf;
}

json report_to_json(const RunReport& r) {
    json failures = json::array();
    for (const auto& f : r.failures) failures.push_back({{"id", f.id}, {"error", f.error}});
    json throughput = json::object();
    for (const auto& [kind, t] : r.throughput) {
        throughput[kind] = {{"n", t.n}, {"mean", t.mean}, {"std", t.stddev}, {"text", format_throughput(t)}};
    }
    return {{"planned", r.planned},
            {"generated", r.generated},
            {"resumed", r.resumed},
            {"failed", r.failures.size()},
            {"full_resume", r.full_resume()},
            {"failures", failures},
            {"wall_seconds", r.wall_seconds},
            {"throughput", throughput}};
}

RunReport run_generation(const GenerationConfig& config, const RunHooks& hooks) {
    using clock = std::chrono::steady_clock;
    const auto start = clock::now();
    validate_config(config);
    const fs::path root = config.output;
    ensure_writable(root);
    remove_stale_temporaries(root / "images");
    remove_stale_temporaries(root / "manifests");

    const SceneAssets assets = load_assets(config);
    const auto specs = plan_samples(config, assets.views, assets.catalog, assets.inventory());

    std::unique_ptr<LlmClient> owned_client;
    LlmClient* llm = hooks.llm_client;
    const LlmConfig llm_config = config_llm(config);
    if (!llm && llm_config.enabled()) {
        owned_client = std::make_unique<HttpLlmClient>(llm_config);
        llm = owned_client.get();
    }

    RunReport report;
    report.planned = specs.size();
    std::vector<std::size_t> pending;
    for (std::size_t i = 0; i < specs.size(); ++i) {
        if (has_valid_manifest(root, specs[i].id)) {
            ++report.resumed;
        } else {
            pending.push_back(i);
        }
    }

    std::vector<std::optional<double>> durations(pending.size());
    std::vector<std::optional<std::string>> errors(pending.size());
    parallel_for(int(pending.size()), config.workers, [&](int k) {
        const auto& spec = specs[pending[std::size_t(k)]];
        const auto t0 = clock::now();
        try {
            write_sample(generate_sample(spec, assets, config, llm), root, hooks);
            durations[std::size_t(k)] = std::chrono::duration<double>(clock::now() - t0).count();
        } catch (const std::runtime_error& e) {
            errors[std::size_t(k)] = e.what();
        } catch (const std::logic_error& e) {
            errors[std::size_t(k)] = e.what();
        }
    });

    std::map<std::string, std::vector<double>> by_kind;
    for (std::size_t k = 0; k < pending.size(); ++k) {
        const auto& spec = specs[pending[k]];
        if (errors[k]) {
            report.failures.push_back({spec.id, *errors[k]});
            log_warning("sample " + spec.id + " failed: " + *errors[k]);
        } else {
            ++report.generated;
            by_kind[to_string(spec.kind)].push_back(*durations[k]);
            by_kind["all"].push_back(*durations[k]);
        }
    }
    for (const char* kind : {"standard", "random", "all"}) report.throughput[kind] = throughput_from_durations(by_kind[kind]);

    // Index and splits are rebuilt from the manifests on disk so that they do
    // not depend on which run produced which sample.
    json samples = json::array();
    std::vector<std::pair<std::string, std::string>> split_input;
    std::vector<const SampleSpec*> done;
    for (const auto& s : specs)
        if (has_valid_manifest(root, s.id)) done.push_back(&s);
    std::sort(done.begin(), done.end(), [](auto* a, auto* b) { return a->id < b->id; });
    for (const SampleSpec* s : done) {
        const json m = json::parse(read_file(root / manifest_rel(s->id)));
        samples.push_back({{"id", s->id},
                           {"ct_id", s->ct_id},
                           {"view_kind", to_string(s->kind)},
                           {"view_name", s->view_name},
                           {"image", image_rel(s->id).generic_string()},
                           {"manifest", manifest_rel(s->id).generic_string()},
                           {"masks", m["masks"].size()},
                           {"prompts", m["prompts"].size()}});
        split_input.emplace_back(s->id, s->ct_id);
    }
    write_file_atomic(root / "index.json", dump({{"schema", kManifestSchema}, {"count", samples.size()}, {"samples", samples}}));

    json splits = {{"frac", config.split_frac}};
    try {
        const auto split = split_dataset(split_input, config.split_frac, derive_seed(config.seed, "split", 0));
        splits["train_cts"] = split.train_cts;
        splits["val_cts"] = split.val_cts;
        splits["train"] = split.train_ids;
        splits["val"] = split.val_ids;
    } catch (const ConfigError& e) {
        log_warning(std::string("no validation split: ") + e.what());
        std::set<std::string> cts;
        std::vector<std::string> ids;
        for (const auto& [id, ct] : split_input) ids.push_back(id), cts.insert(ct);
        splits["train_cts"] = std::vector<std::string>(cts.begin(), cts.end());
        splits["val_cts"] = json::array();
        splits["train"] = ids;
        splits["val"] = json::array();
    }
    write_file_atomic(root / "splits.json", dump(splits));

    report.wall_seconds = std::chrono::duration<double>(clock::now() - start).count();
    write_file_atomic(root / "report.json", dump(report_to_json(report)));
    if (!pending.empty() && report.generated == 0)
        throw Error("all " + std::to_string(pending.size()) + " attempted samples failed; see report.json");
    return report;
}

DatasetStats compute_dataset_stats(const fs::path& root) {
    const fs::path index_path = root / "index.json";
    if (!fs::is_regular_file(index_path)) {
        const bool has_manifests = fs::is_directory(root / "manifests") && !fs::is_empty(root / "manifests");
        if (fs::is_directory(root) && !has_manifests) {
            DatasetStats empty;
            for (const char* kind : {"standard", "random"}) empty.samples_per_view_kind[kind] = 0;
            return empty;
        }
        throw LoadError("dataset index not found: " + index_path.string());
    }
    json index;
    try {
        index = json::parse(read_file(index_path));
        if (!index.at("samples").is_array()) throw LoadError("samples is not an array");
    } catch (const std::exception& e) {
        throw LoadError("corrupt dataset index " + index_path.string() + ": " + e.what());
    }

    DatasetStats s;
    std::vector<std::string> bad;
    std::set<std::string> listed;
    for (const auto& entry : index["samples"]) {
        std::string id;
        try {
            id = entry.at("id").get<std::string>();
            listed.insert(id);
            const auto m = load_manifest(root / entry.at("manifest").get<std::string>());
            if (m.id != id || m.ct_id != entry.at("ct_id").get<std::string>() ||
                to_string(m.view_kind) != entry.at("view_kind").get<std::string>() ||
                m.masks.entries.size() != entry.at("masks").get<std::size_t>() ||
                m.prompts.size() != entry.at("prompts").get<std::size_t>()) {
                bad.push_back(id);
                continue;
            }
            ++s.samples;
            ++s.samples_per_view_kind[to_string(m.view_kind)];
            s.masks += m.masks.entries.size();
            s.prompts += m.prompts.size();
            for (const auto& e : m.masks.entries)
                if (e.kind == ObjectKind::tool) ++s.tool_frequency[e.name];
        } catch (const std::exception&) {
            bad.push_back(id.empty() ? "<unnamed entry>" : id);
        }
    }
    if (fs::is_directory(root / "manifests")) {
        for (const auto& e : fs::directory_iterator(root / "manifests")) {
            if (e.path().extension() != ".json") continue;
            const auto id = e.path().stem().string();
            if (!listed.count(id)) bad.push_back(id + " (not in index)");
        }
    }
    if (!bad.empty()) {
        std::sort(bad.begin(), bad.end());
        std::string msg = "index and manifests disagree for:";
        for (const auto& id : bad) msg += " " + id;
        throw MismatchError(msg);
    }
    for (const char* kind : {"standard", "random"}) s.samples_per_view_kind.try_emplace(kind, 0);
    s.masks_per_image = s.samples ? double(s.masks) / double(s.samples) : 0.0;
    s.prompts_per_mask = s.masks ? double(s.prompts) / double(s.masks) : 0.0;
    if (fs::is_regular_file(root / "splits.json")) {
        try {
            const json splits = json::parse(read_file(root / "splits.json"));
            s.train = splits.at("train").size();
            s.val = splits.at("val").size();
        } catch (const std::exception& e) {
            throw LoadError(std::string("corrupt splits.json: ") + e.what());
        }
    }
    return s;
}

json stats_to_json(const DatasetStats& s) {
    return {{"samples", s.samples},
            {"samples_per_view_kind", s.samples_per_view_kind},
            {"masks", s.masks},
            {"prompts", s.prompts},
            {"masks_per_image", s.masks_per_image},
            {"prompts_per_mask", s.prompts_per_mask},
            {"tool_frequency", s.tool_frequency},
            {"splits", {{"train", s.train}, {"val", s.val}}}};
}

}  // namespace fluoroforge
