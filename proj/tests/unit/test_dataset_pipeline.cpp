#include <doctest.h>

#include <atomic>
#include <cmath>
#include <set>

#include "fluoroforge/error.hpp"
#include "fluoroforge/files.hpp"
#include "fluoroforge/log.hpp"
#include "fluoroforge/manifest.hpp"
#include "fluoroforge/phantom.hpp"
#include "fluoroforge/pipeline.hpp"
#include "fluoroforge/png_io.hpp"
#include "fluoroforge/rle.hpp"
#include "pipeline_fixture.hpp"
#include "support.hpp"

using namespace fluoroforge;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// Simulated crash: not a runtime_error, so the pipeline does not record it.
struct InjectedFault : std::exception {
    const char* what() const noexcept override { return "injected fault"; }
};

class CountingClient : public LlmClient {
public:
    std::vector<std::string> request(const std::string& description, int count) override {
        ++calls;
        std::vector<std::string> out;
        for (int i = 0; i < count; ++i) out.push_back("paraphrase " + std::to_string(i) + " of " + description);
        return out;
    }
    std::atomic<int> calls{0};
};

struct QuietLogs {
    QuietLogs() { set_log_sink(nullptr); }
    ~QuietLogs() { set_log_sink([](LogLevel, const std::string& m) { std::fprintf(stderr, "%s\n", m.c_str()); }); }
};

CtVolume torso_with_labels(std::uint64_t seed) { return make_torso_phantom(seed, 6.0); }

}  // namespace

TEST_CASE("rle examples and errors") {
    CHECK(rle_encode(Mask(4, 4, 0)) == std::vector<std::uint64_t>{16});
    CHECK(rle_encode(Mask(4, 4, 1)) == std::vector<std::uint64_t>{0, 16});
    Mask m(3, 2);
    m.at(1, 0) = 1;  // column-major index 2
    m.at(2, 1) = 1;  // column-major index 5
    CHECK(rle_encode(m) == std::vector<std::uint64_t>{2, 1, 2, 1});
    CHECK(rle_decode({2, 1, 2, 1}, 3, 2) == m);
    CHECK_THROWS_AS(rle_decode({5}, 3, 2), MismatchError);
    CHECK_THROWS_AS(rle_decode({4, 4}, 3, 2), MismatchError);
    CHECK_THROWS_AS(rle_decode({std::uint64_t(-1), 7}, 3, 2), MismatchError);
    CHECK(rle_decode({}, 0, 0).size() == 0);
    const json j = rle_to_json(m);
    CHECK(j["size"] == json::array({2, 3}));
    CHECK(rle_from_json(j) == m);
}

TEST_CASE("rle round trip on random masks") {
    Rng rng(21);
    for (int trial = 0; trial < 2000; ++trial) {
        const int w = int(rng.uniform_int(1, 40)), h = int(rng.uniform_int(1, 40));
        const Mask mask = trial % 2 ? testing::random_mask(rng, w, h, rng.uniform())
                                    : testing::random_blob_mask(rng, w, h, 3);
        const auto runs = rle_encode(mask);
        std::uint64_t sum = 0;
        for (std::size_t i = 0; i < runs.size(); ++i) {
            sum += runs[i];
            if (i > 0) CHECK(runs[i] > 0);
        }
        CHECK(sum == std::uint64_t(w * h));
        CHECK(rle_decode(runs, w, h) == mask);
    }
}

TEST_CASE("png encode and decode") {
    Rng rng(22);
    SUBCASE("16-bit gray with text") {
        PngData p;
        p.width = 17;
        p.height = 9;
        p.samples.resize(17 * 9);
        for (auto& s : p.samples) s = std::uint16_t(rng.uniform_int(0, 65535));
        p.text = {{"Title", "sample"}, {"Comment", "ct=a; view=b"}};
        const std::string bytes = encode_png(p);
        CHECK(decode_png(bytes) == p);
        CHECK(encode_png(p) == bytes);
    }
    SUBCASE("8-bit rgb") {
        PngData p;
        p.width = 5;
        p.height = 6;
        p.channels = 3;
        p.bit_depth = 8;
        p.samples.resize(90);
        for (auto& s : p.samples) s = std::uint16_t(rng.uniform_int(0, 255));
        CHECK(decode_png(encode_png(p)) == p);
        p.samples[0] = 300;
        CHECK_THROWS_AS(encode_png(p), Error);
    }
    SUBCASE("image quantization") {
        const Image img = testing::random_image(rng, 12, 10);
        const Image back = image_from_png(decode_png(encode_png(gray16_from_image(img))));
        for (std::size_t i = 0; i < img.size(); ++i) CHECK(std::abs(back.pixels[i] - img.pixels[i]) <= 0.5 / 65535.0 + 1e-12);
    }
    SUBCASE("bad input") {
        CHECK_THROWS_AS(decode_png("not a png"), LoadError);
        PngData p;
        p.width = 4;
        p.height = 4;
        p.samples.resize(16);
        std::string bytes = encode_png(p);
        bytes.resize(bytes.size() / 2);
        CHECK_THROWS_AS(decode_png(bytes), LoadError);
        CHECK_THROWS_AS(read_png("/nonexistent/file.png"), LoadError);
    }
}

TEST_CASE("atomic writes leave no temporaries") {
    const auto dir = testing::scratch_dir("atomic");
    write_file_atomic(dir / "a.txt", "first");
    write_file_atomic(dir / "a.txt", "second");
    CHECK(read_file(dir / "a.txt") == "second");
    int files = 0;
    for (const auto& e : fs::directory_iterator(dir)) files += e.is_regular_file();
    CHECK(files == 1);
    CHECK_THROWS_AS(write_file_atomic(dir / "missing" / "a.txt", "x"), Error);
}

TEST_CASE("manifest serialization and validation") {
    SampleManifest m;
    m.id = "ct_std00";
    m.ct_id = "ct";
    m.view_name = "chest PA";
    m.view_kind = ViewKind::standard;
    m.seed = 0xfedcba9876543210ULL;
    m.camera = make_camera(Vec3::Zero(), Vec3(0, 1, 0), 700, 1000, {8, 6, 1.0});
    m.image = "images/ct_std00.png";
    m.masks = {8, 6, {}};
    Mask a(8, 6);
    a.at(2, 3) = 1;
    m.masks.entries.push_back({"organ:5", "liver", ObjectKind::organ, 5, a});
    m.prompts.push_back({"organ:5", "liver", {"liver", "the liver"}, PromptKind::comprehensive, ""});
    m.prompts.push_back({kNoTarget, "spleen", {"spleen"}, PromptKind::negative, "organ:1"});
    m.tools.push_back({"tool:2", 2, "bone plate", "titanium", Mat3::Identity(), Vec3(1, 2, 3)});
    m.augmentation_plan = "plan";
    m.augmentation_seed = 99;
    m.augmentation_applied.push_back({"invert", json::object()});

    const json j = manifest_to_json(m);
    CHECK(j["schema"] == 1);
    CHECK(validate_manifest(j).empty());
    const SampleManifest back = manifest_from_json(j);
    CHECK(manifest_to_json(back) == j);
    CHECK(back.seed == m.seed);
    CHECK(back.masks.entries[0].mask == a);
    CHECK(back.camera == m.camera);

    auto broken = [&](auto mutate) {
        json k = j;
        mutate(k);
        return validate_manifest(k);
    };
    CHECK(!broken([](json& k) { k["schema"] = 2; }).empty());
    CHECK(!broken([](json& k) { k.erase("prompts"); }).empty());
    CHECK(!broken([](json& k) { k["masks"][0]["rle"]["size"] = {6, 9}; }).empty());
    CHECK(!broken([](json& k) { k["masks"][0]["rle"]["counts"] = {3}; }).empty());
    CHECK(!broken([](json& k) { k["masks"][0]["area"] = 7; }).empty());
    CHECK(!broken([](json& k) { k["prompts"][0]["target"] = "organ:6"; }).empty());
    CHECK(!broken([](json& k) { k["prompts"][1]["absent_object"] = "organ:5"; }).empty());
    CHECK(!broken([](json& k) { k["masks"].push_back(k["masks"][0]); }).empty());
    CHECK(!broken([](json& k) { k["view"]["kind"] = "oblique"; }).empty());
    CHECK(!broken([](json& k) { k["width"] = "8"; }).empty());
    CHECK_THROWS_WITH_AS(manifest_from_json(json::object()), doctest::Contains("missing"), LoadError);

    const auto dir = testing::scratch_dir("manifest_files");
    CHECK(!validate_manifest(j, &dir).empty());
}

TEST_CASE("generation config parsing") {
    const auto dir = testing::scratch_dir("config");
    CHECK_THROWS_WITH_AS(load_generation_config(dir / "absent.json"), doctest::Contains("absent.json"), ConfigError);
    write_file_atomic(dir / "bad.json", "{\"cts\": [], \"bogus\": 1}");
    CHECK_THROWS_WITH_AS(load_generation_config(dir / "bad.json"), doctest::Contains("bogus"), ConfigError);
    write_file_atomic(dir / "ok.json",
                      R"({"cts": [{"id": "a", "volume": "v/a.volhdr"}], "output": "out", "tool_count": [1, 3],
                          "resolution": 96, "seed": 5})");
    const auto c = load_generation_config(dir / "ok.json");
    CHECK(c.cts[0].volume == dir / "v/a.volhdr");
    CHECK(c.output == dir / "out");
    CHECK(c.tool_count == std::pair{1, 3});
    CHECK(c.resolution == 96);
    CHECK(c.seed == 5);
    CHECK(c.random_views_per_ct == 20);
    validate_config(c);
    const auto round = config_from_json(config_to_json(c));
    CHECK(config_to_json(round) == config_to_json(c));

    auto invalid = [&](auto mutate) {
        GenerationConfig k = c;
        mutate(k);
        CHECK_THROWS_AS(validate_config(k), ConfigError);
    };
    invalid([](auto& k) { k.resolution = 32; });
    invalid([](auto& k) { k.workers = 0; });
    invalid([](auto& k) { k.tool_count = {3, 1}; });
    invalid([](auto& k) { k.cts.clear(); });
    invalid([](auto& k) { k.cts.push_back(k.cts[0]); });
    invalid([](auto& k) { k.split_frac = 1.0; });
    invalid([](auto& k) { k.output.clear(); });
}

TEST_CASE("plan_samples") {
    const auto& catalog = testing::shipped_catalog();
    const auto views = view_catalog_from_json(json::parse(shipped_views_json()));
    GenerationConfig config;
    config.random_views_per_ct = 5;
    config.seed = 3;

    SUBCASE("no applicable series") {
        const auto specs = plan_samples(config, views, catalog, {{"empty", {}}});
        REQUIRE(specs.size() == 5);
        for (const auto& s : specs) CHECK(s.kind == ViewKind::random);
    }
    SUBCASE("torso inventory") {
        const CtAssets ct = make_ct_assets("torso", torso_with_labels(1), catalog);
        const auto specs = plan_samples(config, views, catalog, {{ct.id, ct.present_class_ids}});
        std::set<std::string> names;
        for (const auto& s : specs)
            if (s.kind == ViewKind::standard) names.insert(s.view_name);
        for (const char* expected : {"chest PA", "abdomen AP", "pelvis AP"}) CHECK(names.count(expected) == 1);
        CHECK(names.count("hand PA") == 0);
        // Oracle: a view applies iff its target group shares a class with the CT.
        for (const auto& v : views) {
            bool shared = false;
            const auto g = catalog.groups.find(v.target_group);
            if (g != catalog.groups.end())
                for (int id : g->second)
                    shared |= std::find(ct.present_class_ids.begin(), ct.present_class_ids.end(), id) !=
                          ct.present_class_ids.end();
            CHECK(names.count(v.name) == std::size_t(shared));
        }
    }
    SUBCASE("determinism and seeds") {
        const std::vector<CtInventory> inv = {{"a", {10, 11}}, {"b", {5}}};
        const auto first = plan_samples(config, views, catalog, inv);
        CHECK(first == plan_samples(config, views, catalog, inv));
        std::set<std::string> ids;
        std::set<std::uint64_t> seeds;
        for (const auto& s : first) ids.insert(s.id), seeds.insert(s.seed);
        CHECK(ids.size() == first.size());
        CHECK(seeds.size() == first.size());
        // Reordering the inventory leaves each sample's seed unchanged.
        const auto swapped = plan_samples(config, views, catalog, {inv[1], inv[0]});
        for (const auto& s : swapped) {
            auto it = std::find_if(first.begin(), first.end(), [&](const auto& f) { return f.id == s.id; });
            REQUIRE(it != first.end());
            CHECK(it->seed == s.seed);
        }
    }
    CHECK_THROWS_AS(plan_samples(config, views, catalog, {}), ConfigError);
}

TEST_CASE("place_tools") {
    const auto dir = testing::scratch_dir("tools_catalog");
    write_phantom_inputs(dir, 1);
    const auto catalog = load_catalog(dir / "catalog.json");
    std::map<int, SurfaceMesh> meshes;
    for (const auto& [id, t] : catalog.tools) meshes.emplace(id, load_mesh(t.mesh_path));
    const auto cam = make_camera(Vec3::Zero(), -kAnterior, 700, 1020, {128, 128, 3.2});

    Rng rng(5);
    CHECK(place_tools(rng, catalog, meshes, cam, {0, 0}).empty());

    std::map<std::int64_t, int> counts;
    for (int trial = 0; trial < 300; ++trial) {
        std::vector<ToolPlacement> placements;
        const auto tools = place_tools(rng, catalog, meshes, cam, {1, 3}, &placements);
        ++counts[std::int64_t(tools.size())];
        REQUIRE(placements.size() == tools.size());
        for (std::size_t i = 0; i < tools.size(); ++i) {
            const Vec3 c = tools[i].centroid();
            const auto px = project_point(cam, c);
            CHECK(px.u >= 0.0);
            CHECK(px.u <= cam.width - 1.0 + 1e-9);
            CHECK(px.v >= 0.0);
            CHECK(px.v <= cam.height - 1.0 + 1e-9);
            const double depth = (c - cam.source).dot(cam.principal_ray());
            CHECK(depth >= 0.5 * cam.sad - 1e-6);
            CHECK(depth <= std::min(1.5 * cam.sad, 0.95 * cam.sid) + 1e-6);
            CHECK(tools[i].kind == ObjectKind::tool);
            CHECK(!tools[i].material.empty());
            const Mat3& r = placements[i].rotation;
            CHECK((r * r.transpose() - Mat3::Identity()).norm() < 1e-12);
            CHECK(r.determinant() == doctest::Approx(1.0));
        }
    }
    CHECK(counts.size() == 3);
    for (const auto& [n, c] : counts) CHECK(c > 60);

    Rng a(9), b(9);
    const auto first = place_tools(a, catalog, meshes, cam, {2, 2});
    const auto second = place_tools(b, catalog, meshes, cam, {2, 2});
    REQUIRE(first.size() == 2);
    for (std::size_t i = 0; i < 2; ++i) CHECK(first[i].vertices == second[i].vertices);
}

TEST_CASE("generate_sample on the water cube") {
    const auto& catalog = testing::shipped_catalog();
    SceneAssets assets;
    assets.catalog = catalog;
    assets.views = view_catalog_from_json(json::parse(shipped_views_json()));
    assets.templates = template_bank_from_json(json::parse(shipped_templates_json()));
    assets.plan = plan_from_json(json::parse(shipped_plan_json()));
    assets.plan_name = "domain_randomization";
    assets.cts.push_back(make_ct_assets("cube", make_water_cube_phantom(100, 4, 20, 5), catalog));
    REQUIRE(assets.cts[0].organs.size() == 1);

    GenerationConfig config;
    config.resolution = 64;
    config.step_mm = 2.0;
    config.tool_count = {0, 0};
    config.group_masks = false;
    config.random_views_per_ct = 1;
    const auto specs = plan_samples(config, assets.views, catalog, assets.inventory());
    const auto random = std::find_if(specs.begin(), specs.end(), [](auto& s) { return s.kind == ViewKind::random; });
    REQUIRE(random != specs.end());

    const auto sample = generate_sample(*random, assets, config);
    const auto& m = sample.manifest;
    REQUIRE(m.masks.entries.size() == 1);
    CHECK(m.masks.entries[0].key == "organ:5");
    CHECK(!m.prompts.empty());
    CHECK(m.tools.empty());
    CHECK(validate_manifest(manifest_to_json(m)).empty());
    for (double p : sample.image.pixels) CHECK((p >= 0.0 && p <= 1.0));

    const auto again = generate_sample(*random, assets, config);
    CHECK(again.image == sample.image);
    CHECK(manifest_to_json(again.manifest) == manifest_to_json(m));

    config.group_masks = true;
    const auto grouped = generate_sample(*random, assets, config);
    CHECK(grouped.manifest.masks.entries.size() > 1);
    for (const auto& e : grouped.manifest.masks.entries)
        if (e.kind == ObjectKind::group) CHECK(e.mask == m.masks.entries[0].mask);
}

TEST_CASE("split_dataset") {
    std::vector<std::pair<std::string, std::string>> samples;
    for (int c = 0; c < 10; ++c)
        for (int s = 0; s < 3; ++s) samples.emplace_back("ct" + std::to_string(c) + "_" + std::to_string(s), "ct" + std::to_string(c));
    const auto split = split_dataset(samples, 0.9, 4);
    CHECK(split.train_cts.size() == 9);
    CHECK(split.val_cts.size() == 1);
    CHECK(split.train_ids.size() == 27);
    CHECK(split.val_ids.size() == 3);
    for (const auto& id : split.val_ids) CHECK(id.rfind(split.val_cts[0] + "_", 0) == 0);
    const auto again = split_dataset(samples, 0.9, 4);
    CHECK(again.val_cts == split.val_cts);
    CHECK(again.train_ids == split.train_ids);

    std::set<std::string> val_choices;
    for (std::uint64_t seed = 0; seed < 50; ++seed) val_choices.insert(split_dataset(samples, 0.9, seed).val_cts[0]);
    CHECK(val_choices.size() > 3);
    CHECK(split_dataset(samples, 0.5, 1).val_cts.size() == 5);
    CHECK(split_dataset(samples, 0.99, 1).val_cts.size() == 1);
    CHECK(split_dataset({{"a", "x"}, {"b", "y"}}, 0.1, 1).train_cts.size() == 1);

    CHECK_THROWS_AS(split_dataset({{"a", "x"}, {"b", "x"}}, 0.9, 1), ConfigError);
    CHECK_THROWS_AS(split_dataset(samples, 1.0, 1), ConfigError);
    CHECK_THROWS_AS(split_dataset(samples, 0.0, 1), ConfigError);
}

TEST_CASE("throughput formatting") {
    const auto t = throughput_from_durations({0.5, 0.25, 1.0});
    CHECK(t.n == 3);
    CHECK(t.mean == doctest::Approx(7.0 / 3.0));
    CHECK(t.stddev == doctest::Approx(std::sqrt(((2 - 7.0 / 3) * (2 - 7.0 / 3) + (4 - 7.0 / 3) * (4 - 7.0 / 3) +
                                                 (1 - 7.0 / 3) * (1 - 7.0 / 3)) /
                                                2)));
    CHECK(format_throughput({10, 6.54, 15.66}) == "6.5 ± 15.7 images per second");
    CHECK(format_throughput(throughput_from_durations({})) == "0.0 ± 0.0 images per second");
}

TEST_CASE("run_generation on a small phantom") {
    QuietLogs quiet;
    const auto base = testing::scratch_dir("pipeline_small");
    const auto config = testing::small_phantom_config(base / "inputs", base / "w1");
    const std::size_t expected = 2 * (2 + 2);

    const RunReport first = run_generation(config);
    CHECK(first.planned == expected);
    CHECK(first.generated == expected);
    CHECK(first.failures.empty());
    const auto reference = testing::snapshot(config.output);
    CHECK(reference.size() == 2 * expected + 2);

    SUBCASE("every manifest validates") {
        for (const auto& e : fs::directory_iterator(config.output / "manifests")) {
            const json j = json::parse(read_file(e.path()));
            CHECK(validate_manifest(j, &config.output).empty());
            const auto png = read_png(config.output / j["image"].get<std::string>());
            CHECK(png.width == j["width"]);
            CHECK(png.bit_depth == 16);
        }
        const json report = json::parse(read_file(config.output / "report.json"));
        CHECK(report["throughput"]["standard"]["text"].get<std::string>().find("images per second") !=
              std::string::npos);
        const json splits = json::parse(read_file(config.output / "splits.json"));
        CHECK(splits["train_cts"].size() == 1);
        CHECK(splits["val_cts"].size() == 1);
    }
    SUBCASE("rerun resumes fully") {
        const RunReport again = run_generation(config);
        CHECK(again.generated == 0);
        CHECK(again.resumed == expected);
        CHECK(again.full_resume());
        CHECK(testing::snapshot(config.output) == reference);
    }
    SUBCASE("worker count does not change the output") {
        auto parallel = config;
        parallel.output = base / "w4";
        parallel.workers = 4;
        run_generation(parallel);
        CHECK(testing::snapshot(parallel.output) == reference);
    }
    SUBCASE("interrupted run resumes to identical bytes") {
        auto crashing = config;
        crashing.output = base / "crash";
        int written = 0;
        std::string crashed_id;
        RunHooks hooks;
        hooks.after_image_write = [&](const std::string& id) {
            if (++written == 3) {
                crashed_id = id;
                throw InjectedFault();
            }
        };
        CHECK_THROWS_AS(run_generation(crashing, hooks), InjectedFault);
        CHECK(fs::exists(crashing.output / "images" / (crashed_id + ".png")));
        CHECK(!fs::exists(crashing.output / "manifests" / (crashed_id + ".json")));
        CHECK(!has_valid_manifest(crashing.output, crashed_id));

        const RunReport resumed = run_generation(crashing);
        CHECK(resumed.resumed == 2);
        CHECK(resumed.generated == expected - 2);
        CHECK(testing::snapshot(crashing.output) == reference);
    }
    SUBCASE("failed samples are recorded and never partially written") {
        auto failing = config;
        failing.output = base / "fail";
        RunHooks hooks;
        hooks.after_image_write = [](const std::string& id) {
            if (id.find("_rnd01") != std::string::npos) throw GeometryError("synthetic failure in " + id);
        };
        const RunReport r = run_generation(failing, hooks);
        CHECK(r.failures.size() == 2);
        CHECK(r.generated == expected - 2);
        for (const auto& f : r.failures) {
            CHECK(f.error.find("synthetic failure") != std::string::npos);
            CHECK(!fs::exists(failing.output / "images" / (f.id + ".png")));
            CHECK(!fs::exists(failing.output / "manifests" / (f.id + ".json")));
        }
        const json index = json::parse(read_file(failing.output / "index.json"));
        CHECK(index["count"] == expected - 2);

        hooks.after_image_write = [](const std::string&) { throw GeometryError("everything fails"); };
        auto all_fail = config;
        all_fail.output = base / "all_fail";
        CHECK_THROWS_WITH_AS(run_generation(all_fail, hooks), doctest::Contains("failed"), Error);
        const json report = json::parse(read_file(all_fail.output / "report.json"));
        CHECK(report["failed"] == expected);
    }
    SUBCASE("dataset stats agree with the run") {
        const DatasetStats s = compute_dataset_stats(config.output);
        CHECK(s.samples == first.generated);
        CHECK(s.samples_per_view_kind.at("standard") == 4);
        CHECK(s.samples_per_view_kind.at("random") == 4);
        CHECK(s.train + s.val == s.samples);
        CHECK(s.masks_per_image > 1.0);
        CHECK(s.prompts_per_mask >= 1.0);
        CHECK(stats_to_json(s)["samples"] == expected);
    }
}

TEST_CASE("dataset stats errors") {
    QuietLogs quiet;
    const auto empty = testing::scratch_dir("stats_empty");
    const auto s = compute_dataset_stats(empty);
    CHECK(s.samples == 0);
    CHECK(s.masks_per_image == 0.0);

    const auto base = testing::scratch_dir("stats_mismatch");
    auto config = testing::small_phantom_config(base / "inputs", base / "out", 2, 1);
    run_generation(config);
    const auto index_path = config.output / "index.json";
    json index = json::parse(read_file(index_path));
    const std::string victim = index["samples"][1]["id"];
    index["samples"][1]["masks"] = 999;
    write_file_atomic(index_path, index.dump());
    CHECK_THROWS_WITH_AS(compute_dataset_stats(config.output), doctest::Contains(victim.c_str()), MismatchError);

    index["samples"].erase(1);
    write_file_atomic(index_path, index.dump());
    CHECK_THROWS_WITH_AS(compute_dataset_stats(config.output), doctest::Contains("not in index"), MismatchError);

    write_file_atomic(index_path, "{ corrupt");
    CHECK_THROWS_AS(compute_dataset_stats(config.output), LoadError);
}

TEST_CASE("paraphrase endpoint use during generation") {
    QuietLogs quiet;
    const auto base = testing::scratch_dir("pipeline_llm");
    auto config = testing::small_phantom_config(base / "inputs", base / "offline", 2, 0);
    config.llm.url = "http://127.0.0.1:9/paraphrase";

    CountingClient client;
    RunHooks hooks;
    hooks.llm_client = &client;
    config.offline = true;
    run_generation(config, hooks);
    CHECK(client.calls == 0);

    config.offline = false;
    config.output = base / "online";
    run_generation(config, hooks);
    CHECK(client.calls > 0);
    bool paraphrased = false;
    for (const auto& e : fs::directory_iterator(config.output / "manifests")) {
        const auto m = load_manifest(e.path());
        for (const auto& p : m.prompts) {
            CHECK(p.variants.size() <= std::size_t(kMaxPromptVariants));
            for (const auto& v : p.variants) paraphrased |= v.rfind("paraphrase", 0) == 0;
        }
    }
    CHECK(paraphrased);
}

TEST_CASE("unwritable output root") {
    const auto base = testing::scratch_dir("unwritable");
    auto config = testing::small_phantom_config(base / "inputs", base / "file.txt" / "sub", 2, 0);
    write_file_atomic(base / "file.txt", "occupied");
    CHECK_THROWS_WITH_AS(run_generation(config), doctest::Contains("not writable"), Error);
}
