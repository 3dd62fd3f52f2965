#include "fluoroforge/manifest.hpp"

#include <set>

#include "fluoroforge/error.hpp"
#include "fluoroforge/files.hpp"
#include "fluoroforge/rle.hpp"

namespace fluoroforge {

using nlohmann::json;

namespace {

json vec_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

Vec3 vec_from(const json& j) {
    if (!j.is_array() || j.size() != 3) throw LoadError("expected a 3-vector");
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

json mat_json(const Mat3& m) {
    json rows = json::array();
    for (int r = 0; r < 3; ++r) rows.push_back({m(r, 0), m(r, 1), m(r, 2)});
    return rows;
}

Mat3 mat_from(const json& j) {
    if (!j.is_array() || j.size() != 3) throw LoadError("expected a 3x3 matrix");
    Mat3 m;
    for (int r = 0; r < 3; ++r) m.row(r) = vec_from(j[std::size_t(r)]).transpose();
    return m;
}

// Field checks that collect problems instead of throwing.
struct Checker {
    std::vector<std::string>& problems;

    bool require(const json& j, const std::string& field, json::value_t type, const std::string& where) {
        if (!j.is_object() || !j.contains(field)) {
            problems.push_back(where + ": missing '" + field + "'");
            return false;
        }
        const auto t = j.at(field).type();
        const bool number = type == json::value_t::number_float &&
                            (t == json::value_t::number_integer || t == json::value_t::number_unsigned);
        const bool integer = type == json::value_t::number_integer && t == json::value_t::number_unsigned;
        if (t != type && !number && !integer) {
            problems.push_back(where + ": '" + field + "' has type " + j.at(field).type_name());
            return false;
        }
        return true;
    }
};

}  // namespace

const char* to_string(ViewKind kind) { return kind == ViewKind::standard ? "standard" : "random"; }

ViewKind view_kind_from_string(const std::string& s) {
    if (s == "standard") return ViewKind::standard;
    if (s == "random") return ViewKind::random;
    throw LoadError("unknown view kind '" + s + "'");
}

json camera_to_json(const CArmCamera& c) {
    return {{"source", vec_json(c.source)},
            {"detector_center", vec_json(c.detector_center)},
            {"detector_u", vec_json(c.detector_u)},
            {"detector_v", vec_json(c.detector_v)},
            {"sid", c.sid},
            {"sad", c.sad},
            {"pixel_size", c.pixel_size},
            {"width", c.width},
            {"height", c.height}};
}

CArmCamera camera_from_json(const json& j) {
    CArmCamera c;
    c.source = vec_from(j.at("source"));
    c.detector_center = vec_from(j.at("detector_center"));
    c.detector_u = vec_from(j.at("detector_u"));
    c.detector_v = vec_from(j.at("detector_v"));
    c.sid = j.at("sid").get<double>();
    c.sad = j.at("sad").get<double>();
    c.pixel_size = j.at("pixel_size").get<double>();
    c.width = j.at("width").get<int>();
    c.height = j.at("height").get<int>();
    return c;
}

std::vector<std::string> validate_manifest(const json& j, const std::filesystem::path* root) {
    std::vector<std::string> problems;
    Checker check{problems};
    using T = json::value_t;
    if (!j.is_object()) return {"manifest is not a JSON object"};
    if (check.require(j, "schema", T::number_integer, "manifest") && j["schema"].get<int>() != kManifestSchema)
        problems.push_back("manifest: unsupported schema " + j["schema"].dump());
    check.require(j, "id", T::string, "manifest");
    check.require(j, "ct_id", T::string, "manifest");
    check.require(j, "seed", T::number_integer, "manifest");
    const std::string where = j.contains("id") && j["id"].is_string() ? j["id"].get<std::string>() : "manifest";

    int width = -1, height = -1;
    if (check.require(j, "width", T::number_integer, where) && check.require(j, "height", T::number_integer, where)) {
        width = j["width"].get<int>();
        height = j["height"].get<int>();
        if (width <= 0 || height <= 0) problems.push_back(where + ": non-positive image dims");
    }
    if (check.require(j, "view", T::object, where)) {
        const auto& v = j["view"];
        check.require(v, "name", T::string, where + ".view");
        check.require(v, "index", T::number_integer, where + ".view");
        if (check.require(v, "kind", T::string, where + ".view")) {
            const auto k = v["kind"].get<std::string>();
            if (k != "standard" && k != "random") problems.push_back(where + ".view: bad kind '" + k + "'");
        }
    }
    if (check.require(j, "camera", T::object, where)) {
        try {
            const auto cam = camera_from_json(j["camera"]);
            if (cam.width != width || cam.height != height)
                problems.push_back(where + ".camera: detector dims differ from image dims");
        } catch (const std::exception& e) {
            problems.push_back(where + ".camera: " + e.what());
        }
    }
    if (check.require(j, "image", T::string, where) && root) {
        if (!std::filesystem::is_regular_file(*root / j["image"].get<std::string>()))
            problems.push_back(where + ": image file '" + j["image"].get<std::string>() + "' is missing");
    }

    std::set<std::string> keys;
    if (check.require(j, "masks", T::array, where)) {
        for (const auto& m : j["masks"]) {
            const std::string mw = where + ".masks";
            if (!check.require(m, "key", T::string, mw)) continue;
            const auto key = m["key"].get<std::string>();
            if (!keys.insert(key).second) problems.push_back(mw + ": duplicate key '" + key + "'");
            check.require(m, "name", T::string, mw + "[" + key + "]");
            check.require(m, "id", T::number_integer, mw + "[" + key + "]");
            if (check.require(m, "kind", T::string, mw + "[" + key + "]")) {
                try {
                    object_kind_from_string(m["kind"].get<std::string>());
                } catch (const std::exception& e) {
                    problems.push_back(mw + "[" + key + "]: " + e.what());
                }
            }
            if (!check.require(m, "rle", T::object, mw + "[" + key + "]")) continue;
            try {
                const Mask decoded = rle_from_json(m["rle"]);
                if (decoded.width != width || decoded.height != height)
                    problems.push_back(mw + "[" + key + "]: RLE dims differ from image dims");
                if (m.contains("area") && m["area"] != decoded.area())
                    problems.push_back(mw + "[" + key + "]: declared area differs from decoded area");
            } catch (const std::exception& e) {
                problems.push_back(mw + "[" + key + "]: " + e.what());
            }
        }
    }
    if (check.require(j, "prompts", T::array, where)) {
        for (const auto& p : j["prompts"]) {
            try {
                const auto rec = prompt_from_json(p);
                validate_prompt(rec);
                if (rec.kind == PromptKind::negative) {
                    if (keys.count(rec.absent_object))
                        problems.push_back(where + ".prompts: negative prompt names present object '" +
                                           rec.absent_object + "'");
                } else if (!keys.count(rec.target)) {
                    problems.push_back(where + ".prompts: target '" + rec.target + "' has no mask entry");
                }
            } catch (const std::exception& e) {
                problems.push_back(where + ".prompts: " + e.what());
            }
        }
    }
    if (check.require(j, "tools", T::array, where)) {
        for (const auto& t : j["tools"]) {
            const std::string tw = where + ".tools";
            check.require(t, "key", T::string, tw);
            check.require(t, "tool_id", T::number_integer, tw);
            check.require(t, "material", T::string, tw);
            check.require(t, "rotation", T::array, tw);
            check.require(t, "translation", T::array, tw);
        }
    }
    if (check.require(j, "augmentation", T::object, where)) {
        const auto& a = j["augmentation"];
        check.require(a, "plan", T::string, where + ".augmentation");
        check.require(a, "seed", T::number_integer, where + ".augmentation");
        check.require(a, "applied", T::array, where + ".augmentation");
    }
    return problems;
}

json manifest_to_json(const SampleManifest& m) {
    json masks = json::array();
    for (const auto& e : m.masks.entries) {
        masks.push_back({{"key", e.key},
                         {"name", e.name},
                         {"kind", to_string(e.kind)},
                         {"id", e.id},
                         {"area", e.mask.area()},
                         {"rle", rle_to_json(e.mask)}});
    }
    json prompts = json::array();
    for (const auto& p : m.prompts) prompts.push_back(prompt_to_json(p));
    json tools = json::array();
    for (const auto& t : m.tools) {
        tools.push_back({{"key", t.key},
                         {"tool_id", t.tool_id},
                         {"name", t.name},
                         {"material", t.material},
                         {"rotation", mat_json(t.rotation)},
                         {"translation", vec_json(t.translation)}});
    }
    json applied = json::array();
    for (const auto& a : m.augmentation_applied) applied.push_back({{"name", a.name}, {"params", a.params}});
    return {{"schema", kManifestSchema},
            {"id", m.id},
            {"ct_id", m.ct_id},
            {"view", {{"name", m.view_name}, {"kind", to_string(m.view_kind)}, {"index", m.view_index}}},
            {"seed", m.seed},
            {"width", m.masks.width},
            {"height", m.masks.height},
            {"camera", camera_to_json(m.camera)},
            {"image", m.image},
            {"masks", masks},
            {"prompts", prompts},
            {"tools", tools},
            {"augmentation", {{"plan", m.augmentation_plan}, {"seed", m.augmentation_seed}, {"applied", applied}}}};
}

SampleManifest manifest_from_json(const json& j) {
    const auto problems = validate_manifest(j);
    if (!problems.empty()) {
        std::string msg = "invalid manifest:";
        for (const auto& p : problems) msg += "\n  " + p;
        throw LoadError(msg);
    }
    SampleManifest m;
    m.id = j["id"].get<std::string>();
    m.ct_id = j["ct_id"].get<std::string>();
    m.view_name = j["view"]["name"].get<std::string>();
    m.view_kind = view_kind_from_string(j["view"]["kind"].get<std::string>());
    m.view_index = j["view"]["index"].get<int>();
    m.seed = j["seed"].get<std::uint64_t>();
    m.camera = camera_from_json(j["camera"]);
    m.image = j["image"].get<std::string>();
    m.masks.width = j["width"].get<int>();
    m.masks.height = j["height"].get<int>();
    for (const auto& e : j["masks"]) {
        MaskEntry entry;
        entry.key = e["key"].get<std::string>();
        entry.name = e["name"].get<std::string>();
        entry.kind = object_kind_from_string(e["kind"].get<std::string>());
        entry.id = e["id"].get<int>();
        entry.mask = rle_from_json(e["rle"]);
        m.masks.entries.push_back(std::move(entry));
    }
    for (const auto& p : j["prompts"]) m.prompts.push_back(prompt_from_json(p));
    for (const auto& t : j["tools"]) {
        ToolPlacement tp;
        tp.key = t["key"].get<std::string>();
        tp.tool_id = t["tool_id"].get<int>();
        tp.name = t.value("name", "");
        tp.material = t["material"].get<std::string>();
        tp.rotation = mat_from(t["rotation"]);
        tp.translation = vec_from(t["translation"]);
        m.tools.push_back(std::move(tp));
    }
    m.augmentation_plan = j["augmentation"]["plan"].get<std::string>();
    m.augmentation_seed = j["augmentation"]["seed"].get<std::uint64_t>();
    for (const auto& a : j["augmentation"]["applied"])
        m.augmentation_applied.push_back({a.at("name").get<std::string>(), a.value("params", json::object())});
    return m;
}

SampleManifest load_manifest(const std::filesystem::path& path) {
    json j;
    try {
        j = json::parse(read_file(path));
    } catch (const json::exception& e) {
        throw LoadError(path.string() + ": " + e.what());
    }
    try {
        return manifest_from_json(j);
    } catch (const LoadError& e) {
        throw LoadError(path.string() + ": " + e.what());
    }
}

}  // namespace fluoroforge
