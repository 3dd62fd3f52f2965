#include "fluoroforge/prompts.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <sstream>

#include "fluoroforge/distance.hpp"
#include "fluoroforge/error.hpp"

namespace fluoroforge {

const char* to_string(PromptKind kind) {
    switch (kind) {
        case PromptKind::comprehensive: return "comprehensive";
        case PromptKind::noncomprehensive: return "noncomprehensive";
        case PromptKind::negative: return "negative";
    }
    return "comprehensive";
}

PromptKind prompt_kind_from_string(const std::string& s) {
    if (s == "comprehensive") return PromptKind::comprehensive;
    if (s == "noncomprehensive") return PromptKind::noncomprehensive;
    if (s == "negative") return PromptKind::negative;
    throw ConfigError("unknown prompt kind '" + s + "'");
}

void validate_prompt(const PromptRecord& p) {
    if ((p.target == kNoTarget) != (p.kind == PromptKind::negative)) {
        throw ConfigError("prompt target must be NONE exactly for negative prompts");
    }
    if (p.kind != PromptKind::negative && p.variants.empty()) throw ConfigError("prompt '" + p.text + "' has no variants");
    if (p.variants.size() > std::size_t(kMaxPromptVariants)) {
        throw ConfigError("prompt '" + p.text + "' has more than 30 variants");
    }
}

nlohmann::json prompt_to_json(const PromptRecord& p) {
    nlohmann::json j{{"target", p.target}, {"text", p.text}, {"variants", p.variants}, {"kind", to_string(p.kind)}};
    if (!p.absent_object.empty()) j["absent_object"] = p.absent_object;
    return j;
}

PromptRecord prompt_from_json(const nlohmann::json& j) {
    PromptRecord p;
    p.target = j.at("target").get<std::string>();
    p.text = j.at("text").get<std::string>();
    p.variants = j.at("variants").get<std::vector<std::string>>();
    p.kind = prompt_kind_from_string(j.at("kind").get<std::string>());
    p.absent_object = j.value("absent_object", std::string());
    validate_prompt(p);
    return p;
}

Mask group_mask(const MaskSet& masks, const std::string& group, const ObjectCatalog& catalog) {
    auto it = catalog.groups.find(group);
    if (it == catalog.groups.end()) throw ConfigError("unknown organ group '" + group + "'");
    const std::set<int> members(it->second.begin(), it->second.end());
    Mask out(masks.width, masks.height);
    for (const auto& e : masks.entries) {
        if (e.kind != ObjectKind::organ || !members.contains(e.id)) continue;
        require_same_dims(out, e.mask);
        for (std::size_t i = 0; i < out.bits.size(); ++i) out.bits[i] |= e.mask.bits[i] ? 1 : 0;
    }
    return out;
}

TemplateBank template_bank_from_json(const nlohmann::json& j) {
    TemplateBank bank;
    try {
        for (const auto& f : j.at("families")) {
            TemplateFamily fam;
            fam.name = f.at("name").get<std::string>();
            fam.tag = prompt_kind_from_string(f.at("tag").get<std::string>());
            if (fam.tag == PromptKind::negative) throw ConfigError("template family '" + fam.name + "' cannot be negative");
            fam.patterns = f.at("patterns").get<std::vector<std::string>>();
            bank.families.push_back(std::move(fam));
        }
        if (j.contains("synonyms")) bank.synonyms = j["synonyms"].get<std::map<std::string, std::vector<std::string>>>();
        if (j.contains("colloquial")) {
            bank.colloquial = j["colloquial"].get<std::map<std::string, std::vector<std::string>>>();
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed template bank: ") + e.what());
    }
    return bank;
}

TemplateBank load_template_bank(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open template bank " + path.string());
    try {
        return template_bank_from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("template bank " + path.string() + ": " + e.what());
    }
}

namespace {

struct ParsedName {
    std::string name, structure, prefix, ordinal, side, side_letter, ordinal_number;
};

ParsedName parse_name(const std::string& canonical) {
    static const std::vector<std::string> ordinals = {"first", "second", "third",  "fourth",   "fifth",  "sixth",
                                                      "seventh", "eighth", "ninth", "tenth", "eleventh", "twelfth"};
    ParsedName p;
    p.name = canonical;
    std::istringstream in(canonical);
    std::vector<std::string> structure;
    std::vector<std::string> prefix;
    for (std::string tok; in >> tok;) {
        if (tok == "left" || tok == "right") {
            p.side = tok;
            p.side_letter = tok == "left" ? "L" : "R";
        } else if (auto it = std::find(ordinals.begin(), ordinals.end(), tok); it != ordinals.end()) {
            p.ordinal = tok;
            p.ordinal_number = std::to_string(it - ordinals.begin() + 1);
        } else {
            structure.push_back(tok);
            continue;
        }
        if (structure.empty()) prefix.push_back(tok);
    }
    auto join = [](const std::vector<std::string>& v) {
        std::string s;
        for (const auto& t : v) s += (s.empty() ? "" : " ") + t;
        return s;
    };
    p.structure = structure.empty() ? canonical : join(structure);
    p.prefix = join(prefix);
    return p;
}

std::string normalize_space(const std::string& s) {
    std::string out;
    bool space = false;
    for (char c : s) {
        if (c == ' ' || c == '\t' || c == '\n') {
            space = !out.empty();
            continue;
        }
        if (space && c != ',') out += ' ';
        space = false;
        out += c;
    }
    return out;
}

std::string replace_all(std::string s, const std::string& from, const std::string& to) {
    for (std::size_t pos = s.find(from); pos != std::string::npos; pos = s.find(from, pos + to.size())) {
        s.replace(pos, from.size(), to);
    }
    return s;
}

std::vector<std::string> expand(const std::string& pattern, const ParsedName& n, const TemplateBank& bank) {
    auto has = [&](const char* slot) { return pattern.find(slot) != std::string::npos; };
    if (has("{side}") && n.side.empty()) return {};
    if (has("{side_letter}") && n.side_letter.empty()) return {};
    if (has("{ordinal_number}") && n.ordinal_number.empty()) return {};
    std::vector<std::string> synonyms{""}, colloquial{""};
    if (has("{synonym}")) {
        auto it = bank.synonyms.find(n.structure);
        if (it == bank.synonyms.end() || it->second.empty()) return {};
        synonyms = it->second;
    }
    if (has("{colloquial}")) {
        auto it = bank.colloquial.find(n.structure);
        if (it == bank.colloquial.end() || it->second.empty()) return {};
        colloquial = it->second;
    }
    std::string base = pattern;
    base = replace_all(base, "{name}", n.name);
    base = replace_all(base, "{structure}", n.structure);
    base = replace_all(base, "{prefix}", n.prefix);
    base = replace_all(base, "{ordinal_number}", n.ordinal_number);
    base = replace_all(base, "{ordinal}", n.ordinal);
    base = replace_all(base, "{side_letter}", n.side_letter);
    base = replace_all(base, "{side}", n.side);
    std::vector<std::string> out;
    for (const auto& s : synonyms)
        for (const auto& c : colloquial) {
            out.push_back(normalize_space(replace_all(replace_all(base, "{synonym}", s), "{colloquial}", c)));
        }
    return out;
}

}  // namespace

std::vector<TaggedVariant> augment_description_tagged(const std::string& canonical, const TemplateBank& bank, Rng& rng,
                                                      int max_variants) {
    if (max_variants < 1) throw ConfigError("max_variants must be at least 1");
    const ParsedName parsed = parse_name(canonical);
    std::vector<TaggedVariant> candidates;
    std::set<std::string> seen{canonical};
    for (const auto& fam : bank.families)
        for (const auto& pattern : fam.patterns)
            for (auto& text : expand(pattern, parsed, bank)) {
                if (text.empty() || !seen.insert(text).second) continue;
                candidates.push_back({std::move(text), fam.tag});
            }
    shuffle(candidates, rng);
    std::vector<TaggedVariant> out{{canonical, PromptKind::comprehensive}};
    for (auto& c : candidates) {
        if (int(out.size()) >= max_variants) break;
        out.push_back(std::move(c));
    }
    return out;
}

std::vector<std::string> augment_description(const std::string& canonical, const TemplateBank& bank, Rng& rng,
                                             int max_variants) {
    std::vector<std::string> out;
    for (auto& v : augment_description_tagged(canonical, bank, rng, max_variants)) out.push_back(std::move(v.text));
    return out;
}

std::vector<PromptRecord> build_prompt_records(const std::string& target, const std::string& canonical,
                                               const TemplateBank& bank, Rng& rng,
                                               const std::vector<std::string>& extra_variants, int max_variants) {
    auto tagged = augment_description_tagged(canonical, bank, rng, max_variants);
    std::vector<TaggedVariant> merged{tagged.front()};
    std::set<std::string> seen{canonical};
    for (const auto& e : extra_variants) {
        if (seen.insert(e).second) merged.push_back({e, PromptKind::comprehensive});
    }
    for (std::size_t i = 1; i < tagged.size(); ++i) {
        if (seen.insert(tagged[i].text).second) merged.push_back(tagged[i]);
    }
    if (merged.size() > std::size_t(max_variants)) merged.resize(std::size_t(max_variants));

    PromptRecord comp{target, canonical, {}, PromptKind::comprehensive, {}};
    PromptRecord partial{target, {}, {}, PromptKind::noncomprehensive, {}};
    for (const auto& v : merged) (v.tag == PromptKind::comprehensive ? comp : partial).variants.push_back(v.text);
    std::vector<PromptRecord> out{comp};
    if (!partial.variants.empty()) {
        partial.text = partial.variants.front();
        out.push_back(std::move(partial));
    }
    return out;
}

std::optional<PromptRecord> sample_negative_prompt(const std::set<std::string>& present, const ObjectCatalog& catalog,
                                                   Rng& rng, double p) {
    if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("negative prompt probability must lie in [0, 1]");
    if (!rng.bernoulli(p)) return std::nullopt;
    std::vector<std::pair<std::string, std::string>> absent;
    for (const auto& [id, organ] : catalog.organs) {
        auto key = object_key(ObjectKind::organ, id);
        if (!present.contains(key)) absent.emplace_back(std::move(key), organ.name);
    }
    for (const auto& [id, tool] : catalog.tools) {
        auto key = object_key(ObjectKind::tool, id);
        if (!present.contains(key)) absent.emplace_back(std::move(key), tool.name);
    }
    if (absent.empty()) return std::nullopt;
    const auto& [key, name] = absent[std::size_t(rng.uniform_int(0, std::int64_t(absent.size()) - 1))];
    return PromptRecord{kNoTarget, name, {name}, PromptKind::negative, key};
}

PointPrompts sample_point_prompts(const Mask& gt, const std::optional<Mask>& pred, int n, Rng& rng) {
    if (n < 0 || n > kMaxPointPrompts) throw ConfigError("point prompt count must lie in [0, 8]");
    PointPrompts out;
    if (n == 0) return out;
    if (gt.empty()) throw ConfigError("point prompts need a nonempty ground-truth mask");
    if (pred) require_same_dims(gt, *pred);

    const auto depth = squared_depth(gt);
    const std::int64_t total = std::accumulate(depth.begin(), depth.end(), std::int64_t{0});
    std::int64_t r = rng.uniform_int(0, total - 1);
    std::size_t pick = 0;
    for (; pick < depth.size(); ++pick) {
        if (r < depth[pick]) break;
        r -= depth[pick];
    }
    out.push_back({int(pick % std::size_t(gt.width)), int(pick / std::size_t(gt.width)), true});

    std::vector<std::size_t> errors;
    for (std::size_t i = 0; i < gt.bits.size(); ++i) {
        const bool g = gt.bits[i] != 0, q = pred && pred->bits[i] != 0;
        if (g != q && i != pick) errors.push_back(i);
    }
    for (int k = 1; k < n && !errors.empty(); ++k) {
        const auto j = std::size_t(rng.uniform_int(0, std::int64_t(errors.size()) - 1));
        const std::size_t i = errors[j];
        errors[j] = errors.back();
        errors.pop_back();
        out.push_back({int(i % std::size_t(gt.width)), int(i / std::size_t(gt.width)), gt.bits[i] != 0});
    }
    return out;
}

}  // namespace fluoroforge
