#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fluoroforge/catalog.hpp"
#include "fluoroforge/image.hpp"
#include "fluoroforge/masks.hpp"
#include "fluoroforge/rng.hpp"

namespace fluoroforge {

inline constexpr int kMaxPromptVariants = 30;
inline constexpr int kMaxPointPrompts = 8;
inline const std::string kNoTarget = "NONE";

enum class PromptKind { comprehensive, noncomprehensive, negative };
const char* to_string(PromptKind kind);
PromptKind prompt_kind_from_string(const std::string& s);

struct PromptRecord {
    std::string target;  // object or group key, or kNoTarget
    std::string text;
    std::vector<std::string> variants;
    PromptKind kind = PromptKind::comprehensive;
    std::string absent_object;  // negative prompts: key of the object that is not in the image

    bool operator==(const PromptRecord&) const = default;
};

void validate_prompt(const PromptRecord& p);
nlohmann::json prompt_to_json(const PromptRecord& p);
PromptRecord prompt_from_json(const nlohmann::json& j);

// Pixelwise OR of the organ masks of the group's members present in the set.
// Throws ConfigError for an unknown group.
Mask group_mask(const MaskSet& masks, const std::string& group, const ObjectCatalog& catalog);

struct TemplateFamily {
    std::string name;
    PromptKind tag = PromptKind::comprehensive;
    std::vector<std::string> patterns;
};

// Slot grammar. Always available: {name} (canonical), {structure} (name without
// laterality or ordinal words), {prefix} (words preceding the structure),
// {ordinal} (may be empty). Required, pattern skipped when missing: {side},
// {side_letter}, {ordinal_number}, {synonym}, {colloquial}.
struct TemplateBank {
    std::vector<TemplateFamily> families;
    std::map<std::string, std::vector<std::string>> synonyms;    // keyed by structure
    std::map<std::string, std::vector<std::string>> colloquial;  // keyed by structure
};

TemplateBank template_bank_from_json(const nlohmann::json& j);
TemplateBank load_template_bank(const std::filesystem::path& path);

struct TaggedVariant {
    std::string text;
    PromptKind tag = PromptKind::comprehensive;
};

// Canonical first, then a seeded shuffle of the deduplicated template
// expansions, truncated to max_variants.
std::vector<TaggedVariant> augment_description_tagged(const std::string& canonical, const TemplateBank& bank, Rng& rng,
                                                      int max_variants = kMaxPromptVariants);
std::vector<std::string> augment_description(const std::string& canonical, const TemplateBank& bank, Rng& rng,
                                             int max_variants = kMaxPromptVariants);

// Splits at most max_variants variants of one target into a comprehensive and
// a noncomprehensive record (either may be absent). Extra variants, such as
// endpoint paraphrases, count as comprehensive and take precedence over
// template expansions of the same tag.
std::vector<PromptRecord> build_prompt_records(const std::string& target, const std::string& canonical,
                                               const TemplateBank& bank, Rng& rng,
                                               const std::vector<std::string>& extra_variants = {},
                                               int max_variants = kMaxPromptVariants);

// Returns a negative prompt with probability p naming a catalog object (organ
// or tool key) that is not in `present`; none when every object is present.
std::optional<PromptRecord> sample_negative_prompt(const std::set<std::string>& present, const ObjectCatalog& catalog,
                                                   Rng& rng, double p);

struct PointPrompt {
    int u = 0;
    int v = 0;
    bool positive = true;
    bool operator==(const PointPrompt&) const = default;
};

using PointPrompts = std::vector<PointPrompt>;

// First click: positive, drawn from gt with weight equal to squared depth.
// Follow-ups: distinct pixels drawn uniformly from gt xor pred (pred absent
// means empty), positive inside gt. Stops early once the region is used up.
PointPrompts sample_point_prompts(const Mask& gt, const std::optional<Mask>& pred, int n, Rng& rng);

}  // namespace fluoroforge
