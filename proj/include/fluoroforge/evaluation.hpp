#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fluoroforge/image.hpp"

namespace fluoroforge {

inline const std::string kDefaultCondition = "text_only";

// One mask of an archive. Ground-truth items leave `condition` empty.
struct EvalItem {
    std::string sample_id;
    std::string key;
    std::string class_name;
    std::string condition;
    Mask mask;
    double pixel_size_mm = 1.0;
};

struct EvalConfig {
    double min_mask_frac = 0.025;
    std::optional<double> hdd_percentile;
    std::string hdd_unit = "px";  // "px" or "mm" (detector plane)
    int workers = 1;
};

struct EvalRow {
    std::string class_name;  // "ALL" for the per-condition summary
    std::string condition;
    std::size_t n = 0;
    double iou_mean = 0.0;
    double dice_mean = 0.0;
    double hdd_mean = 0.0;  // NaN when no pair had a defined distance
    std::size_t hdd_n = 0;
    std::size_t empty_predictions = 0;
};

struct EvalReport {
    std::vector<EvalRow> rows;  // by condition, then class; ALL closes each condition
    std::string hdd_unit = "px";
    double min_mask_frac = 0.0;
    std::size_t gt_masks = 0;
    std::size_t gt_masks_kept = 0;
    std::vector<std::string> warnings;
};

// Ground truth masks below min_mask_frac of the image are dropped before
// matching. Every kept ground-truth mask must have a prediction for every
// condition present in `pred`. Throws MismatchError listing unmatched ids,
// or when the archives share no sample id.
EvalReport evaluate(const std::vector<EvalItem>& pred, const std::vector<EvalItem>& gt, const EvalConfig& config);

// Archive directories hold `manifests/*.json` (or `*.json` directly). A
// dataset manifest contributes its masks; a prediction file
// {"id", "width", "height", "predictions": [{"key", "condition", "rle"}]}
// contributes predictions. Dataset masks read as predictions get the
// text_only condition.
std::vector<EvalItem> load_archive(const std::filesystem::path& dir, bool as_predictions);

EvalReport evaluate_run(const std::filesystem::path& pred_dir, const std::filesystem::path& gt_dir,
                        const EvalConfig& config);

std::string report_csv(const EvalReport& r);
nlohmann::json eval_report_to_json(const EvalReport& r);

}  // namespace fluoroforge
