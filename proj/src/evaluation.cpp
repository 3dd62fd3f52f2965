#include "fluoroforge/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <set>

#include "fluoroforge/error.hpp"
#include "fluoroforge/files.hpp"
#include "fluoroforge/metrics.hpp"
#include "fluoroforge/parallel.hpp"
#include "fluoroforge/rle.hpp"

namespace fluoroforge {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct PairScore {
    double iou = 0.0;
    double dice = 0.0;
    std::optional<double> hdd;
    bool empty_prediction = false;
};

std::string join_limited(const std::vector<std::string>& ids) {
    std::string out;
    const std::size_t shown = std::min<std::size_t>(ids.size(), 20);
    for (std::size_t i = 0; i < shown; ++i) out += (i ? ", " : "") + ids[i];
    if (ids.size() > shown) out += ", ... (" + std::to_string(ids.size()) + " total)";
    return out;
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
    return q + "\"";
}

std::string fixed6(double x) {
    if (std::isnan(x)) return "nan";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", x);
    return buf;
}

json nullable(double x) { return std::isnan(x) ? json(nullptr) : json(x); }

std::vector<fs::path> archive_files(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw LoadError("archive directory not found: " + dir.string());
    const fs::path sub = fs::is_directory(dir / "manifests") ? dir / "manifests" : dir;
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(sub))
        if (e.path().extension() == ".json" && e.is_regular_file()) files.push_back(e.path());
    std::sort(files.begin(), files.end());
    return files;
}

}  // namespace

std::vector<EvalItem> load_archive(const fs::path& dir, bool as_predictions) {
    std::vector<EvalItem> items;
    for (const auto& file : archive_files(dir)) {
        json j;
        try {
            j = json::parse(read_file(file));
            const std::string id = j.at("id").get<std::string>();
            const int width = j.at("width").get<int>(), height = j.at("height").get<int>();
            const double pixel_mm = j.contains("camera") ? j["camera"].value("pixel_size", 1.0) : 1.0;
            auto add = [&](const json& e, std::string condition) {
                EvalItem it;
                it.sample_id = id;
                it.key = e.at("key").get<std::string>();
                it.class_name = e.value("name", it.key);
                it.condition = std::move(condition);
                it.mask = rle_from_json(e.at("rle"));
                it.pixel_size_mm = pixel_mm;
                if (it.mask.width != width || it.mask.height != height)
                    throw MismatchError("mask '" + it.key + "' dims differ from the declared image dims");
                items.push_back(std::move(it));
            };
            if (j.contains("predictions")) {
                if (!as_predictions) throw LoadError("prediction file found in a ground-truth archive");
                for (const auto& p : j["predictions"]) add(p, p.value("condition", kDefaultCondition));
            } else {
                for (const auto& m : j.at("masks")) add(m, as_predictions ? kDefaultCondition : "");
            }
        } catch (const MismatchError& e) {
            throw MismatchError(file.string() + ": " + e.what());
        } catch (const std::exception& e) {
            throw LoadError(file.string() + ": " + e.what());
        }
    }
    return items;
}

EvalReport evaluate(const std::vector<EvalItem>& pred, const std::vector<EvalItem>& gt, const EvalConfig& config) {
    if (!(config.min_mask_frac >= 0 && config.min_mask_frac <= 1))
        throw std::invalid_argument("min_mask_frac must lie in [0, 1]");
    if (config.hdd_unit != "px" && config.hdd_unit != "mm") throw std::invalid_argument("hdd unit must be px or mm");

    EvalReport report;
    report.hdd_unit = config.hdd_unit;
    report.min_mask_frac = config.min_mask_frac;

    std::set<std::string> gt_samples, pred_samples;
    for (const auto& g : gt) gt_samples.insert(g.sample_id);
    for (const auto& p : pred) pred_samples.insert(p.sample_id);
    std::vector<std::string> only_pred, only_gt;
    std::set_difference(pred_samples.begin(), pred_samples.end(), gt_samples.begin(), gt_samples.end(),
                        std::back_inserter(only_pred));
    std::set_difference(gt_samples.begin(), gt_samples.end(), pred_samples.begin(), pred_samples.end(),
                        std::back_inserter(only_gt));
    if (only_pred.size() == pred_samples.size())
        throw MismatchError("prediction and ground-truth archives share no sample id");
    if (!only_pred.empty()) throw MismatchError("predictions for unknown sample ids: " + join_limited(only_pred));
    if (!only_gt.empty()) throw MismatchError("missing predictions for sample ids: " + join_limited(only_gt));

    std::map<std::pair<std::string, std::string>, const EvalItem*> gt_by_id;
    for (const auto& g : gt) {
        if (!gt_by_id.emplace(std::make_pair(g.sample_id, g.key), &g).second)
            throw MismatchError("duplicate ground-truth mask " + g.sample_id + "/" + g.key);
    }
    std::set<std::string> conditions;
    std::map<std::tuple<std::string, std::string, std::string>, const EvalItem*> pred_by_id;
    std::vector<std::string> unknown;
    for (const auto& p : pred) {
        conditions.insert(p.condition);
        if (!gt_by_id.count({p.sample_id, p.key})) unknown.push_back(p.sample_id + "/" + p.key);
        if (!pred_by_id.emplace(std::make_tuple(p.sample_id, p.key, p.condition), &p).second)
            throw MismatchError("duplicate prediction " + p.sample_id + "/" + p.key + " [" + p.condition + "]");
    }
    if (!unknown.empty()) throw MismatchError("predictions without ground truth: " + join_limited(unknown));

    struct Job {
        const EvalItem* gt;
        const EvalItem* pred;
    };
    std::vector<Job> jobs;
    std::vector<std::string> missing;
    report.gt_masks = gt.size();
    for (const auto& [id, g] : gt_by_id) {
        if (!passes_area_filter(g->mask, config.min_mask_frac)) continue;
        ++report.gt_masks_kept;
        for (const auto& c : conditions) {
            auto it = pred_by_id.find({id.first, id.second, c});
            if (it == pred_by_id.end()) {
                missing.push_back(id.first + "/" + id.second + " [" + c + "]");
                continue;
            }
            if (it->second->mask.width != g->mask.width || it->second->mask.height != g->mask.height)
                throw MismatchError("prediction " + id.first + "/" + id.second + " has different dims");
            jobs.push_back({g, it->second});
        }
    }
    if (!missing.empty()) throw MismatchError("missing predictions for: " + join_limited(missing));
    if (report.gt_masks_kept == 0) {
        report.warnings.push_back("no ground-truth mask reaches " + fixed6(config.min_mask_frac) +
                                  " of the image; the report is empty");
        return report;
    }

    std::vector<PairScore> scores(jobs.size());
    parallel_for(int(jobs.size()), config.workers, [&](int k) {
        const auto& job = jobs[std::size_t(k)];
        PairScore s;
        s.iou = iou(job.pred->mask, job.gt->mask);
        s.dice = dice(job.pred->mask, job.gt->mask);
        s.empty_prediction = job.pred->mask.empty();
        if (!s.empty_prediction && !job.gt->mask.empty()) {
            const double spacing = config.hdd_unit == "mm" ? job.gt->pixel_size_mm : 1.0;
            s.hdd = hausdorff(job.pred->mask, job.gt->mask, spacing, config.hdd_percentile);
        }
        scores[std::size_t(k)] = s;
    });

    struct Acc {
        std::size_t n = 0, hdd_n = 0, empty = 0;
        double iou = 0, dice = 0, hdd = 0;
        void add(const PairScore& s) {
            ++n;
            iou += s.iou;
            dice += s.dice;
            empty += s.empty_prediction;
            if (s.hdd) ++hdd_n, hdd += *s.hdd;
        }
    };
    // Jobs are already in (sample, key, condition) order, so the sums below
    // run in a fixed order regardless of worker count.
    std::map<std::string, std::map<std::string, Acc>> per_class;
    std::map<std::string, Acc> per_condition;
    for (std::size_t k = 0; k < jobs.size(); ++k) {
        per_class[jobs[k].pred->condition][jobs[k].gt->class_name].add(scores[k]);
        per_condition[jobs[k].pred->condition].add(scores[k]);
    }
    auto row = [&](const std::string& cls, const std::string& cond, const Acc& a) {
        EvalRow r;
        r.class_name = cls;
        r.condition = cond;
        r.n = a.n;
        r.iou_mean = a.iou / double(a.n);
        r.dice_mean = a.dice / double(a.n);
        r.hdd_mean = a.hdd_n ? a.hdd / double(a.hdd_n) : std::numeric_limits<double>::quiet_NaN();
        r.hdd_n = a.hdd_n;
        r.empty_predictions = a.empty;
        return r;
    };
    for (const auto& [cond, classes] : per_class) {
        for (const auto& [cls, acc] : classes) report.rows.push_back(row(cls, cond, acc));
        report.rows.push_back(row("ALL", cond, per_condition[cond]));
    }
    for (const auto& [cond, acc] : per_condition) {
        if (acc.empty)
            report.warnings.push_back(std::to_string(acc.empty) + " empty prediction(s) under " + cond +
                                      " are excluded from the HDD mean");
    }
    return report;
}

EvalReport evaluate_run(const fs::path& pred_dir, const fs::path& gt_dir, const EvalConfig& config) {
    return evaluate(load_archive(pred_dir, true), load_archive(gt_dir, false), config);
}

std::string report_csv(const EvalReport& r) {
    std::string out = "class,prompt_condition,n,iou_mean,dice_mean,hdd_mean,hdd_unit\n";
    for (const auto& row : r.rows) {
        out += csv_field(row.class_name) + "," + csv_field(row.condition) + "," + std::to_string(row.n) + "," +
               fixed6(row.iou_mean) + "," + fixed6(row.dice_mean) + "," + fixed6(row.hdd_mean) + "," + r.hdd_unit +
               "\n";
    }
    return out;
}

json eval_report_to_json(const EvalReport& r) {
    json rows = json::array();
    for (const auto& row : r.rows) {
        rows.push_back({{"class", row.class_name},
                        {"prompt_condition", row.condition},
                        {"n", row.n},
                        {"iou_mean", row.iou_mean},
                        {"dice_mean", row.dice_mean},
                        {"hdd_mean", nullable(row.hdd_mean)},
                        {"hdd_n", row.hdd_n},
                        {"empty_predictions", row.empty_predictions}});
    }
    return {{"rows", rows},
            {"hdd_unit", r.hdd_unit},
            {"min_mask_frac", r.min_mask_frac},
            {"gt_masks", r.gt_masks},
            {"gt_masks_kept", r.gt_masks_kept},
            {"warnings", r.warnings}};
}

}  // namespace fluoroforge
