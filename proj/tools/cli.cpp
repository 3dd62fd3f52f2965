#include "cli.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <nlohmann/json.hpp>

#include "fluoroforge/error.hpp"
#include "fluoroforge/evaluation.hpp"
#include "fluoroforge/files.hpp"
#include "fluoroforge/log.hpp"
#include "fluoroforge/manifest.hpp"
#include "fluoroforge/pipeline.hpp"
#include "fluoroforge/png_io.hpp"
#include "fluoroforge/preview.hpp"
#include "fluoroforge/vq.hpp"

namespace fluoroforge::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Carries an exit code through the command handlers.
struct ExitError : std::runtime_error {
    int code;
    ExitError(int c, const std::string& msg) : std::runtime_error(msg), code(c) {}
};

std::string fmt(const char* format, double a) {
    char buf[64];
    std::snprintf(buf, sizeof buf, format, a);
    return buf;
}

int cmd_generate(const Options& o, std::ostream& out) {
    GenerationConfig cfg = load_generation_config(o.config);
    if (o.seed_opt->count()) cfg.seed = o.seed;
    if (o.workers_opt->count()) cfg.workers = o.workers;
    if (o.offline) cfg.offline = true;
    if (!o.out.empty()) cfg.output = o.out;
    const RunReport report = run_generation(cfg);
    out << "samples: " << report.planned << " planned, " << report.generated << " generated, " << report.resumed
        << " resumed, " << report.failures.size() << " failed\n";
    for (const auto& [kind, t] : report.throughput)
        if (t.n) out << "throughput (" << kind << "): " << format_throughput(t) << "\n";
    if (report.full_resume()) out << "output already complete; nothing generated\n";
    out << "report: " << (cfg.output / "report.json").string() << "\n";
    return report.failures.empty() ? kExitOk : kExitPartial;
}

int cmd_preview(const Options& o, std::ostream& out) {
    const fs::path root(o.dataset);
    const fs::path manifest_path = root / "manifests" / (o.id + ".json");
    if (!fs::is_regular_file(manifest_path)) throw ExitError(kExitFatal, "unknown sample id '" + o.id + "'");
    const SampleManifest m = load_manifest(manifest_path);
    const Image image = image_from_png(read_png(root / m.image));

    std::vector<const MaskEntry*> selected;
    if (!o.mask.empty()) {
        for (const auto& e : m.masks.entries)
            if (e.name == o.mask || e.key == o.mask) selected.push_back(&e);
        if (selected.empty()) {
            std::string names;
            for (const auto& e : m.masks.entries) names += "\n  " + e.name;
            throw ExitError(kExitFatal, "sample '" + o.id + "' has no mask named '" + o.mask + "'; available:" + names);
        }
        selected.resize(1);
    } else {
        for (const auto& e : m.masks.entries)
            if (e.kind != ObjectKind::group) selected.push_back(&e);
    }
    std::vector<std::string> captions;
    for (const auto* e : selected) {
        for (const auto& p : m.prompts) {
            if (p.target == e->key) {
                captions.push_back(e->name + ": " + p.text);
                break;
            }
        }
    }
    write_png(o.out, render_overlay(image, selected, captions));
    out << "wrote " << o.out << " (" << image.width << "x" << image.height << ", " << selected.size()
        << " contour(s))\n";
    return kExitOk;
}

int cmd_eval(const Options& o, std::ostream& out, std::ostream& err) {
    EvalConfig cfg;
    cfg.min_mask_frac = o.min_mask_frac;
    cfg.hdd_unit = o.hdd_unit;
    cfg.workers = o.workers;
    if (o.percentile_opt->count()) cfg.hdd_percentile = o.hdd_percentile;
    const EvalReport report = evaluate_run(o.pred, o.gt, cfg);
    for (const auto& w : report.warnings) err << "warning: " << w << "\n";
    if (!o.out.empty()) {
        fs::create_directories(o.out);
        write_file_atomic(fs::path(o.out) / "metrics.csv", report_csv(report));
        write_file_atomic(fs::path(o.out) / "metrics.json", eval_report_to_json(report).dump(2) + "\n");
    }
    char line[256];
    std::snprintf(line, sizeof line, "%-32s %-14s %6s %8s %8s %10s\n", "class", "condition", "n", "IoU", "Dice",
                  ("HDD/" + report.hdd_unit).c_str());
    out << line;
    for (const auto& r : report.rows) {
        std::snprintf(line, sizeof line, "%-32s %-14s %6zu %8.4f %8.4f %10.4f\n", r.class_name.c_str(),
                      r.condition.c_str(), r.n, r.iou_mean, r.dice_mean, r.hdd_mean);
        out << line;
    }
    return kExitOk;
}

int cmd_vq_demo(const Options& o, std::ostream& out) {
    const EmbeddingTable table = o.embeddings.empty() ? make_toy_embeddings(o.seed) : read_embeddings(o.embeddings);
    if (table.labels.size() != table.count())
        throw ExitError(kExitFatal, "embedding file has no per-row labels; the demo needs a labeled toy set");
    ToyConfig cfg;
    cfg.seed = o.seed;
    cfg.learning_rate = o.lr;
    cfg.epochs = o.epochs;
    const auto samples = make_toy_task(table, 8, o.seed);
    ToyResult result;
    try {
        result = train_toy_encoder(samples, cfg);
    } catch (const Error& e) {
        throw ExitError(kExitPartial, std::string("training diverged: ") + e.what());
    }
    const double initial = result.loss_trace.front(), final_loss = result.loss_trace.back();
    const double purity = codebook_purity(result.params, result.codebook, samples);

    std::string csv = "epoch,loss\n";
    for (std::size_t i = 0; i < result.loss_trace.size(); ++i)
        csv += std::to_string(i) + "," + fmt("%.17g", result.loss_trace[i]) + "\n";
    const json stats = {{"codebook_size", result.codebook.size()},
                        {"token_dim", result.codebook.dim()},
                        {"samples", samples.size()},
                        {"purity", purity},
                        {"initial_loss", initial},
                        {"final_loss", final_loss},
                        {"usage", result.codebook.usage_counts()},
                        {"seed", o.seed},
                        {"learning_rate", o.lr},
                        {"epochs", o.epochs}};
    if (!o.out.empty()) {
        fs::create_directories(o.out);
        write_file_atomic(fs::path(o.out) / "loss_trace.csv", csv);
        write_file_atomic(fs::path(o.out) / "codebook_stats.json", stats.dump(2) + "\n");
    }
    out << "loss: " << fmt("%.6f", initial) << " -> " << fmt("%.6f", final_loss) << "\n";
    out << "purity: " << fmt("%.1f", 100.0 * purity) << "%\n";
    if (!(final_loss < 0.5 * initial)) {
        out << csv;
        throw ExitError(kExitPartial, "final loss is not below half the initial loss");
    }
    return kExitOk;
}

int cmd_stats(const Options& o, std::ostream& out) {
    const DatasetStats s = compute_dataset_stats(o.dataset);
    if (o.json_output) {
        out << stats_to_json(s).dump(2) << "\n";
        return kExitOk;
    }
    out << "samples: " << s.samples << "\n";
    for (const auto& [kind, n] : s.samples_per_view_kind) out << "  " << kind << ": " << n << "\n";
    out << "masks per image: " << fmt("%.2f", s.masks_per_image) << "\n";
    out << "prompts per mask: " << fmt("%.2f", s.prompts_per_mask) << "\n";
    out << "tool frequency:\n";
    for (const auto& [name, n] : s.tool_frequency) out << "  " << name << ": " << n << "\n";
    out << "splits: train " << s.train << ", val " << s.val << "\n";
    return kExitOk;
}

int cmd_phantom(const Options& o, std::ostream& out) {
    const fs::path config = write_phantom_inputs(o.out, o.seed_opt->count() ? o.seed : 7);
    write_embeddings(make_toy_embeddings(o.seed), fs::path(o.out) / "toy_embeddings.bin");
    out << "wrote " << config.string() << "\n";
    return kExitOk;
}

int exit_code_for(const std::exception& e) {
    if (auto* x = dynamic_cast<const ExitError*>(&e)) return x->code;
    if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const LoadError*>(&e) ||
        dynamic_cast<const MismatchError*>(&e) || dynamic_cast<const ViewUnavailable*>(&e))
        return kExitFatal;
    if (dynamic_cast<const Error*>(&e)) return kExitPartial;
    return kExitFatal;
}

std::string error_type(const std::exception& e) {
    if (dynamic_cast<const ExitError*>(&e)) return "command";
    if (dynamic_cast<const ConfigError*>(&e)) return "config";
    if (dynamic_cast<const LoadError*>(&e)) return "load";
    if (dynamic_cast<const MismatchError*>(&e)) return "mismatch";
    if (dynamic_cast<const GeometryError*>(&e)) return "geometry";
    if (dynamic_cast<const Error*>(&e)) return "runtime";
    return "internal";
}

void report_error(const Options& o, std::ostream& err, const std::string& type, const std::string& message,
                  int code) {
    if (o.json_errors) {
        err << json{{"error", {{"type", type}, {"message", message}, {"exit_code", code}}}}.dump() << "\n";
    } else {
        err << "error: " << message << "\n";
    }
}

}  // namespace

std::unique_ptr<CLI::App> make_app(Options& o) {
    auto app = std::make_unique<CLI::App>("Synthetic fluoroscopy dataset generator and evaluation tools", "fluoroforge");
    app->require_subcommand(1);
    o.seed_opt = app->add_option("--seed", o.seed, "Master random seed")->group("Global");
    o.workers_opt = app->add_option("--workers", o.workers, "Worker threads")->check(CLI::PositiveNumber)->group("Global");
    app->add_flag("--offline", o.offline, "Never contact the paraphrase endpoint (also FLUOROFORGE_OFFLINE=1)")
        ->group("Global");
    app->add_flag("--json-errors", o.json_errors, "Report errors on stderr as one JSON object")->group("Global");

    auto* gen = app->add_subcommand("generate", "Render a dataset from a generation config");
    gen->fallthrough();
    gen->add_option("--config", o.config, "Generation config JSON")->required();
    gen->add_option("--out", o.out, "Output root (overrides the config)");

    auto* preview = app->add_subcommand("preview", "Write a contour overlay PNG for one sample");
    preview->fallthrough();
    preview->add_option("--dataset", o.dataset, "Dataset root")->required();
    preview->add_option("--id", o.id, "Sample id")->required();
    preview->add_option("--out", o.out, "Output PNG path")->required();
    preview->add_option("--mask", o.mask, "Draw only this mask (name or key)");

    auto* eval = app->add_subcommand("eval", "Score predictions against a ground-truth archive");
    eval->fallthrough();
    eval->add_option("--pred", o.pred, "Prediction archive directory")->required();
    eval->add_option("--gt", o.gt, "Ground-truth dataset root")->required();
    eval->add_option("--out", o.out, "Directory for metrics.csv and metrics.json");
    eval->add_option("--min-mask-frac", o.min_mask_frac, "Drop ground-truth masks below this image fraction")
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
    eval->add_option("--hdd-unit", o.hdd_unit, "Hausdorff unit: px or mm (detector plane)")
        ->check(CLI::IsMember({"px", "mm"}))
        ->capture_default_str();
    o.percentile_opt = eval->add_option("--hdd-percentile", o.hdd_percentile,
                                        "Use this percentile of boundary distances instead of the maximum")
                           ->check(CLI::Range(0.0, 100.0));

    auto* vq = app->add_subcommand("vq-demo", "Train the toy VQ prompt encoder");
    vq->fallthrough();
    vq->add_option("--embeddings", o.embeddings, "Labeled embedding file (default: synthetic toy set)");
    vq->add_option("--lr", o.lr, "Learning rate")->capture_default_str();
    vq->add_option("--epochs", o.epochs, "Training epochs")->check(CLI::PositiveNumber)->capture_default_str();
    vq->add_option("--out", o.out, "Directory for loss_trace.csv and codebook_stats.json");

    auto* stats = app->add_subcommand("stats", "Summarize a generated dataset");
    stats->fallthrough();
    stats->add_option("--dataset", o.dataset, "Dataset root")->required();
    stats->add_flag("--json", o.json_output, "Print the statistics as JSON");

    auto* phantom = app->add_subcommand("phantom", "Write the torso phantom inputs and config");
    phantom->fallthrough();
    phantom->add_option("--out", o.out, "Output directory")->required();
    return app;
}

int run(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err) {
    Options o;
    auto app = make_app(o);
    std::vector<std::string> args(argv.begin() + (argv.empty() ? 0 : 1), argv.end());
    std::reverse(args.begin(), args.end());
    try {
        app->parse(args);
    } catch (const CLI::CallForHelp&) {
        out << app->help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app->help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        report_error(o, err, "usage", e.what(), kExitFatal);
        return kExitFatal;
    }

    std::function<void(LogLevel, const std::string&)> sink = [&err](LogLevel level, const std::string& msg) {
        err << (level == LogLevel::warning ? "warning: " : "") << msg << "\n";
    };
    set_log_sink(sink);
    int code = kExitOk;
    try {
        const std::string name = app->get_subcommands().front()->get_name();
        if (name == "generate") code = cmd_generate(o, out);
        else if (name == "preview") code = cmd_preview(o, out);
        else if (name == "eval") code = cmd_eval(o, out, err);
        else if (name == "vq-demo") code = cmd_vq_demo(o, out);
        else if (name == "stats") code = cmd_stats(o, out);
        else if (name == "phantom") code = cmd_phantom(o, out);
    } catch (const std::exception& e) {
        code = exit_code_for(e);
        report_error(o, err, error_type(e), e.what(), code);
    }
    set_log_sink([](LogLevel level, const std::string& msg) {
        std::cerr << (level == LogLevel::warning ? "warning: " : "") << msg << "\n";
    });
    return code;
}

}  // namespace fluoroforge::cli
