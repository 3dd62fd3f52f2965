#include "fluoroforge/augmentation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "fluoroforge/error.hpp"

namespace fluoroforge {

namespace {

constexpr int kBins = 256;

double image_mean(const Image& img) {
    if (img.pixels.empty()) return 0.0;
    return std::accumulate(img.pixels.begin(), img.pixels.end(), 0.0) / double(img.pixels.size());
}

// Half-sample symmetric reflection into [0, n).
int reflect(int i, int n) {
    const int period = 2 * n;
    int m = i % period;
    if (m < 0) m += period;
    return m < n ? m : period - 1 - m;
}

int to_bin(double p) { return std::clamp(int(std::floor(p * kBins)), 0, kBins - 1); }

}  // namespace

Image coarse_dropout(const Image& img, Rng& rng, int n_holes, double hole_frac) {
    if (n_holes < 0) throw ConfigError("coarse_dropout: n_holes must be non-negative");
    if (!(hole_frac > 0.0 && hole_frac <= 0.5)) throw ConfigError("coarse_dropout: hole_frac must lie in (0, 0.5]");
    Image out = img;
    if (n_holes == 0 || img.pixels.empty()) return out;
    const double fill = image_mean(img);
    const int hw = std::max(1, int(std::lround(hole_frac * img.width)));
    const int hh = std::max(1, int(std::lround(hole_frac * img.height)));
    for (int h = 0; h < n_holes; ++h) {
        const int u0 = int(rng.uniform_int(0, img.width - hw));
        const int v0 = int(rng.uniform_int(0, img.height - hh));
        for (int v = v0; v < v0 + hh; ++v)
            for (int u = u0; u < u0 + hw; ++u) out.at(u, v) = fill;
    }
    return out;
}

Image invert(const Image& img) {
    Image out = img;
    for (auto& p : out.pixels) p = 1.0 - p;
    return out;
}

Image gaussian_blur(const Image& img, double sigma_px) {
    if (!(sigma_px >= 0.0)) throw ConfigError("gaussian_blur: sigma must be non-negative");
    if (sigma_px == 0.0 || img.pixels.empty()) return img;
    const int radius = int(std::ceil(4.0 * sigma_px));
    std::vector<double> kernel(2 * radius + 1);
    for (int i = -radius; i <= radius; ++i) kernel[i + radius] = std::exp(-double(i * i) / (2 * sigma_px * sigma_px));
    const double norm = std::accumulate(kernel.begin(), kernel.end(), 0.0);
    for (auto& k : kernel) k /= norm;

    Image tmp(img.width, img.height), out(img.width, img.height);
    for (int v = 0; v < img.height; ++v)
        for (int u = 0; u < img.width; ++u) {
            double acc = 0.0;
            for (int i = -radius; i <= radius; ++i) acc += kernel[i + radius] * img.at(reflect(u + i, img.width), v);
            tmp.at(u, v) = acc;
        }
    for (int v = 0; v < img.height; ++v)
        for (int u = 0; u < img.width; ++u) {
            double acc = 0.0;
            for (int i = -radius; i <= radius; ++i) acc += kernel[i + radius] * tmp.at(u, reflect(v + i, img.height));
            out.at(u, v) = std::clamp(acc, 0.0, 1.0);
        }
    return out;
}

Image gamma_contrast(const Image& img, double gamma) {
    if (!(gamma > 0.0)) throw ConfigError("gamma_contrast: gamma must be positive");
    Image out = img;
    for (auto& p : out.pixels) p = std::pow(std::clamp(p, 0.0, 1.0), gamma);
    return out;
}

Image window(const Image& img, double center, double width) {
    if (!(width > 0.0)) throw ConfigError("window: width must be positive");
    Image out = img;
    for (auto& p : out.pixels) p = std::clamp((p - center) / width + 0.5, 0.0, 1.0);
    return out;
}

Image clahe(const Image& img, int tiles, double clip_limit) {
    if (tiles < 1) throw ConfigError("clahe: tiles must be at least 1");
    if (!(clip_limit >= 1.0)) throw ConfigError("clahe: clip_limit must be at least 1");
    if (img.pixels.empty()) return img;
    const int tx = std::min(tiles, img.width), ty = std::min(tiles, img.height);
    auto edge = [](int i, int n, int t) { return int(std::int64_t(i) * n / t); };

    // luts[(j * tx + i) * kBins + b]
    std::vector<double> luts(std::size_t(tx) * ty * kBins);
    for (int j = 0; j < ty; ++j)
        for (int i = 0; i < tx; ++i) {
            const int u0 = edge(i, img.width, tx), u1 = edge(i + 1, img.width, tx);
            const int v0 = edge(j, img.height, ty), v1 = edge(j + 1, img.height, ty);
            const long area = long(u1 - u0) * long(v1 - v0);
            std::array<long, kBins> hist{};
            for (int v = v0; v < v1; ++v)
                for (int u = u0; u < u1; ++u) ++hist[to_bin(img.at(u, v))];
            if (std::isfinite(clip_limit)) {
                const long limit = std::max(1L, long(clip_limit * double(area) / kBins));
                long excess = 0;
                for (auto& h : hist) {
                    if (h > limit) {
                        excess += h - limit;
                        h = limit;
                    }
                }
                const long spread = excess / kBins, residual = excess % kBins;
                for (auto& h : hist) h += spread;
                if (residual > 0) {
                    const long step = std::max(1L, kBins / residual);
                    long left = residual;
                    for (long b = 0; b < kBins && left > 0; b += step, --left) ++hist[b];
                }
            }
            double* lut = &luts[(std::size_t(j) * tx + i) * kBins];
            long cdf = 0;
            for (int b = 0; b < kBins; ++b) {
                cdf += hist[b];
                lut[b] = double(cdf) / double(area);
            }
        }

    Image out(img.width, img.height);
    const double tile_w = double(img.width) / tx, tile_h = double(img.height) / ty;
    for (int v = 0; v < img.height; ++v) {
        const double gy = (v + 0.5) / tile_h - 0.5;
        int j0 = int(std::floor(gy));
        const double fy = gy - j0;
        const int j1 = std::clamp(j0 + 1, 0, ty - 1);
        j0 = std::clamp(j0, 0, ty - 1);
        for (int u = 0; u < img.width; ++u) {
            const double gx = (u + 0.5) / tile_w - 0.5;
            int i0 = int(std::floor(gx));
            const double fx = gx - i0;
            const int i1 = std::clamp(i0 + 1, 0, tx - 1);
            i0 = std::clamp(i0, 0, tx - 1);
            const int b = to_bin(img.at(u, v));
            auto lut = [&](int i, int j) { return luts[(std::size_t(j) * tx + i) * kBins + b]; };
            // Difference form keeps equal tile maps exactly constant.
            const double top = lut(i0, j0) + fx * (lut(i1, j0) - lut(i0, j0));
            const double bottom = lut(i0, j1) + fx * (lut(i1, j1) - lut(i0, j1));
            out.at(u, v) = std::clamp(top + fy * (bottom - top), 0.0, 1.0);
        }
    }
    return out;
}

KMeans1d kmeans_1d(std::vector<double> values, int k, int max_iterations, double tolerance) {
    if (k < 1) throw ConfigError("kmeans: k must be at least 1");
    KMeans1d r;
    if (values.empty()) return r;
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    std::vector<double> centers(k);
    for (int i = 0; i < k; ++i) {
        centers[i] = values[std::min(n - 1, std::size_t((i + 0.5) * double(n) / k))];
    }

    // Cluster i owns the sorted range [start[i], start[i + 1]).
    std::vector<std::size_t> start(k + 1);
    auto assign = [&] {
        start[0] = 0;
        std::size_t pos = 0;
        for (int i = 0; i < k; ++i) {
            if (i + 1 < k) {
                // Next distinct center above this one; duplicates receive nothing.
                int next = i + 1;
                while (next < k && centers[next] == centers[i]) ++next;
                if (next == k) {
                    pos = n;
                } else {
                    const double mid = 0.5 * (centers[i] + centers[next]);
                    pos = std::size_t(std::upper_bound(values.begin() + long(pos), values.end(), mid) - values.begin());
                }
            } else {
                pos = n;
            }
            start[i + 1] = pos;
        }
    };
    auto range_mean = [&](std::size_t a, std::size_t b) {
        const double m0 = values[a];
        double acc = 0.0;
        for (std::size_t t = a; t < b; ++t) acc += values[t] - m0;
        return m0 + acc / double(b - a);
    };
    auto objective = [&] {
        double acc = 0.0;
        for (int i = 0; i < k; ++i)
            for (std::size_t t = start[i]; t < start[i + 1]; ++t) acc += (values[t] - centers[i]) * (values[t] - centers[i]);
        return acc;
    };

    for (int it = 0; it < max_iterations; ++it) {
        assign();
        r.objective.push_back(objective());
        double shift = 0.0;
        for (int i = 0; i < k; ++i) {
            if (start[i + 1] == start[i]) continue;
            const double m = range_mean(start[i], start[i + 1]);
            shift = std::max(shift, std::abs(m - centers[i]));
            centers[i] = m;
        }
        r.iterations = it + 1;
        if (shift <= tolerance) break;
    }
    assign();
    r.objective.push_back(objective());
    r.centers = centers;
    r.counts.resize(k);
    r.stddevs.assign(k, 0.0);
    for (int i = 0; i < k; ++i) {
        r.counts[i] = start[i + 1] - start[i];
        if (r.counts[i] == 0) continue;
        double acc = 0.0;
        for (std::size_t t = start[i]; t < start[i + 1]; ++t) acc += (values[t] - centers[i]) * (values[t] - centers[i]);
        r.stddevs[i] = std::sqrt(acc / double(r.counts[i]));
    }
    return r;
}

std::array<Window, 3> kmeans_windows(const Image& img, int k) {
    if (k < 2) throw ConfigError("kmeans_windows: k must be at least 2");
    std::array<Window, 3> out{kFullRangeWindow, kFullRangeWindow, kFullRangeWindow};
    const auto km = kmeans_1d(img.pixels, k);
    std::vector<int> nonempty;
    for (int i = 0; i < int(km.counts.size()); ++i)
        if (km.counts[i] > 0) nonempty.push_back(i);
    if (nonempty.size() < 2) return out;

    // Sorted values make the first and last nonempty clusters hold the extremes.
    const int lo = nonempty.front(), hi = nonempty.back();
    std::vector<int> interior, extreme;
    for (int i : nonempty) (i == lo || i == hi ? extreme : interior).push_back(i);
    auto by_count = [&](int a, int b) {
        if (km.counts[a] != km.counts[b]) return km.counts[a] > km.counts[b];
        return km.centers[a] < km.centers[b];
    };
    std::sort(interior.begin(), interior.end(), by_count);
    std::sort(extreme.begin(), extreme.end(), by_count);
    interior.insert(interior.end(), extreme.begin(), extreme.end());
    for (int c = 0; c < 2; ++c) {
        const int i = interior[c];
        out[c + 1] = Window{km.centers[i], std::max(4.0 * km.stddevs[i], 1e-3)};
    }
    return out;
}

ThreeChannelImage to_three_channel(const Image& img, int k) {
    ThreeChannelImage out;
    out.windows = kmeans_windows(img, k);
    for (int c = 0; c < 3; ++c) out.channels[c] = window(img, out.windows[c].center, out.windows[c].width);
    return out;
}

const std::vector<std::string>& registered_ops() {
    static const std::vector<std::string> ops = {"coarse_dropout", "gaussian_blur", "gamma_contrast",
                                                 "window",         "clahe",         "invert"};
    return ops;
}

void validate_plan(const AugmentationPlan& plan) {
    const auto& known = registered_ops();
    for (const auto& op : plan.ops) {
        if (std::find(known.begin(), known.end(), op.name) == known.end()) {
            throw ConfigError("unknown augmentation op '" + op.name + "'");
        }
        if (!(op.probability >= 0.0 && op.probability <= 1.0)) {
            throw ConfigError("augmentation op '" + op.name + "' has probability outside [0, 1]");
        }
        if (!op.params.is_object()) throw ConfigError("augmentation op '" + op.name + "' params must be an object");
    }
}

AugmentationPlan plan_from_json(const nlohmann::json& j) {
    AugmentationPlan plan;
    try {
        plan.seed = j.value("seed", std::uint64_t{0});
        plan.stage = j.value("stage", plan.stage);
        for (const auto& o : j.at("ops")) {
            AugmentationOp op;
            op.name = o.at("op").get<std::string>();
            op.probability = o.value("p", 1.0);
            op.params = o.value("params", nlohmann::json::object());
            plan.ops.push_back(std::move(op));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed augmentation plan: ") + e.what());
    }
    validate_plan(plan);
    return plan;
}

nlohmann::json plan_to_json(const AugmentationPlan& plan) {
    nlohmann::json j;
    j["seed"] = plan.seed;
    j["stage"] = plan.stage;
    j["ops"] = nlohmann::json::array();
    for (const auto& op : plan.ops) j["ops"].push_back({{"op", op.name}, {"p", op.probability}, {"params", op.params}});
    return j;
}

AugmentationPlan load_plan(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open augmentation plan " + path.string());
    try {
        return plan_from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("augmentation plan " + path.string() + ": " + e.what());
    }
}

AugmentationPlan default_plan(std::uint64_t seed) {
    using nlohmann::json;
    AugmentationPlan plan;
    plan.seed = seed;
    plan.ops = {
        {"coarse_dropout", 0.5, json{{"n_holes", {1, 8}}, {"hole_frac", {0.03, 0.12}}}},
        {"gaussian_blur", 0.5, json{{"sigma_px", {0.5, 2.0}}}},
        {"gamma_contrast", 0.8, json{{"log_gamma_std", 0.3}}},
        {"window", 0.5, json{{"center", {0.35, 0.65}}, {"width", {0.5, 1.0}}}},
        {"clahe", 0.5, json{{"tiles", 8}, {"clip_limit", 2.0}}},
        {"invert", 0.25, json::object()},
    };
    return plan;
}

namespace {

double real_param(const nlohmann::json& params, const char* key, double fallback, Rng& rng) {
    if (!params.contains(key)) return fallback;
    const auto& v = params[key];
    if (v.is_number()) return v.get<double>();
    if (v.is_array() && v.size() == 2) return rng.uniform(v[0].get<double>(), v[1].get<double>());
    throw ConfigError(std::string("augmentation parameter '") + key + "' must be a number or [lo, hi]");
}

int int_param(const nlohmann::json& params, const char* key, int fallback, Rng& rng) {
    if (!params.contains(key)) return fallback;
    const auto& v = params[key];
    if (v.is_number()) return v.get<int>();
    if (v.is_array() && v.size() == 2) return int(rng.uniform_int(v[0].get<int>(), v[1].get<int>()));
    throw ConfigError(std::string("augmentation parameter '") + key + "' must be an integer or [lo, hi]");
}

}  // namespace

Image apply_plan(const Image& img, const AugmentationPlan& plan, std::vector<AppliedOp>* applied) {
    validate_plan(plan);
    Rng rng(plan.seed);
    Image cur = img;
    for (const auto& op : plan.ops) {
        if (!rng.bernoulli(op.probability)) continue;
        const auto& p = op.params;
        nlohmann::json used = nlohmann::json::object();
        if (op.name == "coarse_dropout") {
            const int holes = int_param(p, "n_holes", 4, rng);
            const double frac = real_param(p, "hole_frac", 0.1, rng);
            used = {{"n_holes", holes}, {"hole_frac", frac}};
            cur = coarse_dropout(cur, rng, holes, frac);
        } else if (op.name == "gaussian_blur") {
            const double sigma = real_param(p, "sigma_px", 1.0, rng);
            used = {{"sigma_px", sigma}};
            cur = gaussian_blur(cur, sigma);
        } else if (op.name == "gamma_contrast") {
            double gamma;
            if (p.contains("gamma")) {
                gamma = real_param(p, "gamma", 1.0, rng);
            } else {
                gamma = std::exp(rng.normal(0.0, real_param(p, "log_gamma_std", 0.3, rng)));
            }
            used = {{"gamma", gamma}};
            cur = gamma_contrast(cur, gamma);
        } else if (op.name == "window") {
            const double center = real_param(p, "center", 0.5, rng);
            const double width = real_param(p, "width", 1.0, rng);
            used = {{"center", center}, {"width", width}};
            cur = window(cur, center, width);
        } else if (op.name == "clahe") {
            const int tiles = int_param(p, "tiles", 8, rng);
            const double clip = real_param(p, "clip_limit", 2.0, rng);
            used = {{"tiles", tiles}, {"clip_limit", clip}};
            cur = clahe(cur, tiles, clip);
        } else if (op.name == "invert") {
            cur = invert(cur);
        }
        if (applied) applied->push_back({op.name, used});
    }
    return cur;
}

}  // namespace fluoroforge
