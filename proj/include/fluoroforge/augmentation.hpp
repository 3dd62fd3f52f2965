#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fluoroforge/image.hpp"
#include "fluoroforge/rng.hpp"

namespace fluoroforge {

// All ops take and return images with values in [0, 1].

// n_holes rectangles of side round(hole_frac * image side), filled with the
// input mean.
Image coarse_dropout(const Image& img, Rng& rng, int n_holes, double hole_frac);
Image invert(const Image& img);
// Separable sampled Gaussian, radius ceil(4 sigma), half-sample symmetric
// padding (edge pixel repeated: d c b a | a b c d | d c b a).
Image gaussian_blur(const Image& img, double sigma_px);
Image gamma_contrast(const Image& img, double gamma);
Image window(const Image& img, double center, double width);
// 256-bin CLAHE with bilinear interpolation between tile centers. Pass an
// infinite clip_limit to disable clipping.
Image clahe(const Image& img, int tiles = 8, double clip_limit = 2.0);

struct Window {
    double center = 0.5;
    double width = 1.0;
    bool operator==(const Window&) const = default;
};

inline constexpr Window kFullRangeWindow{0.5, 1.0};

struct KMeans1d {
    std::vector<double> centers;  // ascending
    std::vector<std::size_t> counts;
    std::vector<double> stddevs;  // population
    std::vector<double> objective;  // sum of squared distances after each assignment
    int iterations = 0;
};

// Lloyd iterations on the value multiset; initial centers are the sorted
// values at quantiles (i + 0.5) / k. Equidistant values go to the lower index.
KMeans1d kmeans_1d(std::vector<double> values, int k, int max_iterations = 100, double tolerance = 1e-6);

// Channel windows: full range, then the two most populated clusters that
// hold neither the minimum nor the maximum value. Extreme clusters fill in
// when fewer than two interior clusters exist; fewer than two nonempty
// clusters means every window is full range.
std::array<Window, 3> kmeans_windows(const Image& img, int k = 4);

struct ThreeChannelImage {
    std::array<Image, 3> channels;
    std::array<Window, 3> windows;
};

ThreeChannelImage to_three_channel(const Image& img, int k = 4);

struct AugmentationOp {
    std::string name;
    double probability = 1.0;
    // Scalars are fixed; two-element arrays are sampled uniformly per call.
    nlohmann::json params = nlohmann::json::object();
};

struct AugmentationPlan {
    std::vector<AugmentationOp> ops;
    std::uint64_t seed = 0;
    // Where the plan runs relative to the 3-channel conversion.
    std::string stage = "before_three_channel";
};

struct AppliedOp {
    std::string name;
    nlohmann::json params;
};

const std::vector<std::string>& registered_ops();

// Throws ConfigError for unknown ops or probabilities outside [0, 1].
void validate_plan(const AugmentationPlan& plan);
AugmentationPlan plan_from_json(const nlohmann::json& j);
nlohmann::json plan_to_json(const AugmentationPlan& plan);
AugmentationPlan load_plan(const std::filesystem::path& path);
// dropout, blur, gamma, window, CLAHE, invert.
AugmentationPlan default_plan(std::uint64_t seed = 0);

// Ops run in order; each fires with its probability. The random stream is
// seeded from plan.seed only, so output depends on (img, plan) alone.
Image apply_plan(const Image& img, const AugmentationPlan& plan, std::vector<AppliedOp>* applied = nullptr);

}  // namespace fluoroforge
