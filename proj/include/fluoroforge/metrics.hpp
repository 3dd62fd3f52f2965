#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <vector>

#include "fluoroforge/image.hpp"
#include "fluoroforge/masks.hpp"

namespace fluoroforge {

// Soft predictions are Images with values in [0, 1].

inline constexpr double kProbabilityClamp = 1e-7;

// 1 - (2 sum(p g) + eps) / (sum p + sum g + eps). With eps = 0 and both sums
// zero the loss is 0.
double dice_loss(const Image& pred, const Mask& gt, double eps = 1.0);

// Mean over pixels of -alpha_t (1 - p_t)^gamma log(p_t), p clamped to
// [1e-7, 1 - 1e-7].
double focal_loss(const Image& pred, const Mask& gt, double alpha = 0.25, double gamma = 2.0);

// Mean binary cross-entropy with the same clamping as focal_loss.
double binary_cross_entropy(const Image& pred, const Mask& gt);

struct MultiMaskOutput {
    std::array<Image, 3> masks;
    std::array<double, 3> predicted_iou{};
};

// Throws MismatchError on differing dims, std::invalid_argument on values
// outside [0, 1].
void validate_multimask(const MultiMaskOutput& out);

struct LossWeights {
    double focal = 20.0;
    double dice = 1.0;
    double dice_eps = 1.0;
    double alpha = 0.25;
    double gamma = 2.0;
};

double mask_loss(const Image& pred, const Mask& gt, const LossWeights& w = {});

struct MinLossSelection {
    std::size_t index = 0;
    double loss = 0.0;
};

// Branch with the lowest mask_loss; ties resolve to the lowest index.
MinLossSelection select_min_loss(const MultiMaskOutput& out, const Mask& gt, const LossWeights& w = {});

// IoU of (pred >= threshold) against gt; 1 when both are empty.
double iou_head_target(const Image& pred, const Mask& gt, double threshold = 0.5);

// n * text_loss + sum(point_losses); text_loss alone when there are no points.
double reweight_prompt_losses(double text_loss, const std::vector<double>& point_losses);

Mask binarize(const Image& pred, double threshold = 0.5);

// Both return 1 for two empty masks.
double iou(const Mask& a, const Mask& b);
double dice(const Mask& a, const Mask& b);

// Foreground pixels with at least one 4-neighbour in the background; pixels
// beyond the image border count as background.
Mask boundary(const Mask& m);

// Symmetric Hausdorff distance between the boundaries of a and b, multiplied
// by `spacing`. With `percentile` set, each directed distance is the
// nearest-rank percentile of its per-pixel distances instead of the maximum.
// Throws UndefinedMetric if either mask is empty.
double hausdorff(const Mask& a, const Mask& b, double spacing = 1.0, std::optional<double> percentile = std::nullopt);

// Keeps entries with area >= min_frac * width * height, preserving order.
MaskSet filter_small_masks(const MaskSet& set, double min_frac);
bool passes_area_filter(const Mask& m, double min_frac);

}  // namespace fluoroforge
