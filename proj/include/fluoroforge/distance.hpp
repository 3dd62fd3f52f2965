#pragma once

#include <cstdint>
#include <vector>

#include "fluoroforge/image.hpp"

namespace fluoroforge {

inline constexpr std::int64_t kNoFeature = std::int64_t(1) << 60;

// Exact squared Euclidean distance from every pixel to the nearest pixel where
// `feature` is nonzero (separable lower-envelope transform). Pixels get
// kNoFeature when the feature set is empty.
std::vector<std::int64_t> squared_distance_to(const std::vector<std::uint8_t>& feature, int width, int height);

// Squared distance from each foreground pixel to the nearest background
// pixel, treating everything outside the image as background. Zero on
// background.
std::vector<std::int64_t> squared_depth(const Mask& mask);

}  // namespace fluoroforge
