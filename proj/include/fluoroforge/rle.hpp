#pragma once

#include <cstdint>
#include <vector>

#include <nlohmann/json.hpp>

#include "fluoroforge/image.hpp"

namespace fluoroforge {

// Run lengths over the column-major traversal (v fastest), alternating
// background and foreground and always starting with a background run (which
// may be zero).
std::vector<std::uint64_t> rle_encode(const Mask& mask);

// Throws MismatchError when the runs do not sum to width * height.
Mask rle_decode(const std::vector<std::uint64_t>& runs, int width, int height);

// {"size": [height, width], "counts": [...]}
nlohmann::json rle_to_json(const Mask& mask);
Mask rle_from_json(const nlohmann::json& j);

}  // namespace fluoroforge
