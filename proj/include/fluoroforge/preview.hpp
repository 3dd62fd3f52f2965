#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "fluoroforge/masks.hpp"
#include "fluoroforge/png_io.hpp"

namespace fluoroforge {

// Contour colors, assigned to masks in the order they are passed and reused
// cyclically: red, green, blue, yellow, magenta, cyan, orange, purple,
// lime, pink.
inline constexpr std::array<std::array<std::uint8_t, 3>, 10> kOverlayPalette{{
    {230, 25, 75},
    {60, 180, 75},
    {0, 130, 200},
    {255, 225, 25},
    {240, 50, 230},
    {70, 240, 240},
    {245, 130, 48},
    {145, 30, 180},
    {210, 245, 60},
    {250, 190, 212},
}};

// 8-bit RGB copy of the gray image with each mask's 4-connected boundary
// painted in its palette color (later masks paint over earlier ones).
// Captions go into one tEXt chunk "Caption", one line each.
PngData render_overlay(const Image& gray, const std::vector<const MaskEntry*>& masks,
                       const std::vector<std::string>& captions = {});

}  // namespace fluoroforge
