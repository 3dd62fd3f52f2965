#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "fluoroforge/image.hpp"

namespace fluoroforge {

// Interleaved samples, row-major. Channels 1 (gray) or 3 (RGB); bit depth 8
// or 16. Text entries are stored as uncompressed tEXt chunks.
struct PngData {
    int width = 0;
    int height = 0;
    int channels = 1;
    int bit_depth = 16;
    std::vector<std::uint16_t> samples;
    std::map<std::string, std::string> text;

    bool operator==(const PngData&) const = default;
};

// Output bytes depend only on the input (fixed compression settings, no
// timestamp chunk). Throws Error on invalid layouts.
std::string encode_png(const PngData& png);
// Palette and alpha are expanded or stripped. Throws LoadError.
PngData decode_png(std::string_view bytes);

PngData read_png(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const PngData& png);

// Quantizes [0, 1] values (clamped) to 16-bit gray.
PngData gray16_from_image(const Image& img);
// Gray PNG to [0, 1] values; throws LoadError for RGB input.
Image image_from_png(const PngData& png);

}  // namespace fluoroforge
