#include "fluoroforge/preview.hpp"

#include <algorithm>
#include <cmath>

#include "fluoroforge/error.hpp"
#include "fluoroforge/metrics.hpp"

namespace fluoroforge {

PngData render_overlay(const Image& gray, const std::vector<const MaskEntry*>& masks,
                       const std::vector<std::string>& captions) {
    PngData out;
    out.width = gray.width;
    out.height = gray.height;
    out.channels = 3;
    out.bit_depth = 8;
    out.samples.resize(gray.size() * 3);
    for (std::size_t i = 0; i < gray.size(); ++i) {
        const auto g = std::uint16_t(std::lround(std::clamp(gray.pixels[i], 0.0, 1.0) * 255.0));
        out.samples[3 * i] = out.samples[3 * i + 1] = out.samples[3 * i + 2] = g;
    }
    for (std::size_t k = 0; k < masks.size(); ++k) {
        const Mask& m = masks[k]->mask;
        if (m.width != gray.width || m.height != gray.height)
            throw MismatchError("mask '" + masks[k]->key + "' does not match the image dims");
        const Mask edge = boundary(m);
        const auto& color = kOverlayPalette[k % kOverlayPalette.size()];
        for (std::size_t i = 0; i < edge.size(); ++i) {
            if (!edge.bits[i]) continue;
            for (int c = 0; c < 3; ++c) out.samples[3 * i + std::size_t(c)] = color[std::size_t(c)];
        }
    }
    if (!captions.empty()) {
        std::string text;
        for (const auto& c : captions) text += (text.empty() ? "" : "\n") + c;
        out.text["Caption"] = text;
    }
    return out;
}

}  // namespace fluoroforge
