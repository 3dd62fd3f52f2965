#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "fluoroforge/error.hpp"

namespace fluoroforge {

// Row-major scalar image; pixel (u, v) lives at v * width + u.
struct Image {
    int width = 0;
    int height = 0;
    std::vector<double> pixels;

    Image() = default;
    Image(int w, int h, double fill = 0.0) : width(w), height(h), pixels(std::size_t(w) * std::size_t(h), fill) {}

    std::size_t size() const { return pixels.size(); }
    double& at(int u, int v) { return pixels[std::size_t(v) * std::size_t(width) + std::size_t(u)]; }
    double at(int u, int v) const { return pixels[std::size_t(v) * std::size_t(width) + std::size_t(u)]; }

    bool operator==(const Image&) const = default;
};

// Row-major binary mask, one byte per pixel (0 or 1).
struct Mask {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> bits;

    Mask() = default;
    Mask(int w, int h, std::uint8_t fill = 0) : width(w), height(h), bits(std::size_t(w) * std::size_t(h), fill) {}

    std::size_t size() const { return bits.size(); }
    std::uint8_t& at(int u, int v) { return bits[std::size_t(v) * std::size_t(width) + std::size_t(u)]; }
    std::uint8_t at(int u, int v) const { return bits[std::size_t(v) * std::size_t(width) + std::size_t(u)]; }

    std::size_t area() const {
        std::size_t n = 0;
        for (auto b : bits) n += b != 0;
        return n;
    }
    bool empty() const { return area() == 0; }

    bool operator==(const Mask&) const = default;
};

inline void require_same_dims(const Mask& a, const Mask& b) {
    if (a.width != b.width || a.height != b.height) throw MismatchError("mask dimensions differ");
}

}  // namespace fluoroforge
