#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "fluoroforge/catalog.hpp"
#include "fluoroforge/image.hpp"
#include "fluoroforge/rng.hpp"

#ifndef FLUOROFORGE_DATA_DIR
#error "FLUOROFORGE_DATA_DIR must be defined for tests"
#endif

namespace testing {

namespace fs = std::filesystem;

inline fs::path data_dir() { return fs::path(FLUOROFORGE_DATA_DIR); }

inline const fluoroforge::ObjectCatalog& shipped_catalog() {
    static const auto catalog = fluoroforge::load_catalog(data_dir() / "catalog.json");
    return catalog;
}

// Fresh, empty directory under the system temp dir.
inline fs::path scratch_dir(const std::string& name) {
    auto dir = fs::temp_directory_path() / ("fluoroforge_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

inline std::string read_bytes(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline fluoroforge::Mask random_mask(fluoroforge::Rng& rng, int w, int h, double density) {
    fluoroforge::Mask m(w, h);
    for (auto& b : m.bits) b = rng.bernoulli(density) ? 1 : 0;
    return m;
}

// Random union of axis-aligned rectangles; gives blob-like masks with real boundaries.
inline fluoroforge::Mask random_blob_mask(fluoroforge::Rng& rng, int w, int h, int rects) {
    fluoroforge::Mask m(w, h);
    for (int r = 0; r < rects; ++r) {
        const int u0 = int(rng.uniform_int(0, w - 1)), v0 = int(rng.uniform_int(0, h - 1));
        const int u1 = int(rng.uniform_int(u0, w - 1)), v1 = int(rng.uniform_int(v0, h - 1));
        for (int v = v0; v <= v1; ++v)
            for (int u = u0; u <= u1; ++u) m.at(u, v) = 1;
    }
    return m;
}

inline fluoroforge::Image random_image(fluoroforge::Rng& rng, int w, int h) {
    fluoroforge::Image img(w, h);
    for (auto& p : img.pixels) p = rng.uniform();
    return img;
}

}  // namespace testing
