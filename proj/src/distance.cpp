#include "fluoroforge/distance.hpp"

#include <algorithm>

namespace fluoroforge {

namespace {

// One-dimensional lower envelope of parabolas f[q] + (x - q)^2 over finite f.
void transform_1d(const std::int64_t* f, std::int64_t* out, int n, std::vector<int>& v, std::vector<double>& z) {
    v.assign(n, 0);
    z.assign(n + 1, 0.0);
    int k = -1;
    for (int q = 0; q < n; ++q) {
        if (f[q] >= kNoFeature) continue;
        const double fq = double(f[q]) + double(q) * q;
        while (k >= 0) {
            const int p = v[k];
            const double s = (fq - (double(f[p]) + double(p) * p)) / (2.0 * (q - p));
            if (s > z[k]) {
                ++k;
                v[k] = q;
                z[k] = s;
                break;
            }
            --k;
        }
        if (k < 0) {
            k = 0;
            v[0] = q;
            z[0] = -1e300;
        }
        z[k + 1] = 1e300;
    }
    if (k < 0) {
        std::fill(out, out + n, kNoFeature);
        return;
    }
    int j = 0;
    for (int x = 0; x < n; ++x) {
        while (z[j + 1] < x) ++j;
        const std::int64_t d = x - v[j];
        out[x] = f[v[j]] + d * d;
    }
}

}  // namespace

std::vector<std::int64_t> squared_distance_to(const std::vector<std::uint8_t>& feature, int width, int height) {
    const std::size_t n = std::size_t(width) * std::size_t(height);
    std::vector<std::int64_t> grid(n);
    for (std::size_t i = 0; i < n; ++i) grid[i] = feature[i] ? 0 : kNoFeature;
    std::vector<int> v;
    std::vector<double> z;
    std::vector<std::int64_t> col(height), col_out(height);
    for (int u = 0; u < width; ++u) {
        for (int r = 0; r < height; ++r) col[r] = grid[std::size_t(r) * width + u];
        transform_1d(col.data(), col_out.data(), height, v, z);
        for (int r = 0; r < height; ++r) grid[std::size_t(r) * width + u] = col_out[r];
    }
    std::vector<std::int64_t> row_out(width);
    for (int r = 0; r < height; ++r) {
        std::int64_t* row = &grid[std::size_t(r) * width];
        transform_1d(row, row_out.data(), width, v, z);
        std::copy(row_out.begin(), row_out.end(), row);
    }
    return grid;
}

std::vector<std::int64_t> squared_depth(const Mask& mask) {
    const int w = mask.width + 2, h = mask.height + 2;
    std::vector<std::uint8_t> background(std::size_t(w) * h, 1);
    for (int v = 0; v < mask.height; ++v)
        for (int u = 0; u < mask.width; ++u) background[std::size_t(v + 1) * w + (u + 1)] = mask.at(u, v) ? 0 : 1;
    const auto padded = squared_distance_to(background, w, h);
    std::vector<std::int64_t> out(mask.size());
    for (int v = 0; v < mask.height; ++v)
        for (int u = 0; u < mask.width; ++u) out[std::size_t(v) * mask.width + u] = padded[std::size_t(v + 1) * w + (u + 1)];
    return out;
}

}  // namespace fluoroforge
