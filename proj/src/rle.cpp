#include "fluoroforge/rle.hpp"

#include <string>

namespace fluoroforge {

std::vector<std::uint64_t> rle_encode(const Mask& mask) {
    std::vector<std::uint64_t> runs;
    std::uint8_t current = 0;
    std::uint64_t length = 0;
    for (int u = 0; u < mask.width; ++u)
        for (int v = 0; v < mask.height; ++v) {
            const std::uint8_t bit = mask.at(u, v) ? 1 : 0;
            if (bit != current) {
                runs.push_back(length);
                current = bit;
                length = 0;
            }
            ++length;
        }
    runs.push_back(length);
    return runs;
}

Mask rle_decode(const std::vector<std::uint64_t>& runs, int width, int height) {
    if (width < 0 || height < 0) throw MismatchError("negative mask dimensions");
    const std::uint64_t total = std::uint64_t(width) * std::uint64_t(height);
    std::uint64_t sum = 0;
    for (auto r : runs) {
        if (r > total || sum > total - r)
            throw MismatchError("RLE runs exceed mask size " + std::to_string(total));
        sum += r;
    }
    if (sum != total)
        throw MismatchError("RLE runs sum to " + std::to_string(sum) + " but mask has " + std::to_string(total) +
                            " pixels");
    Mask m(width, height);
    std::uint64_t pos = 0;
    std::uint8_t bit = 0;
    for (auto r : runs) {
        for (std::uint64_t k = 0; k < r; ++k, ++pos) {
            const int u = int(pos / std::uint64_t(height)), v = int(pos % std::uint64_t(height));
            m.at(u, v) = bit;
        }
        bit ^= 1;
    }
    return m;
}

nlohmann::json rle_to_json(const Mask& mask) {
    return {{"size", {mask.height, mask.width}}, {"counts", rle_encode(mask)}};
}

Mask rle_from_json(const nlohmann::json& j) {
    const auto& size = j.at("size");
    if (!size.is_array() || size.size() != 2) throw MismatchError("RLE size must be [height, width]");
    return rle_decode(j.at("counts").get<std::vector<std::uint64_t>>(), size[1].get<int>(), size[0].get<int>());
}

}  // namespace fluoroforge
