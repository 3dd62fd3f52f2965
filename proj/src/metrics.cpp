#include "fluoroforge/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "fluoroforge/distance.hpp"

namespace fluoroforge {

namespace {

void require_same_dims(const Image& pred, const Mask& gt) {
    if (pred.width != gt.width || pred.height != gt.height)
        throw MismatchError("prediction and ground truth dimensions differ");
}

double clamp_probability(double p) { return std::clamp(p, kProbabilityClamp, 1.0 - kProbabilityClamp); }

struct Overlap {
    std::size_t a = 0, b = 0, both = 0;
};

Overlap count_overlap(const Mask& a, const Mask& b) {
    require_same_dims(a, b);
    Overlap o;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const bool x = a.bits[i] != 0, y = b.bits[i] != 0;
        o.a += x;
        o.b += y;
        o.both += x && y;
    }
    return o;
}

// Squared distances from each boundary pixel of `from` to the boundary of `to`.
std::vector<std::int64_t> directed_squared(const Mask& from_boundary, const std::vector<std::int64_t>& to_field) {
    std::vector<std::int64_t> d;
    for (std::size_t i = 0; i < from_boundary.size(); ++i)
        if (from_boundary.bits[i]) d.push_back(to_field[i]);
    return d;
}

double reduce_directed(std::vector<std::int64_t> d2, std::optional<double> percentile) {
    if (!percentile) return std::sqrt(double(*std::max_element(d2.begin(), d2.end())));
    std::sort(d2.begin(), d2.end());
    const double rank = std::ceil(*percentile / 100.0 * double(d2.size()));
    const auto idx = std::size_t(std::clamp(rank, 1.0, double(d2.size()))) - 1;
    return std::sqrt(double(d2[idx]));
}

}  // namespace

double dice_loss(const Image& pred, const Mask& gt, double eps) {
    require_same_dims(pred, gt);
    if (eps < 0) throw std::invalid_argument("dice eps must be non-negative");
    double inter = 0, sp = 0, sg = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double g = gt.bits[i] ? 1.0 : 0.0;
        inter += pred.pixels[i] * g;
        sp += pred.pixels[i];
        sg += g;
    }
    const double denom = sp + sg + eps;
    if (denom == 0.0) return 0.0;
    return 1.0 - (2.0 * inter + eps) / denom;
}

double focal_loss(const Image& pred, const Mask& gt, double alpha, double gamma) {
    require_same_dims(pred, gt);
    if (alpha < 0 || alpha > 1) throw std::invalid_argument("focal alpha must lie in [0, 1]");
    if (gamma < 0) throw std::invalid_argument("focal gamma must be non-negative");
    if (pred.size() == 0) return 0.0;
    double total = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double p = clamp_probability(pred.pixels[i]);
        const bool pos = gt.bits[i] != 0;
        const double pt = pos ? p : 1.0 - p;
        const double at = pos ? alpha : 1.0 - alpha;
        total += -at * std::pow(1.0 - pt, gamma) * std::log(pt);
    }
    return total / double(pred.size());
}

double binary_cross_entropy(const Image& pred, const Mask& gt) {
    require_same_dims(pred, gt);
    if (pred.size() == 0) return 0.0;
    double total = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double p = clamp_probability(pred.pixels[i]);
        total += gt.bits[i] ? -std::log(p) : -std::log(1.0 - p);
    }
    return total / double(pred.size());
}

void validate_multimask(const MultiMaskOutput& out) {
    for (std::size_t k = 0; k < 3; ++k) {
        const auto& m = out.masks[k];
        if (m.width != out.masks[0].width || m.height != out.masks[0].height)
            throw MismatchError("multi-mask branches have differing dimensions");
        for (double p : m.pixels)
            if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("soft mask value outside [0, 1]");
        if (!(out.predicted_iou[k] >= 0.0 && out.predicted_iou[k] <= 1.0))
            throw std::invalid_argument("predicted IoU outside [0, 1]");
    }
}

double mask_loss(const Image& pred, const Mask& gt, const LossWeights& w) {
    return w.dice * dice_loss(pred, gt, w.dice_eps) + w.focal * focal_loss(pred, gt, w.alpha, w.gamma);
}

MinLossSelection select_min_loss(const MultiMaskOutput& out, const Mask& gt, const LossWeights& w) {
    validate_multimask(out);
    MinLossSelection best{0, mask_loss(out.masks[0], gt, w)};
    for (std::size_t k = 1; k < 3; ++k) {
        const double l = mask_loss(out.masks[k], gt, w);
        if (l < best.loss) best = {k, l};
    }
    return best;
}

Mask binarize(const Image& pred, double threshold) {
    Mask m(pred.width, pred.height);
    for (std::size_t i = 0; i < pred.size(); ++i) m.bits[i] = pred.pixels[i] >= threshold;
    return m;
}

double iou_head_target(const Image& pred, const Mask& gt, double threshold) {
    require_same_dims(pred, gt);
    if (!(threshold > 0 && threshold < 1)) throw std::invalid_argument("threshold must lie in (0, 1)");
    return iou(binarize(pred, threshold), gt);
}

double reweight_prompt_losses(double text_loss, const std::vector<double>& point_losses) {
    if (point_losses.empty()) return text_loss;
    double total = double(point_losses.size()) * text_loss;
    for (double l : point_losses) total += l;
    return total;
}

double iou(const Mask& a, const Mask& b) {
    const auto o = count_overlap(a, b);
    const std::size_t uni = o.a + o.b - o.both;
    return uni == 0 ? 1.0 : double(o.both) / double(uni);
}

double dice(const Mask& a, const Mask& b) {
    const auto o = count_overlap(a, b);
    return o.a + o.b == 0 ? 1.0 : 2.0 * double(o.both) / double(o.a + o.b);
}

Mask boundary(const Mask& m) {
    Mask out(m.width, m.height);
    for (int v = 0; v < m.height; ++v)
        for (int u = 0; u < m.width; ++u) {
            if (!m.at(u, v)) continue;
            const bool interior = u > 0 && u + 1 < m.width && v > 0 && v + 1 < m.height && m.at(u - 1, v) &&
                                  m.at(u + 1, v) && m.at(u, v - 1) && m.at(u, v + 1);
            out.at(u, v) = !interior;
        }
    return out;
}

double hausdorff(const Mask& a, const Mask& b, double spacing, std::optional<double> percentile) {
    require_same_dims(a, b);
    if (a.empty() || b.empty()) throw UndefinedMetric("Hausdorff distance is undefined for an empty mask");
    if (percentile && !(*percentile > 0 && *percentile <= 100))
        throw std::invalid_argument("percentile must lie in (0, 100]");
    const Mask ba = boundary(a), bb = boundary(b);
    const auto field_a = squared_distance_to(ba.bits, a.width, a.height);
    const auto field_b = squared_distance_to(bb.bits, b.width, b.height);
    const double ab = reduce_directed(directed_squared(ba, field_b), percentile);
    const double ba_dist = reduce_directed(directed_squared(bb, field_a), percentile);
    return std::max(ab, ba_dist) * spacing;
}

bool passes_area_filter(const Mask& m, double min_frac) {
    return double(m.area()) >= min_frac * double(m.width) * double(m.height);
}

MaskSet filter_small_masks(const MaskSet& set, double min_frac) {
    if (!(min_frac >= 0 && min_frac <= 1)) throw std::invalid_argument("min_frac must lie in [0, 1]");
    MaskSet out{set.width, set.height, {}};
    for (const auto& e : set.entries)
        if (passes_area_filter(e.mask, min_frac)) out.entries.push_back(e);
    return out;
}

}  // namespace fluoroforge
