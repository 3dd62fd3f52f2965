#include <doctest.h>

#include <cmath>

#include "fluoroforge/error.hpp"
#include "fluoroforge/metrics.hpp"
#include "metric_oracles.hpp"
#include "support.hpp"

using namespace fluoroforge;

namespace {

Image soft_from(const Mask& m) {
    Image img(m.width, m.height);
    for (std::size_t i = 0; i < m.size(); ++i) img.pixels[i] = m.bits[i];
    return img;
}

// Two 2-pixel masks sharing one pixel.
std::pair<Mask, Mask> counting_case() {
    Mask a(4, 1), b(4, 1);
    a.bits = {1, 1, 0, 0};
    b.bits = {0, 1, 1, 0};
    return {a, b};
}

double direct_focal(double p, bool positive, double alpha, double gamma) {
    const double pt = positive ? p : 1 - p;
    const double at = positive ? alpha : 1 - alpha;
    return -at * std::pow(1 - pt, gamma) * std::log(pt);
}

}  // namespace

TEST_CASE("dice loss") {
    Rng rng(1);
    const Mask gt = testing::random_blob_mask(rng, 32, 32, 3);
    CHECK(dice_loss(soft_from(gt), gt, 1.0) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(dice_loss(soft_from(gt), gt, 0.0) == doctest::Approx(0.0).epsilon(1e-12));

    Mask left(8, 8), right(8, 8);
    for (int v = 0; v < 8; ++v)
        for (int u = 0; u < 4; ++u) left.at(u, v) = 1, right.at(u + 4, v) = 1;
    double previous = 0;
    for (double eps : {1.0, 1e-2, 1e-4, 1e-8}) {
        const double l = dice_loss(soft_from(left), right, eps);
        CHECK(l > previous);
        previous = l;
    }
    CHECK(dice_loss(soft_from(left), right, 0.0) == 1.0);

    auto [a, b] = counting_case();
    CHECK(dice_loss(soft_from(a), b, 0.0) == doctest::Approx(0.5));
    CHECK(dice_loss(Image(4, 4), Mask(4, 4), 0.0) == 0.0);
    CHECK_THROWS_AS(dice_loss(Image(3, 4), Mask(4, 4)), MismatchError);
    CHECK_THROWS_AS(dice_loss(soft_from(a), b, -1.0), std::invalid_argument);
}

TEST_CASE("focal loss") {
    Rng rng(2);
    SUBCASE("gamma 0 reduces to half BCE") {
        for (int trial = 0; trial < 100; ++trial) {
            const Image p = testing::random_image(rng, 16, 16);
            const Mask g = testing::random_mask(rng, 16, 16, 0.4);
            double bce = 0;
            for (std::size_t i = 0; i < p.size(); ++i) {
                const double q = std::clamp(p.pixels[i], 1e-7, 1 - 1e-7);
                bce += g.bits[i] ? -std::log(q) : -std::log(1 - q);
            }
            bce /= double(p.size());
            CHECK(std::abs(focal_loss(p, g, 0.5, 0.0) - 0.5 * bce) < 1e-9);
            CHECK(std::abs(binary_cross_entropy(p, g) - bce) < 1e-12);
        }
    }
    SUBCASE("perfect prediction") {
        const Mask g = testing::random_mask(rng, 16, 16, 0.5);
        CHECK(focal_loss(soft_from(g), g) < 1e-6);
        CHECK(focal_loss(soft_from(g), g) > 0.0);
    }
    SUBCASE("single pixel") {
        Image p(1, 1, 0.5);
        Mask g(1, 1, 1);
        CHECK(focal_loss(p, g, 0.25, 2.0) == doctest::Approx(0.25 * 0.25 * std::log(2.0)).epsilon(1e-12));
        CHECK(focal_loss(p, g, 0.25, 2.0) == doctest::Approx(0.043322).epsilon(1e-5));
    }
    SUBCASE("random pixels match direct evaluation") {
        for (int trial = 0; trial < 200; ++trial) {
            const double p = rng.uniform(0.01, 0.99), alpha = rng.uniform(), gamma = rng.uniform(0, 4);
            const bool pos = rng.bernoulli(0.5);
            Image img(1, 1, p);
            Mask g(1, 1, pos);
            CHECK(focal_loss(img, g, alpha, gamma) == doctest::Approx(direct_focal(p, pos, alpha, gamma)).epsilon(1e-12));
        }
    }
    CHECK_THROWS_AS(focal_loss(Image(2, 2), Mask(2, 3)), MismatchError);
    CHECK_THROWS_AS(focal_loss(Image(2, 2), Mask(2, 2), 1.5), std::invalid_argument);
    CHECK_THROWS_AS(focal_loss(Image(2, 2), Mask(2, 2), 0.5, -1), std::invalid_argument);
}

TEST_CASE("losses are non-negative and vanish only at clamped perfection") {
    Rng rng(3);
    for (int trial = 0; trial < 500; ++trial) {
        const Image p = testing::random_image(rng, 8, 8);
        const Mask g = testing::random_mask(rng, 8, 8, 0.5);
        CHECK(dice_loss(p, g) >= 0.0);
        CHECK(focal_loss(p, g) > 0.0);
        CHECK(binary_cross_entropy(p, g) > 0.0);
    }
}

TEST_CASE("select_min_loss") {
    Rng rng(4);
    const Mask gt = testing::random_blob_mask(rng, 24, 24, 3);
    SUBCASE("exact branch wins") {
        MultiMaskOutput out;
        out.masks = {testing::random_image(rng, 24, 24), soft_from(gt), testing::random_image(rng, 24, 24)};
        const auto sel = select_min_loss(out, gt);
        CHECK(sel.index == 1);
        CHECK(sel.loss < 1e-4);
    }
    SUBCASE("ties go to the lowest index") {
        MultiMaskOutput out;
        const Image same = testing::random_image(rng, 24, 24);
        out.masks = {same, same, same};
        CHECK(select_min_loss(out, gt).index == 0);
    }
    SUBCASE("matches exhaustive evaluation and is scale invariant") {
        for (int trial = 0; trial < 300; ++trial) {
            MultiMaskOutput out;
            for (auto& m : out.masks) m = testing::random_image(rng, 12, 12);
            const Mask g = testing::random_mask(rng, 12, 12, 0.3);
            LossWeights w;
            w.focal = rng.uniform(0.5, 30);
            double losses[3];
            std::size_t best = 0;
            for (std::size_t k = 0; k < 3; ++k) {
                losses[k] = dice_loss(out.masks[k], g, w.dice_eps) + w.focal * focal_loss(out.masks[k], g);
                if (losses[k] < losses[best]) best = k;
            }
            const auto sel = select_min_loss(out, g, w);
            CHECK(sel.index == best);
            CHECK(sel.loss == doctest::Approx(losses[best]).epsilon(1e-12));
            const double s = rng.uniform(0.1, 10);
            LossWeights scaled = w;
            scaled.dice *= s;
            scaled.focal *= s;
            CHECK(select_min_loss(out, g, scaled).index == best);
        }
    }
    SUBCASE("invalid outputs") {
        MultiMaskOutput out;
        out.masks = {Image(4, 4), Image(4, 4), Image(4, 5)};
        CHECK_THROWS_AS(select_min_loss(out, Mask(4, 4)), MismatchError);
        out.masks[2] = Image(4, 4, 1.5);
        CHECK_THROWS_AS(select_min_loss(out, Mask(4, 4)), std::invalid_argument);
        out.masks[2] = Image(4, 4);
        out.predicted_iou[1] = -0.1;
        CHECK_THROWS_AS(select_min_loss(out, Mask(4, 4)), std::invalid_argument);
    }
}

TEST_CASE("iou head target and prompt reweighting") {
    auto [a, b] = counting_case();
    CHECK(iou_head_target(soft_from(a), a) == 1.0);
    CHECK(iou_head_target(Image(4, 1, 0.2), Mask(4, 1)) == 1.0);
    CHECK(iou_head_target(soft_from(a), b) == doctest::Approx(1.0 / 3.0));
    Image soft(4, 1);
    soft.pixels = {0.7, 0.5, 0.49, 0.0};
    CHECK(iou_head_target(soft, b) == doctest::Approx(1.0 / 3.0));
    CHECK_THROWS_AS(iou_head_target(soft, b, 1.0), std::invalid_argument);

    CHECK(reweight_prompt_losses(0.3, {0.3}) == doctest::Approx(0.6));
    CHECK(reweight_prompt_losses(0.7, {}) == 0.7);
    CHECK(reweight_prompt_losses(0.5, std::vector<double>(8, 0.25)) == doctest::Approx(6.0));
}

TEST_CASE("iou and dice") {
    auto [a, b] = counting_case();
    CHECK(iou(a, a) == 1.0);
    CHECK(dice(a, a) == 1.0);
    CHECK(iou(Mask(3, 3), Mask(3, 3)) == 1.0);
    CHECK(dice(Mask(3, 3), Mask(3, 3)) == 1.0);
    Mask c(4, 1);
    c.bits = {0, 0, 0, 1};
    CHECK(iou(a, c) == 0.0);
    CHECK(dice(a, c) == 0.0);
    CHECK(iou(a, b) == doctest::Approx(1.0 / 3.0));
    CHECK(dice(a, b) == doctest::Approx(0.5));
    CHECK_THROWS_AS(iou(a, Mask(3, 1)), MismatchError);

    Rng rng(5);
    for (int trial = 0; trial < 2000; ++trial) {
        const Mask x = testing::random_mask(rng, 10, 10, rng.uniform()), y = testing::random_mask(rng, 10, 10, rng.uniform());
        const auto n = testing::count(x, y);
        const double j = iou(x, y), d = dice(x, y);
        if (n.a + n.b > 0) {
            CHECK(j == doctest::Approx(double(n.both) / double(n.a + n.b - n.both)).epsilon(1e-14));
            CHECK(d == doctest::Approx(2.0 * double(n.both) / double(n.a + n.b)).epsilon(1e-14));
        }
        CHECK(std::abs(d - 2 * j / (1 + j)) < 1e-12);
    }
}

TEST_CASE("boundary extraction") {
    Mask full(5, 4, 1);
    const Mask edge = boundary(full);
    CHECK(edge.area() == 2 * 5 + 2 * 2);
    CHECK(edge.at(2, 2) == 0);
    Rng rng(6);
    for (int trial = 0; trial < 100; ++trial) {
        const Mask m = testing::random_blob_mask(rng, 20, 17, 4);
        const Mask e = boundary(m);
        for (int v = 0; v < m.height; ++v)
            for (int u = 0; u < m.width; ++u) CHECK(bool(e.at(u, v)) == testing::is_edge_pixel(m, u, v));
    }
}

TEST_CASE("hausdorff") {
    Mask a(16, 16), b(16, 16);
    a.at(2, 3) = 1;
    b.at(5, 7) = 1;
    CHECK(hausdorff(a, b) == 5.0);
    CHECK(hausdorff(a, b, 0.5) == 2.5);
    CHECK(hausdorff(a, a) == 0.0);
    CHECK_THROWS_AS(hausdorff(a, Mask(16, 16)), UndefinedMetric);
    CHECK_THROWS_AS(hausdorff(Mask(16, 16), a), UndefinedMetric);

    Rng rng(7);
    SUBCASE("matches all-pairs brute force exactly") {
        for (int trial = 0; trial < 300; ++trial) {
            const int w = int(rng.uniform_int(1, 32)), h = int(rng.uniform_int(1, 32));
            Mask x = trial % 2 ? testing::random_mask(rng, w, h, rng.uniform(0.02, 0.6))
                               : testing::random_blob_mask(rng, w, h, 3);
            Mask y = testing::random_blob_mask(rng, w, h, 2);
            if (x.empty()) x.at(0, 0) = 1;
            if (y.empty()) y.at(w - 1, h - 1) = 1;
            CHECK(hausdorff(x, y) == testing::brute_hausdorff(x, y));
        }
    }
    SUBCASE("symmetry and triangle inequality") {
        for (int trial = 0; trial < 300; ++trial) {
            Mask x = testing::random_blob_mask(rng, 24, 24, 2), y = testing::random_blob_mask(rng, 24, 24, 2),
                 z = testing::random_blob_mask(rng, 24, 24, 2);
            CHECK(hausdorff(x, y) == hausdorff(y, x));
            CHECK(hausdorff(x, z) <= hausdorff(x, y) + hausdorff(y, z) + 1e-12);
        }
    }
    SUBCASE("percentile variant") {
        // One outlier pixel dominates the maximum but not the median.
        Mask x(40, 40), y(40, 40);
        for (int v = 5; v < 25; ++v)
            for (int u = 5; u < 25; ++u) x.at(u, v) = y.at(u, v) = 1;
        y.at(38, 38) = 1;
        CHECK(hausdorff(x, y) == doctest::Approx(std::sqrt(2.0) * 14));
        CHECK(hausdorff(x, y, 1.0, 50.0) == 0.0);
        CHECK(hausdorff(x, y, 1.0, 100.0) == hausdorff(x, y));
        CHECK_THROWS_AS(hausdorff(x, y, 1.0, 0.0), std::invalid_argument);
    }
}

TEST_CASE("small mask filter") {
    MaskSet set{512, 512, {}};
    auto add = [&](std::size_t area, const std::string& key) {
        MaskEntry e;
        e.key = key;
        e.mask = Mask(512, 512);
        for (std::size_t i = 0; i < area; ++i) e.mask.bits[i] = 1;
        set.entries.push_back(e);
    };
    add(6554, "kept");
    add(6553, "dropped");
    add(0, "empty");
    add(512 * 512, "full");
    const auto filtered = filter_small_masks(set, 0.025);
    REQUIRE(filtered.entries.size() == 2);
    CHECK(filtered.entries[0].key == "kept");
    CHECK(filtered.entries[1].key == "full");
    CHECK(filter_small_masks(set, 0.0).entries.size() == 4);
    const auto full_only = filter_small_masks(set, 1.0);
    REQUIRE(full_only.entries.size() == 1);
    CHECK(full_only.entries[0].key == "full");
    CHECK_THROWS_AS(filter_small_masks(set, 1.5), std::invalid_argument);
}
