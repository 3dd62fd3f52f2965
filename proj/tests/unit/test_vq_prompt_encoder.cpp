#include "doctest.h"

#include <cmath>
#include <thread>

#include "fluoroforge/error.hpp"
#include "fluoroforge/vq.hpp"
#include "gradcheck.hpp"
#include "support.hpp"

using namespace fluoroforge;

namespace {

VecX random_vec(Rng& rng, int n) {
    VecX v(n);
    for (int i = 0; i < n; ++i) v[i] = rng.normal();
    return v;
}

int exhaustive_argmin(const MatX& entries, const VecX& z) {
    int best = -1;
    double best_d = 0;
    for (int k = 0; k < entries.rows(); ++k) {
        double d = 0;
        for (int j = 0; j < entries.cols(); ++j) d += (entries(k, j) - z[j]) * (entries(k, j) - z[j]);
        if (best < 0 || d < best_d) best = k, best_d = d;
    }
    return best;
}

}  // namespace

TEST_CASE("gelu") {
    CHECK(gelu(0.0) == 0.0);
    CHECK(gelu(2.0) == doctest::Approx(2.0 * 0.5 * (1 + std::erf(2.0 / std::sqrt(2.0)))));
    CHECK(gelu(2.0) == doctest::Approx(1.9544997361).epsilon(1e-9));
    for (double x : {-3.0, -0.7, 0.0, 0.4, 2.5}) {
        CHECK(gelu_derivative(x) == doctest::Approx((gelu(x + 1e-6) - gelu(x - 1e-6)) / 2e-6).epsilon(1e-7));
    }
}

TEST_CASE("mlp_forward") {
    SUBCASE("zero network") {
        const auto p = MlpParams::zeros(5, 4, 3);
        CHECK(mlp_forward(p, VecX::Ones(5)).z.isZero());
    }
    SUBCASE("scalar network against hand evaluation") {
        auto p = MlpParams::zeros(1, 1, 1);
        p.w1(0, 0) = p.w2(0, 0) = p.w3(0, 0) = 1.0;
        VecX x(1);
        x[0] = 2.0;
        const double h1 = 2.0 * 0.5 * (1 + std::erf(2.0 / std::sqrt(2.0)));
        const double h2 = h1 * 0.5 * (1 + std::erf(h1 / std::sqrt(2.0)));
        CHECK(mlp_forward(p, x).z[0] == doctest::Approx(h2).epsilon(1e-15));
    }
    SUBCASE("pure and shape checked") {
        Rng rng(51);
        const auto p = MlpParams::random(6, 5, 4, rng);
        const VecX x = random_vec(rng, 6);
        CHECK(mlp_forward(p, x).z == mlp_forward(p, x).z);
        CHECK_THROWS_AS(mlp_forward(p, VecX::Ones(5)), MismatchError);
    }
}

TEST_CASE("mlp_backward") {
    Rng rng(52);
    const auto p = MlpParams::random(4, 6, 3, rng);
    const auto f = mlp_forward(p, random_vec(rng, 4));
    SUBCASE("zero upstream gradient") {
        const auto b = mlp_backward(p, f.cache, VecX::Zero(3));
        CHECK(b.grad.w1.isZero());
        CHECK(b.grad.b3.isZero());
        CHECK(b.grad_x.isZero());
    }
    SUBCASE("linear in the upstream gradient") {
        const VecX g = random_vec(rng, 3);
        const auto b1 = mlp_backward(p, f.cache, g), b2 = mlp_backward(p, f.cache, 2.0 * g);
        CHECK(b2.grad.w1.isApprox(2.0 * b1.grad.w1, 1e-14));
        CHECK(b2.grad_x.isApprox(2.0 * b1.grad_x, 1e-14));
    }
    SUBCASE("cache mismatch") {
        const auto other = MlpParams::random(5, 6, 3, rng);
        CHECK_THROWS_AS(mlp_backward(other, f.cache, VecX::Zero(3)), MismatchError);
        CHECK_THROWS_AS(mlp_backward(p, f.cache, VecX::Zero(4)), MismatchError);
    }
    SUBCASE("input gradient against finite differences") {
        const VecX g = random_vec(rng, 3);
        const auto b = mlp_backward(p, f.cache, g);
        for (int i = 0; i < 4; ++i) {
            VecX up = f.cache.x, down = f.cache.x;
            up[i] += 1e-5;
            down[i] -= 1e-5;
            const double num = (g.dot(mlp_forward(p, up).z) - g.dot(mlp_forward(p, down).z)) / 2e-5;
            CHECK(testing::relative_error(b.grad_x[i], num) < 1e-6);
        }
    }
    SUBCASE("parameter gradients on 100 seeds") {
        double worst_mlp = 0, worst_pipe = 0;
        for (std::uint64_t seed = 0; seed < 100; ++seed) {
            const auto r = testing::run_gradient_checks(seed);
            worst_mlp = std::max(worst_mlp, r.mlp);
            worst_pipe = std::max(worst_pipe, r.pipeline);
        }
        MESSAGE("worst relative errors: mlp " << worst_mlp << ", pipeline " << worst_pipe);
        CHECK(worst_mlp < 1e-4);
        CHECK(worst_pipe < 1e-3);
    }
}

TEST_CASE("quantize") {
    Rng rng(53);
    SUBCASE("single entry") {
        Codebook cb(MatX::Random(1, 3), 0.25);
        for (int t = 0; t < 10; ++t) CHECK(cb.quantize(random_vec(rng, 3)).index == 0);
    }
    SUBCASE("exact entry") {
        MatX e(6, 4);
        for (Eigen::Index i = 0; i < e.size(); ++i) e.data()[i] = rng.normal();
        Codebook cb(e, 0.25);
        const auto q = cb.quantize(e.row(3).transpose());
        CHECK(q.index == 3);
        CHECK((q.e - e.row(3).transpose()).norm() == 0.0);
    }
    SUBCASE("exhaustive oracle with constructed ties") {
        for (int t = 0; t < 2000; ++t) {
            const int k = int(rng.uniform_int(1, 12)), d = int(rng.uniform_int(1, 6));
            MatX e(k, d);
            for (Eigen::Index i = 0; i < e.size(); ++i) e.data()[i] = double(rng.uniform_int(-3, 3));
            if (k > 2) e.row(k - 1) = e.row(int(rng.uniform_int(0, k - 2)));  // duplicate entry
            Codebook cb(e, 0.25);
            VecX z(d);
            for (int i = 0; i < d; ++i) z[i] = double(rng.uniform_int(-3, 3)) + (rng.bernoulli(0.5) ? 0.5 : 0.0);
            const auto q = cb.quantize(z);
            CHECK(q.index == exhaustive_argmin(e, z));
            // Idempotent.
            CHECK(cb.nearest(q.e).index == q.index);
            // Appending strictly farther entries does not move the argmin.
            MatX grown(k + 2, d);
            grown << e, (z + VecX::Constant(d, 100.0)).transpose(), (z - VecX::Constant(d, 100.0)).transpose();
            CHECK(Codebook(grown, 0.25).nearest(z).index == q.index);
        }
    }
    SUBCASE("usage counts sum to calls, also under concurrency") {
        MatX e(8, 3);
        for (Eigen::Index i = 0; i < e.size(); ++i) e.data()[i] = rng.normal();
        Codebook cb(e, 0.25);
        std::vector<VecX> queries;
        for (int i = 0; i < 4000; ++i) queries.push_back(random_vec(rng, 3));
        std::vector<std::jthread> workers;
        for (int w = 0; w < 4; ++w)
            workers.emplace_back([&, w] {
                for (int i = w; i < 4000; i += 4) cb.quantize(queries[std::size_t(i)]);
            });
        workers.clear();
        std::uint64_t sum = 0;
        for (auto c : cb.usage_counts()) sum += c;
        CHECK(sum == 4000);
        CHECK(cb.calls() == 4000);
        cb.reset_usage();
        CHECK(cb.calls() == 0);
    }
    SUBCASE("dead codes are re-seeded from recent inputs") {
        MatX e(2, 2);
        e << 0, 0, 1000, 1000;
        Codebook cb(e, 0.25);
        const VecX z = VecX::Constant(2, 0.1);
        for (int i = 0; i < 999; ++i) cb.quantize(z);
        cb.remember(z);
        Rng r(1);
        CHECK(cb.reseed_dead_codes(r) == 0);
        cb.quantize(z);
        CHECK(cb.reseed_dead_codes(r) == 1);
        CHECK(cb.entries().row(1).transpose() == z);
    }
    CHECK_THROWS_AS(Codebook(MatX(0, 3), 0.25), ConfigError);
}

TEST_CASE("vq_loss and straight-through") {
    Rng rng(54);
    const VecX z = random_vec(rng, 5);
    const auto zero = vq_loss(z, z, 0.25);
    CHECK(zero.total == 0.0);
    VecX a(2), b(2);
    a << 1, 0;
    b << 0, 0;
    const auto l = vq_loss(a, b, 0.25);
    CHECK(l.total == 1.25);
    CHECK(l.codebook == 1.0);
    CHECK(l.commitment == 0.25);
    CHECK(vq_loss(a, b, 0.0).total == vq_loss(a, b, 0.0).codebook);
    // Rotation invariance.
    const VecX e = random_vec(rng, 3), z3 = random_vec(rng, 3);
    const Eigen::Matrix3d rot = Eigen::AngleAxisd(0.9, Eigen::Vector3d(1, -2, 0.5).normalized()).toRotationMatrix();
    CHECK(vq_loss(rot * z3, rot * e, 0.3).total == doctest::Approx(vq_loss(z3, e, 0.3).total).epsilon(1e-13));
    const VecX g = random_vec(rng, 3);
    CHECK(straight_through(z3, e, g) == g);
    CHECK(straight_through_token(z3, e) == e);
    CHECK_THROWS_AS(vq_loss(a, e, 0.25), MismatchError);
}

TEST_CASE("toy encoder training") {
    const auto table = make_toy_embeddings(7);
    const auto samples = make_toy_task(table, 8, 7);
    ToyConfig cfg;
    cfg.seed = 3;
    SUBCASE("learns the two clusters") {
        const auto r = train_toy_encoder(samples, cfg);
        CHECK(codebook_purity(r.params, r.codebook, samples) == 1.0);
        CHECK(r.loss_trace.back() < 0.5 * r.loss_trace.front());
        const auto again = train_toy_encoder(samples, cfg);
        CHECK(again.loss_trace == r.loss_trace);
    }
    SUBCASE("zero learning rate keeps the loss constant") {
        cfg.learning_rate = 0.0;
        cfg.epochs = 20;
        const auto r = train_toy_encoder(samples, cfg);
        for (double l : r.loss_trace) CHECK(l == r.loss_trace.front());
    }
    SUBCASE("divergence names the iteration") {
        cfg.learning_rate = 1e6;
        CHECK_THROWS_WITH(train_toy_encoder(samples, cfg), doctest::Contains("iteration"));
    }
}

TEST_CASE("embedding files") {
    const auto dir = testing::scratch_dir("emb");
    Rng rng(55);
    for (int t = 0; t < 50; ++t) {
        EmbeddingTable tab;
        tab.dim = int(rng.uniform_int(1, 9));
        const int n = int(rng.uniform_int(0, 7));
        for (int i = 0; i < n; ++i) {
            tab.texts.push_back("text \"" + std::to_string(i) + "\"\n");
            for (int d = 0; d < tab.dim; ++d) tab.data.push_back(float(rng.normal()));
        }
        if (t % 2) tab.labels.assign(std::size_t(n), 1);
        write_embeddings(tab, dir / "t.emb");
        const auto back = read_embeddings(dir / "t.emb");
        CHECK(back.texts == tab.texts);
        CHECK(back.labels == tab.labels);
        CHECK(back.data == tab.data);
    }
    std::ofstream(dir / "bad.emb") << R"({"dim":2,"count":1,"texts":["a"]})" << "\nxyz";
    CHECK_THROWS_WITH_AS(read_embeddings(dir / "bad.emb"), doctest::Contains("size mismatch"), LoadError);
}
