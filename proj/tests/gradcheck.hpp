#pragma once

#include <algorithm>
#include <cmath>
#include <functional>

#include "fluoroforge/vq.hpp"

namespace testing {

inline constexpr double kFiniteStep = 1e-4;

// Per-entry relative error, used for small hand checks.
inline double relative_error(double analytic, double numeric) {
    return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), 1e-12});
}

// Norm-wise relative error |a - n| / max(|a|, |n|) of the full parameter
// gradient against central finite differences of `loss`. Entry-wise ratios
// are not used: entries near zero are dominated by the h^2 truncation term.
inline double check_parameters(fluoroforge::MlpParams params, const fluoroforge::MlpParams& analytic,
                               const std::function<double(const fluoroforge::MlpParams&)>& loss) {
    fluoroforge::MlpParams a = analytic;
    double diff2 = 0.0, a2 = 0.0, n2 = 0.0;
    for (std::size_t i = 0; i < params.parameter_count(); ++i) {
        double& p = params.parameter(i);
        const double saved = p;
        p = saved + kFiniteStep;
        const double up = loss(params);
        p = saved - kFiniteStep;
        const double down = loss(params);
        p = saved;
        const double numeric = (up - down) / (2 * kFiniteStep);
        diff2 += (a.parameter(i) - numeric) * (a.parameter(i) - numeric);
        a2 += a.parameter(i) * a.parameter(i);
        n2 += numeric * numeric;
    }
    const double scale = std::sqrt(std::max(a2, n2));
    return scale > 0.0 ? std::sqrt(diff2) / scale : std::sqrt(diff2);
}

// Downstream loss used by the gradient checks: 0.5 |A token - y|^2.
struct Readout {
    fluoroforge::MatX a;
    fluoroforge::VecX y;
    double loss(const fluoroforge::VecX& token) const { return 0.5 * (a * token - y).squaredNorm(); }
    fluoroforge::VecX grad(const fluoroforge::VecX& token) const { return a.transpose() * (a * token - y); }
};

inline Readout random_readout(fluoroforge::Rng& rng, int out_dim, int token_dim) {
    Readout r{fluoroforge::MatX(out_dim, token_dim), fluoroforge::VecX(out_dim)};
    for (Eigen::Index i = 0; i < r.a.size(); ++i) r.a.data()[i] = rng.normal();
    for (Eigen::Index i = 0; i < r.y.size(); ++i) r.y[i] = rng.normal();
    return r;
}

struct GradCheckResult {
    double mlp = 0.0;
    double pipeline = 0.0;
};

// One seed of both checks: MLP backward against finite differences of the
// readout loss, and the pinned-index straight-through pipeline (readout of
// z_e + (e - z_e at the base point) plus commitment) against its finite
// differences.
inline GradCheckResult run_gradient_checks(std::uint64_t seed) {
    using namespace fluoroforge;
    Rng rng(seed);
    const int in = int(rng.uniform_int(2, 6)), hidden = int(rng.uniform_int(2, 6)), out = int(rng.uniform_int(2, 5));
    const auto params = MlpParams::random(in, hidden, out, rng);
    VecX x(in);
    for (int i = 0; i < in; ++i) x[i] = rng.normal();
    const auto readout = random_readout(rng, 3, out);
    GradCheckResult r;

    const auto f = mlp_forward(params, x);
    const auto back = mlp_backward(params, f.cache, readout.grad(f.z));
    r.mlp = check_parameters(params, back.grad, [&](const MlpParams& p) { return readout.loss(mlp_forward(p, x).z); });

    MatX entries(4, out);
    for (Eigen::Index i = 0; i < entries.size(); ++i) entries.data()[i] = rng.normal();
    const Codebook cb(entries, 0.25);
    const auto q = cb.nearest(f.z);
    const VecX offset = q.e - f.z;  // pinned at the base point
    const VecX token = straight_through_token(f.z, q.e);
    const VecX grad_z = straight_through(f.z, q.e, readout.grad(token)) + 2.0 * cb.beta() * (f.z - q.e);
    const auto pipe = mlp_backward(params, f.cache, grad_z);
    r.pipeline = check_parameters(params, pipe.grad, [&](const MlpParams& p) {
        const VecX z = mlp_forward(p, x).z;
        return readout.loss(z + offset) + vq_loss(z, q.e, cb.beta()).commitment;
    });
    return r;
}

}  // namespace testing
