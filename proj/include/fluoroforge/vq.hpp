#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fluoroforge/rng.hpp"

namespace fluoroforge {

using VecX = Eigen::VectorXd;
using MatX = Eigen::MatrixXd;

struct EncoderDims {
    int input = 512;
    int hidden = 512;
    int output = 256;
    int codebook_size = 512;
};

// Exact GELU: x * Phi(x).
double gelu(double x);
double gelu_derivative(double x);

// D_in -> H -> H -> D, GELU after each hidden layer, linear output.
struct MlpParams {
    MatX w1, w2, w3;
    VecX b1, b2, b3;

    int input_dim() const { return int(w1.cols()); }
    int output_dim() const { return int(w3.rows()); }

    static MlpParams zeros(int input, int hidden, int output);
    // Weights ~ N(0, 1/fan_in), biases ~ N(0, 0.01).
    static MlpParams random(int input, int hidden, int output, Rng& rng);
    void validate() const;

    // Flat parameter view for optimizers and finite-difference harnesses.
    std::size_t parameter_count() const;
    double& parameter(std::size_t i);
    void axpy(double alpha, const MlpParams& other);  // this += alpha * other
};

struct MlpCache {
    VecX x, a1, h1, a2, h2;
};

struct MlpForward {
    VecX z;
    MlpCache cache;
};

struct MlpBackward {
    MlpParams grad;
    VecX grad_x;
};

// Throws MismatchError on shape mismatch.
MlpForward mlp_forward(const MlpParams& params, const VecX& x);
MlpBackward mlp_backward(const MlpParams& params, const MlpCache& cache, const VecX& grad_out);

struct Quantized {
    int index = 0;
    VecX e;
};

// K x D codebook; row k is entry k. Usage counting is atomic so inference may
// count concurrently; everything else mutates and is single-threaded.
class Codebook {
public:
    Codebook() = default;
    Codebook(MatX entries, double beta);

    int size() const { return int(entries_.rows()); }
    int dim() const { return int(entries_.cols()); }
    double beta() const { return beta_; }
    const MatX& entries() const { return entries_; }
    MatX& entries() { return entries_; }

    // Nearest entry by squared L2 distance, lowest index on ties. No counting.
    Quantized nearest(const VecX& z) const;
    // nearest() plus a usage count increment.
    Quantized quantize(const VecX& z);

    const std::vector<std::uint64_t>& usage_counts() const { return usage_; }
    std::uint64_t calls() const { return calls_; }
    void reset_usage();

    // Keeps a bounded window of recent inputs for dead-code re-seeding.
    void remember(const VecX& z);
    // Entries unused for at least `window` quantize calls are replaced by a
    // random remembered input. Returns the number replaced.
    int reseed_dead_codes(Rng& rng, std::uint64_t window = kDeadCodeWindow);

    static constexpr std::uint64_t kDeadCodeWindow = 1000;
    static constexpr std::size_t kRecentCapacity = 256;

private:
    MatX entries_;
    double beta_ = 0.25;
    std::vector<std::uint64_t> usage_;
    std::vector<std::uint64_t> last_used_;  // call index + 1 of the latest use
    std::uint64_t calls_ = 0;
    std::vector<VecX> recent_;
    std::size_t recent_next_ = 0;
};

// Greedy farthest-point selection of k rows from the given points.
MatX farthest_point_init(const std::vector<VecX>& points, int k);

struct VqLoss {
    double total = 0.0;
    double codebook = 0.0;    // |sg(z_e) - e|^2
    double commitment = 0.0;  // beta |z_e - sg(e)|^2
};

VqLoss vq_loss(const VecX& z_e, const VecX& e, double beta);
// Token forward value: exactly e.
VecX straight_through_token(const VecX& z_e, const VecX& e);
// Gradient passes to z_e unchanged.
VecX straight_through(const VecX& z_e, const VecX& e, const VecX& grad_token);

struct ToySample {
    VecX embedding;
    VecX target;
    int label = 0;
};

struct ToyConfig {
    int hidden = 32;
    int codebook_size = 2;
    double beta = 0.25;
    double learning_rate = 0.05;
    int epochs = 300;
    std::uint64_t seed = 0;
};

struct ToyResult {
    MlpParams params;
    Codebook codebook;
    std::vector<double> loss_trace;  // mean loss before each update, then the final loss
};

// Full-batch gradient descent on mean(|token - target|^2 / D + vq loss).
// Throws Error naming the iteration if the loss becomes non-finite.
ToyResult train_toy_encoder(const std::vector<ToySample>& samples, const ToyConfig& config);

// Sum over codes of the largest single-label count among the samples assigned
// to that code, divided by the sample count.
double codebook_purity(const MlpParams& params, const Codebook& codebook, const std::vector<ToySample>& samples);

// Precomputed text embeddings: one JSON header line, then float32 rows.
struct EmbeddingTable {
    int dim = 0;
    std::vector<std::string> texts;
    std::vector<int> labels;  // optional, empty or one per row
    std::vector<float> data;  // row-major count x dim

    std::size_t count() const { return texts.size(); }
    VecX row(std::size_t i) const;
};

void write_embeddings(const EmbeddingTable& table, const std::filesystem::path& path);
EmbeddingTable read_embeddings(const std::filesystem::path& path);

// Two well-separated clusters of synthetic embeddings with labels 0 and 1.
EmbeddingTable make_toy_embeddings(std::uint64_t seed, int dim = 16, int per_cluster = 24);
// One fixed random target token per label.
std::vector<ToySample> make_toy_task(const EmbeddingTable& table, int token_dim, std::uint64_t seed);

}  // namespace fluoroforge
