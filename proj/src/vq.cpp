#include "fluoroforge/vq.hpp"

#include <atomic>
#include <bit>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>

#include <nlohmann/json.hpp>

#include "fluoroforge/error.hpp"

namespace fluoroforge {

static_assert(std::endian::native == std::endian::little, "embedding files are little-endian");

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x / std::numbers::sqrt2)); }

double gelu_derivative(double x) {
    const double cdf = 0.5 * (1.0 + std::erf(x / std::numbers::sqrt2));
    const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
    return cdf + x * pdf;
}

MlpParams MlpParams::zeros(int input, int hidden, int output) {
    MlpParams p;
    p.w1 = MatX::Zero(hidden, input);
    p.w2 = MatX::Zero(hidden, hidden);
    p.w3 = MatX::Zero(output, hidden);
    p.b1 = VecX::Zero(hidden);
    p.b2 = VecX::Zero(hidden);
    p.b3 = VecX::Zero(output);
    return p;
}

MlpParams MlpParams::random(int input, int hidden, int output, Rng& rng) {
    auto p = zeros(input, hidden, output);
    auto fill = [&](MatX& m) {
        const double s = 1.0 / std::sqrt(double(m.cols()));
        for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal(0.0, s);
    };
    fill(p.w1);
    fill(p.w2);
    fill(p.w3);
    for (VecX* b : {&p.b1, &p.b2, &p.b3})
        for (Eigen::Index i = 0; i < b->size(); ++i) (*b)[i] = rng.normal(0.0, 0.01);
    return p;
}

void MlpParams::validate() const {
    if (w1.rows() != b1.size() || w2.rows() != b2.size() || w3.rows() != b3.size() || w2.cols() != w1.rows() ||
        w3.cols() != w2.rows()) {
        throw MismatchError("MLP parameter shapes are inconsistent");
    }
    for (const MatX* m : {&w1, &w2, &w3})
        if (!m->allFinite()) throw Error("MLP weights are not finite");
    for (const VecX* b : {&b1, &b2, &b3})
        if (!b->allFinite()) throw Error("MLP biases are not finite");
}

std::size_t MlpParams::parameter_count() const {
    return std::size_t(w1.size() + b1.size() + w2.size() + b2.size() + w3.size() + b3.size());
}

double& MlpParams::parameter(std::size_t i) {
    for (auto* block : {&w1, &w2, &w3}) {
        const auto n = std::size_t(block->size());
        if (i < n) return block->data()[i];
        i -= n;
        VecX& bias = block == &w1 ? b1 : block == &w2 ? b2 : b3;
        if (i < std::size_t(bias.size())) return bias[Eigen::Index(i)];
        i -= std::size_t(bias.size());
    }
    throw std::out_of_range("MLP parameter index out of range");
}

void MlpParams::axpy(double alpha, const MlpParams& o) {
    w1 += alpha * o.w1;
    w2 += alpha * o.w2;
    w3 += alpha * o.w3;
    b1 += alpha * o.b1;
    b2 += alpha * o.b2;
    b3 += alpha * o.b3;
}

MlpForward mlp_forward(const MlpParams& p, const VecX& x) {
    p.validate();
    if (x.size() != p.w1.cols()) {
        throw MismatchError("MLP input has " + std::to_string(x.size()) + " values, expected " +
                            std::to_string(p.w1.cols()));
    }
    MlpForward f;
    f.cache.x = x;
    f.cache.a1 = p.w1 * x + p.b1;
    f.cache.h1 = f.cache.a1.unaryExpr([](double v) { return gelu(v); });
    f.cache.a2 = p.w2 * f.cache.h1 + p.b2;
    f.cache.h2 = f.cache.a2.unaryExpr([](double v) { return gelu(v); });
    f.z = p.w3 * f.cache.h2 + p.b3;
    return f;
}

MlpBackward mlp_backward(const MlpParams& p, const MlpCache& c, const VecX& grad_out) {
    if (c.x.size() != p.w1.cols() || c.a1.size() != p.w1.rows() || c.a2.size() != p.w2.rows() ||
        c.h2.size() != p.w3.cols()) {
        throw MismatchError("MLP cache does not match the parameters");
    }
    if (grad_out.size() != p.w3.rows()) throw MismatchError("MLP output gradient has the wrong size");
    MlpBackward b;
    b.grad.w3 = grad_out * c.h2.transpose();
    b.grad.b3 = grad_out;
    const VecX g2 = (p.w3.transpose() * grad_out).cwiseProduct(c.a2.unaryExpr([](double v) { return gelu_derivative(v); }));
    b.grad.w2 = g2 * c.h1.transpose();
    b.grad.b2 = g2;
    const VecX g1 = (p.w2.transpose() * g2).cwiseProduct(c.a1.unaryExpr([](double v) { return gelu_derivative(v); }));
    b.grad.w1 = g1 * c.x.transpose();
    b.grad.b1 = g1;
    b.grad_x = p.w1.transpose() * g1;
    return b;
}

Codebook::Codebook(MatX entries, double beta) : entries_(std::move(entries)), beta_(beta) {
    if (entries_.rows() < 1) throw ConfigError("codebook needs at least one entry");
    if (!entries_.allFinite()) throw ConfigError("codebook entries must be finite");
    if (!(beta_ >= 0.0)) throw ConfigError("commitment weight must be non-negative");
    usage_.assign(std::size_t(entries_.rows()), 0);
    last_used_.assign(std::size_t(entries_.rows()), 0);
}

Quantized Codebook::nearest(const VecX& z) const {
    if (z.size() != entries_.cols()) throw MismatchError("quantize input dimension does not match the codebook");
    int best = 0;
    double best_d = (entries_.row(0).transpose() - z).squaredNorm();
    for (int k = 1; k < size(); ++k) {
        const double d = (entries_.row(k).transpose() - z).squaredNorm();
        if (d < best_d) {
            best_d = d;
            best = k;
        }
    }
    return {best, entries_.row(best).transpose()};
}

Quantized Codebook::quantize(const VecX& z) {
    auto q = nearest(z);
    std::atomic_ref<std::uint64_t>(usage_[std::size_t(q.index)]).fetch_add(1, std::memory_order_relaxed);
    const auto call = std::atomic_ref<std::uint64_t>(calls_).fetch_add(1, std::memory_order_relaxed);
    std::atomic_ref<std::uint64_t>(last_used_[std::size_t(q.index)]).store(call + 1, std::memory_order_relaxed);
    return q;
}

void Codebook::reset_usage() {
    std::fill(usage_.begin(), usage_.end(), 0);
    std::fill(last_used_.begin(), last_used_.end(), 0);
    calls_ = 0;
}

void Codebook::remember(const VecX& z) {
    if (recent_.size() < kRecentCapacity) {
        recent_.push_back(z);
    } else {
        recent_[recent_next_] = z;
        recent_next_ = (recent_next_ + 1) % kRecentCapacity;
    }
}

int Codebook::reseed_dead_codes(Rng& rng, std::uint64_t window) {
    if (recent_.empty()) return 0;
    int replaced = 0;
    for (int k = 0; k < size(); ++k) {
        if (calls_ - last_used_[std::size_t(k)] < window) continue;
        entries_.row(k) = recent_[std::size_t(rng.uniform_int(0, std::int64_t(recent_.size()) - 1))].transpose();
        last_used_[std::size_t(k)] = calls_;
        ++replaced;
    }
    return replaced;
}

MatX farthest_point_init(const std::vector<VecX>& points, int k) {
    if (points.empty() || k < 1) throw ConfigError("farthest-point init needs points and k >= 1");
    const auto dim = points.front().size();
    MatX out(k, dim);
    std::vector<double> dist(points.size(), std::numeric_limits<double>::infinity());
    std::size_t pick = 0;
    for (int c = 0; c < k; ++c) {
        out.row(c) = points[pick].transpose();
        std::size_t next = 0;
        for (std::size_t i = 0; i < points.size(); ++i) {
            dist[i] = std::min(dist[i], (points[i] - points[pick]).squaredNorm());
            if (dist[i] > dist[next]) next = i;
        }
        pick = next;
    }
    return out;
}

VqLoss vq_loss(const VecX& z_e, const VecX& e, double beta) {
    if (z_e.size() != e.size()) throw MismatchError("vq_loss dimensions differ");
    if (!(beta >= 0.0)) throw ConfigError("commitment weight must be non-negative");
    VqLoss l;
    l.codebook = (z_e - e).squaredNorm();
    l.commitment = beta * l.codebook;
    l.total = l.codebook + l.commitment;
    return l;
}

VecX straight_through_token(const VecX& z_e, const VecX& e) {
    if (z_e.size() != e.size()) throw MismatchError("straight-through dimensions differ");
    return e;
}

VecX straight_through(const VecX& z_e, const VecX& e, const VecX& grad_token) {
    if (z_e.size() != e.size() || grad_token.size() != e.size()) throw MismatchError("straight-through dimensions differ");
    return grad_token;
}

ToyResult train_toy_encoder(const std::vector<ToySample>& samples, const ToyConfig& cfg) {
    if (samples.size() < 2) throw ConfigError("toy training needs at least two samples");
    if (!(cfg.learning_rate >= 0.0)) throw ConfigError("learning rate must be non-negative");
    const int in = int(samples.front().embedding.size()), out = int(samples.front().target.size());
    Rng rng(cfg.seed);
    ToyResult r;
    r.params = MlpParams::random(in, cfg.hidden, out, rng);

    std::vector<VecX> initial;
    for (const auto& s : samples) initial.push_back(mlp_forward(r.params, s.embedding).z);
    r.codebook = Codebook(farthest_point_init(initial, cfg.codebook_size), cfg.beta);

    const double n = double(samples.size());
    auto step = [&](bool update) {
        MlpParams grad = MlpParams::zeros(in, cfg.hidden, out);
        MatX grad_codes = MatX::Zero(r.codebook.size(), r.codebook.dim());
        double loss = 0.0;
        for (const auto& s : samples) {
            const auto f = mlp_forward(r.params, s.embedding);
            const auto q = update ? r.codebook.quantize(f.z) : r.codebook.nearest(f.z);
            if (update) r.codebook.remember(f.z);
            const VecX token = straight_through_token(f.z, q.e);
            const VecX diff = token - s.target;
            loss += (diff.squaredNorm() / out + vq_loss(f.z, q.e, cfg.beta).total) / n;
            if (!update) continue;
            const VecX grad_token = 2.0 * diff / out;
            const VecX grad_z = straight_through(f.z, q.e, grad_token) + 2.0 * cfg.beta * (f.z - q.e);
            grad.axpy(1.0 / n, mlp_backward(r.params, f.cache, grad_z).grad);
            grad_codes.row(q.index) += (2.0 * (q.e - f.z) / n).transpose();
        }
        if (update) {
            r.params.axpy(-cfg.learning_rate, grad);
            r.codebook.entries() -= cfg.learning_rate * grad_codes;
            r.codebook.reseed_dead_codes(rng);
        }
        return loss;
    };
    for (int it = 0; it < cfg.epochs; ++it) {
        const double loss = step(true);
        if (!std::isfinite(loss)) throw Error("toy training diverged at iteration " + std::to_string(it));
        r.loss_trace.push_back(loss);
    }
    const double final_loss = step(false);
    if (!std::isfinite(final_loss)) throw Error("toy training diverged at iteration " + std::to_string(cfg.epochs));
    r.loss_trace.push_back(final_loss);
    return r;
}

double codebook_purity(const MlpParams& params, const Codebook& codebook, const std::vector<ToySample>& samples) {
    if (samples.empty()) return 1.0;
    std::map<int, std::map<int, int>> counts;
    for (const auto& s : samples) ++counts[codebook.nearest(mlp_forward(params, s.embedding).z).index][s.label];
    int agree = 0;
    for (const auto& [code, labels] : counts) {
        int best = 0;
        for (const auto& [label, c] : labels) best = std::max(best, c);
        agree += best;
    }
    return double(agree) / double(samples.size());
}

VecX EmbeddingTable::row(std::size_t i) const {
    if (i >= count()) throw std::out_of_range("embedding row out of range");
    VecX v(dim);
    for (int d = 0; d < dim; ++d) v[d] = data[i * std::size_t(dim) + std::size_t(d)];
    return v;
}

void write_embeddings(const EmbeddingTable& t, const std::filesystem::path& path) {
    if (t.data.size() != t.count() * std::size_t(t.dim)) throw MismatchError("embedding data size does not match header");
    nlohmann::json header{{"dim", t.dim}, {"count", t.count()}, {"texts", t.texts}};
    if (!t.labels.empty()) header["labels"] = t.labels;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out << header.dump() << '\n';
    out.write(reinterpret_cast<const char*>(t.data.data()), std::streamsize(t.data.size() * sizeof(float)));
}

EmbeddingTable read_embeddings(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw LoadError("cannot open embedding file " + path.string());
    std::string line;
    std::getline(in, line);
    EmbeddingTable t;
    std::size_t count = 0;
    try {
        const auto h = nlohmann::json::parse(line);
        t.dim = h.at("dim").get<int>();
        count = h.at("count").get<std::size_t>();
        t.texts = h.at("texts").get<std::vector<std::string>>();
        if (h.contains("labels")) t.labels = h["labels"].get<std::vector<int>>();
    } catch (const nlohmann::json::exception& e) {
        throw LoadError("embedding file " + path.string() + " has a malformed header: " + e.what());
    }
    if (t.dim < 1 || t.texts.size() != count || (!t.labels.empty() && t.labels.size() != count)) {
        throw LoadError("embedding file " + path.string() + " header is inconsistent");
    }
    t.data.resize(count * std::size_t(t.dim));
    in.read(reinterpret_cast<char*>(t.data.data()), std::streamsize(t.data.size() * sizeof(float)));
    if (in.gcount() != std::streamsize(t.data.size() * sizeof(float)) || in.peek() != std::char_traits<char>::eof()) {
        throw LoadError("embedding file " + path.string() + ": size mismatch with header");
    }
    for (float f : t.data)
        if (!std::isfinite(f)) throw LoadError("embedding file " + path.string() + " contains non-finite values");
    return t;
}

EmbeddingTable make_toy_embeddings(std::uint64_t seed, int dim, int per_cluster) {
    Rng rng(seed);
    EmbeddingTable t;
    t.dim = dim;
    std::vector<VecX> centers;
    for (int c = 0; c < 2; ++c) {
        VecX v(dim);
        for (int d = 0; d < dim; ++d) v[d] = rng.normal();
        centers.push_back(v.normalized() * 3.0);
    }
    static const char* stems[2][4] = {{"left kidney", "renal organ on the left", "L kidney", "segment the left kidney"},
                                      {"right femur", "thigh bone, right side", "R femur", "outline the right femur"}};
    for (int c = 0; c < 2; ++c)
        for (int i = 0; i < per_cluster; ++i) {
            t.texts.push_back(std::string(stems[c][i % 4]) + " #" + std::to_string(i / 4));
            t.labels.push_back(c);
            for (int d = 0; d < dim; ++d) t.data.push_back(float(centers[c][d] + rng.normal(0.0, 0.3)));
        }
    return t;
}

std::vector<ToySample> make_toy_task(const EmbeddingTable& table, int token_dim, std::uint64_t seed) {
    if (table.labels.size() != table.count()) throw ConfigError("toy task needs a labelled embedding table");
    Rng rng(seed);
    std::map<int, VecX> targets;
    for (int label : table.labels) {
        if (targets.contains(label)) continue;
        VecX t(token_dim);
        for (int d = 0; d < token_dim; ++d) t[d] = rng.normal();
        targets[label] = t;
    }
    std::vector<ToySample> out;
    for (std::size_t i = 0; i < table.count(); ++i) out.push_back({table.row(i), targets[table.labels[i]], table.labels[i]});
    return out;
}

}  // namespace fluoroforge
