#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "fedhids/error.hpp"
#include "fedhids/matrix.hpp"
#include "fedhids/rng.hpp"

namespace fedhids {

// Multilayer perceptron for binary classification: ReLU hidden layers,
// sigmoid output. This parameter set is the federated unit of exchange.
struct MlpParams {
    std::vector<int> dims;                    // [d_in, h1, ..., 1]
    std::vector<Matrix> weights;              // layer l: dims[l+1] x dims[l]
    std::vector<std::vector<double>> biases;  // layer l: dims[l+1]

    std::size_t n_layers() const { return weights.size(); }

    bool all_finite() const {
        for (const auto& w : weights)
            if (!w.all_finite()) return false;
        for (const auto& b : biases)
            for (double v : b)
                if (!std::isfinite(v)) return false;
        return true;
    }

    bool same_shape(const MlpParams& o) const {
        if (dims != o.dims || weights.size() != o.weights.size()) return false;
        for (std::size_t l = 0; l < weights.size(); ++l)
            if (weights[l].rows() != o.weights[l].rows() ||
                weights[l].cols() != o.weights[l].cols() || biases[l].size() != o.biases[l].size())
                return false;
        return true;
    }
};

struct TrainConfig {
    double lr = 0.01;
    double momentum = 0.9;
    int batch_size = 32;
    int epochs = 30;
    std::uint64_t seed = 0;
    double l2 = 1e-4;

    // Seed-stream contract: epoch e shuffles with the stream
    // derive_seed(seed, epoch_offset + e, stream_tag). Centralized training
    // leaves both at 0; a federated local update at round r for client c sets
    // epoch_offset = r * local_epochs and stream_tag = c, which makes the
    // single-client run replay the exact centralized shuffle sequence.
    std::int64_t epoch_offset = 0;
    std::uint64_t stream_tag = 0;
};

inline void validate_train_config(const TrainConfig& cfg) {
    if (!(cfg.lr > 0.0)) throw InvalidConfig("learning rate must be positive");
    if (cfg.momentum < 0.0 || cfg.momentum >= 1.0) throw InvalidConfig("momentum must lie in [0, 1)");
    if (cfg.batch_size < 1) throw InvalidConfig("batch_size must be >= 1");
    if (cfg.epochs < 0) throw InvalidConfig("epochs must be >= 0");
    if (cfg.l2 < 0.0) throw InvalidConfig("l2 must be >= 0");
}

// Xavier-uniform initialization in +-sqrt(6 / (fan_in + fan_out)); biases zero.
inline MlpParams init_mlp(const std::vector<int>& dims, std::uint64_t seed) {
    if (dims.size() < 2) throw InvalidConfig("an MLP needs at least input and output dims");
    for (int d : dims)
        if (d < 1) throw InvalidConfig("every layer dimension must be positive");
    if (dims.back() != 1) throw InvalidConfig("the output layer must have dimension 1");

    MlpParams p;
    p.dims = dims;
    Rng rng(seed);
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        const auto fan_in = static_cast<std::size_t>(dims[l]);
        const auto fan_out = static_cast<std::size_t>(dims[l + 1]);
        const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        Matrix w(fan_out, fan_in);
        for (double& v : w.data()) v = rng.next_uniform(-bound, bound);
        p.weights.push_back(std::move(w));
        p.biases.emplace_back(fan_out, 0.0);
    }
    return p;
}

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

namespace detail {

// forward pass keeping post-activation values per layer (activations[0] = x)
inline double forward_cached(const MlpParams& p, std::span<const double> x,
                             std::vector<std::vector<double>>& activations) {
    activations.resize(p.n_layers() + 1);
    activations[0].assign(x.begin(), x.end());
    for (std::size_t l = 0; l < p.n_layers(); ++l) {
        const Matrix& w = p.weights[l];
        std::vector<double>& out = activations[l + 1];
        out.assign(w.rows(), 0.0);
        const bool output_layer = (l + 1 == p.n_layers());
        for (std::size_t i = 0; i < w.rows(); ++i) {
            double z = p.biases[l][i] + dot(w.row(i), activations[l]);
            out[i] = output_layer ? sigmoid(z) : std::max(z, 0.0);
        }
    }
    return activations.back()[0];
}

} // namespace detail

inline double forward(const MlpParams& p, std::span<const double> x) {
    if (x.size() != static_cast<std::size_t>(p.dims.front()))
        throw DimensionMismatch("forward: input length does not match d_in");
    std::vector<std::vector<double>> acts;
    return detail::forward_cached(p, x, acts);
}

struct Gradients {
    std::vector<Matrix> weights;
    std::vector<std::vector<double>> biases;

    static Gradients zeros_like(const MlpParams& p) {
        Gradients g;
        for (std::size_t l = 0; l < p.n_layers(); ++l) {
            g.weights.emplace_back(p.weights[l].rows(), p.weights[l].cols());
            g.biases.emplace_back(p.biases[l].size(), 0.0);
        }
        return g;
    }
};

constexpr double kProbClamp = 1e-12;

// Mean binary cross-entropy (probabilities clamped to [1e-12, 1-1e-12]) plus
// (l2/2) * ||weights||^2; gradients by backpropagation. The l2 term applies to
// weights only, never biases.
inline std::pair<double, Gradients> loss_and_grad(const MlpParams& p, const Matrix& batch_x,
                                                  const std::vector<int>& batch_y, double l2) {
    if (batch_x.cols() != static_cast<std::size_t>(p.dims.front()))
        throw DimensionMismatch("loss_and_grad: input width does not match d_in");
    if (batch_x.rows() != batch_y.size())
        throw DimensionMismatch("loss_and_grad: batch rows and labels differ in length");
    for (int y : batch_y)
        if (y != 0 && y != 1) throw InvalidConfig("labels must be 0 or 1");

    const std::size_t n = batch_x.rows();
    const std::size_t layers = p.n_layers();
    Gradients grad = Gradients::zeros_like(p);
    double data_loss = 0.0;

    std::vector<std::vector<double>> acts;
    std::vector<std::vector<double>> delta(layers);
    for (std::size_t r = 0; r < n; ++r) {
        const double prob = detail::forward_cached(p, batch_x.row(r), acts);
        const double y = static_cast<double>(batch_y[r]);
        const double clamped = std::min(std::max(prob, kProbClamp), 1.0 - kProbClamp);
        data_loss += -(y * std::log(clamped) + (1.0 - y) * std::log(1.0 - clamped));

        // output delta of mean BCE wrt the logit
        delta[layers - 1].assign(1, (prob - y) / static_cast<double>(n));
        for (std::size_t l = layers; l-- > 0;) {
            const Matrix& w = p.weights[l];
            for (std::size_t i = 0; i < w.rows(); ++i) {
                const double d = delta[l][i];
                if (d == 0.0) continue;
                grad.biases[l][i] += d;
                auto grow = grad.weights[l].row(i);
                const auto& a_prev = acts[l];
                for (std::size_t j = 0; j < w.cols(); ++j) grow[j] += d * a_prev[j];
            }
            if (l == 0) break;
            // backpropagate through the ReLU of layer l-1
            delta[l - 1].assign(w.cols(), 0.0);
            for (std::size_t j = 0; j < w.cols(); ++j) {
                if (acts[l][j] <= 0.0) continue; // ReLU gate
                double s = 0.0;
                for (std::size_t i = 0; i < w.rows(); ++i) s += w(i, j) * delta[l][i];
                delta[l - 1][j] = s;
            }
        }
    }

    double reg = 0.0;
    for (std::size_t l = 0; l < layers; ++l) {
        for (std::size_t idx = 0; idx < p.weights[l].data().size(); ++idx) {
            const double w = p.weights[l].data()[idx];
            reg += w * w;
            grad.weights[l].data()[idx] += l2 * w;
        }
    }

    const double loss = data_loss / static_cast<double>(n) + 0.5 * l2 * reg;
    return {loss, std::move(grad)};
}

// Mini-batch SGD with momentum. Momentum buffers start at zero for every
// call and persist across epochs within the call. Batches are consecutive
// chunks of the per-epoch shuffled row order.
inline MlpParams train(MlpParams params, const Matrix& x, const std::vector<int>& y,
                       const TrainConfig& cfg, std::vector<double>* loss_trace = nullptr) {
    validate_train_config(cfg);
    if (x.rows() != y.size()) throw DimensionMismatch("train: rows and labels differ in length");
    if (x.cols() != static_cast<std::size_t>(params.dims.front()))
        throw DimensionMismatch("train: input width does not match d_in");
    if (cfg.epochs > 0 && x.rows() == 0) throw EmptyInput("train: no rows");

    Gradients velocity = Gradients::zeros_like(params);
    const std::size_t n = x.rows();
    const auto batch = static_cast<std::size_t>(cfg.batch_size);

    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        Rng rng(derive_seed(cfg.seed,
                            static_cast<std::uint64_t>(cfg.epoch_offset + epoch),
                            cfg.stream_tag));
        for (std::size_t i = 0; i < n; ++i) order[i] = i;
        rng.shuffle(order);

        double epoch_loss = 0.0;
        for (std::size_t begin = 0; begin < n; begin += batch) {
            const std::size_t end = std::min(begin + batch, n);
            const std::size_t bn = end - begin;
            Matrix bx(bn, x.cols());
            std::vector<int> by(bn);
            for (std::size_t i = 0; i < bn; ++i) {
                const std::size_t src = order[begin + i];
                for (std::size_t c = 0; c < x.cols(); ++c) bx(i, c) = x(src, c);
                by[i] = y[src];
            }
            auto [loss, grad] = loss_and_grad(params, bx, by, cfg.l2);
            epoch_loss += loss * static_cast<double>(bn);

            for (std::size_t l = 0; l < params.n_layers(); ++l) {
                auto& w = params.weights[l].data();
                auto& vw = velocity.weights[l].data();
                const auto& gw = grad.weights[l].data();
                for (std::size_t idx = 0; idx < w.size(); ++idx) {
                    vw[idx] = cfg.momentum * vw[idx] - cfg.lr * gw[idx];
                    w[idx] += vw[idx];
                }
                auto& b = params.biases[l];
                auto& vb = velocity.biases[l];
                const auto& gb = grad.biases[l];
                for (std::size_t idx = 0; idx < b.size(); ++idx) {
                    vb[idx] = cfg.momentum * vb[idx] - cfg.lr * gb[idx];
                    b[idx] += vb[idx];
                }
            }
        }
        if (loss_trace) loss_trace->push_back(epoch_loss / static_cast<double>(n));
    }
    return params;
}

inline std::vector<double> predict_proba(const MlpParams& p, const Matrix& x) {
    if (x.cols() != static_cast<std::size_t>(p.dims.front()))
        throw DimensionMismatch("predict_proba: input width does not match d_in");
    std::vector<double> probs(x.rows());
    std::vector<std::vector<double>> acts;
    for (std::size_t r = 0; r < x.rows(); ++r)
        probs[r] = detail::forward_cached(p, x.row(r), acts);
    return probs;
}

} // namespace fedhids
