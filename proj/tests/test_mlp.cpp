#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstddef>
#include <vector>

#include "fedhids/mlp.hpp"
#include "fedhids/rng.hpp"
#include "oracles.hpp"

using namespace fedhids;

namespace {

bool same_values(const MlpParams& a, const MlpParams& b) {
    if (a.dims != b.dims || a.weights.size() != b.weights.size()) return false;
    for (std::size_t l = 0; l < a.weights.size(); ++l)
        if (!(a.weights[l] == b.weights[l]) || a.biases[l] != b.biases[l]) return false;
    return true;
}

// two linearly separable 2-d blobs
void make_blobs(Matrix& x, std::vector<int>& y, std::size_t per_class, std::uint64_t seed) {
    Rng rng(seed);
    x = Matrix(2 * per_class, 2);
    y.assign(2 * per_class, 0);
    for (std::size_t i = 0; i < 2 * per_class; ++i) {
        const int label = i < per_class ? 0 : 1;
        const double cx = label == 0 ? -2.0 : 2.0;
        x(i, 0) = cx + rng.next_uniform(-0.5, 0.5);
        x(i, 1) = cx + rng.next_uniform(-0.5, 0.5);
        y[i] = label;
    }
}

} // namespace

TEST_CASE("init_mlp produces Xavier-bounded layers with zero biases") {
    const std::vector<int> dims{4, 3, 1};
    const MlpParams p = init_mlp(dims, 5);
    REQUIRE(p.n_layers() == 2);
    REQUIRE(p.weights[0].rows() == 3);
    REQUIRE(p.weights[0].cols() == 4);
    REQUIRE(p.weights[1].rows() == 1);
    REQUIRE(p.weights[1].cols() == 3);
    REQUIRE(p.biases[0] == std::vector<double>(3, 0.0));
    REQUIRE(p.biases[1] == std::vector<double>(1, 0.0));

    const double bound0 = std::sqrt(6.0 / (4 + 3));
    for (double v : p.weights[0].data()) {
        REQUIRE(v >= -bound0);
        REQUIRE(v <= bound0);
    }
    const double bound1 = std::sqrt(6.0 / (3 + 1));
    for (double v : p.weights[1].data()) {
        REQUIRE(v >= -bound1);
        REQUIRE(v <= bound1);
    }

    REQUIRE(same_values(p, init_mlp(dims, 5)));
    REQUIRE_FALSE(same_values(p, init_mlp(dims, 6)));
}

TEST_CASE("init_mlp rejects malformed layer specs") {
    REQUIRE_THROWS_AS(init_mlp({4}, 0), InvalidConfig);
    REQUIRE_THROWS_AS(init_mlp({4, 0, 1}, 0), InvalidConfig);
    REQUIRE_THROWS_AS(init_mlp({4, 3, 2}, 0), InvalidConfig);
}

TEST_CASE("forward computes a hand-checked value") {
    MlpParams p;
    p.dims = {2, 2, 1};
    Matrix w0(2, 2);
    w0(0, 0) = 1.0;
    w0(1, 1) = 1.0;
    Matrix w1(1, 2, 1.0);
    p.weights = {w0, w1};
    p.biases = {{0.0, 0.0}, {0.0}};

    // hidden = relu(2), relu(-3) = (2, 0); output = sigmoid(2)
    const std::vector<double> x{2.0, -3.0};
    REQUIRE(forward(p, x) == Catch::Approx(0.8807970779778823).epsilon(1e-12));

    const std::vector<double> wrong{1.0, 2.0, 3.0};
    REQUIRE_THROWS_AS(forward(p, wrong), DimensionMismatch);
}

TEST_CASE("loss at an all-zero net is ln 2") {
    MlpParams p;
    p.dims = {3, 1};
    p.weights = {Matrix(1, 3)};
    p.biases = {{0.0}};
    Matrix x(4, 3, 0.7);
    const std::vector<int> y{1, 0, 1, 0};
    const auto [loss, grad] = loss_and_grad(p, x, y, 0.0);
    REQUIRE(loss == Catch::Approx(std::log(2.0)).epsilon(1e-12));
    // zero weights contribute no penalty either way
    REQUIRE(loss_and_grad(p, x, y, 0.5).first == Catch::Approx(std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("analytic gradients agree with finite differences") {
    Rng rng(2024);
    for (std::uint64_t trial = 0; trial < 4; ++trial) {
        const std::vector<int> dims = trial % 2 == 0 ? std::vector<int>{3, 4, 1}
                                                     : std::vector<int>{2, 3, 2, 1};
        MlpParams p = init_mlp(dims, 100 + trial);
        Matrix x(5, static_cast<std::size_t>(dims.front()));
        std::vector<int> y(5);
        for (std::size_t r = 0; r < 5; ++r) {
            for (std::size_t c = 0; c < x.cols(); ++c) x(r, c) = rng.next_uniform(-1.0, 1.0);
            y[r] = static_cast<int>(rng.next_below(2));
        }
        const double l2 = trial % 2 == 0 ? 0.0 : 0.01;
        const auto check = oracles::fd_gradient_check(p, x, y, l2, 1e-5);
        REQUIRE(check.max_rel_err < 1e-4);
    }
}

TEST_CASE("loss_and_grad validates shapes and labels") {
    MlpParams p = init_mlp({2, 1}, 0);
    Matrix x(2, 2);
    REQUIRE_THROWS_AS(loss_and_grad(p, x, {1}, 0.0), DimensionMismatch);
    REQUIRE_THROWS_AS(loss_and_grad(p, Matrix(2, 3), {1, 0}, 0.0), DimensionMismatch);
    REQUIRE_THROWS_AS(loss_and_grad(p, x, {1, 2}, 0.0), InvalidConfig);
}

TEST_CASE("training drives the loss down on separable data") {
    Matrix x;
    std::vector<int> y;
    make_blobs(x, y, 20, 77);

    TrainConfig cfg;
    cfg.lr = 0.05;
    cfg.epochs = 20;
    cfg.batch_size = 8;
    cfg.seed = 3;

    std::vector<double> trace;
    const MlpParams trained = train(init_mlp({2, 4, 1}, 3), x, y, cfg, &trace);
    REQUIRE(trace.size() == 20);
    REQUIRE(trace.back() < trace.front());
    REQUIRE(trace.back() < 0.3);

    // every training point ends up on the right side
    const auto probs = predict_proba(trained, x);
    for (std::size_t i = 0; i < probs.size(); ++i)
        REQUIRE((probs[i] >= 0.5 ? 1 : 0) == y[i]);
}

TEST_CASE("training is deterministic in the seed") {
    Matrix x;
    std::vector<int> y;
    make_blobs(x, y, 10, 9);
    TrainConfig cfg;
    cfg.epochs = 5;
    cfg.seed = 42;
    const MlpParams a = train(init_mlp({2, 3, 1}, 1), x, y, cfg);
    const MlpParams b = train(init_mlp({2, 3, 1}, 1), x, y, cfg);
    REQUIRE(same_values(a, b));

    cfg.seed = 43;
    const MlpParams c = train(init_mlp({2, 3, 1}, 1), x, y, cfg);
    REQUIRE_FALSE(same_values(a, c));
}

TEST_CASE("epoch_offset splits a run into identical stages") {
    Matrix x;
    std::vector<int> y;
    make_blobs(x, y, 12, 21);

    TrainConfig full;
    full.momentum = 0.0; // velocity resets at call boundaries, so only plain SGD splits
    full.epochs = 4;
    full.seed = 11;

    TrainConfig first = full;
    first.epochs = 2;
    TrainConfig second = first;
    second.epoch_offset = 2;

    const MlpParams init = init_mlp({2, 3, 1}, 8);
    const MlpParams one_shot = train(init, x, y, full);
    const MlpParams staged = train(train(init, x, y, first), x, y, second);
    REQUIRE(same_values(one_shot, staged)); // bitwise: same batches, same arithmetic

    // the stream tag separates otherwise identical schedules
    TrainConfig tagged = full;
    tagged.stream_tag = 1;
    REQUIRE_FALSE(same_values(one_shot, train(init, x, y, tagged)));
}

TEST_CASE("zero epochs returns the parameters untouched") {
    Matrix x(3, 2, 1.0);
    const std::vector<int> y{0, 1, 0};
    TrainConfig cfg;
    cfg.epochs = 0;
    const MlpParams p = init_mlp({2, 1}, 4);
    REQUIRE(same_values(p, train(p, x, y, cfg)));
}

TEST_CASE("train validates configuration and shapes") {
    Matrix x(2, 2);
    const std::vector<int> y{0, 1};
    const MlpParams p = init_mlp({2, 1}, 0);

    TrainConfig cfg;
    cfg.lr = 0.0;
    REQUIRE_THROWS_AS(train(p, x, y, cfg), InvalidConfig);
    cfg = {};
    cfg.momentum = 1.0;
    REQUIRE_THROWS_AS(train(p, x, y, cfg), InvalidConfig);
    cfg = {};
    cfg.batch_size = 0;
    REQUIRE_THROWS_AS(train(p, x, y, cfg), InvalidConfig);
    cfg = {};
    cfg.epochs = -1;
    REQUIRE_THROWS_AS(train(p, x, y, cfg), InvalidConfig);
    cfg = {};
    cfg.l2 = -0.1;
    REQUIRE_THROWS_AS(train(p, x, y, cfg), InvalidConfig);

    cfg = {};
    const std::vector<int> bad_len{0};
    REQUIRE_THROWS_AS(train(p, x, bad_len, cfg), DimensionMismatch);
    REQUIRE_THROWS_AS(train(p, Matrix(2, 3), y, cfg), DimensionMismatch);
    REQUIRE_THROWS_AS(train(p, Matrix(0, 2), {}, cfg), EmptyInput);
}

TEST_CASE("predict_proba matches per-row forward") {
    Rng rng(606);
    const MlpParams p = init_mlp({3, 4, 1}, 15);
    Matrix x(6, 3);
    for (double& v : x.data()) v = rng.next_uniform(-2.0, 2.0);
    const auto probs = predict_proba(p, x);
    REQUIRE(probs.size() == 6);
    for (std::size_t r = 0; r < 6; ++r) REQUIRE(probs[r] == forward(p, x.row(r)));
    REQUIRE_THROWS_AS(predict_proba(p, Matrix(2, 5)), DimensionMismatch);
}
