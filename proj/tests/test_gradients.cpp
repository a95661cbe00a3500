#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "fpnet/loss.hpp"

using namespace fpnet;

namespace {

Matrix random_inputs(std::size_t rows, std::size_t cols, std::uint64_t seed) {
    Matrix m(rows, cols);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(0.0, 1.0);
    for (double& v : m.data()) v = dist(rng);
    return m;
}

std::vector<std::size_t> random_labels(std::size_t n, std::size_t classes,
                                       std::uint64_t seed) {
    std::vector<std::size_t> y(n);
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> dist(0, classes - 1);
    for (auto& v : y) v = dist(rng);
    return y;
}

double rel_err(double a, double b) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-8});
}

double max_grad_rel_err(const Network& net, const Matrix& x,
                        const std::vector<std::size_t>& y, double lambda) {
    const ForwardCache cache = forward(net, x);
    const Gradients analytic = backward(net, cache, y, lambda);
    const Gradients numeric = finite_diff_gradient(net, x, y, lambda);
    double worst = 0.0;
    for (std::size_t l = 0; l < analytic.weights.size(); ++l) {
        for (std::size_t i = 0; i < analytic.weights[l].size(); ++i)
            worst = std::max(worst, rel_err(analytic.weights[l].data()[i],
                                            numeric.weights[l].data()[i]));
        for (std::size_t i = 0; i < analytic.biases[l].size(); ++i)
            worst = std::max(worst, rel_err(analytic.biases[l][i], numeric.biases[l][i]));
    }
    return worst;
}

}  // namespace

TEST(Loss, UniformProbabilitiesGiveLnC) {
    Network net;
    net.layers.push_back(
        Layer{Matrix(119, 5), std::vector<double>(119, 0.0), Activation::softmax});
    const Matrix x = random_inputs(3, 5, 1);
    const ForwardCache cache = forward(net, x);
    const double loss = loss_total(cache, {7, 42, 118}, 0.0, net);
    EXPECT_NEAR(loss, std::log(119.0), 1e-12);
}

TEST(Loss, ZeroWeightsHaveZeroPenalty) {
    Network net;
    net.layers.push_back(Layer{Matrix(4, 3), std::vector<double>(4, 0.0), Activation::softmax});
    const Matrix x = random_inputs(2, 3, 2);
    const ForwardCache cache = forward(net, x);
    EXPECT_EQ(loss_total(cache, {0, 1}, 0.0005, net), loss_total(cache, {0, 1}, 0.0, net));
}

TEST(Loss, PenaltyDecomposesExactly) {
    NetworkConfig config;
    config.layer_sizes = {5, 7, 4};
    config.init_seed = 11;
    const Network net = init_network(config);
    const Matrix x = random_inputs(6, 5, 3);
    const auto y = random_labels(6, 4, 4);
    const ForwardCache cache = forward(net, x);
    const double lambda = 0.0005;
    double sum_sq = 0.0;  // independent summation
    for (const Layer& l : net.layers)
        for (double w : l.weights.data()) sum_sq += w * w;
    const double diff = loss_total(cache, y, lambda, net) - loss_total(cache, y, 0.0, net);
    EXPECT_LE(std::abs(diff - lambda * sum_sq), 1e-12 * std::max(1.0, lambda * sum_sq));
}

TEST(Loss, InvariantUnderOutputRelabeling) {
    NetworkConfig config;
    config.layer_sizes = {4, 6, 5};
    config.init_seed = 19;
    const Network net = init_network(config);
    const Matrix x = random_inputs(8, 4, 5);
    const auto y = random_labels(8, 5, 6);

    const std::vector<std::size_t> perm = {2, 4, 0, 1, 3};  // class i -> perm[i]
    Network relabeled = net;
    Layer& out = relabeled.layers.back();
    for (std::size_t i = 0; i < 5; ++i) {
        for (std::size_t j = 0; j < out.weights.cols(); ++j)
            out.weights(perm[i], j) = net.layers.back().weights(i, j);
        out.biases[perm[i]] = net.layers.back().biases[i];
    }
    std::vector<std::size_t> y_perm(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) y_perm[i] = perm[y[i]];

    const double a = loss_total(forward(net, x), y, 0.0005, net);
    const double b = loss_total(forward(relabeled, x), y_perm, 0.0005, relabeled);
    EXPECT_NEAR(a, b, 1e-12 * std::abs(a));
}

TEST(Backward, PerfectPredictionHasZeroGradient) {
    // Saturated logits make the correct-class probability exactly 1.
    Network net;
    Matrix w(3, 2);
    w(0, 0) = 2000.0;
    w(1, 0) = -2000.0;
    w(2, 0) = -2000.0;
    net.layers.push_back(Layer{w, std::vector<double>(3, 0.0), Activation::softmax});
    Matrix x(1, 2);
    x(0, 0) = 1.0;
    const ForwardCache cache = forward(net, x);
    ASSERT_EQ(cache.output()(0, 0), 1.0);
    const Gradients g = backward(net, cache, {0}, 0.0);
    for (const Matrix& gw : g.weights)
        for (double v : gw.data()) EXPECT_EQ(v, 0.0);
    for (const auto& gb : g.biases)
        for (double v : gb) EXPECT_EQ(v, 0.0);
}

TEST(Backward, L2TermIsExactlyTwoLambdaW) {
    NetworkConfig config;
    config.layer_sizes = {5, 7, 4};
    config.init_seed = 23;
    const Network net = init_network(config);
    const Matrix x = random_inputs(6, 5, 7);
    const auto y = random_labels(6, 4, 8);
    const ForwardCache cache = forward(net, x);
    const double lambda = 0.0005;
    const Gradients with = backward(net, cache, y, lambda);
    const Gradients without = backward(net, cache, y, 0.0);
    double err_sq = 0.0, ref_sq = 0.0;
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        for (std::size_t i = 0; i < with.weights[l].size(); ++i) {
            const double diff = with.weights[l].data()[i] - without.weights[l].data()[i];
            const double expect = 2.0 * lambda * net.layers[l].weights.data()[i];
            err_sq += (diff - expect) * (diff - expect);
            ref_sq += expect * expect;
        }
        for (std::size_t i = 0; i < with.biases[l].size(); ++i)
            EXPECT_EQ(with.biases[l][i], without.biases[l][i]);  // no bias penalty
    }
    EXPECT_LE(std::sqrt(err_sq), 1e-12 * std::sqrt(ref_sq));
}

TEST(Backward, MatchesFiniteDifferences) {
    NetworkConfig config;
    config.layer_sizes = {4, 6, 3};
    config.init_seed = 12345;
    const Network net = init_network(config);
    const Matrix x = random_inputs(8, 4, 9);
    const auto y = random_labels(8, 3, 10);
    for (const double lambda : {0.0, 5e-4})
        EXPECT_LT(max_grad_rel_err(net, x, y, lambda), 1e-5) << "lambda=" << lambda;
}

TEST(Backward, MatchesFiniteDifferencesTanhSigmoid) {
    for (const Activation act : {Activation::tanh, Activation::sigmoid}) {
        NetworkConfig config;
        config.layer_sizes = {4, 6, 3};
        config.hidden_activation = act;
        config.init_seed = 99;
        const Network net = init_network(config);
        const Matrix x = random_inputs(8, 4, 11);
        const auto y = random_labels(8, 3, 12);
        EXPECT_LT(max_grad_rel_err(net, x, y, 5e-4), 1e-5)
            << "activation=" << activation_name(act);
    }
}

TEST(Backward, AllValuesFinite) {
    NetworkConfig config;
    config.layer_sizes = {6, 10, 8, 4};
    config.init_seed = 77;
    const Network net = init_network(config);
    const Matrix x = random_inputs(16, 6, 13);
    const auto y = random_labels(16, 4, 14);
    const Gradients g = backward(net, forward(net, x), y, 0.0005);
    for (const Matrix& gw : g.weights)
        for (double v : gw.data()) EXPECT_TRUE(std::isfinite(v));
    for (const auto& gb : g.biases)
        for (double v : gb) EXPECT_TRUE(std::isfinite(v));
}

TEST(FiniteDiff, QuadraticSanity) {
    const double grad = central_difference([](double w) { return w * w; }, 3.0, 1e-5);
    EXPECT_NEAR(grad, 6.0, 1e-8);
}

TEST(FiniteDiff, SecondOrderConvergence) {
    NetworkConfig config;
    config.layer_sizes = {4, 6, 3};
    config.hidden_activation = Activation::tanh;  // smooth: no relu kinks to cross
    config.init_seed = 31;
    const Network net = init_network(config);
    const Matrix x = random_inputs(8, 4, 15);
    const auto y = random_labels(8, 3, 16);
    const Gradients analytic = backward(net, forward(net, x), y, 0.0);
    const auto deviation = [&](double h) {
        const Gradients numeric = finite_diff_gradient(net, x, y, 0.0, h);
        double sq = 0.0;
        for (std::size_t l = 0; l < analytic.weights.size(); ++l) {
            for (std::size_t i = 0; i < analytic.weights[l].size(); ++i) {
                const double d = numeric.weights[l].data()[i] - analytic.weights[l].data()[i];
                sq += d * d;
            }
            for (std::size_t i = 0; i < analytic.biases[l].size(); ++i) {
                const double d = numeric.biases[l][i] - analytic.biases[l][i];
                sq += d * d;
            }
        }
        return std::sqrt(sq);
    };
    const double coarse = deviation(1e-2);
    const double fine = deviation(5e-3);
    EXPECT_GT(coarse / fine, 2.5);  // O(h^2): halving h should ~quarter the error
    EXPECT_LT(coarse / fine, 6.0);
}
