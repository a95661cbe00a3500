#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "fpnet/network.hpp"

using namespace fpnet;

namespace {

Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed,
                     double scale = 1.0) {
    Matrix m(rows, cols);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(-scale, scale);
    for (double& v : m.data()) v = dist(rng);
    return m;
}

bool same_params(const Network& a, const Network& b) {
    if (a.layers.size() != b.layers.size()) return false;
    for (std::size_t l = 0; l < a.layers.size(); ++l) {
        if (a.layers[l].weights.data() != b.layers[l].weights.data()) return false;
        if (a.layers[l].biases != b.layers[l].biases) return false;
    }
    return true;
}

}  // namespace

TEST(InitNetwork, DeterministicPerSeed) {
    NetworkConfig config;
    config.layer_sizes = {2, 3, 2};
    config.init_seed = 7;
    EXPECT_TRUE(same_params(init_network(config), init_network(config)));
    config.init_seed = 8;
    EXPECT_FALSE(same_params(init_network(config), init_network(NetworkConfig{{2, 3, 2},
                                                                              Activation::relu,
                                                                              7})));
}

TEST(InitNetwork, FullSizeConfigShapes) {
    NetworkConfig config;
    config.layer_sizes = {41, 2000, 1500, 500, 119};
    const Network net = init_network(config);
    ASSERT_EQ(net.layers.size(), 4u);
    EXPECT_EQ(net.layers[0].weights.rows(), 2000u);
    EXPECT_EQ(net.layers[0].weights.cols(), 41u);
    EXPECT_EQ(net.layers[1].weights.rows(), 1500u);
    EXPECT_EQ(net.layers[1].weights.cols(), 2000u);
    EXPECT_EQ(net.layers[2].weights.rows(), 500u);
    EXPECT_EQ(net.layers[2].weights.cols(), 1500u);
    EXPECT_EQ(net.layers[3].weights.rows(), 119u);
    EXPECT_EQ(net.layers[3].weights.cols(), 500u);
    EXPECT_EQ(net.layers[3].activation, Activation::softmax);
    EXPECT_EQ(net.param_count(),
              2000u * 41 + 2000 + 1500u * 2000 + 1500 + 500u * 1500 + 500 + 119u * 500 + 119);
}

TEST(InitNetwork, HeScaleAndZeroBiases) {
    NetworkConfig config;
    config.layer_sizes = {41, 2000, 10};
    config.init_seed = 1;
    const Network net = init_network(config);
    const auto& w = net.layers[0].weights.data();  // 82k draws
    double mean = 0.0;
    for (double v : w) mean += v;
    mean /= double(w.size());
    double var = 0.0;
    for (double v : w) var += (v - mean) * (v - mean);
    var /= double(w.size() - 1);
    const double expected = std::sqrt(2.0 / 41.0);
    EXPECT_NEAR(std::sqrt(var), expected, 0.1 * expected);
    for (const Layer& l : net.layers)
        for (double b : l.biases) EXPECT_EQ(b, 0.0);
}

TEST(NetworkConfig, Validation) {
    EXPECT_THROW(init_network(NetworkConfig{{5}, Activation::relu, 0}), std::invalid_argument);
    EXPECT_THROW(init_network(NetworkConfig{{5, 0, 2}, Activation::relu, 0}),
                 std::invalid_argument);
}

TEST(Activations, ReluDefinitionAndIdempotence) {
    Matrix z(1, 3);
    z(0, 0) = -1.0;
    z(0, 1) = 0.0;
    z(0, 2) = 2.0;
    activate(Activation::relu, z);
    EXPECT_EQ(z(0, 0), 0.0);
    EXPECT_EQ(z(0, 1), 0.0);
    EXPECT_EQ(z(0, 2), 2.0);
    Matrix r = random_matrix(4, 9, 21, 3.0);
    activate(Activation::relu, r);
    Matrix twice = r;
    activate(Activation::relu, twice);
    EXPECT_EQ(r.data(), twice.data());
    for (double v : r.data()) EXPECT_GE(v, 0.0);
}

TEST(Activations, SigmoidStable) {
    EXPECT_DOUBLE_EQ(sigmoid(0.0), 0.5);
    const double tiny = sigmoid(-745.0);
    EXPECT_TRUE(std::isfinite(tiny));
    EXPECT_GE(tiny, 0.0);
    EXPECT_LE(tiny, 1e-300);
    const double big = sigmoid(745.0);
    EXPECT_TRUE(std::isfinite(big));
    EXPECT_NEAR(big, 1.0, 1e-12);
}

TEST(Activations, TanhMatchesStd) {
    Matrix z = random_matrix(2, 5, 33, 4.0);
    Matrix a = z;
    activate(Activation::tanh, a);
    for (std::size_t i = 0; i < z.size(); ++i)
        EXPECT_DOUBLE_EQ(a.data()[i], std::tanh(z.data()[i]));
}

TEST(Softmax, UniformOnEqualLogits) {
    Matrix z(1, 2);
    softmax_rows(z);
    EXPECT_DOUBLE_EQ(z(0, 0), 0.5);
    EXPECT_DOUBLE_EQ(z(0, 1), 0.5);
}

TEST(Softmax, ShiftByMaxStability) {
    Matrix z(1, 2);
    z(0, 0) = 1000.0;
    z(0, 1) = 0.0;
    softmax_rows(z);
    EXPECT_TRUE(std::isfinite(z(0, 0)));
    EXPECT_NEAR(z(0, 0), 1.0, 1e-12);
    EXPECT_NEAR(z(0, 1), 0.0, 1e-12);
}

TEST(Softmax, RowsSumToOneAndPreserveArgmax) {
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        Matrix z = random_matrix(1, 7, seed, 30.0);
        std::size_t logits_argmax = argmax_row(z.row(0), z.cols());
        Matrix p = z;
        softmax_rows(p);
        double sum = 0.0;
        for (std::size_t j = 0; j < p.cols(); ++j) {
            EXPECT_GT(p(0, j), 0.0);
            sum += p(0, j);
        }
        EXPECT_NEAR(sum, 1.0, 1e-12);
        EXPECT_EQ(argmax_row(p.row(0), p.cols()), logits_argmax);
    }
}

TEST(Forward, ZeroNetIsUniform) {
    Network net;
    net.layers.push_back(Layer{Matrix(4, 3), std::vector<double>(4, 0.0), Activation::relu});
    net.layers.push_back(Layer{Matrix(5, 4), std::vector<double>(5, 0.0), Activation::softmax});
    const Matrix x = random_matrix(3, 3, 5);
    const ForwardCache cache = forward(net, x);
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 5; ++j)
            EXPECT_DOUBLE_EQ(cache.output()(i, j), 1.0 / 5.0);
}

TEST(Forward, BatchIndependence) {
    NetworkConfig config;
    config.layer_sizes = {6, 8, 4};
    config.init_seed = 40;
    const Network net = init_network(config);
    const Matrix one = random_matrix(1, 6, 77);
    Matrix five(5, 6);
    for (std::size_t i = 0; i < 5; ++i)
        for (std::size_t j = 0; j < 6; ++j) five(i, j) = one(0, j);
    const Matrix out1 = forward(net, one).output();
    const Matrix out5 = forward(net, five).output();
    for (std::size_t i = 0; i < 5; ++i)
        for (std::size_t j = 0; j < 4; ++j) EXPECT_EQ(out5(i, j), out1(0, j));
}

TEST(Forward, FullSizeConfigOutputShape) {
    NetworkConfig config;
    config.layer_sizes = {41, 2000, 1500, 500, 119};
    const Network net = init_network(config);
    const Matrix out = forward(net, random_matrix(2, 41, 9)).output();
    EXPECT_EQ(out.rows(), 2u);
    EXPECT_EQ(out.cols(), 119u);
}

TEST(Forward, DimensionMismatchThrows) {
    NetworkConfig config;
    config.layer_sizes = {6, 4, 3};
    const Network net = init_network(config);
    try {
        forward(net, Matrix(2, 5));
        FAIL() << "expected a dimension error";
    } catch (const std::invalid_argument& e) {
        EXPECT_NE(std::string(e.what()).find("5"), std::string::npos);
        EXPECT_NE(std::string(e.what()).find("6"), std::string::npos);
    }
}

TEST(Forward, RowPermutationEquivariance) {
    NetworkConfig config;
    config.layer_sizes = {5, 7, 3};
    config.init_seed = 13;
    const Network net = init_network(config);
    const Matrix x = random_matrix(6, 5, 99);
    const std::vector<std::size_t> perm = {3, 0, 5, 1, 4, 2};
    const Matrix out = forward(net, x).output();
    const Matrix out_perm = forward(net, gather_rows(x, perm)).output();
    for (std::size_t i = 0; i < perm.size(); ++i)
        for (std::size_t j = 0; j < 3; ++j) EXPECT_EQ(out_perm(i, j), out(perm[i], j));
}

TEST(PredictClass, ZeroNetTieBreaksLow) {
    Network net;
    net.layers.push_back(Layer{Matrix(4, 41), std::vector<double>(4, 0.0), Activation::softmax});
    const std::vector<double> x(41, 0.3);
    EXPECT_EQ(predict_class(net, x), 0u);
}

TEST(PredictClass, MatchesLogitArgmax) {
    std::mt19937_64 rng(17);
    for (int rep = 0; rep < 100; ++rep) {
        NetworkConfig config;
        config.layer_sizes = {8, 6, 5};
        config.init_seed = rng();
        const Network net = init_network(config);
        Matrix x = random_matrix(1, 8, rng());
        const ForwardCache cache = forward(net, x);
        const Matrix& logits = cache.pre.back();
        std::vector<double> row(x.row(0), x.row(0) + 8);
        EXPECT_EQ(predict_class(net, row), argmax_row(logits.row(0), logits.cols()));
    }
}
