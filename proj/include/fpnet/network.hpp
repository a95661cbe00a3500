#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "fpnet/activations.hpp"
#include "fpnet/matrix.hpp"

namespace fpnet {

struct NetworkConfig {
    // input, hidden..., output
    std::vector<std::size_t> layer_sizes;
    Activation hidden_activation = Activation::relu;
    std::uint64_t init_seed = 0;

    void validate() const {
        if (layer_sizes.size() < 2)
            throw std::invalid_argument("network needs at least input and output layers");
        for (std::size_t s : layer_sizes)
            if (s == 0) throw std::invalid_argument("layer sizes must be positive");
        if (hidden_activation == Activation::softmax)
            throw std::invalid_argument("softmax is reserved for the output layer");
    }
};

struct Layer {
    Matrix weights;               // fan-out x fan-in
    std::vector<double> biases;   // fan-out
    Activation activation = Activation::relu;

    std::size_t fan_out() const { return weights.rows(); }
    std::size_t fan_in() const { return weights.cols(); }
};

struct Network {
    std::vector<Layer> layers;

    std::size_t input_size() const { return layers.front().fan_in(); }
    std::size_t output_size() const { return layers.back().fan_out(); }

    std::size_t param_count() const {
        std::size_t n = 0;
        for (const Layer& l : layers) n += l.weights.size() + l.biases.size();
        return n;
    }
};

// He-scheme Gaussian weights (stddev sqrt(2 / fan-in)), zero biases,
// deterministic per init_seed.
inline Network init_network(const NetworkConfig& config) {
    config.validate();
    std::mt19937_64 rng(config.init_seed);
    Network net;
    const std::size_t layer_count = config.layer_sizes.size() - 1;
    net.layers.reserve(layer_count);
    for (std::size_t l = 0; l < layer_count; ++l) {
        const std::size_t fan_in = config.layer_sizes[l];
        const std::size_t fan_out = config.layer_sizes[l + 1];
        Layer layer;
        layer.weights = Matrix(fan_out, fan_in);
        layer.biases.assign(fan_out, 0.0);
        layer.activation =
            (l + 1 == layer_count) ? Activation::softmax : config.hidden_activation;
        std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / double(fan_in)));
        for (double& w : layer.weights.data()) w = dist(rng);
        net.layers.push_back(std::move(layer));
    }
    return net;
}

// Per layer l: pre[l] = post[l] * W^T + b, post[l+1] = act(pre[l]).
// post[0] is the input batch; post.back() rows are softmax distributions.
struct ForwardCache {
    std::vector<Matrix> pre;
    std::vector<Matrix> post;

    const Matrix& output() const { return post.back(); }
};

inline ForwardCache forward(const Network& net, const Matrix& x) {
    if (x.cols() != net.input_size())
        throw std::invalid_argument("input width " + std::to_string(x.cols()) +
                                    " does not match network input size " +
                                    std::to_string(net.input_size()));
    ForwardCache cache;
    cache.pre.reserve(net.layers.size());
    cache.post.reserve(net.layers.size() + 1);
    cache.post.push_back(x);
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        const Layer& layer = net.layers[l];
        Matrix z = matmul_abt(cache.post.back(), layer.weights);
        for (std::size_t i = 0; i < z.rows(); ++i) {
            double* zi = z.row(i);
            for (std::size_t j = 0; j < z.cols(); ++j) zi[j] += layer.biases[j];
        }
        cache.pre.push_back(z);
        if (layer.activation == Activation::softmax) {
            softmax_rows(z);
        } else {
            activate(layer.activation, z);
        }
        cache.post.push_back(std::move(z));
    }
    return cache;
}

// First maximum wins, so ties break toward the lowest index.
inline std::size_t argmax_row(const double* row, std::size_t n) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < n; ++j)
        if (row[j] > row[best]) best = j;
    return best;
}

inline std::size_t predict_class(const Network& net, std::span<const double> features) {
    if (features.size() != net.input_size())
        throw std::invalid_argument("feature count " + std::to_string(features.size()) +
                                    " does not match network input size " +
                                    std::to_string(net.input_size()));
    Matrix x(1, features.size());
    for (std::size_t j = 0; j < features.size(); ++j) x(0, j) = features[j];
    const ForwardCache cache = forward(net, x);
    return argmax_row(cache.output().row(0), cache.output().cols());
}

}  // namespace fpnet
