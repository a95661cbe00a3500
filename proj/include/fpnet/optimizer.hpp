#pragma once

#include <cstdint>
#include <numeric>
#include <random>
#include <stdexcept>
#include <vector>

#include "fpnet/loss.hpp"
#include "fpnet/network.hpp"

namespace fpnet {

struct Hyperparams {
    double eta0 = 0.01;       // initial learning rate
    double anneal_k = 0.001;  // annealing coefficient
    double mu = 0.99;         // momentum, must stay below 1
    double lambda = 0.0005;   // L2 coefficient
    std::size_t batch_size = 20;
    std::size_t patience = 10;
    std::size_t max_epochs = 1000;
    std::uint64_t seed = 0;

    void validate() const {
        if (!(eta0 > 0.0)) throw std::invalid_argument("eta0 must be positive");
        if (anneal_k < 0.0) throw std::invalid_argument("anneal_k must be >= 0");
        if (mu < 0.0 || mu >= 1.0) throw std::invalid_argument("mu must be in [0, 1)");
        if (lambda < 0.0) throw std::invalid_argument("lambda must be >= 0");
        if (batch_size == 0) throw std::invalid_argument("batch_size must be positive");
        if (patience == 0) throw std::invalid_argument("patience must be positive");
        if (max_epochs == 0) throw std::invalid_argument("max_epochs must be positive");
    }
};

struct OptimizerState {
    Gradients velocity;  // shapes mirror the network, start at zero
    std::size_t epoch = 0;
    double current_rate = 0.0;
};

inline OptimizerState make_optimizer_state(const Network& net) {
    OptimizerState state;
    state.velocity = zero_gradients(net);
    return state;
}

// eta_t = eta0 / (1 + k t), t counted in epochs.
inline double anneal_rate(double eta0, double k, std::size_t t) {
    if (!(eta0 > 0.0)) throw std::invalid_argument("eta0 must be positive");
    if (k < 0.0) throw std::invalid_argument("k must be >= 0");
    return eta0 / (1.0 + k * double(t));
}

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

// Independent deterministic seed streams (weight init, shuffles, sweep cells).
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    return splitmix64(seed + 0x9e3779b97f4a7c15ull * (stream + 1));
}

// Seeded permutation of 0..n-1 cut into ceil(n/batch) consecutive batches;
// the last batch may be short.
inline std::vector<std::vector<std::size_t>> make_minibatches(std::size_t n,
                                                              std::size_t batch,
                                                              std::uint64_t epoch_seed) {
    if (n == 0) throw std::invalid_argument("no samples to batch");
    if (batch == 0) throw std::invalid_argument("batch size must be positive");
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t(0));
    std::mt19937_64 rng(epoch_seed);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<std::vector<std::size_t>> batches;
    batches.reserve((n + batch - 1) / batch);
    for (std::size_t begin = 0; begin < n; begin += batch) {
        const std::size_t end = std::min(begin + batch, n);
        batches.emplace_back(perm.begin() + begin, perm.begin() + end);
    }
    return batches;
}

namespace detail {

inline void check_velocity_shapes(const Network& net, const Gradients& velocity) {
    if (velocity.weights.size() != net.layers.size() ||
        velocity.biases.size() != net.layers.size())
        throw std::invalid_argument("velocity layer count does not match network");
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        if (!velocity.weights[l].same_shape(net.layers[l].weights) ||
            velocity.biases[l].size() != net.layers[l].biases.size())
            throw std::invalid_argument("velocity shape does not match network");
    }
}

}  // namespace detail

// Nesterov momentum update: evaluate the gradient at the lookahead point
// w + mu*v, then v <- mu*v - eta*g and w <- w + v. With mu = 0 this is the
// plain update w <- w - eta*g, exactly.
//
// grad_at must be a pure function of the parameters it is handed; it receives
// a network holding the lookahead parameters and returns the full regularized
// gradient there.
template <class GradFn>
void nesterov_step(Network& net, OptimizerState& state, GradFn&& grad_at, double eta,
                   double mu) {
    detail::check_velocity_shapes(net, state.velocity);

    Network lookahead = net;
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        std::vector<double>& w = lookahead.layers[l].weights.data();
        const std::vector<double>& vw = state.velocity.weights[l].data();
        for (std::size_t i = 0; i < w.size(); ++i) w[i] += mu * vw[i];
        std::vector<double>& b = lookahead.layers[l].biases;
        const std::vector<double>& vb = state.velocity.biases[l];
        for (std::size_t i = 0; i < b.size(); ++i) b[i] += mu * vb[i];
    }

    const Gradients g = grad_at(static_cast<const Network&>(lookahead));

    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        std::vector<double>& vw = state.velocity.weights[l].data();
        const std::vector<double>& gw = g.weights[l].data();
        std::vector<double>& w = net.layers[l].weights.data();
        if (gw.size() != w.size())
            throw std::invalid_argument("gradient shape does not match network");
        for (std::size_t i = 0; i < w.size(); ++i) {
            vw[i] = mu * vw[i] - eta * gw[i];
            w[i] += vw[i];
        }
        std::vector<double>& vb = state.velocity.biases[l];
        const std::vector<double>& gb = g.biases[l];
        std::vector<double>& b = net.layers[l].biases;
        if (gb.size() != b.size())
            throw std::invalid_argument("gradient shape does not match network");
        for (std::size_t i = 0; i < b.size(); ++i) {
            vb[i] = mu * vb[i] - eta * gb[i];
            b[i] += vb[i];
        }
    }
}

}  // namespace fpnet
