#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "fpnet/network.hpp"

namespace fpnet {

// Per-layer parameter deltas, shapes mirroring the Network. Also reused as
// the optimizer's velocity buffers.
struct Gradients {
    std::vector<Matrix> weights;
    std::vector<std::vector<double>> biases;
};

inline Gradients zero_gradients(const Network& net) {
    Gradients g;
    g.weights.reserve(net.layers.size());
    g.biases.reserve(net.layers.size());
    for (const Layer& l : net.layers) {
        g.weights.emplace_back(l.weights.rows(), l.weights.cols());
        g.biases.emplace_back(l.biases.size(), 0.0);
    }
    return g;
}

inline double sum_squared_weights(const Network& net) {
    double s = 0.0;
    for (const Layer& l : net.layers)
        for (double w : l.weights.data()) s += w * w;
    return s;
}

// Mean cross-entropy over the batch plus lambda * sum(w^2) over the weight
// matrices (biases carry no penalty). Probabilities are clamped at 1e-300
// before the log.
inline double loss_total(const ForwardCache& cache,
                         const std::vector<std::size_t>& labels, double lambda,
                         const Network& net) {
    const Matrix& probs = cache.output();
    if (labels.size() != probs.rows())
        throw std::invalid_argument("label count does not match batch size");
    double ce = 0.0;
    for (std::size_t i = 0; i < probs.rows(); ++i) {
        if (labels[i] >= probs.cols())
            throw std::invalid_argument("label out of range");
        double p = probs(i, labels[i]);
        if (p < 1e-300) p = 1e-300;
        ce -= std::log(p);
    }
    ce /= double(probs.rows());
    return lambda == 0.0 ? ce : ce + lambda * sum_squared_weights(net);
}

// Analytic gradient of loss_total. Output delta is (softmax - onehot)/B;
// the L2 term contributes 2*lambda*W to each weight gradient.
inline Gradients backward(const Network& net, const ForwardCache& cache,
                          const std::vector<std::size_t>& labels, double lambda) {
    const std::size_t layer_count = net.layers.size();
    if (cache.pre.size() != layer_count || cache.post.size() != layer_count + 1)
        throw std::invalid_argument("forward cache does not match network depth");
    const Matrix& probs = cache.output();
    if (labels.size() != probs.rows())
        throw std::invalid_argument("label count does not match batch size");

    const double inv_batch = 1.0 / double(probs.rows());
    Matrix delta = probs;
    for (std::size_t i = 0; i < delta.rows(); ++i) {
        if (labels[i] >= delta.cols())
            throw std::invalid_argument("label out of range");
        delta(i, labels[i]) -= 1.0;
    }
    for (double& v : delta.data()) v *= inv_batch;

    Gradients grads;
    grads.weights.resize(layer_count);
    grads.biases.resize(layer_count);
    for (std::size_t l = layer_count; l-- > 0;) {
        const Layer& layer = net.layers[l];
        Matrix dw = matmul_atb(delta, cache.post[l]);
        if (lambda != 0.0) {
            const std::vector<double>& w = layer.weights.data();
            std::vector<double>& d = dw.data();
            for (std::size_t i = 0; i < d.size(); ++i) d[i] += 2.0 * lambda * w[i];
        }
        std::vector<double> db(layer.fan_out(), 0.0);
        for (std::size_t i = 0; i < delta.rows(); ++i) {
            const double* di = delta.row(i);
            for (std::size_t j = 0; j < delta.cols(); ++j) db[j] += di[j];
        }
        grads.weights[l] = std::move(dw);
        grads.biases[l] = std::move(db);
        if (l > 0) {
            delta = matmul_ab(delta, layer.weights);
            scale_by_activation_grad(net.layers[l - 1].activation, cache.post[l], delta);
        }
    }
    return grads;
}

template <class F>
double central_difference(F&& f, double x, double h) {
    return (f(x + h) - f(x - h)) / (2.0 * h);
}

// Central-difference gradient of loss_total, one forward pass per signed
// perturbation. Only affordable on small nets; used to cross-check backward.
inline Gradients finite_diff_gradient(const Network& net, const Matrix& x,
                                      const std::vector<std::size_t>& labels,
                                      double lambda, double h = 1e-5) {
    if (h <= 0.0) throw std::invalid_argument("step size must be positive");
    Network work = net;
    const auto loss_at = [&]() {
        return loss_total(forward(work, x), labels, lambda, work);
    };
    const auto diff_param = [&](double& p) {
        const double saved = p;
        return central_difference(
            [&](double v) {
                p = v;
                const double loss = loss_at();
                p = saved;
                return loss;
            },
            saved, h);
    };
    Gradients grads = zero_gradients(net);
    for (std::size_t l = 0; l < work.layers.size(); ++l) {
        Layer& layer = work.layers[l];
        for (std::size_t i = 0; i < layer.weights.size(); ++i)
            grads.weights[l].data()[i] = diff_param(layer.weights.data()[i]);
        for (std::size_t i = 0; i < layer.biases.size(); ++i)
            grads.biases[l][i] = diff_param(layer.biases[i]);
    }
    return grads;
}

}  // namespace fpnet
