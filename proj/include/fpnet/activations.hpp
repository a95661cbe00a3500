#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

#include "fpnet/matrix.hpp"

namespace fpnet {

// Byte values double as the on-disk codes in the model format.
enum class Activation : std::uint8_t {
    relu = 0,
    tanh = 1,
    sigmoid = 2,
    softmax = 3,
};

inline const char* activation_name(Activation a) {
    switch (a) {
        case Activation::relu: return "relu";
        case Activation::tanh: return "tanh";
        case Activation::sigmoid: return "sigmoid";
        case Activation::softmax: return "softmax";
    }
    throw std::invalid_argument("unknown activation code " +
                                std::to_string(static_cast<int>(a)));
}

inline Activation activation_from_name(const std::string& name) {
    if (name == "relu") return Activation::relu;
    if (name == "tanh") return Activation::tanh;
    if (name == "sigmoid") return Activation::sigmoid;
    if (name == "softmax") return Activation::softmax;
    throw std::invalid_argument("unknown activation '" + name + "'");
}

inline double relu(double z) { return z > 0.0 ? z : 0.0; }

// Evaluated on the side of the sign so exp never overflows.
inline double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

// Elementwise hidden-layer activation. Softmax is row-wise and handled by
// softmax_rows below.
inline void activate(Activation kind, Matrix& z) {
    switch (kind) {
        case Activation::relu:
            for (double& v : z.data()) v = relu(v);
            return;
        case Activation::tanh:
            for (double& v : z.data()) v = std::tanh(v);
            return;
        case Activation::sigmoid:
            for (double& v : z.data()) v = sigmoid(v);
            return;
        case Activation::softmax:
            throw std::invalid_argument("softmax is row-wise, use softmax_rows");
    }
}

// Row-wise softmax with the shift-by-row-max trick.
inline void softmax_rows(Matrix& z) {
    for (std::size_t i = 0; i < z.rows(); ++i) {
        double* row = z.row(i);
        double m = row[0];
        for (std::size_t j = 1; j < z.cols(); ++j)
            if (row[j] > m) m = row[j];
        double sum = 0.0;
        for (std::size_t j = 0; j < z.cols(); ++j) {
            row[j] = std::exp(row[j] - m);
            sum += row[j];
        }
        for (std::size_t j = 0; j < z.cols(); ++j) row[j] /= sum;
    }
}

// delta *= act'(z), with the derivative written in terms of the
// post-activation values (a = act(z)) so the cache does not need z.
inline void scale_by_activation_grad(Activation kind, const Matrix& post, Matrix& delta) {
    assert(post.same_shape(delta));
    const std::vector<double>& a = post.data();
    std::vector<double>& d = delta.data();
    switch (kind) {
        case Activation::relu:
            for (std::size_t i = 0; i < d.size(); ++i)
                if (a[i] <= 0.0) d[i] = 0.0;
            return;
        case Activation::tanh:
            for (std::size_t i = 0; i < d.size(); ++i) d[i] *= 1.0 - a[i] * a[i];
            return;
        case Activation::sigmoid:
            for (std::size_t i = 0; i < d.size(); ++i) d[i] *= a[i] * (1.0 - a[i]);
            return;
        case Activation::softmax:
            throw std::invalid_argument(
                "softmax gradient is folded into the output delta");
    }
}

}  // namespace fpnet
