#pragma once

#include <cmath>
#include <cstdlib>
#include <stdexcept>
#include <vector>

#include "fpnet/dataio.hpp"
#include "fpnet/network.hpp"

namespace fpnet {

struct MetricsBundle {
    double top1 = 0.0;
    double top3 = 0.0;
    double top5 = 0.0;
    double ape = 0.0;  // percent
    std::size_t n = 0;
};

// Ordinal top-k: output neurons sit on the price ladder in ascending order,
// so "top-3"/"top-5" mean the predicted class index is within 1 resp. 2
// rungs of the actual one. Not the usual k-highest-probability reading.
inline bool top_k_correct(std::size_t pred, std::size_t actual, int k) {
    std::size_t d = 0;
    switch (k) {
        case 1: d = 0; break;
        case 3: d = 1; break;
        case 5: d = 2; break;
        default: throw std::invalid_argument("k must be one of 1, 3, 5");
    }
    const std::size_t dist = pred > actual ? pred - actual : actual - pred;
    return dist <= d;
}

// Mean over samples of |actual price - predicted price| / actual price, in
// percent. Both prices are ladder values.
inline double average_percentage_error(const std::vector<std::size_t>& preds,
                                       const std::vector<std::size_t>& actuals,
                                       const PriceLadder& ladder) {
    if (preds.empty()) throw std::invalid_argument("no samples");
    if (preds.size() != actuals.size())
        throw std::invalid_argument("prediction/label count mismatch");
    double sum = 0.0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        const double actual = ladder.price_of(actuals[i]);
        const double predicted = ladder.price_of(preds[i]);
        sum += std::abs(actual - predicted) / actual;
    }
    return sum / double(preds.size()) * 100.0;
}

// Argmax predictions for a set of rows, forwarded in chunks to bound memory.
inline std::vector<std::size_t> predict_rows(const Network& net, const Matrix& features,
                                             const std::vector<std::size_t>* subset = nullptr) {
    const std::size_t total = subset ? subset->size() : features.rows();
    std::vector<std::size_t> preds(total);
    constexpr std::size_t kChunk = 256;
    for (std::size_t begin = 0; begin < total; begin += kChunk) {
        const std::size_t end = std::min(begin + kChunk, total);
        Matrix x(end - begin, features.cols());
        for (std::size_t i = begin; i < end; ++i) {
            const std::size_t row = subset ? (*subset)[i] : i;
            const double* src = features.row(row);
            double* dst = x.row(i - begin);
            for (std::size_t j = 0; j < features.cols(); ++j) dst[j] = src[j];
        }
        const ForwardCache cache = forward(net, x);
        const Matrix& out = cache.output();
        for (std::size_t i = 0; i < out.rows(); ++i)
            preds[begin + i] = argmax_row(out.row(i), out.cols());
    }
    return preds;
}

// All four metrics in one pass. With a subset, rows/labels are taken at the
// subset's indices.
inline MetricsBundle evaluate(const Network& net, const Matrix& features,
                              const std::vector<std::size_t>& labels,
                              const PriceLadder& ladder,
                              const std::vector<std::size_t>* subset = nullptr) {
    const std::size_t total = subset ? subset->size() : features.rows();
    if (total == 0) throw std::invalid_argument("empty evaluation set");
    if (labels.size() != features.rows())
        throw std::invalid_argument("label count does not match feature rows");

    const std::vector<std::size_t> preds = predict_rows(net, features, subset);
    MetricsBundle m;
    m.n = total;
    double ape_sum = 0.0;
    for (std::size_t i = 0; i < total; ++i) {
        const std::size_t actual = subset ? labels[(*subset)[i]] : labels[i];
        const std::size_t pred = preds[i];
        if (top_k_correct(pred, actual, 1)) m.top1 += 1.0;
        if (top_k_correct(pred, actual, 3)) m.top3 += 1.0;
        if (top_k_correct(pred, actual, 5)) m.top5 += 1.0;
        const double actual_price = ladder.price_of(actual);
        ape_sum += std::abs(actual_price - ladder.price_of(pred)) / actual_price;
    }
    m.top1 /= double(total);
    m.top3 /= double(total);
    m.top5 /= double(total);
    m.ape = ape_sum / double(total) * 100.0;
    return m;
}

}  // namespace fpnet
