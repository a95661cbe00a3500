#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <iterator>
#include <ostream>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "fpnet/dataio.hpp"
#include "fpnet/network.hpp"
#include "fpnet/optimizer.hpp"

namespace fpnet {

inline constexpr std::string_view kModelMagic = "FPM1";
inline constexpr std::uint32_t kModelVersion = 1;

// Provenance kept alongside the parameters in memory; the file itself only
// records the format version.
struct ModelMeta {
    std::uint32_t version = kModelVersion;
    Hyperparams hp;
    std::uint64_t seed = 0;
};

struct ModelBundle {
    Network network;
    PriceLadder ladder;
    NormalizationSpec norm;
    ModelMeta meta;

    void validate() const {
        if (network.layers.empty()) throw std::invalid_argument("model has no layers");
        if (network.layers.back().activation != Activation::softmax)
            throw std::invalid_argument("final activation must be softmax");
        if (network.output_size() != ladder.size())
            throw std::invalid_argument(
                "output size " + std::to_string(network.output_size()) +
                " does not match ladder length " + std::to_string(ladder.size()));
        norm.validate();
    }
};

namespace detail {

inline void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(char((v >> (8 * i)) & 0xff));
}

inline void put_f64(std::string& out, double v) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i) out.push_back(char((bits >> (8 * i)) & 0xff));
}

// Little-endian cursor over a fully buffered file. Every read is length
// checked up front so a hostile header fails as a truncation error before
// anything is allocated.
class ByteReader {
public:
    explicit ByteReader(std::string buffer) : buf_(std::move(buffer)) {}

    std::size_t remaining() const { return buf_.size() - pos_; }

    void require(std::uint64_t need) const {
        if (need > remaining())
            throw std::runtime_error("truncated model file: need " + std::to_string(need) +
                                     " bytes at offset " + std::to_string(pos_) + ", only " +
                                     std::to_string(remaining()) + " available");
    }

    void require_f64(std::uint64_t count) const {
        if (count > remaining() / 8) require(count * 8);  // throws
    }

    std::uint8_t get_u8() {
        require(1);
        return std::uint8_t(buf_[pos_++]);
    }

    std::uint32_t get_u32() {
        require(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= std::uint32_t(std::uint8_t(buf_[pos_++])) << (8 * i);
        return v;
    }

    double get_f64() {
        require(8);
        std::uint64_t bits = 0;
        for (int i = 0; i < 8; ++i) bits |= std::uint64_t(std::uint8_t(buf_[pos_++])) << (8 * i);
        return std::bit_cast<double>(bits);
    }

    std::string get_bytes(std::size_t n) {
        require(n);
        std::string s = buf_.substr(pos_, n);
        pos_ += n;
        return s;
    }

private:
    std::string buf_;
    std::size_t pos_ = 0;
};

}  // namespace detail

inline std::size_t save_model(const ModelBundle& bundle, std::ostream& out) {
    bundle.validate();
    std::string buf;
    buf.append(kModelMagic);
    detail::put_u32(buf, kModelVersion);
    const auto& layers = bundle.network.layers;
    detail::put_u32(buf, std::uint32_t(layers.size()));
    detail::put_u32(buf, std::uint32_t(bundle.network.input_size()));
    for (const Layer& l : layers) detail::put_u32(buf, std::uint32_t(l.fan_out()));
    for (const Layer& l : layers) buf.push_back(char(std::uint8_t(l.activation)));
    for (const Layer& l : layers) {
        for (double w : l.weights.data()) detail::put_f64(buf, w);
        for (double b : l.biases) detail::put_f64(buf, b);
    }
    detail::put_u32(buf, std::uint32_t(bundle.ladder.size()));
    for (double p : bundle.ladder.prices()) detail::put_f64(buf, p);
    for (const auto& [lo, hi] : bundle.norm.bounds) {
        detail::put_f64(buf, lo);
        detail::put_f64(buf, hi);
    }
    out.write(buf.data(), std::streamsize(buf.size()));
    if (!out) throw std::runtime_error("model write failed");
    return buf.size();
}

inline ModelBundle load_model(std::istream& in) {
    detail::ByteReader r{std::string(std::istreambuf_iterator<char>(in),
                                     std::istreambuf_iterator<char>())};
    std::string magic = r.get_bytes(kModelMagic.size());
    if (magic != kModelMagic) {
        for (char& c : magic)
            if (c < 0x20 || c > 0x7e) c = '?';
        throw std::runtime_error("bad magic \"" + magic + "\": not an FPM1 model");
    }
    ModelBundle bundle;
    bundle.meta.version = r.get_u32();
    if (bundle.meta.version != kModelVersion)
        throw std::runtime_error("unsupported model version " +
                                 std::to_string(bundle.meta.version) + " (expected " +
                                 std::to_string(kModelVersion) + ")");
    const std::uint32_t layer_count = r.get_u32();
    if (layer_count == 0) throw std::runtime_error("layer count must be positive");
    std::vector<std::uint32_t> dims(layer_count + 1);
    for (auto& d : dims) {
        d = r.get_u32();
        if (d == 0) throw std::runtime_error("layer dimension must be positive");
    }
    std::vector<Activation> acts(layer_count);
    for (std::size_t l = 0; l < layer_count; ++l) {
        const std::uint8_t code = r.get_u8();
        if (code > 3)
            throw std::runtime_error("invalid activation code " + std::to_string(code));
        acts[l] = Activation(code);
        if (acts[l] == Activation::softmax && l + 1 != layer_count)
            throw std::runtime_error("softmax is only valid as the final activation");
    }
    if (acts.back() != Activation::softmax)
        throw std::runtime_error("final activation must be softmax");
    bundle.network.layers.reserve(layer_count);
    for (std::size_t l = 0; l < layer_count; ++l) {
        const std::size_t fan_in = dims[l];
        const std::size_t fan_out = dims[l + 1];
        r.require_f64(std::uint64_t(fan_out) * fan_in + fan_out);
        Layer layer;
        layer.activation = acts[l];
        layer.weights = Matrix(fan_out, fan_in);
        for (double& w : layer.weights.data()) w = r.get_f64();
        layer.biases.resize(fan_out);
        for (double& b : layer.biases) b = r.get_f64();
        bundle.network.layers.push_back(std::move(layer));
    }
    const std::uint32_t ladder_count = r.get_u32();
    if (ladder_count != dims.back())
        throw std::runtime_error("ladder length " + std::to_string(ladder_count) +
                                 " does not match output size " + std::to_string(dims.back()));
    r.require_f64(ladder_count);
    std::vector<double> prices(ladder_count);
    for (double& p : prices) p = r.get_f64();
    bundle.ladder = PriceLadder(std::move(prices));
    r.require_f64(2 * kFeatureCount);
    for (auto& [lo, hi] : bundle.norm.bounds) {
        lo = r.get_f64();
        hi = r.get_f64();
    }
    bundle.norm.validate();
    return bundle;
}

// Writes to <path>.tmp and renames into place so readers never observe a
// partial file.
inline void write_file_atomic(const std::string& path, std::string_view bytes) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open " + tmp + " for writing");
        out.write(bytes.data(), std::streamsize(bytes.size()));
        out.flush();
        if (!out) {
            std::remove(tmp.c_str());
            throw std::runtime_error("write failed: " + tmp);
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::remove(tmp.c_str());
        throw std::runtime_error("cannot rename " + tmp + " to " + path + ": " + ec.message());
    }
}

inline void save_model_file(const ModelBundle& bundle, const std::string& path) {
    std::ostringstream ss(std::ios::binary);
    save_model(bundle, ss);
    write_file_atomic(path, ss.str());
}

inline ModelBundle load_model_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open model file: " + path);
    return load_model(in);
}

// ---- end-to-end prediction --------------------------------------------------

struct WindowEntry {
    std::size_t class_index = 0;
    double price = 0.0;
    double probability = 0.0;
};

struct PricePrediction {
    std::size_t class_index = 0;
    double price = 0.0;
    std::vector<WindowEntry> window;  // classes c-2..c+2, clipped at the ends
};

inline PricePrediction predict_price(const ModelBundle& bundle,
                                     std::span<const double> raw_features) {
    if (raw_features.size() != kFeatureCount)
        throw std::invalid_argument("expected " + std::to_string(kFeatureCount) +
                                    " features, got " + std::to_string(raw_features.size()));
    Matrix x(1, kFeatureCount);
    for (std::size_t j = 0; j < kFeatureCount; ++j)
        x(0, j) = normalize_value(bundle.norm, j, raw_features[j]);
    const ForwardCache cache = forward(bundle.network, x);
    const Matrix& probs = cache.output();
    PricePrediction pred;
    pred.class_index = argmax_row(probs.row(0), probs.cols());
    pred.price = bundle.ladder.price_of(pred.class_index);
    const std::size_t lo = pred.class_index >= 2 ? pred.class_index - 2 : 0;
    const std::size_t hi = std::min(bundle.ladder.size() - 1, pred.class_index + 2);
    for (std::size_t c = lo; c <= hi; ++c)
        pred.window.push_back({c, bundle.ladder.price_of(c), probs(0, c)});
    return pred;
}

}  // namespace fpnet
