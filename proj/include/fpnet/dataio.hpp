#pragma once

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <numeric>
#include <optional>
#include <ostream>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "fpnet/matrix.hpp"

namespace fpnet {

// Feature layout is fixed: 37 skill ratings, age, 3 star ratings, in that
// order, followed by the price column in CSV files.
inline constexpr std::size_t kSkillCount = 37;
inline constexpr std::size_t kStarCount = 3;
inline constexpr std::size_t kFeatureCount = kSkillCount + 1 + kStarCount;
inline constexpr std::size_t kCsvFieldCount = kFeatureCount + 1;

struct PlayerRecord {
    std::array<double, kFeatureCount> features{};
    double price = 0.0;
};

struct PlayerTable {
    std::vector<PlayerRecord> records;
    std::string source;  // file path or "synthetic:<seed>"
};

// Sorted unique quantized prices; class index <-> price is a bijection.
class PriceLadder {
public:
    PriceLadder() = default;

    explicit PriceLadder(std::vector<double> sorted_unique_prices)
        : prices_(std::move(sorted_unique_prices)) {
        if (prices_.empty()) throw std::invalid_argument("price ladder is empty");
        for (std::size_t i = 0; i < prices_.size(); ++i) {
            if (prices_[i] <= 0.0)
                throw std::invalid_argument("ladder prices must be positive");
            if (i > 0 && prices_[i] <= prices_[i - 1])
                throw std::invalid_argument("ladder prices must be strictly increasing");
        }
    }

    std::size_t size() const { return prices_.size(); }
    double price_of(std::size_t cls) const { return prices_.at(cls); }
    const std::vector<double>& prices() const { return prices_; }

    // Exact-match lookup; in-game prices are quantized to ladder values.
    std::optional<std::size_t> class_of(double price) const {
        auto it = std::lower_bound(prices_.begin(), prices_.end(), price);
        if (it == prices_.end() || *it != price) return std::nullopt;
        return std::size_t(it - prices_.begin());
    }

private:
    std::vector<double> prices_;
};

// Fixed nominal (lo, hi) bounds per feature. Out-of-range values still map
// through the same affine transform; they are counted, not clipped.
struct NormalizationSpec {
    std::array<std::pair<double, double>, kFeatureCount> bounds{};

    static NormalizationSpec nominal() {
        NormalizationSpec spec;
        std::size_t j = 0;
        for (std::size_t s = 0; s < kSkillCount; ++s) spec.bounds[j++] = {0.0, 99.0};
        spec.bounds[j++] = {16.0, 43.0};
        for (std::size_t s = 0; s < kStarCount; ++s) spec.bounds[j++] = {1.0, 5.0};
        return spec;
    }

    void validate() const {
        for (const auto& [lo, hi] : bounds)
            if (!(hi > lo))
                throw std::invalid_argument("normalization bounds need hi > lo");
    }
};

struct DataSplit {
    std::vector<std::size_t> train;
    std::vector<std::size_t> val;
    std::vector<std::size_t> test;
};

struct Dataset {
    Matrix features;                  // N x 41, normalized
    std::vector<std::size_t> labels;  // ladder class indices
    PriceLadder ladder;
    DataSplit split;
};

namespace detail {

inline double parse_field(const std::string& line, std::size_t begin, std::size_t end,
                          std::size_t line_no, std::size_t field_no) {
    const char* first = line.data() + begin;
    const char* last = line.data() + end;
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last)
        throw std::runtime_error("line " + std::to_string(line_no) + ": field " +
                                 std::to_string(field_no) + " is not numeric: '" +
                                 line.substr(begin, end - begin) + "'");
    return value;
}

inline std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace detail

// UTF-8 CSV with a header line and 42 numeric columns per data row
// (37 skills, age, 3 stars, price). LF or CRLF endings, '.' decimals,
// no quoting.
inline PlayerTable parse_player_csv(std::istream& in, std::string source = "") {
    PlayerTable table;
    table.source = std::move(source);
    std::string line;
    std::size_t line_no = 0;
    bool have_header = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (!have_header) {
            have_header = true;  // names are documented, not validated
            continue;
        }
        PlayerRecord rec;
        std::size_t field_no = 0;
        std::size_t begin = 0;
        while (true) {
            const std::size_t comma = line.find(',', begin);
            const std::size_t end = comma == std::string::npos ? line.size() : comma;
            if (field_no >= kCsvFieldCount) {
                ++field_no;  // keep counting for the error message
            } else {
                const double v = detail::parse_field(line, begin, end, line_no, field_no + 1);
                if (field_no < kFeatureCount)
                    rec.features[field_no] = v;
                else
                    rec.price = v;
                ++field_no;
            }
            if (comma == std::string::npos) break;
            begin = comma + 1;
        }
        if (field_no != kCsvFieldCount)
            throw std::runtime_error("line " + std::to_string(line_no) + ": expected " +
                                     std::to_string(kCsvFieldCount) + " fields, got " +
                                     std::to_string(field_no));
        if (!(rec.price > 0.0))
            throw std::runtime_error("line " + std::to_string(line_no) +
                                     ": price must be positive, got " +
                                     detail::format_double(rec.price));
        table.records.push_back(rec);
    }
    if (!have_header) throw std::runtime_error("empty file: missing header line");
    if (table.records.empty()) throw std::runtime_error("no data rows after the header");
    return table;
}

// %.17g round-trips doubles exactly, so parse(write(table)) == table.
inline void write_player_csv(const PlayerTable& table, std::ostream& out) {
    for (std::size_t s = 1; s <= kSkillCount; ++s) out << "skill_" << s << ",";
    out << "age,";
    for (std::size_t s = 1; s <= kStarCount; ++s) out << "star_" << s << ",";
    out << "price\n";
    for (const PlayerRecord& rec : table.records) {
        for (double f : rec.features) out << detail::format_double(f) << ",";
        out << detail::format_double(rec.price) << "\n";
    }
}

// ---- synthetic data -------------------------------------------------------

// Geometric ladder over the FIFA-2017 price span, rounded to whole dollars.
inline std::vector<double> synthetic_price_ladder(std::size_t n_classes) {
    if (n_classes < 2) throw std::invalid_argument("need at least 2 price classes");
    const double lo = 43000.0, hi = 36700000.0;
    std::vector<double> ladder(n_classes);
    for (std::size_t c = 0; c < n_classes; ++c) {
        const double t = double(c) / double(n_classes - 1);
        ladder[c] = std::round(lo * std::pow(hi / lo, t));
    }
    for (std::size_t c = 1; c < n_classes; ++c)
        if (ladder[c] <= ladder[c - 1])
            throw std::invalid_argument("too many classes for a dollar-quantized ladder");
    return ladder;
}

// The generator's monotone score: a fixed positively-weighted sum of the
// nominally-normalized features. Exposed so tests can check the
// feature/label correlation against it.
inline double synthetic_score(const PlayerRecord& rec) {
    const NormalizationSpec spec = NormalizationSpec::nominal();
    double s = 0.0;
    for (std::size_t j = 0; j < kFeatureCount; ++j) {
        const auto [lo, hi] = spec.bounds[j];
        const double weight = 1.0 + double(j) / 40.0;
        s += weight * (rec.features[j] - lo) / (hi - lo);
    }
    return s;
}

// Features uniform within nominal bounds; the class index follows the score
// through a Gaussian-CDF squash (so classes spread evenly) plus small seeded
// noise; the price is the nearest ladder rung. Deterministic per
// (n, n_classes, seed).
inline PlayerTable generate_synthetic(std::size_t n, std::size_t n_classes,
                                      std::uint64_t seed) {
    if (n_classes < 2) throw std::invalid_argument("need at least 2 price classes");
    if (n < n_classes)
        throw std::invalid_argument("need n >= n_classes, got n=" + std::to_string(n) +
                                    " n_classes=" + std::to_string(n_classes));
    const std::vector<double> ladder = synthetic_price_ladder(n_classes);
    const NormalizationSpec spec = NormalizationSpec::nominal();

    // Moments of the score when every normalized feature is uniform on [0,1].
    double weight_sum = 0.0, weight_sq_sum = 0.0;
    for (std::size_t j = 0; j < kFeatureCount; ++j) {
        const double w = 1.0 + double(j) / 40.0;
        weight_sum += w;
        weight_sq_sum += w * w;
    }
    const double score_mean = 0.5 * weight_sum;
    const double score_std = std::sqrt(weight_sq_sum / 12.0);

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> noise(0.0, 0.3);

    PlayerTable table;
    table.source = "synthetic:" + std::to_string(seed);
    table.records.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        PlayerRecord rec;
        for (std::size_t j = 0; j < kFeatureCount; ++j) {
            const auto [lo, hi] = spec.bounds[j];
            rec.features[j] = lo + unit(rng) * (hi - lo);
        }
        const double z = (synthetic_score(rec) - score_mean) / score_std;
        const double u = 0.5 * std::erfc(-z / std::sqrt(2.0));
        const double target = u * double(n_classes - 1) + noise(rng);
        long cls = std::lround(target);
        if (cls < 0) cls = 0;
        if (cls >= long(n_classes)) cls = long(n_classes) - 1;
        rec.price = ladder[std::size_t(cls)];
        table.records.push_back(rec);
    }
    return table;
}

// ---- ladder / normalization / split ---------------------------------------

inline std::pair<PriceLadder, std::vector<std::size_t>> build_price_ladder(
    const std::vector<double>& prices) {
    if (prices.empty()) throw std::invalid_argument("no prices to build a ladder from");
    for (double p : prices)
        if (!(p > 0.0))
            throw std::invalid_argument("prices must be positive, got " +
                                        detail::format_double(p));
    std::vector<double> sorted = prices;
    std::sort(sorted.begin(), sorted.end());
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
    PriceLadder ladder(std::move(sorted));
    std::vector<std::size_t> labels(prices.size());
    for (std::size_t i = 0; i < prices.size(); ++i) labels[i] = *ladder.class_of(prices[i]);
    return {std::move(ladder), std::move(labels)};
}

inline std::vector<double> price_column(const PlayerTable& table) {
    std::vector<double> prices;
    prices.reserve(table.records.size());
    for (const PlayerRecord& rec : table.records) prices.push_back(rec.price);
    return prices;
}

// Map prices onto an existing ladder (e.g. the one stored in a model file).
inline std::vector<std::size_t> labels_for_ladder(const PlayerTable& table,
                                                  const PriceLadder& ladder) {
    std::vector<std::size_t> labels;
    labels.reserve(table.records.size());
    for (const PlayerRecord& rec : table.records) {
        const auto cls = ladder.class_of(rec.price);
        if (!cls)
            throw std::runtime_error("price " + detail::format_double(rec.price) +
                                     " is not on the model's price ladder");
        labels.push_back(*cls);
    }
    return labels;
}

inline double normalize_value(const NormalizationSpec& spec, std::size_t feature,
                              double value) {
    const auto [lo, hi] = spec.bounds.at(feature);
    return (value - lo) / (hi - lo);
}

inline double denormalize_value(const NormalizationSpec& spec, std::size_t feature,
                                double value) {
    const auto [lo, hi] = spec.bounds.at(feature);
    return lo + value * (hi - lo);
}

inline Matrix normalize_features(const PlayerTable& table, const NormalizationSpec& spec,
                                 std::size_t* out_of_range_count = nullptr) {
    if (table.records.empty()) throw std::invalid_argument("empty player table");
    spec.validate();
    Matrix out(table.records.size(), kFeatureCount);
    std::size_t warnings = 0;
    for (std::size_t i = 0; i < table.records.size(); ++i) {
        const PlayerRecord& rec = table.records[i];
        double* row = out.row(i);
        for (std::size_t j = 0; j < kFeatureCount; ++j) {
            const auto [lo, hi] = spec.bounds[j];
            if (rec.features[j] < lo || rec.features[j] > hi) ++warnings;
            row[j] = (rec.features[j] - lo) / (hi - lo);
        }
    }
    if (out_of_range_count) *out_of_range_count = warnings;
    return out;
}

// Seeded permutation of 0..n-1 cut into floor(n*train), floor(n*val) and the
// remainder. The default fractions reproduce the 10914/1926/2500 split at
// n = 15340.
inline constexpr double kDefaultTrainFraction = 0.7115;
inline constexpr double kDefaultValFraction = 0.1256;

inline DataSplit split_dataset(std::size_t n, double train_frac, double val_frac,
                               std::uint64_t seed) {
    if (n < 3) throw std::invalid_argument("need at least 3 records to split");
    if (!(train_frac > 0.0) || !(val_frac > 0.0) || !(train_frac + val_frac < 1.0))
        throw std::invalid_argument("fractions must satisfy 0 < train, 0 < val, train + val < 1");
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t(0));
    std::mt19937_64 rng(seed);
    std::shuffle(perm.begin(), perm.end(), rng);
    const auto n_train = std::size_t(std::floor(double(n) * train_frac));
    const auto n_val = std::size_t(std::floor(double(n) * val_frac));
    DataSplit split;
    split.train.assign(perm.begin(), perm.begin() + n_train);
    split.val.assign(perm.begin() + n_train, perm.begin() + n_train + n_val);
    split.test.assign(perm.begin() + n_train + n_val, perm.end());
    return split;
}

inline Dataset make_dataset(const PlayerTable& table, const NormalizationSpec& spec,
                            double train_frac, double val_frac, std::uint64_t seed,
                            std::size_t* out_of_range_count = nullptr) {
    auto [ladder, labels] = build_price_ladder(price_column(table));
    Dataset ds;
    ds.features = normalize_features(table, spec, out_of_range_count);
    ds.labels = std::move(labels);
    ds.ladder = std::move(ladder);
    ds.split = split_dataset(table.records.size(), train_frac, val_frac, seed);
    return ds;
}

}  // namespace fpnet
