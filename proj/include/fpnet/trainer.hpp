#pragma once

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "fpnet/dataio.hpp"
#include "fpnet/metrics.hpp"
#include "fpnet/optimizer.hpp"

namespace fpnet {

// One seeded-shuffle pass over the training set: eta is annealed by epoch
// (fixed across the batches of one epoch) and every minibatch takes one
// Nesterov step on the full regularized gradient. Returns the batch-size
// weighted mean of the losses seen at the gradient evaluation points.
// `epoch` is 0-based so the first epoch runs at eta0.
inline double train_epoch(Network& net, OptimizerState& state, const Matrix& x,
                          const std::vector<std::size_t>& y, const Hyperparams& hp,
                          std::size_t epoch) {
    if (x.rows() == 0) throw std::invalid_argument("empty training set");
    if (y.size() != x.rows())
        throw std::invalid_argument("label count does not match feature rows");
    const double eta = anneal_rate(hp.eta0, hp.anneal_k, epoch);
    state.current_rate = eta;
    const auto batches = make_minibatches(x.rows(), hp.batch_size, derive_seed(hp.seed, epoch));
    double weighted_loss = 0.0;
    std::vector<std::size_t> yb;
    for (const auto& batch : batches) {
        const Matrix xb = gather_rows(x, batch);
        yb.clear();
        for (std::size_t i : batch) yb.push_back(y[i]);
        double batch_loss = 0.0;
        const auto grad_at = [&](const Network& params) {
            const ForwardCache cache = forward(params, xb);
            batch_loss = loss_total(cache, yb, hp.lambda, params);
            return backward(params, cache, yb, hp.lambda);
        };
        nesterov_step(net, state, grad_at, eta, hp.mu);
        weighted_loss += batch_loss * double(batch.size());
    }
    state.epoch = epoch + 1;
    return weighted_loss / double(x.rows());
}

struct EpochLog {
    std::size_t epoch = 0;  // 1-based
    double train_loss = 0.0;
    double train_top1 = 0.0;
    double val_top1 = 0.0;
    double val_top3 = 0.0;
    double val_top5 = 0.0;
    double val_ape = 0.0;
    double eta = 0.0;
    double seconds = 0.0;
};

enum class StopReason { patience_exhausted, max_epochs };

inline const char* stop_reason_name(StopReason r) {
    return r == StopReason::patience_exhausted ? "patience" : "max_epochs";
}

struct TrainingReport {
    std::vector<EpochLog> epochs;
    std::size_t best_epoch = 0;
    double best_val_top1 = 0.0;
    StopReason stop_reason = StopReason::max_epochs;
};

struct FitHooks {
    // Test seam: replaces the real validation evaluation when set. Receives
    // the trained-so-far network and the 1-based epoch index.
    std::function<double(const Network&, std::size_t)> validation_override;
    std::function<void(const EpochLog&)> on_epoch;
};

struct FitResult {
    Network network;  // parameters restored from the best epoch's snapshot
    TrainingReport report;
};

// Trains until validation top-1 has not strictly improved for hp.patience
// consecutive epochs (or max_epochs), returning the best-epoch snapshot.
inline FitResult fit(const NetworkConfig& config, const Dataset& data,
                     const Hyperparams& hp, const FitHooks& hooks = {}) {
    hp.validate();
    config.validate();
    if (data.split.train.empty()) throw std::invalid_argument("empty training split");
    if (data.split.val.empty()) throw std::invalid_argument("empty validation split");
    if (config.layer_sizes.front() != data.features.cols())
        throw std::invalid_argument("network input size does not match feature count");
    if (config.layer_sizes.back() != data.ladder.size())
        throw std::invalid_argument("network output size does not match ladder length");

    const Matrix x_train = gather_rows(data.features, data.split.train);
    std::vector<std::size_t> y_train;
    y_train.reserve(data.split.train.size());
    for (std::size_t i : data.split.train) y_train.push_back(data.labels[i]);

    Network net = init_network(config);
    OptimizerState state = make_optimizer_state(net);
    Network best_net = net;
    TrainingReport report;
    report.best_val_top1 = -1.0;
    std::size_t since_best = 0;

    using clock = std::chrono::steady_clock;
    for (std::size_t e = 1; e <= hp.max_epochs; ++e) {
        const auto started = clock::now();
        const double train_loss = train_epoch(net, state, x_train, y_train, hp, e - 1);
        const MetricsBundle train_m =
            evaluate(net, data.features, data.labels, data.ladder, &data.split.train);

        EpochLog log;
        log.epoch = e;
        log.train_loss = train_loss;
        log.train_top1 = train_m.top1;
        log.eta = state.current_rate;
        if (hooks.validation_override) {
            const double v = hooks.validation_override(net, e);
            log.val_top1 = log.val_top3 = log.val_top5 = v;
            log.val_ape = 0.0;
        } else {
            const MetricsBundle val_m =
                evaluate(net, data.features, data.labels, data.ladder, &data.split.val);
            log.val_top1 = val_m.top1;
            log.val_top3 = val_m.top3;
            log.val_top5 = val_m.top5;
            log.val_ape = val_m.ape;
        }
        log.seconds = std::chrono::duration<double>(clock::now() - started).count();
        report.epochs.push_back(log);
        if (hooks.on_epoch) hooks.on_epoch(log);

        if (log.val_top1 > report.best_val_top1) {
            report.best_val_top1 = log.val_top1;
            report.best_epoch = e;
            best_net = net;
            since_best = 0;
        } else if (++since_best >= hp.patience) {
            report.stop_reason = StopReason::patience_exhausted;
            return {std::move(best_net), std::move(report)};
        }
    }
    report.stop_reason = StopReason::max_epochs;
    return {std::move(best_net), std::move(report)};
}

// ---- hyperparameter sweep ---------------------------------------------------

struct SweepCell {
    std::string name;
    NetworkConfig config;
    Hyperparams hp;
};

struct SweepSpec {
    std::vector<SweepCell> cells;
    std::size_t repetitions = 1;
    std::uint64_t base_seed = 0;
};

struct SweepRow {
    std::string cell;
    std::size_t rep = 0;
    bool ok = false;
    std::string error;
    MetricsBundle val;
    std::size_t best_epoch = 0;
    double seconds = 0.0;
};

// Runs fit per (cell, repetition) with derived seeds. Cells are independent;
// a failure is recorded in its row instead of aborting the sweep. `parallel`
// bounds the number of worker threads; each job owns its state, the dataset
// is shared read-only.
inline std::vector<SweepRow> run_sweep(const SweepSpec& spec, const Dataset& data,
                                       std::size_t parallel = 1) {
    if (spec.cells.empty()) throw std::invalid_argument("sweep has no cells");
    if (spec.repetitions == 0) throw std::invalid_argument("repetitions must be positive");
    const std::size_t jobs = spec.cells.size() * spec.repetitions;
    std::vector<SweepRow> rows(jobs);

    const auto run_job = [&](std::size_t job) {
        const std::size_t cell_idx = job / spec.repetitions;
        const std::size_t rep = job % spec.repetitions;
        SweepCell cell = spec.cells[cell_idx];
        const std::uint64_t job_seed = derive_seed(spec.base_seed, job);
        cell.config.init_seed = derive_seed(job_seed, 0);
        cell.hp.seed = derive_seed(job_seed, 1);
        SweepRow row;
        row.cell = cell.name;
        row.rep = rep;
        const auto started = std::chrono::steady_clock::now();
        try {
            const FitResult result = fit(cell.config, data, cell.hp);
            row.val = evaluate(result.network, data.features, data.labels, data.ladder,
                               &data.split.val);
            row.best_epoch = result.report.best_epoch;
            row.ok = true;
        } catch (const std::exception& e) {
            row.error = e.what();
        }
        row.seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
        rows[job] = std::move(row);
    };

    if (parallel <= 1) {
        for (std::size_t job = 0; job < jobs; ++job) run_job(job);
    } else {
        std::atomic<std::size_t> next{0};
        const auto worker = [&] {
            for (std::size_t job = next++; job < jobs; job = next++) run_job(job);
        };
        std::vector<std::thread> pool;
        const std::size_t workers = std::min(parallel, jobs);
        pool.reserve(workers);
        for (std::size_t t = 0; t < workers; ++t) pool.emplace_back(worker);
        for (std::thread& t : pool) t.join();
    }
    return rows;
}

// ---- CSV emission -----------------------------------------------------------

inline void write_epoch_log_csv(const TrainingReport& report, std::ostream& out) {
    out << "epoch,train_loss,train_top1,val_top1,val_top3,val_top5,val_ape,eta,seconds\n";
    char seconds[32];
    for (const EpochLog& e : report.epochs) {
        std::snprintf(seconds, sizeof(seconds), "%.3f", e.seconds);
        out << e.epoch << ',' << detail::format_double(e.train_loss) << ','
            << detail::format_double(e.train_top1) << ','
            << detail::format_double(e.val_top1) << ','
            << detail::format_double(e.val_top3) << ','
            << detail::format_double(e.val_top5) << ','
            << detail::format_double(e.val_ape) << ','
            << detail::format_double(e.eta) << ',' << seconds << "\n";
    }
}

namespace detail {

inline std::string csv_safe(std::string s) {
    for (char& c : s)
        if (c == ',' || c == '\n' || c == '\r') c = ';';
    return s;
}

}  // namespace detail

// One row per (cell, repetition) plus mean/std aggregate rows per cell,
// aggregated over the successful repetitions.
inline void write_sweep_csv(const SweepSpec& spec, const std::vector<SweepRow>& rows,
                            std::ostream& out) {
    out << "name,rep,status,best_epoch,val_top1,val_top3,val_top5,val_ape,seconds,note\n";
    char seconds[32];
    const auto emit_metrics = [&](double t1, double t3, double t5, double ape) {
        out << detail::format_double(t1) << ',' << detail::format_double(t3) << ','
            << detail::format_double(t5) << ',' << detail::format_double(ape);
    };
    for (std::size_t c = 0; c < spec.cells.size(); ++c) {
        std::vector<const SweepRow*> ok_rows;
        for (std::size_t r = 0; r < spec.repetitions; ++r) {
            const SweepRow& row = rows[c * spec.repetitions + r];
            std::snprintf(seconds, sizeof(seconds), "%.3f", row.seconds);
            out << detail::csv_safe(row.cell) << ',' << row.rep << ','
                << (row.ok ? "ok" : "fail") << ',' << row.best_epoch << ',';
            emit_metrics(row.val.top1, row.val.top3, row.val.top5, row.val.ape);
            out << ',' << seconds << ',' << detail::csv_safe(row.error) << "\n";
            if (row.ok) ok_rows.push_back(&row);
        }
        if (ok_rows.empty()) continue;
        const double n = double(ok_rows.size());
        const auto mean_of = [&](auto field) {
            double s = 0.0;
            for (const SweepRow* r : ok_rows) s += field(*r);
            return s / n;
        };
        const auto std_of = [&](auto field, double mean) {
            if (ok_rows.size() < 2) return 0.0;
            double s = 0.0;
            for (const SweepRow* r : ok_rows) {
                const double d = field(*r) - mean;
                s += d * d;
            }
            return std::sqrt(s / (n - 1.0));
        };
        const auto t1 = [](const SweepRow& r) { return r.val.top1; };
        const auto t3 = [](const SweepRow& r) { return r.val.top3; };
        const auto t5 = [](const SweepRow& r) { return r.val.top5; };
        const auto ap = [](const SweepRow& r) { return r.val.ape; };
        const auto be = [](const SweepRow& r) { return double(r.best_epoch); };
        const auto se = [](const SweepRow& r) { return r.seconds; };
        const double m1 = mean_of(t1), m3 = mean_of(t3), m5 = mean_of(t5),
                     map = mean_of(ap), mbe = mean_of(be), mse = mean_of(se);
        std::snprintf(seconds, sizeof(seconds), "%.3f", mse);
        out << detail::csv_safe(spec.cells[c].name) << ",mean,ok,"
            << detail::format_double(mbe) << ',';
        emit_metrics(m1, m3, m5, map);
        out << ',' << seconds << ",\n";
        std::snprintf(seconds, sizeof(seconds), "%.3f", std_of(se, mse));
        out << detail::csv_safe(spec.cells[c].name) << ",std,ok,"
            << detail::format_double(std_of(be, mbe)) << ',';
        emit_metrics(std_of(t1, m1), std_of(t3, m3), std_of(t5, m5), std_of(ap, map));
        out << ',' << seconds << ",\n";
    }
}

}  // namespace fpnet
