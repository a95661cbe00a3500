// Command-line front end: gen / train / eval / predict / sweep.
// Exit codes: 0 success, 1 usage error, 2 data/model error.

#include <charconv>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "fpnet/fpnet.hpp"

namespace {

using namespace fpnet;

// Raised for errors in the argument values themselves; bad file *contents*
// stay ordinary exceptions and exit with 2 instead of 1.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string fmt(double v) { return detail::format_double(v); }

PlayerTable load_table(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open data file: " + path);
    try {
        return parse_player_csv(in, path);
    } catch (const std::exception& e) {
        throw std::runtime_error(path + ": " + e.what());
    }
}

int cmd_gen(std::size_t n, std::size_t classes, std::uint64_t seed, const std::string& out) {
    PlayerTable table;
    try {
        table = generate_synthetic(n, classes, seed);
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    std::ostringstream ss;
    write_player_csv(table, ss);
    write_file_atomic(out, ss.str());
    std::cout << "wrote " << n << " rows (" << classes << " classes) to " << out << "\n";
    return 0;
}

struct TrainArgs {
    std::string data;
    std::string out;
    std::string log;
    std::vector<std::size_t> hidden{2000, 1500, 500};
    std::string activation = "relu";
    Hyperparams hp;
    std::uint64_t seed = 0;
};

int cmd_train(const TrainArgs& args) {
    Hyperparams hp = args.hp;
    hp.seed = derive_seed(args.seed, 2);
    try {
        hp.validate();
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    for (std::size_t h : args.hidden)
        if (h == 0) throw UsageError("hidden layer sizes must be positive");

    PlayerTable table = load_table(args.data);
    std::size_t out_of_range = 0;
    Dataset ds = make_dataset(table, NormalizationSpec::nominal(), kDefaultTrainFraction,
                              kDefaultValFraction, derive_seed(args.seed, 0), &out_of_range);
    if (out_of_range)
        std::cerr << "warning: " << out_of_range
                  << " feature values fall outside the nominal bounds\n";

    NetworkConfig config;
    config.layer_sizes.reserve(args.hidden.size() + 2);
    config.layer_sizes.push_back(kFeatureCount);
    config.layer_sizes.insert(config.layer_sizes.end(), args.hidden.begin(), args.hidden.end());
    config.layer_sizes.push_back(ds.ladder.size());
    config.hidden_activation = activation_from_name(args.activation);
    config.init_seed = derive_seed(args.seed, 1);

    FitHooks hooks;
    hooks.on_epoch = [](const EpochLog& e) {
        std::fprintf(stderr,
                     "epoch %zu  loss %.6f  train_top1 %.4f  val_top1 %.4f  eta %.6g  (%.2fs)\n",
                     e.epoch, e.train_loss, e.train_top1, e.val_top1, e.eta, e.seconds);
    };
    FitResult result = fit(config, ds, hp, hooks);

    ModelBundle bundle;
    bundle.network = std::move(result.network);
    bundle.ladder = ds.ladder;
    bundle.norm = NormalizationSpec::nominal();
    bundle.meta = ModelMeta{kModelVersion, hp, args.seed};
    save_model_file(bundle, args.out);
    if (!args.log.empty()) {
        std::ostringstream ss;
        write_epoch_log_csv(result.report, ss);
        write_file_atomic(args.log, ss.str());
    }

    const TrainingReport& rep = result.report;
    std::cout << "epochs " << rep.epochs.size() << "\n"
              << "best_epoch " << rep.best_epoch << "\n"
              << "best_val_top1 " << fmt(rep.best_val_top1) << "\n"
              << "stop " << stop_reason_name(rep.stop_reason) << "\n"
              << "model " << args.out << "\n";
    return 0;
}

int cmd_eval(const std::string& model, const std::string& data, const std::string& split,
             std::uint64_t seed) {
    ModelBundle bundle = load_model_file(model);
    PlayerTable table = load_table(data);
    std::size_t out_of_range = 0;
    Matrix features = normalize_features(table, bundle.norm, &out_of_range);
    if (out_of_range)
        std::cerr << "warning: " << out_of_range
                  << " feature values fall outside the model's bounds\n";
    std::vector<std::size_t> labels = labels_for_ladder(table, bundle.ladder);
    const DataSplit sp = split_dataset(table.records.size(), kDefaultTrainFraction,
                                       kDefaultValFraction, derive_seed(seed, 0));
    const std::vector<std::size_t>& subset =
        split == "train" ? sp.train : split == "val" ? sp.val : sp.test;
    const MetricsBundle m = evaluate(bundle.network, features, labels, bundle.ladder, &subset);
    std::cout << "top1 " << fmt(m.top1) << "\n"
              << "top3 " << fmt(m.top3) << "\n"
              << "top5 " << fmt(m.top5) << "\n"
              << "ape " << fmt(m.ape) << "\n";
    return 0;
}

int cmd_predict(const std::string& model, const std::vector<double>& features) {
    if (features.size() != kFeatureCount)
        throw UsageError("expected " + std::to_string(kFeatureCount) + " features, got " +
                         std::to_string(features.size()));
    ModelBundle bundle = load_model_file(model);
    const PricePrediction pred = predict_price(bundle, features);
    std::cout << "class " << pred.class_index << "\n"
              << "price " << fmt(pred.price) << "\n";
    for (const WindowEntry& w : pred.window)
        std::cout << "window " << w.class_index << ' ' << fmt(w.price) << ' '
                  << fmt(w.probability) << "\n";
    return 0;
}

// ---- sweep spec file --------------------------------------------------------
// One cell per row; empty fields fall back to the train defaults; hidden
// sizes are '|'-separated; reps (when given) must agree across rows.

constexpr const char* kSweepHeader =
    "name,hidden,activation,lr,anneal,momentum,l2,batch,patience,max_epochs,reps";

struct SweepRowSpec {
    std::string name;
    std::vector<std::size_t> hidden{2000, 1500, 500};
    Activation act = Activation::relu;
    Hyperparams hp;
};

std::vector<std::string> split_fields(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find(sep, start);
        out.push_back(line.substr(start, pos == std::string::npos ? pos : pos - start));
        if (pos == std::string::npos) break;
        start = pos + 1;
    }
    return out;
}

[[noreturn]] void bad_field(std::size_t line_no, const char* what, const std::string& tok) {
    throw std::runtime_error("line " + std::to_string(line_no) + ": " + what +
                             " is not numeric: '" + tok + "'");
}

double parse_num(const std::string& tok, std::size_t line_no, const char* what) {
    double v = 0.0;
    const auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || p != tok.data() + tok.size()) bad_field(line_no, what, tok);
    return v;
}

std::size_t parse_count(const std::string& tok, std::size_t line_no, const char* what) {
    unsigned long long v = 0;
    const auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || p != tok.data() + tok.size()) bad_field(line_no, what, tok);
    return std::size_t(v);
}

std::pair<std::vector<SweepRowSpec>, std::size_t> parse_sweep_spec(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("empty sweep spec: missing header line");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kSweepHeader)
        throw std::runtime_error(std::string("sweep spec header must be \"") + kSweepHeader +
                                 "\"");
    std::vector<SweepRowSpec> rows;
    std::optional<std::size_t> reps;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto fields = split_fields(line, ',');
        if (fields.size() != 11)
            throw std::runtime_error("line " + std::to_string(line_no) +
                                     ": expected 11 fields, got " +
                                     std::to_string(fields.size()));
        SweepRowSpec row;
        row.name = fields[0];
        if (row.name.empty())
            throw std::runtime_error("line " + std::to_string(line_no) +
                                     ": cell name must not be empty");
        if (!fields[1].empty()) {
            row.hidden.clear();
            for (const std::string& tok : split_fields(fields[1], '|')) {
                const std::size_t h = parse_count(tok, line_no, "hidden size");
                if (h == 0)
                    throw std::runtime_error("line " + std::to_string(line_no) +
                                             ": hidden layer sizes must be positive");
                row.hidden.push_back(h);
            }
        }
        if (!fields[2].empty()) {
            try {
                row.act = activation_from_name(fields[2]);
            } catch (const std::invalid_argument& e) {
                throw std::runtime_error("line " + std::to_string(line_no) + ": " + e.what());
            }
        }
        if (!fields[3].empty()) row.hp.eta0 = parse_num(fields[3], line_no, "lr");
        if (!fields[4].empty()) row.hp.anneal_k = parse_num(fields[4], line_no, "anneal");
        if (!fields[5].empty()) row.hp.mu = parse_num(fields[5], line_no, "momentum");
        if (!fields[6].empty()) row.hp.lambda = parse_num(fields[6], line_no, "l2");
        if (!fields[7].empty()) row.hp.batch_size = parse_count(fields[7], line_no, "batch");
        if (!fields[8].empty()) row.hp.patience = parse_count(fields[8], line_no, "patience");
        if (!fields[9].empty())
            row.hp.max_epochs = parse_count(fields[9], line_no, "max_epochs");
        if (!fields[10].empty()) {
            const std::size_t r = parse_count(fields[10], line_no, "reps");
            if (r == 0)
                throw std::runtime_error("line " + std::to_string(line_no) +
                                         ": reps must be positive");
            if (reps && *reps != r)
                throw std::runtime_error("line " + std::to_string(line_no) +
                                         ": conflicting reps value " + std::to_string(r) +
                                         " (sweep-wide setting is " + std::to_string(*reps) +
                                         ")");
            reps = r;
        }
        try {
            row.hp.validate();
        } catch (const std::invalid_argument& e) {
            throw std::runtime_error("line " + std::to_string(line_no) + " (cell '" + row.name +
                                     "'): " + e.what());
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw std::runtime_error("no cells in sweep spec");
    return {std::move(rows), reps.value_or(1)};
}

int cmd_sweep(const std::string& spec_path, const std::string& data, const std::string& out,
              std::size_t parallel) {
    std::vector<SweepRowSpec> rowspecs;
    std::size_t reps = 1;
    {
        std::ifstream in(spec_path);
        if (!in) throw std::runtime_error("cannot open sweep spec: " + spec_path);
        try {
            std::tie(rowspecs, reps) = parse_sweep_spec(in);
        } catch (const std::exception& e) {
            throw std::runtime_error(spec_path + ": " + e.what());
        }
    }
    PlayerTable table = load_table(data);
    std::size_t out_of_range = 0;
    Dataset ds = make_dataset(table, NormalizationSpec::nominal(), kDefaultTrainFraction,
                              kDefaultValFraction, derive_seed(0, 0), &out_of_range);
    if (out_of_range)
        std::cerr << "warning: " << out_of_range
                  << " feature values fall outside the nominal bounds\n";

    SweepSpec spec;
    spec.repetitions = reps;
    spec.base_seed = 0;
    spec.cells.reserve(rowspecs.size());
    for (SweepRowSpec& rs : rowspecs) {
        SweepCell cell;
        cell.name = std::move(rs.name);
        cell.config.layer_sizes.reserve(rs.hidden.size() + 2);
        cell.config.layer_sizes.push_back(kFeatureCount);
        cell.config.layer_sizes.insert(cell.config.layer_sizes.end(), rs.hidden.begin(),
                                       rs.hidden.end());
        cell.config.layer_sizes.push_back(ds.ladder.size());
        cell.config.hidden_activation = rs.act;
        cell.hp = rs.hp;
        spec.cells.push_back(std::move(cell));
    }

    const std::vector<SweepRow> results = run_sweep(spec, ds, parallel);
    for (const SweepRow& r : results)
        if (!r.ok)
            std::cerr << "cell '" << r.cell << "' rep " << r.rep << " failed: " << r.error
                      << "\n";
    std::ostringstream ss;
    write_sweep_csv(spec, results, ss);
    write_file_atomic(out, ss.str());
    std::cout << "wrote " << results.size() << " result rows to " << out << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"feed-forward price-class model for football players"};
    app.failure_message(CLI::FailureMessage::help);
    app.require_subcommand(1);

    auto* gen = app.add_subcommand("gen", "generate a synthetic player CSV");
    std::size_t gen_n = 0, gen_classes = 0;
    std::uint64_t gen_seed = 0;
    std::string gen_out;
    gen->add_option("--n", gen_n, "number of rows")->required();
    gen->add_option("--classes", gen_classes, "number of price classes")->required();
    gen->add_option("--seed", gen_seed, "random seed");
    gen->add_option("--out", gen_out, "output CSV path")->required();

    auto* train = app.add_subcommand("train", "train a model from a player CSV");
    TrainArgs ta;
    train->add_option("--data", ta.data, "training CSV")->required();
    train->add_option("--out", ta.out, "output model path")->required();
    train->add_option("--hidden", ta.hidden, "hidden layer sizes")
        ->delimiter(',')
        ->capture_default_str();
    train->add_option("--activation", ta.activation, "hidden activation")
        ->check(CLI::IsMember({"relu", "tanh", "sigmoid"}))
        ->capture_default_str();
    train->add_option("--lr", ta.hp.eta0, "initial learning rate")->capture_default_str();
    train->add_option("--anneal", ta.hp.anneal_k, "annealing coefficient")
        ->capture_default_str();
    train->add_option("--momentum", ta.hp.mu, "Nesterov momentum")->capture_default_str();
    train->add_option("--l2", ta.hp.lambda, "L2 penalty coefficient")->capture_default_str();
    train->add_option("--batch", ta.hp.batch_size, "minibatch size")->capture_default_str();
    train->add_option("--patience", ta.hp.patience, "early-stopping patience")
        ->capture_default_str();
    train->add_option("--max-epochs", ta.hp.max_epochs, "epoch cap")->capture_default_str();
    train->add_option("--seed", ta.seed, "master seed (split, init, shuffles)")
        ->capture_default_str();
    train->add_option("--log", ta.log, "per-epoch CSV log path");

    auto* eval = app.add_subcommand("eval", "evaluate a model on one data split");
    std::string ev_model, ev_data, ev_split;
    std::uint64_t ev_seed = 0;
    eval->add_option("--model", ev_model, "model path")->required();
    eval->add_option("--data", ev_data, "player CSV")->required();
    eval->add_option("--split", ev_split, "which split to score")
        ->check(CLI::IsMember({"train", "val", "test"}))
        ->required();
    eval->add_option("--seed", ev_seed, "seed the split was made with")->capture_default_str();

    auto* predict = app.add_subcommand("predict", "predict the price for one player");
    std::string pr_model;
    std::vector<double> pr_features;
    predict->add_option("--model", pr_model, "model path")->required();
    predict->add_option("--features", pr_features, "41 comma-separated feature values")
        ->delimiter(',')
        ->required();

    auto* sweep = app.add_subcommand("sweep", "run a hyperparameter sweep");
    std::string sw_spec, sw_data, sw_out;
    std::size_t sw_parallel = 1;
    sweep->add_option("--spec", sw_spec, "sweep cells CSV")->required();
    sweep->add_option("--data", sw_data, "player CSV")->required();
    sweep->add_option("--out", sw_out, "results CSV path")->required();
    sweep->add_option("--parallel", sw_parallel, "worker thread count")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        if (gen->parsed()) return cmd_gen(gen_n, gen_classes, gen_seed, gen_out);
        if (train->parsed()) return cmd_train(ta);
        if (eval->parsed()) return cmd_eval(ev_model, ev_data, ev_split, ev_seed);
        if (predict->parsed()) return cmd_predict(pr_model, pr_features);
        if (sweep->parsed()) return cmd_sweep(sw_spec, sw_data, sw_out, sw_parallel);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
