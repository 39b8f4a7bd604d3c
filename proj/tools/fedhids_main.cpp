// fedhids command-line tool: dataset generation, featurization, training
// (centralized or federated), evaluation, prediction with alerting, the
// window-length sweep, and the FA/WFA aggregator comparison.

#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "fedhids/bundle.hpp"
#include "fedhids/dataset.hpp"
#include "fedhids/error.hpp"
#include "fedhids/features.hpp"
#include "fedhids/federated.hpp"
#include "fedhids/format.hpp"
#include "fedhids/metrics.hpp"
#include "fedhids/pipeline.hpp"

namespace {

using fedhids::ordered_json;

// ---------------------------------------------------------------------------
// --config support: flat JSON object keyed by long flag names. Precedence is
// command-line flag > config file > built-in default, resolved per key by
// applying a config value only when its flag was not passed.
// ---------------------------------------------------------------------------

class ConfigFile {
public:
    void add_flag_to(CLI::App* cmd) {
        cmd->add_option("--config", path_,
                        "JSON object of long flag names; explicit flags take precedence");
    }

    template <typename T>
    void bind(const std::string& key, CLI::Option* opt, T& target) {
        entries_[key] = {opt, [&target, key](const ordered_json& v) {
                             try {
                                 target = v.get<T>();
                             } catch (const nlohmann::json::exception&) {
                                 throw fedhids::UsageError("config key '" + key +
                                                           "' has the wrong type");
                             }
                         }};
    }

    void apply() const {
        if (path_.empty()) return;
        std::ifstream in(path_, std::ios::binary);
        if (!in) throw fedhids::IoError("cannot open config file: " + path_);
        ordered_json j;
        try {
            j = ordered_json::parse(in);
        } catch (const nlohmann::json::exception&) {
            throw fedhids::UsageError("config file is not valid JSON: " + path_);
        }
        if (!j.is_object()) throw fedhids::UsageError("config file must be a flat JSON object");
        for (const auto& [key, value] : j.items()) {
            auto it = entries_.find(key);
            if (it == entries_.end()) throw fedhids::UsageError("unknown config key: " + key);
            if (it->second.first->count() == 0) it->second.second(value);
        }
    }

private:
    struct Entry {
        CLI::Option* first = nullptr;
        std::function<void(const ordered_json&)> second;
    };
    std::string path_;
    std::map<std::string, Entry> entries_;
};

template <typename T>
void opt_bind(CLI::App* cmd, ConfigFile& cf, const std::string& flag, T& target,
              const std::string& desc) {
    CLI::Option* o = cmd->add_option("--" + flag, target, desc);
    if constexpr (std::is_same_v<T, std::vector<int>>) o->delimiter(',');
    cf.bind(flag, o, target);
}

void flag_bind(CLI::App* cmd, ConfigFile& cf, const std::string& flag, bool& target,
               const std::string& desc) {
    CLI::Option* o = cmd->add_flag("--" + flag + ",!--no-" + flag, target, desc);
    cf.bind(flag, o, target);
}

// ---------------------------------------------------------------------------
// Shared option blocks
// ---------------------------------------------------------------------------

struct DataOpts {
    std::string data;
    std::string benign_dir;
    std::string attack_dir;
};

void add_data_opts(CLI::App* cmd, ConfigFile& cf, DataOpts& d) {
    opt_bind(cmd, cf, "data", d.data,
             "dataset directory: synthetic (manifest.json) or ADFA-LD root; "
             "falls back to $ADFA_LD_ROOT");
    opt_bind(cmd, cf, "benign-dir", d.benign_dir, "directory of benign trace files");
    opt_bind(cmd, cf, "attack-dir", d.attack_dir, "directory of attack trace files");
}

fedhids::Dataset resolve_dataset(const DataOpts& d) {
    if (!d.benign_dir.empty() || !d.attack_dir.empty()) {
        if (d.benign_dir.empty() || d.attack_dir.empty())
            throw fedhids::UsageError("--benign-dir and --attack-dir must be given together");
        return fedhids::load_dirs_dataset(d.benign_dir, d.attack_dir);
    }
    std::string root = d.data;
    if (root.empty()) {
        const char* env = std::getenv("ADFA_LD_ROOT");
        if (env == nullptr || *env == '\0')
            throw fedhids::UsageError(
                "no dataset given: pass --data or --benign-dir/--attack-dir, "
                "or set ADFA_LD_ROOT");
        root = env;
    }
    if (fedhids::has_manifest(root)) return fedhids::load_synthetic(root);
    return fedhids::load_adfa_dataset(root);
}

void log_dataset(const fedhids::Dataset& ds) {
    std::size_t attack = 0;
    for (const auto& t : ds.traces)
        if (t.label == fedhids::Label::Attack) ++attack;
    std::cerr << "loaded " << ds.traces.size() << " traces (" << ds.traces.size() - attack
              << " benign, " << attack << " attack), vocab ceiling " << ds.vocab_ceiling << "\n";
}

struct PipelineOpts {
    std::string rep = "tfidf";
    int window_len = 30;
    int stride = 10;
    std::string pca = "auto";
    double variance_target = 0.95;
    int k = -1;
    int max_components = 64;
    double test_fraction = 0.25;
    bool balance_train = true;
    bool balance_test = true;
    double threshold = 0.5;
    std::vector<int> hidden = {64, 32};
    double lr = 0.01;
    double momentum = 0.9;
    int batch_size = 32;
    int epochs = 30;
    double l2 = 1e-4;
    std::uint64_t seed = 0;
};

void add_pipeline_opts(CLI::App* cmd, ConfigFile& cf, PipelineOpts& p) {
    opt_bind(cmd, cf, "rep", p.rep, "representation: trivial | count | tfidf");
    opt_bind(cmd, cf, "window-len", p.window_len, "window length L");
    opt_bind(cmd, cf, "stride", p.stride, "window stride");
    opt_bind(cmd, cf, "pca", p.pca, "projection: auto | on | off");
    opt_bind(cmd, cf, "variance-target", p.variance_target,
             "explained-variance ratio to retain when k is automatic");
    opt_bind(cmd, cf, "k", p.k, "fixed number of components (-1 = automatic)");
    opt_bind(cmd, cf, "max-components", p.max_components, "cap on automatic component count");
    opt_bind(cmd, cf, "test-fraction", p.test_fraction, "held-out fraction per class");
    flag_bind(cmd, cf, "balance-train", p.balance_train, "downsample training split to 50/50");
    flag_bind(cmd, cf, "balance-test", p.balance_test, "downsample test split to 50/50");
    opt_bind(cmd, cf, "threshold", p.threshold, "trace verdict threshold on the mean score");
    opt_bind(cmd, cf, "hidden", p.hidden, "hidden layer widths, comma-separated");
    opt_bind(cmd, cf, "lr", p.lr, "learning rate");
    opt_bind(cmd, cf, "momentum", p.momentum, "momentum coefficient");
    opt_bind(cmd, cf, "batch-size", p.batch_size, "minibatch size");
    opt_bind(cmd, cf, "epochs", p.epochs, "training epochs");
    opt_bind(cmd, cf, "l2", p.l2, "weight decay strength");
    opt_bind(cmd, cf, "seed", p.seed, "seed for every derived random stream");
}

fedhids::PcaMode parse_pca_mode(const std::string& s) {
    if (s == "auto") return fedhids::PcaMode::Auto;
    if (s == "on") return fedhids::PcaMode::On;
    if (s == "off") return fedhids::PcaMode::Off;
    throw fedhids::UsageError("--pca must be auto, on, or off");
}

fedhids::PipelineConfig to_pipeline_config(const PipelineOpts& p) {
    fedhids::PipelineConfig cfg;
    cfg.rep = fedhids::representation_from_name(p.rep);
    cfg.window_len = p.window_len;
    cfg.stride = p.stride;
    cfg.pca_mode = parse_pca_mode(p.pca);
    cfg.pca.variance_target = p.variance_target;
    cfg.pca.k_fixed = p.k;
    cfg.pca.max_components = p.max_components;
    cfg.test_fraction = p.test_fraction;
    cfg.balance_train = p.balance_train;
    cfg.balance_test = p.balance_test;
    cfg.threshold = p.threshold;
    cfg.hidden = p.hidden;
    cfg.train.lr = p.lr;
    cfg.train.momentum = p.momentum;
    cfg.train.batch_size = p.batch_size;
    cfg.train.epochs = p.epochs;
    cfg.train.l2 = p.l2;
    cfg.train.seed = p.seed;
    cfg.seed = p.seed;
    fedhids::validate_pipeline_config(cfg);
    return cfg;
}

ordered_json pipeline_echo(const PipelineOpts& p) {
    ordered_json e = ordered_json::object();
    e["rep"] = p.rep;
    e["window-len"] = p.window_len;
    e["stride"] = p.stride;
    e["pca"] = p.pca;
    e["variance-target"] = p.variance_target;
    e["k"] = p.k;
    e["max-components"] = p.max_components;
    e["test-fraction"] = p.test_fraction;
    e["balance-train"] = p.balance_train;
    e["balance-test"] = p.balance_test;
    e["threshold"] = p.threshold;
    e["hidden"] = p.hidden;
    e["lr"] = p.lr;
    e["momentum"] = p.momentum;
    e["batch-size"] = p.batch_size;
    e["epochs"] = p.epochs;
    e["l2"] = p.l2;
    e["seed"] = p.seed;
    return e;
}

std::string metrics_csv(const fedhids::MetricsReport& m) {
    std::ostringstream os;
    os << m.tp << ',' << m.fp << ',' << m.tn << ',' << m.fn << ','
       << fedhids::format_double(m.accuracy) << ',' << fedhids::format_double(m.precision) << ','
       << fedhids::format_double(m.recall) << ',' << fedhids::format_double(m.f1) << ','
       << fedhids::format_double(m.fpr) << ',' << fedhids::format_double(m.fnr);
    return os.str();
}

ordered_json rounds_to_json(const std::vector<fedhids::RoundRecord>& rounds) {
    ordered_json arr = ordered_json::array();
    for (const auto& r : rounds) {
        ordered_json j = ordered_json::object();
        j["round"] = r.round;
        j["per_client_loss"] = r.per_client_loss;
        j["global_metrics"] = fedhids::metrics_to_json(r.global_metrics);
        arr.push_back(std::move(j));
    }
    return arr;
}

std::vector<std::size_t> all_indices(const fedhids::Dataset& ds) {
    std::vector<std::size_t> idx(ds.traces.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    return idx;
}

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

struct GenOpts {
    std::uint64_t seed = 1;
    int n_benign = 400;
    int n_attack = 400;
    int len_min = 60;
    int len_max = 120;
    int vocab = 200;
    double rho = 0.3;
    std::string out;
};

void cmd_gen(const GenOpts& g) {
    fedhids::SynthConfig sc;
    sc.seed = g.seed;
    sc.n_benign = g.n_benign;
    sc.n_attack = g.n_attack;
    sc.trace_len_min = g.len_min;
    sc.trace_len_max = g.len_max;
    sc.vocab_size = g.vocab;
    sc.rho = g.rho;
    const fedhids::Dataset ds = fedhids::generate_synthetic(sc);
    fedhids::save_synthetic(ds, sc, g.out);
    ordered_json j = ordered_json::object();
    j["out"] = g.out;
    j["n_benign"] = g.n_benign;
    j["n_attack"] = g.n_attack;
    j["vocab_ceiling"] = ds.vocab_ceiling;
    std::cout << j.dump(2) << "\n";
}

struct FeaturizeOpts {
    DataOpts data;
    std::string rep = "tfidf";
    int window_len = 30;
    int stride = 10;
    std::string out;
};

void cmd_featurize(const FeaturizeOpts& f) {
    const auto rep = fedhids::representation_from_name(f.rep);
    const fedhids::Dataset ds = resolve_dataset(f.data);
    log_dataset(ds);
    const auto idx = all_indices(ds);
    const fedhids::FeatureSpace space =
        fedhids::fit_feature_space(ds, idx, rep, f.window_len, f.stride);
    const fedhids::FeatureMatrix fm = fedhids::featurize(ds, idx, space);
    if (f.out.empty()) {
        fedhids::write_feature_csv(fm, std::cout);
    } else {
        std::ofstream out(f.out, std::ios::binary);
        if (!out) throw fedhids::IoError("cannot open " + f.out + " for writing");
        fedhids::write_feature_csv(fm, out);
    }
    std::cerr << "featurized " << fm.rows() << " windows x " << fm.cols() << " columns\n";
}

struct TrainOpts {
    DataOpts data;
    PipelineOpts pipe;
    std::string mode = "central";
    std::string out;
    int clients = 4;
    double skew = 0.0;
    int rounds = 10;
    int local_epochs = 5;
    std::string aggregator = "FA";
};

void cmd_train(const TrainOpts& t) {
    if (t.mode != "central" && t.mode != "federated")
        throw fedhids::UsageError("--mode must be central or federated");
    const fedhids::PipelineConfig cfg = to_pipeline_config(t.pipe);
    const fedhids::Dataset ds = resolve_dataset(t.data);
    log_dataset(ds);

    ordered_json echo = pipeline_echo(t.pipe);
    echo["mode"] = t.mode;

    fedhids::FittedPipeline fitted;
    fedhids::MlpParams model;
    ordered_json report = ordered_json::object();

    if (t.mode == "central") {
        fedhids::CentralRunResult run = fedhids::run_central(ds, cfg);
        report["window"] = fedhids::metrics_to_json(run.eval.window_metrics);
        report["trace"] = fedhids::metrics_to_json(run.eval.trace_metrics);
        fitted = std::move(run.fitted);
        model = std::move(run.model);
    } else {
        echo["clients"] = t.clients;
        echo["skew"] = t.skew;
        echo["rounds"] = t.rounds;
        echo["local-epochs"] = t.local_epochs;
        echo["aggregator"] = t.aggregator;
        fedhids::FederatedExperimentConfig fx;
        fx.n_clients = t.clients;
        fx.skew = t.skew;
        fx.fed.n_rounds = t.rounds;
        fx.fed.local_epochs = t.local_epochs;
        fx.fed.aggregator = fedhids::aggregator_from_name(t.aggregator);
        fedhids::FederatedExperimentResult r = fedhids::run_federated_experiment(ds, cfg, fx);
        const fedhids::FeatureMatrix test_fm =
            fedhids::transform_pipeline(r.fitted, ds, r.splits.test);
        const fedhids::EvalOutcome eval =
            fedhids::evaluate_model(r.run.global, test_fm, ds, cfg.threshold);
        report["window"] = fedhids::metrics_to_json(eval.window_metrics);
        report["trace"] = fedhids::metrics_to_json(eval.trace_metrics);
        report["rounds"] = rounds_to_json(r.run.rounds);
        fitted = std::move(r.fitted);
        model = std::move(r.run.global);
    }

    if (!t.out.empty()) {
        const fedhids::ModelBundle bundle = fedhids::make_bundle(
            fitted, model, cfg.seed, std::move(echo), fedhids::dataset_fingerprint(ds));
        fedhids::save_model_bundle(bundle, t.out);
        std::cerr << "wrote model bundle to " << t.out << "\n";
    }
    std::cout << report.dump(2) << "\n";
}

struct EvalOpts {
    DataOpts data;
    std::string model;
    double threshold = 0.5;
};

void cmd_eval(const EvalOpts& e) {
    const fedhids::ModelBundle bundle = fedhids::load_model_bundle(e.model);
    const fedhids::Dataset ds = resolve_dataset(e.data);
    log_dataset(ds);
    const fedhids::FittedPipeline fitted = fedhids::bundle_pipeline(bundle);
    const fedhids::FeatureMatrix fm = fedhids::transform_pipeline(fitted, ds, all_indices(ds));
    if (fm.rows() == 0) throw fedhids::NoWindows("no trace is at least window_len long");
    const fedhids::EvalOutcome eval = fedhids::evaluate_model(bundle.mlp, fm, ds, e.threshold);
    ordered_json report = ordered_json::object();
    report["window"] = fedhids::metrics_to_json(eval.window_metrics);
    report["trace"] = fedhids::metrics_to_json(eval.trace_metrics);
    std::cout << report.dump(2) << "\n";
    std::cerr << "evaluated " << eval.verdicts.size() << " of " << ds.traces.size()
              << " traces\n";
}

struct PredictOpts {
    std::string model;
    std::vector<std::string> files;
    double threshold = 0.5;
    std::string alert_log;
    std::string fixed_clock;
};

void cmd_predict(const PredictOpts& p) {
    const fedhids::ModelBundle bundle = fedhids::load_model_bundle(p.model);
    const std::string fingerprint = fedhids::bundle_fingerprint(bundle);
    std::ofstream alert_out;
    if (!p.alert_log.empty()) {
        alert_out.open(p.alert_log, std::ios::app | std::ios::binary);
        if (!alert_out) throw fedhids::IoError("cannot open alert log: " + p.alert_log);
    }
    const std::optional<std::string> clock =
        p.fixed_clock.empty() ? std::nullopt : std::optional<std::string>(p.fixed_clock);

    for (const std::string& file : p.files) {
        const fedhids::Trace trace = fedhids::parse_trace_file(file, fedhids::Label::Benign);
        fedhids::Verdict v;
        try {
            v = fedhids::bundle_predict(bundle, trace, p.threshold);
        } catch (const fedhids::NoWindows&) {
            std::cerr << "warning: trace " << trace.id
                      << " is shorter than the window length; no verdict\n";
            continue;
        }
        std::cout << fedhids::verdict_to_json(v).dump() << "\n";
        if (v.label == 1 && alert_out.is_open()) {
            fedhids::AlertRecord alert;
            alert.timestamp = fedhids::utc_timestamp_iso8601(clock);
            alert.trace_id = v.trace_id;
            alert.score = v.score;
            alert.threshold = p.threshold;
            alert.model_fingerprint = fingerprint;
            alert_out << fedhids::alert_to_json(alert).dump() << "\n";
        }
    }
}

struct SweepOpts {
    DataOpts data;
    PipelineOpts pipe;
    std::vector<int> lengths = {10, 20, 30, 40};
};

void cmd_sweep(const SweepOpts& s) {
    const fedhids::PipelineConfig cfg = to_pipeline_config(s.pipe);
    const fedhids::Dataset ds = resolve_dataset(s.data);
    log_dataset(ds);
    std::vector<int> seen;
    for (int len : s.lengths) {
        if (std::find(seen.begin(), seen.end(), len) != seen.end())
            std::cerr << "warning: duplicate window length " << len << " ignored\n";
        else
            seen.push_back(len);
    }
    const std::vector<fedhids::SweepRow> rows = fedhids::sweep_window_length(ds, cfg, s.lengths);
    std::cout << "L,scope,tp,fp,tn,fn,accuracy,precision,recall,f1,fpr,fnr\n";
    for (const auto& row : rows) {
        std::cout << row.window_len << ",window," << metrics_csv(row.window_metrics) << "\n";
        std::cout << row.window_len << ",trace," << metrics_csv(row.trace_metrics) << "\n";
    }
}

struct FedCompareOpts {
    DataOpts data;
    PipelineOpts pipe;
    int clients = 4;
    double skew = 1.0;
    int rounds = 10;
    int local_epochs = 5;
    int seeds = 5;
};

void cmd_fedcompare(const FedCompareOpts& f) {
    const fedhids::PipelineConfig cfg = to_pipeline_config(f.pipe);
    const fedhids::Dataset ds = resolve_dataset(f.data);
    log_dataset(ds);
    fedhids::FederatedExperimentConfig fx;
    fx.n_clients = f.clients;
    fx.skew = f.skew;
    fx.fed.n_rounds = f.rounds;
    fx.fed.local_epochs = f.local_epochs;
    const fedhids::FedCompareResult result = fedhids::run_fed_compare(ds, cfg, fx, f.seeds);

    std::cout << "aggregator,seed,round,accuracy,f1,fpr,fnr\n";
    for (const auto& row : result.rows)
        std::cout << row.aggregator << ',' << row.seed << ',' << row.round << ','
                  << fedhids::format_double(row.accuracy) << ',' << fedhids::format_double(row.f1)
                  << ',' << fedhids::format_double(row.fpr) << ','
                  << fedhids::format_double(row.fnr) << "\n";

    for (std::size_t i = 0; i < result.fa_final_accuracy.size(); ++i)
        std::cerr << "seed " << cfg.seed + i
                  << ": final accuracy FA=" << fedhids::format_double(result.fa_final_accuracy[i])
                  << " WFA=" << fedhids::format_double(result.wfa_final_accuracy[i]) << "\n";
    std::cerr << "median final accuracy FA=" << fedhids::format_double(result.median_fa_accuracy)
              << " WFA=" << fedhids::format_double(result.median_wfa_accuracy) << "\n";
}

// ---------------------------------------------------------------------------
// Wiring
// ---------------------------------------------------------------------------

int run_cli(int argc, char** argv) {
    CLI::App app{"syscall-trace intrusion detection: windowed featurization, PCA, an MLP "
                 "classifier, and simulated federated training"};
    app.require_subcommand(1);

    GenOpts gen;
    ConfigFile gen_cf;
    {
        CLI::App* cmd = app.add_subcommand("gen", "generate a synthetic labeled trace dataset");
        gen_cf.add_flag_to(cmd);
        opt_bind(cmd, gen_cf, "seed", gen.seed, "generator seed");
        opt_bind(cmd, gen_cf, "n-benign", gen.n_benign, "number of benign traces");
        opt_bind(cmd, gen_cf, "n-attack", gen.n_attack, "number of attack traces");
        opt_bind(cmd, gen_cf, "len-min", gen.len_min, "minimum trace length");
        opt_bind(cmd, gen_cf, "len-max", gen.len_max, "maximum trace length");
        opt_bind(cmd, gen_cf, "vocab", gen.vocab, "syscall vocabulary size");
        opt_bind(cmd, gen_cf, "rho", gen.rho, "per-step attack-pattern probability");
        cmd->add_option("--out", gen.out, "output directory")->required();
        cmd->callback([&] {
            gen_cf.apply();
            cmd_gen(gen);
        });
    }

    FeaturizeOpts feat;
    ConfigFile feat_cf;
    {
        CLI::App* cmd =
            app.add_subcommand("featurize", "write the windowed feature matrix as CSV");
        feat_cf.add_flag_to(cmd);
        add_data_opts(cmd, feat_cf, feat.data);
        opt_bind(cmd, feat_cf, "rep", feat.rep, "representation: trivial | count | tfidf");
        opt_bind(cmd, feat_cf, "window-len", feat.window_len, "window length L");
        opt_bind(cmd, feat_cf, "stride", feat.stride, "window stride");
        opt_bind(cmd, feat_cf, "out", feat.out, "output CSV path (default stdout)");
        cmd->callback([&] {
            feat_cf.apply();
            cmd_featurize(feat);
        });
    }

    TrainOpts train;
    ConfigFile train_cf;
    {
        CLI::App* cmd = app.add_subcommand(
            "train", "train a model (centralized or simulated federated) and report metrics");
        train_cf.add_flag_to(cmd);
        add_data_opts(cmd, train_cf, train.data);
        add_pipeline_opts(cmd, train_cf, train.pipe);
        opt_bind(cmd, train_cf, "mode", train.mode, "central | federated");
        opt_bind(cmd, train_cf, "out", train.out, "write the model bundle here");
        opt_bind(cmd, train_cf, "clients", train.clients, "number of simulated clients");
        opt_bind(cmd, train_cf, "skew", train.skew, "client volume skew in [0,1]");
        opt_bind(cmd, train_cf, "rounds", train.rounds, "federated rounds");
        opt_bind(cmd, train_cf, "local-epochs", train.local_epochs, "epochs per client round");
        opt_bind(cmd, train_cf, "aggregator", train.aggregator, "FA | WFA");
        cmd->callback([&] {
            train_cf.apply();
            cmd_train(train);
        });
    }

    EvalOpts eval;
    ConfigFile eval_cf;
    {
        CLI::App* cmd =
            app.add_subcommand("eval", "evaluate a saved model bundle on a labeled dataset");
        eval_cf.add_flag_to(cmd);
        add_data_opts(cmd, eval_cf, eval.data);
        CLI::Option* m = cmd->add_option("--model", eval.model, "model bundle path");
        m->required();
        eval_cf.bind("model", m, eval.model);
        opt_bind(cmd, eval_cf, "threshold", eval.threshold, "trace verdict threshold");
        cmd->callback([&] {
            eval_cf.apply();
            cmd_eval(eval);
        });
    }

    PredictOpts predict;
    ConfigFile predict_cf;
    {
        CLI::App* cmd = app.add_subcommand(
            "predict", "score trace files with a saved model and emit verdicts/alerts");
        predict_cf.add_flag_to(cmd);
        CLI::Option* m = cmd->add_option("--model", predict.model, "model bundle path");
        m->required();
        predict_cf.bind("model", m, predict.model);
        opt_bind(cmd, predict_cf, "threshold", predict.threshold, "alert threshold");
        opt_bind(cmd, predict_cf, "alert-log", predict.alert_log,
                 "append alert JSON lines to this file");
        cmd->add_option("--fixed-clock", predict.fixed_clock)->group("");
        cmd->add_option("files", predict.files, "trace files to score")->required();
        cmd->callback([&] {
            predict_cf.apply();
            cmd_predict(predict);
        });
    }

    SweepOpts sweep;
    ConfigFile sweep_cf;
    {
        CLI::App* cmd = app.add_subcommand(
            "sweep", "repeat the centralized run over several window lengths; CSV to stdout");
        sweep_cf.add_flag_to(cmd);
        add_data_opts(cmd, sweep_cf, sweep.data);
        add_pipeline_opts(cmd, sweep_cf, sweep.pipe);
        opt_bind(cmd, sweep_cf, "lengths", sweep.lengths, "window lengths, comma-separated");
        cmd->callback([&] {
            sweep_cf.apply();
            cmd_sweep(sweep);
        });
    }

    FedCompareOpts fedcmp;
    ConfigFile fedcmp_cf;
    {
        CLI::App* cmd = app.add_subcommand(
            "fedcompare", "run FA and WFA across seeds on shared shards; CSV to stdout");
        fedcmp_cf.add_flag_to(cmd);
        add_data_opts(cmd, fedcmp_cf, fedcmp.data);
        add_pipeline_opts(cmd, fedcmp_cf, fedcmp.pipe);
        opt_bind(cmd, fedcmp_cf, "clients", fedcmp.clients, "number of simulated clients");
        opt_bind(cmd, fedcmp_cf, "skew", fedcmp.skew, "client volume skew in [0,1]");
        opt_bind(cmd, fedcmp_cf, "rounds", fedcmp.rounds, "federated rounds");
        opt_bind(cmd, fedcmp_cf, "local-epochs", fedcmp.local_epochs, "epochs per client round");
        opt_bind(cmd, fedcmp_cf, "seeds", fedcmp.seeds, "number of seeds (base = --seed)");
        cmd->callback([&] {
            fedcmp_cf.apply();
            cmd_fedcompare(fedcmp);
        });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n\n";
        const auto subs = app.get_subcommands();
        std::cerr << (subs.empty() ? app.help() : subs.front()->help());
        return 1;
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    try {
        return run_cli(argc, argv);
    } catch (const fedhids::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return fedhids::exit_code(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 3;
    }
}
