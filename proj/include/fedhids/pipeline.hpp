#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "fedhids/dataset.hpp"
#include "fedhids/error.hpp"
#include "fedhids/features.hpp"
#include "fedhids/federated.hpp"
#include "fedhids/metrics.hpp"
#include "fedhids/mlp.hpp"
#include "fedhids/pca.hpp"
#include "fedhids/rng.hpp"

namespace fedhids {

enum class PcaMode { Auto, On, Off };

// Auto enables projection for the sparse bag-style representations and skips
// it for the already-low-dimensional scaled-id representation.
inline bool pca_enabled(PcaMode mode, Representation rep) {
    switch (mode) {
        case PcaMode::On: return true;
        case PcaMode::Off: return false;
        case PcaMode::Auto: return rep != Representation::Trivial;
    }
    return false;
}

struct PipelineConfig {
    Representation rep = Representation::Tfidf;
    int window_len = 30;
    int stride = 10;
    PcaMode pca_mode = PcaMode::Auto;
    PcaOptions pca;
    double test_fraction = 0.25;
    bool balance_train = true;
    bool balance_test = true;
    double threshold = 0.5;
    std::vector<int> hidden = {64, 32};
    TrainConfig train;
    std::uint64_t seed = 0; // all pipeline randomness derives from this
};

inline void validate_pipeline_config(const PipelineConfig& cfg) {
    if (cfg.window_len < 1) throw InvalidConfig("window_len must be >= 1");
    if (cfg.stride < 1) throw InvalidConfig("stride must be >= 1");
    if (!(cfg.test_fraction > 0.0 && cfg.test_fraction < 1.0))
        throw InvalidConfig("test_fraction must be in (0, 1)");
    if (!(cfg.threshold >= 0.0 && cfg.threshold <= 1.0))
        throw InvalidConfig("threshold must be in [0, 1]");
    for (int h : cfg.hidden)
        if (h < 1) throw InvalidConfig("hidden layer widths must be >= 1");
    validate_train_config(cfg.train);
}

// Fixed tags for deriving per-operation seed streams from the pipeline seed.
namespace seed_tag {
inline constexpr std::uint64_t kSplit = 10;
inline constexpr std::uint64_t kBalanceTrain = 11;
inline constexpr std::uint64_t kBalanceTest = 12;
inline constexpr std::uint64_t kPartition = 13;
} // namespace seed_tag

struct SplitIndices {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
};

inline SplitIndices make_splits(const Dataset& ds, const PipelineConfig& cfg) {
    auto [train_idx, test_idx] =
        split_train_test(ds, cfg.test_fraction, derive_seed(cfg.seed, seed_tag::kSplit));
    if (cfg.balance_train)
        train_idx = balance_classes(train_idx, ds, derive_seed(cfg.seed, seed_tag::kBalanceTrain));
    if (cfg.balance_test)
        test_idx = balance_classes(test_idx, ds, derive_seed(cfg.seed, seed_tag::kBalanceTest));
    return {std::move(train_idx), std::move(test_idx)};
}

// Feature space plus optional projection, both fitted on training data only.
struct FittedPipeline {
    FeatureSpace space;
    std::optional<PcaModel> pca;

    std::size_t output_dim() const {
        if (pca) return pca->n_components();
        return space.rep == Representation::Trivial ? static_cast<std::size_t>(space.window_len)
                                                    : static_cast<std::size_t>(space.vocab.size());
    }
};

inline FittedPipeline fit_pipeline(const Dataset& ds, const std::vector<std::size_t>& train_idx,
                                   const PipelineConfig& cfg) {
    validate_pipeline_config(cfg);
    FittedPipeline fitted;
    fitted.space = fit_feature_space(ds, train_idx, cfg.rep, cfg.window_len, cfg.stride);
    if (pca_enabled(cfg.pca_mode, cfg.rep)) {
        const FeatureMatrix train = featurize(ds, train_idx, fitted.space);
        if (train.rows() < 2) throw TooFewSamples("projection needs at least two training windows");
        PcaModel model = fit_pca(train.values, cfg.pca);
        if (model.degenerate) throw DegenerateInput("training features have zero variance");
        fitted.pca = std::move(model);
    }
    return fitted;
}

inline FeatureMatrix transform_pipeline(const FittedPipeline& fitted, const Dataset& ds,
                                        const std::vector<std::size_t>& indices) {
    FeatureMatrix fm = featurize(ds, indices, fitted.space);
    if (fitted.pca) fm.values = transform_pca(*fitted.pca, fm.values);
    return fm;
}

inline std::vector<int> mlp_dims(const FittedPipeline& fitted, const PipelineConfig& cfg) {
    std::vector<int> dims;
    dims.push_back(static_cast<int>(fitted.output_dim()));
    dims.insert(dims.end(), cfg.hidden.begin(), cfg.hidden.end());
    dims.push_back(1);
    return dims;
}

// ---------------------------------------------------------------------------
// Centralized training
// ---------------------------------------------------------------------------

struct CentralRunResult {
    SplitIndices splits;
    FittedPipeline fitted;
    MlpParams model;
    std::vector<double> loss_trace; // mean training loss per epoch
    EvalOutcome eval;               // held-out test set
};

// Split, fit features/projection on the training side, train the classifier,
// and score the held-out test traces.
inline CentralRunResult run_central(const Dataset& ds, const PipelineConfig& cfg) {
    validate_pipeline_config(cfg);
    CentralRunResult result;
    result.splits = make_splits(ds, cfg);
    result.fitted = fit_pipeline(ds, result.splits.train, cfg);

    const FeatureMatrix train_fm = transform_pipeline(result.fitted, ds, result.splits.train);
    if (train_fm.rows() == 0) throw NoWindows("no training trace is at least window_len long");

    TrainConfig tc = cfg.train;
    tc.seed = cfg.seed;
    const MlpParams init = init_mlp(mlp_dims(result.fitted, cfg), cfg.seed);
    result.model = train(init, train_fm.values, train_fm.labels, tc, &result.loss_trace);

    const FeatureMatrix test_fm = transform_pipeline(result.fitted, ds, result.splits.test);
    if (test_fm.rows() == 0) throw NoWindows("no test trace is at least window_len long");
    result.eval = evaluate_model(result.model, test_fm, ds, cfg.threshold);
    return result;
}

// ---------------------------------------------------------------------------
// Window-length sweep
// ---------------------------------------------------------------------------

struct SweepRow {
    int window_len = 0;
    MetricsReport window_metrics;
    MetricsReport trace_metrics;
};

// Repeats the centralized run for each window length with every other
// setting (and every seed stream) held fixed. Duplicate lengths collapse to
// their first occurrence.
inline std::vector<SweepRow> sweep_window_length(const Dataset& ds, PipelineConfig cfg,
                                                 const std::vector<int>& lengths) {
    if (lengths.empty()) throw InvalidConfig("sweep needs at least one window length");
    std::vector<int> unique_lengths;
    for (int len : lengths)
        if (std::find(unique_lengths.begin(), unique_lengths.end(), len) == unique_lengths.end())
            unique_lengths.push_back(len);

    std::vector<SweepRow> rows;
    for (int len : unique_lengths) {
        cfg.window_len = len;
        const CentralRunResult run = run_central(ds, cfg);
        rows.push_back({len, run.eval.window_metrics, run.eval.trace_metrics});
    }
    return rows;
}

// ---------------------------------------------------------------------------
// Federated experiments
// ---------------------------------------------------------------------------

// Featurizes each client's shard with the shared fitted pipeline. The
// feature space and projection are fitted once on the pooled training
// indices before this is called; clients never refit them.
inline std::vector<ClientData> make_client_data(const FittedPipeline& fitted, const Dataset& ds,
                                                const std::vector<ClientShard>& shards) {
    std::vector<ClientData> clients;
    clients.reserve(shards.size());
    for (const ClientShard& shard : shards) {
        FeatureMatrix fm = transform_pipeline(fitted, ds, shard.trace_indices);
        clients.push_back({std::move(fm.values), std::move(fm.labels)});
    }
    return clients;
}

struct FederatedExperimentConfig {
    int n_clients = 4;
    double skew = 0.0;
    FedConfig fed;
};

struct FederatedExperimentResult {
    SplitIndices splits;
    std::vector<ClientShard> shards;
    FittedPipeline fitted;
    FederatedRun run;
};

inline FederatedExperimentResult run_federated_experiment(const Dataset& ds,
                                                          const PipelineConfig& cfg,
                                                          const FederatedExperimentConfig& fx) {
    validate_pipeline_config(cfg);
    FederatedExperimentResult result;
    result.splits = make_splits(ds, cfg);
    result.shards = partition_clients(result.splits.train, ds, fx.n_clients, fx.skew,
                                      derive_seed(cfg.seed, seed_tag::kPartition));
    result.fitted = fit_pipeline(ds, result.splits.train, cfg);

    const std::vector<ClientData> clients = make_client_data(result.fitted, ds, result.shards);
    const FeatureMatrix test_fm = transform_pipeline(result.fitted, ds, result.splits.test);
    if (test_fm.rows() == 0) throw NoWindows("no test trace is at least window_len long");

    FedConfig fed = fx.fed;
    fed.seed = cfg.seed;
    fed.train = cfg.train;
    fed.train.seed = cfg.seed;
    result.run = run_federated(clients, test_fm, ds, fed, mlp_dims(result.fitted, cfg),
                               cfg.threshold);
    return result;
}

// Shards, features, and the projection are fixed across the comparison; only
// the model-init/shuffle seed varies between runs.
inline FedCompareResult run_fed_compare(const Dataset& ds, const PipelineConfig& cfg,
                                        const FederatedExperimentConfig& fx, int n_seeds) {
    validate_pipeline_config(cfg);
    const SplitIndices splits = make_splits(ds, cfg);
    const std::vector<ClientShard> shards =
        partition_clients(splits.train, ds, fx.n_clients, fx.skew,
                          derive_seed(cfg.seed, seed_tag::kPartition));
    const FittedPipeline fitted = fit_pipeline(ds, splits.train, cfg);

    const std::vector<ClientData> clients = make_client_data(fitted, ds, shards);
    const FeatureMatrix test_fm = transform_pipeline(fitted, ds, splits.test);
    if (test_fm.rows() == 0) throw NoWindows("no test trace is at least window_len long");

    FedConfig fed = fx.fed;
    fed.seed = cfg.seed;
    fed.train = cfg.train;
    fed.train.seed = cfg.seed;
    return compare_fa_wfa(clients, test_fm, ds, fed, mlp_dims(fitted, cfg), n_seeds,
                          cfg.threshold);
}

} // namespace fedhids
