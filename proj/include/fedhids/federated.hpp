#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fedhids/dataset.hpp"
#include "fedhids/error.hpp"
#include "fedhids/features.hpp"
#include "fedhids/matrix.hpp"
#include "fedhids/metrics.hpp"
#include "fedhids/mlp.hpp"

namespace fedhids {

enum class Aggregator { FA, WFA };

inline std::string aggregator_name(Aggregator a) { return a == Aggregator::FA ? "FA" : "WFA"; }

inline Aggregator aggregator_from_name(const std::string& name) {
    if (name == "FA" || name == "fa") return Aggregator::FA;
    if (name == "WFA" || name == "wfa") return Aggregator::WFA;
    throw InvalidConfig("unknown aggregator: " + name);
}

struct FedConfig {
    int n_rounds = 10;
    int local_epochs = 5;
    Aggregator aggregator = Aggregator::FA;
    std::uint64_t seed = 0; // global init and every local stream derive from this
    TrainConfig train;      // hyperparameters for local updates
};

struct RoundRecord {
    int round = 0;
    std::vector<double> per_client_loss;  // final local epoch loss, client order
    MetricsReport global_metrics;         // trace-level, held-out test set
};

// One client's featurized shard. Only MlpParams and the sample count ever
// leave this struct through the aggregation interface; feature rows and
// labels stay on the client by construction.
struct ClientData {
    Matrix x;
    std::vector<int> y;
};

// Local training pass: copies the global model and trains it for
// cfg.local_epochs on the shard. The shuffle streams derive from
// (cfg.seed, round, client_id) via the TrainConfig stream fields, and the
// momentum buffers start from zero (they are never exchanged).
inline std::pair<MlpParams, std::size_t> local_update(const MlpParams& global,
                                                      const ClientData& shard,
                                                      const FedConfig& cfg, int round,
                                                      int client_id,
                                                      std::vector<double>* loss_trace = nullptr) {
    if (shard.x.rows() == 0) throw EmptyShard("client " + std::to_string(client_id) + " has no data");
    if (cfg.local_epochs == 0) return {global, shard.x.rows()};

    TrainConfig local = cfg.train;
    local.seed = cfg.seed;
    local.epochs = cfg.local_epochs;
    local.epoch_offset = static_cast<std::int64_t>(round) * cfg.local_epochs;
    local.stream_tag = static_cast<std::uint64_t>(client_id);
    MlpParams updated = train(global, shard.x, shard.y, local, loss_trace);
    return {std::move(updated), shard.x.rows()};
}

namespace detail {

inline void check_same_shapes(std::span<const MlpParams> clients) {
    if (clients.empty()) throw EmptyInput("aggregation needs at least one client");
    for (std::size_t i = 1; i < clients.size(); ++i)
        if (!clients[0].same_shape(clients[i]))
            throw ShapeMismatch("client parameter shapes differ");
}

// Convex combination of client parameters, anchored at client 0 so that
// identical inputs reproduce themselves exactly:
//   out = w_0 + sum_{k>=1} alpha_k (w_k - w_0)
inline MlpParams combine(std::span<const MlpParams> clients, std::span<const double> alphas) {
    MlpParams out = clients[0];
    for (std::size_t l = 0; l < out.n_layers(); ++l) {
        auto& w = out.weights[l].data();
        auto& b = out.biases[l];
        for (std::size_t k = 1; k < clients.size(); ++k) {
            const double a = alphas[k];
            const auto& wk = clients[k].weights[l].data();
            const auto& bk = clients[k].biases[l];
            for (std::size_t i = 0; i < w.size(); ++i)
                w[i] += a * (wk[i] - clients[0].weights[l].data()[i]);
            for (std::size_t i = 0; i < b.size(); ++i)
                b[i] += a * (bk[i] - clients[0].biases[l][i]);
        }
    }
    return out;
}

} // namespace detail

// Federated Averaging: unweighted elementwise mean of client parameters.
inline MlpParams aggregate_fa(std::span<const MlpParams> clients) {
    detail::check_same_shapes(clients);
    std::vector<double> alphas(clients.size(), 1.0 / static_cast<double>(clients.size()));
    return detail::combine(clients, alphas);
}

// Weighted Federated Averaging: elementwise sum of (n_k / sum n) * w_k.
inline MlpParams aggregate_wfa(std::span<const MlpParams> clients,
                               std::span<const std::size_t> counts) {
    detail::check_same_shapes(clients);
    if (counts.size() != clients.size())
        throw ShapeMismatch("client and count list lengths differ");
    double total = 0.0;
    for (std::size_t n : counts) {
        if (n == 0) throw InvalidConfig("aggregation weights must be positive");
        total += static_cast<double>(n);
    }
    std::vector<double> alphas(counts.size());
    for (std::size_t k = 0; k < counts.size(); ++k)
        alphas[k] = static_cast<double>(counts[k]) / total;
    return detail::combine(clients, alphas);
}

struct FederatedRun {
    MlpParams global;
    std::vector<RoundRecord> rounds;
};

// Simulated federated training: per round, every client trains locally from
// the current global parameters, the aggregator merges the results (reducing
// in client-id order), and the merged model is scored on the held-out test
// features. Clients are visited in id order; determinism does not depend on
// any execution interleaving because each client's streams derive from
// (seed, round, client_id) alone.
inline FederatedRun run_federated(const std::vector<ClientData>& clients,
                                  const FeatureMatrix& test_features, const Dataset& ds,
                                  const FedConfig& cfg, const std::vector<int>& dims,
                                  double threshold = 0.5) {
    if (clients.empty()) throw EmptyInput("run_federated needs at least one client");
    if (cfg.n_rounds < 0) throw InvalidConfig("n_rounds must be >= 0");
    if (cfg.local_epochs < 1) throw InvalidConfig("local_epochs must be >= 1");

    FederatedRun run;
    run.global = init_mlp(dims, cfg.seed);

    std::vector<MlpParams> updates;
    std::vector<std::size_t> counts;
    for (int round = 0; round < cfg.n_rounds; ++round) {
        updates.clear();
        counts.clear();
        RoundRecord record;
        record.round = round;
        for (std::size_t c = 0; c < clients.size(); ++c) {
            std::vector<double> trace;
            auto [params, n] =
                local_update(run.global, clients[c], cfg, round, static_cast<int>(c), &trace);
            updates.push_back(std::move(params));
            counts.push_back(n);
            record.per_client_loss.push_back(trace.empty() ? 0.0 : trace.back());
        }
        run.global = cfg.aggregator == Aggregator::FA ? aggregate_fa(updates)
                                                      : aggregate_wfa(updates, counts);
        record.global_metrics =
            evaluate_model(run.global, test_features, ds, threshold).trace_metrics;
        run.rounds.push_back(std::move(record));
    }
    return run;
}

// ---------------------------------------------------------------------------
// FA vs WFA comparison
// ---------------------------------------------------------------------------

struct FedCompareRow {
    std::string aggregator;
    std::uint64_t seed = 0;
    int round = 0;
    double accuracy = 0, f1 = 0, fpr = 0, fnr = 0;
};

struct FedCompareResult {
    std::vector<FedCompareRow> rows;              // every round of every run
    std::vector<double> fa_final_accuracy;        // per seed, last round
    std::vector<double> wfa_final_accuracy;
    double median_fa_accuracy = 0;
    double median_wfa_accuracy = 0;
};

inline double median(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const std::size_t mid = v.size() / 2;
    return v.size() % 2 == 1 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
}

// Runs both aggregators over n_seeds seeds on the same shards; seeds are
// base_seed, base_seed + 1, ... so FA and WFA are compared pairwise per seed.
inline FedCompareResult compare_fa_wfa(const std::vector<ClientData>& clients,
                                       const FeatureMatrix& test_features, const Dataset& ds,
                                       FedConfig cfg, const std::vector<int>& dims, int n_seeds,
                                       double threshold = 0.5) {
    if (n_seeds < 1) throw InvalidConfig("n_seeds must be >= 1");
    FedCompareResult result;
    const std::uint64_t base_seed = cfg.seed;
    for (int i = 0; i < n_seeds; ++i) {
        cfg.seed = base_seed + static_cast<std::uint64_t>(i);
        for (Aggregator agg : {Aggregator::FA, Aggregator::WFA}) {
            cfg.aggregator = agg;
            const FederatedRun run = run_federated(clients, test_features, ds, cfg, dims, threshold);
            for (const auto& rec : run.rounds)
                result.rows.push_back({aggregator_name(agg), cfg.seed, rec.round,
                                       rec.global_metrics.accuracy, rec.global_metrics.f1,
                                       rec.global_metrics.fpr, rec.global_metrics.fnr});
            const double final_acc =
                run.rounds.empty() ? 0.0 : run.rounds.back().global_metrics.accuracy;
            (agg == Aggregator::FA ? result.fa_final_accuracy : result.wfa_final_accuracy)
                .push_back(final_acc);
        }
    }
    result.median_fa_accuracy = median(result.fa_final_accuracy);
    result.median_wfa_accuracy = median(result.wfa_final_accuracy);
    return result;
}

} // namespace fedhids
