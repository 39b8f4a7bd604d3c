#pragma once

#include <algorithm>
#include <cstddef>
#include <map>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "fedhids/dataset.hpp"
#include "fedhids/error.hpp"
#include "fedhids/features.hpp"
#include "fedhids/matrix.hpp"
#include "fedhids/mlp.hpp"

namespace fedhids {

// Confusion matrix with the derived rates; the positive class is attack (1).
// A ratio whose denominator is zero is reported as 0 and named in
// degenerate_flags.
struct MetricsReport {
    std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
    double accuracy = 0, precision = 0, recall = 0, f1 = 0, fpr = 0, fnr = 0;
    std::vector<std::string> degenerate_flags;
};

struct Confusion {
    std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
};

inline Confusion confusion_matrix(const std::vector<int>& pred, const std::vector<int>& truth) {
    if (pred.size() != truth.size())
        throw LengthMismatch("confusion_matrix: prediction and truth lengths differ");
    Confusion c;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        if (pred[i] != 0 && pred[i] != 1) throw InvalidConfig("predictions must be 0 or 1");
        if (truth[i] != 0 && truth[i] != 1) throw InvalidConfig("labels must be 0 or 1");
        if (truth[i] == 1)
            pred[i] == 1 ? ++c.tp : ++c.fn;
        else
            pred[i] == 1 ? ++c.fp : ++c.tn;
    }
    return c;
}

inline MetricsReport compute_metrics(std::size_t tp, std::size_t fp, std::size_t tn, std::size_t fn) {
    MetricsReport m;
    m.tp = tp;
    m.fp = fp;
    m.tn = tn;
    m.fn = fn;
    const auto ratio = [&m](std::size_t num, std::size_t den, const char* name) {
        if (den == 0) {
            m.degenerate_flags.emplace_back(name);
            return 0.0;
        }
        return static_cast<double>(num) / static_cast<double>(den);
    };
    m.accuracy = ratio(tp + tn, tp + tn + fp + fn, "accuracy");
    m.precision = ratio(tp, tp + fp, "precision");
    m.recall = ratio(tp, tp + fn, "recall");
    m.fpr = ratio(fp, fp + tn, "fpr");
    m.fnr = ratio(fn, fn + tp, "fnr");
    if (m.precision + m.recall > 0.0) {
        m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
    } else {
        m.degenerate_flags.emplace_back("f1");
        m.f1 = 0.0;
    }
    return m;
}

inline MetricsReport compute_metrics(const Confusion& c) {
    return compute_metrics(c.tp, c.fp, c.tn, c.fn);
}

// JSON form with the fixed key set.
inline nlohmann::ordered_json metrics_to_json(const MetricsReport& m) {
    nlohmann::ordered_json j;
    j["tp"] = m.tp;
    j["fp"] = m.fp;
    j["tn"] = m.tn;
    j["fn"] = m.fn;
    j["accuracy"] = m.accuracy;
    j["precision"] = m.precision;
    j["recall"] = m.recall;
    j["f1"] = m.f1;
    j["fpr"] = m.fpr;
    j["fnr"] = m.fnr;
    j["degenerate_flags"] = m.degenerate_flags;
    return j;
}

// Trace-level decision: the score is the arithmetic mean of the trace's
// window probabilities, and the label is attack iff score >= threshold.
struct Verdict {
    std::string trace_id;
    double score = 0.0;
    int label = 0;
    std::size_t n_windows = 0;
};

inline Verdict classify_trace(const std::string& trace_id, std::span<const double> window_probs,
                              double threshold = 0.5) {
    if (window_probs.empty())
        throw NoWindows("trace " + trace_id + " produced no windows");
    Verdict v;
    v.trace_id = trace_id;
    v.n_windows = window_probs.size();
    v.score = std::accumulate(window_probs.begin(), window_probs.end(), 0.0) /
              static_cast<double>(window_probs.size());
    v.label = v.score >= threshold ? 1 : 0;
    return v;
}

// k-nearest-neighbours with Euclidean distance and majority vote. Vote ties
// go to benign; equal distances prefer the lower training row index. Kept as
// the training-free baseline for sanity-checking the learned pipeline.
inline std::vector<int> knn_classify(const Matrix& train, const std::vector<int>& train_labels,
                                     const Matrix& queries, int k = 5) {
    if (k < 1 || static_cast<std::size_t>(k) > train.rows())
        throw InvalidConfig("knn: k must lie in [1, n_train]");
    if (train_labels.size() != train.rows())
        throw LengthMismatch("knn: training labels and rows differ in length");
    if (queries.cols() != train.cols())
        throw DimensionMismatch("knn: query width does not match training width");

    std::vector<int> out(queries.rows());
    std::vector<std::pair<double, std::size_t>> dist(train.rows());
    for (std::size_t q = 0; q < queries.rows(); ++q) {
        for (std::size_t r = 0; r < train.rows(); ++r) {
            double d2 = 0.0;
            for (std::size_t c = 0; c < train.cols(); ++c) {
                const double diff = queries(q, c) - train(r, c);
                d2 += diff * diff;
            }
            dist[r] = {d2, r};
        }
        std::partial_sort(dist.begin(), dist.begin() + k, dist.end());
        int votes_attack = 0;
        for (int i = 0; i < k; ++i) votes_attack += train_labels[dist[static_cast<std::size_t>(i)].second];
        out[q] = votes_attack * 2 > k ? 1 : 0;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Model evaluation over a featurized set (window level and trace level)
// ---------------------------------------------------------------------------

struct EvalOutcome {
    MetricsReport window_metrics;
    MetricsReport trace_metrics;
    std::vector<Verdict> verdicts; // one per trace with >= 1 window
};

// Groups window probabilities by originating trace and scores both levels.
// Rows of `features` must be grouped by trace (featurize guarantees this).
inline EvalOutcome evaluate_probs(const std::vector<double>& probs, const FeatureMatrix& features,
                                  const Dataset& ds, double threshold = 0.5) {
    if (probs.size() != features.rows())
        throw LengthMismatch("evaluate_probs: probabilities and rows differ in length");

    std::vector<int> window_pred(probs.size());
    for (std::size_t i = 0; i < probs.size(); ++i) window_pred[i] = probs[i] >= threshold ? 1 : 0;

    EvalOutcome out;
    out.window_metrics = compute_metrics(confusion_matrix(window_pred, features.labels));

    std::vector<int> trace_pred, trace_truth;
    std::size_t begin = 0;
    while (begin < probs.size()) {
        std::size_t end = begin;
        while (end < probs.size() && features.trace_of_row[end] == features.trace_of_row[begin]) ++end;
        const std::size_t trace_idx = features.trace_of_row[begin];
        const Verdict v = classify_trace(ds.traces[trace_idx].id,
                                         std::span(probs).subspan(begin, end - begin), threshold);
        trace_pred.push_back(v.label);
        trace_truth.push_back(features.labels[begin]);
        out.verdicts.push_back(v);
        begin = end;
    }
    out.trace_metrics = compute_metrics(confusion_matrix(trace_pred, trace_truth));
    return out;
}

inline EvalOutcome evaluate_model(const MlpParams& model, const FeatureMatrix& features,
                                  const Dataset& ds, double threshold = 0.5) {
    return evaluate_probs(predict_proba(model, features.values), features, ds, threshold);
}

} // namespace fedhids
