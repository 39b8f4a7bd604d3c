#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "fedhids/dataset.hpp"
#include "fedhids/error.hpp"
#include "fedhids/format.hpp"
#include "fedhids/matrix.hpp"

namespace fedhids {

enum class Representation { Trivial, Count, Tfidf };

inline std::string representation_name(Representation r) {
    switch (r) {
        case Representation::Trivial: return "trivial";
        case Representation::Count: return "count";
        case Representation::Tfidf: return "tfidf";
    }
    return "?";
}

inline Representation representation_from_name(const std::string& name) {
    if (name == "trivial") return Representation::Trivial;
    if (name == "count") return Representation::Count;
    if (name == "tfidf") return Representation::Tfidf;
    throw InvalidConfig("unknown representation: " + name);
}

// Fixed-length view into a trace; the classification unit.
struct Window {
    std::size_t trace_index = 0;
    std::size_t start = 0;
    std::vector<int> syscalls; // exactly L entries
    int label = 0;
};

// Distinct training-time syscall IDs, columns assigned in ascending ID order.
struct Vocabulary {
    std::vector<int> ids; // ids[c] is the syscall mapped to column c
    std::unordered_map<int, int> id_to_column;

    int size() const { return static_cast<int>(ids.size()); }

    // -1 when the ID is out of vocabulary
    int column_of(int syscall_id) const {
        auto it = id_to_column.find(syscall_id);
        return it == id_to_column.end() ? -1 : it->second;
    }

    static Vocabulary from_ids(std::vector<int> sorted_ids) {
        Vocabulary v;
        v.ids = std::move(sorted_ids);
        for (std::size_t c = 0; c < v.ids.size(); ++c)
            v.id_to_column[v.ids[c]] = static_cast<int>(c);
        return v;
    }
};

// Smoothed inverse document frequencies over training windows:
//   idf[t] = ln((1 + N) / (1 + df[t])) + 1
struct IdfModel {
    std::vector<double> idf;
    std::vector<std::size_t> df;
    std::size_t n_docs = 0;
};

// Dense feature rows with their window labels and originating trace indices.
struct FeatureMatrix {
    Matrix values;
    std::vector<int> labels;
    std::vector<std::size_t> trace_of_row;

    std::size_t rows() const { return values.rows(); }
    std::size_t cols() const { return values.cols(); }
};

// ---------------------------------------------------------------------------
// Windowing
// ---------------------------------------------------------------------------

// Windows at offsets 0, stride, 2*stride, ... while offset + L fits; a trace
// shorter than L yields no windows.
inline std::vector<Window> window_trace(const Trace& trace, int window_len, int stride,
                                        std::size_t trace_index = 0) {
    if (window_len < 1) throw InvalidConfig("window length must be >= 1");
    if (stride < 1) throw InvalidConfig("stride must be >= 1");

    std::vector<Window> windows;
    const std::size_t len = trace.syscalls.size();
    const auto L = static_cast<std::size_t>(window_len);
    if (len < L) return windows;

    for (std::size_t start = 0; start + L <= len; start += static_cast<std::size_t>(stride)) {
        Window w;
        w.trace_index = trace_index;
        w.start = start;
        w.syscalls.assign(trace.syscalls.begin() + static_cast<std::ptrdiff_t>(start),
                          trace.syscalls.begin() + static_cast<std::ptrdiff_t>(start + L));
        w.label = label_to_int(trace.label);
        windows.push_back(std::move(w));
    }
    return windows;
}

struct WindowSet {
    std::vector<Window> windows;       // ordered by (trace index, offset)
    std::size_t discarded_traces = 0;  // traces shorter than L
};

// Windows every selected trace, in ascending dataset-index order regardless of
// the order of `indices`. The canonical row order makes the assembled feature
// matrix independent of how the index set was produced.
inline WindowSet window_dataset(const Dataset& ds, const std::vector<std::size_t>& indices,
                                int window_len, int stride) {
    std::vector<std::size_t> sorted = indices;
    std::sort(sorted.begin(), sorted.end());
    WindowSet out;
    for (std::size_t idx : sorted) {
        auto windows = window_trace(ds.traces[idx], window_len, stride, idx);
        if (windows.empty()) {
            ++out.discarded_traces;
            continue;
        }
        for (auto& w : windows) out.windows.push_back(std::move(w));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Representations
// ---------------------------------------------------------------------------

inline Vocabulary build_vocabulary(const std::vector<Window>& train_windows) {
    if (train_windows.empty()) throw EmptyInput("cannot build a vocabulary from zero windows");
    std::vector<int> ids;
    for (const auto& w : train_windows)
        for (int s : w.syscalls) ids.push_back(s);
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    return Vocabulary::from_ids(std::move(ids));
}

/// (i) trivial: the raw ID sequence scaled into [0,1] by (vocab_ceiling - 1).
// IDs at or above the ceiling (possible on unseen predict-time traces) clamp
// to 1 so the range invariant holds.
inline std::vector<double> rep_trivial(std::span<const int> window_syscalls, int vocab_ceiling) {
    if (vocab_ceiling <= 1) throw InvalidConfig("vocab_ceiling must exceed 1");
    std::vector<double> out(window_syscalls.size());
    const double denom = static_cast<double>(vocab_ceiling) - 1.0;
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = std::min(static_cast<double>(window_syscalls[i]) / denom, 1.0);
    return out;
}

// (ii) vector space: raw occurrence counts per vocabulary column; IDs outside
// the vocabulary are dropped.
inline std::vector<double> rep_count(std::span<const int> window_syscalls, const Vocabulary& vocab) {
    std::vector<double> out(static_cast<std::size_t>(vocab.size()), 0.0);
    for (int s : window_syscalls) {
        const int c = vocab.column_of(s);
        if (c >= 0) out[static_cast<std::size_t>(c)] += 1.0;
    }
    return out;
}

inline IdfModel fit_idf(const Matrix& train_counts) {
    if (train_counts.rows() == 0) throw EmptyInput("cannot fit idf on an empty count matrix");
    IdfModel model;
    model.n_docs = train_counts.rows();
    model.df.assign(train_counts.cols(), 0);
    for (std::size_t r = 0; r < train_counts.rows(); ++r)
        for (std::size_t c = 0; c < train_counts.cols(); ++c)
            if (train_counts(r, c) > 0.0) ++model.df[c];

    model.idf.resize(train_counts.cols());
    const auto n = static_cast<double>(model.n_docs);
    for (std::size_t c = 0; c < model.df.size(); ++c)
        model.idf[c] = std::log((1.0 + n) / (1.0 + static_cast<double>(model.df[c]))) + 1.0;
    return model;
}

// (iii) TF-IDF: counts reweighted by idf, then the row is L2-normalized
// (an all-zero row stays zero).
inline std::vector<double> transform_tfidf(std::span<const double> count_vector,
                                           const IdfModel& model) {
    if (count_vector.size() != model.idf.size())
        throw DimensionMismatch("count vector length does not match idf length");
    std::vector<double> out(count_vector.size());
    double norm_sq = 0.0;
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = count_vector[i] * model.idf[i];
        norm_sq += out[i] * out[i];
    }
    if (norm_sq > 0.0) {
        const double inv = 1.0 / std::sqrt(norm_sq);
        for (double& v : out) v *= inv;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Fitted feature space + matrix assembly
// ---------------------------------------------------------------------------

// Everything needed to featurize unseen traces; fitted on training data only.
struct FeatureSpace {
    Representation rep = Representation::Tfidf;
    int window_len = 30;
    int stride = 10;
    int vocab_ceiling = 0;
    Vocabulary vocab;             // empty for the trivial representation
    std::optional<IdfModel> idf;  // present only for tfidf
};

inline FeatureSpace fit_feature_space(const Dataset& ds,
                                      const std::vector<std::size_t>& train_indices,
                                      Representation rep, int window_len, int stride) {
    FeatureSpace space;
    space.rep = rep;
    space.window_len = window_len;
    space.stride = stride;
    space.vocab_ceiling = ds.vocab_ceiling;

    if (rep == Representation::Trivial) return space;

    const WindowSet train = window_dataset(ds, train_indices, window_len, stride);
    space.vocab = build_vocabulary(train.windows);
    if (rep == Representation::Tfidf) {
        Matrix counts(train.windows.size(), static_cast<std::size_t>(space.vocab.size()));
        for (std::size_t r = 0; r < train.windows.size(); ++r) {
            const auto row = rep_count(train.windows[r].syscalls, space.vocab);
            for (std::size_t c = 0; c < row.size(); ++c) counts(r, c) = row[c];
        }
        space.idf = fit_idf(counts);
    }
    return space;
}

// Assembles the dense feature matrix for the selected traces, rows ordered by
// (trace index, window offset).
inline FeatureMatrix featurize(const Dataset& ds, const std::vector<std::size_t>& indices,
                               const FeatureSpace& space) {
    if (space.rep == Representation::Tfidf && !space.idf)
        throw InvalidConfig("tfidf featurization requires a fitted idf model");

    const WindowSet set = window_dataset(ds, indices, space.window_len, space.stride);
    const std::size_t cols = space.rep == Representation::Trivial
                                 ? static_cast<std::size_t>(space.window_len)
                                 : static_cast<std::size_t>(space.vocab.size());

    FeatureMatrix fm;
    fm.values = Matrix(set.windows.size(), cols);
    fm.labels.reserve(set.windows.size());
    fm.trace_of_row.reserve(set.windows.size());

    for (std::size_t r = 0; r < set.windows.size(); ++r) {
        const Window& w = set.windows[r];
        std::vector<double> row;
        switch (space.rep) {
            case Representation::Trivial:
                row = rep_trivial(w.syscalls, space.vocab_ceiling);
                break;
            case Representation::Count:
                row = rep_count(w.syscalls, space.vocab);
                break;
            case Representation::Tfidf:
                row = transform_tfidf(rep_count(w.syscalls, space.vocab), *space.idf);
                break;
        }
        for (std::size_t c = 0; c < cols; ++c) fm.values(r, c) = row[c];
        fm.labels.push_back(w.label);
        fm.trace_of_row.push_back(w.trace_index);
    }

    if (!fm.values.all_finite())
        throw Error(ErrorKind::Internal, "feature matrix contains non-finite values");
    return fm;
}

// Debug export: CSV with header label,trace,c0..c{k-1}.
inline void write_feature_csv(const FeatureMatrix& fm, std::ostream& out) {
    out << "label,trace";
    for (std::size_t c = 0; c < fm.cols(); ++c) out << ",c" << c;
    out << '\n';
    for (std::size_t r = 0; r < fm.rows(); ++r) {
        out << fm.labels[r] << ',' << fm.trace_of_row[r];
        for (std::size_t c = 0; c < fm.cols(); ++c) out << ',' << format_double(fm.values(r, c));
        out << '\n';
    }
}

} // namespace fedhids
