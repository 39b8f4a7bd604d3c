#pragma once

#include <cstdint>
#include <ctime>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "fedhids/dataset.hpp"
#include "fedhids/error.hpp"
#include "fedhids/features.hpp"
#include "fedhids/metrics.hpp"
#include "fedhids/mlp.hpp"
#include "fedhids/pca.hpp"
#include "fedhids/pipeline.hpp"

namespace fedhids {

using ordered_json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Fingerprints
// ---------------------------------------------------------------------------

inline std::uint64_t fnv1a64(const void* data, std::size_t len,
                             std::uint64_t hash = 0xcbf29ce484222325ULL) {
    const auto* bytes = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
        hash ^= bytes[i];
        hash *= 0x100000001b3ULL;
    }
    return hash;
}

inline std::string to_hex16(std::uint64_t v) {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[v & 0xf];
        v >>= 4;
    }
    return out;
}

// Order-sensitive digest of trace ids, labels, and syscall sequences.
inline std::string dataset_fingerprint(const Dataset& ds) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const Trace& t : ds.traces) {
        h = fnv1a64(t.id.data(), t.id.size(), h);
        const unsigned char lbl = t.label == Label::Attack ? 1 : 0;
        h = fnv1a64(&lbl, 1, h);
        if (!t.syscalls.empty())
            h = fnv1a64(t.syscalls.data(), t.syscalls.size() * sizeof(int), h);
    }
    return to_hex16(h);
}

// ---------------------------------------------------------------------------
// Model bundle
// ---------------------------------------------------------------------------

// Everything needed to reproduce predictions: the fitted feature space, the
// optional projection, the classifier parameters, and training metadata.
struct ModelBundle {
    int schema_version = 1;
    Representation rep = Representation::Tfidf;
    int window_len = 30;
    int stride = 10;
    int vocab_ceiling = 0;
    std::vector<int> vocab_ids;              // column c encodes syscall vocab_ids[c]
    std::optional<std::vector<double>> idf;  // present only for tfidf
    std::optional<PcaModel> pca;
    MlpParams mlp;
    std::uint64_t seed = 0;
    ordered_json config_echo = ordered_json::object();
    std::string dataset_fp;
    std::vector<std::string> stages; // pipeline stages that were executed, in order

    std::size_t feature_dim() const {
        return rep == Representation::Trivial ? static_cast<std::size_t>(window_len)
                                              : vocab_ids.size();
    }
};

inline ModelBundle make_bundle(const FittedPipeline& fitted, const MlpParams& model,
                               std::uint64_t seed, ordered_json config_echo,
                               std::string dataset_fp) {
    ModelBundle b;
    b.rep = fitted.space.rep;
    b.window_len = fitted.space.window_len;
    b.stride = fitted.space.stride;
    b.vocab_ceiling = fitted.space.vocab_ceiling;
    b.vocab_ids = fitted.space.vocab.ids;
    if (fitted.space.idf) b.idf = fitted.space.idf->idf;
    b.pca = fitted.pca;
    b.mlp = model;
    b.seed = seed;
    b.config_echo = std::move(config_echo);
    b.dataset_fp = std::move(dataset_fp);
    b.stages.push_back("window");
    b.stages.push_back(representation_name(b.rep));
    if (b.pca) b.stages.push_back("pca");
    b.stages.push_back("mlp");
    return b;
}

inline ordered_json bundle_to_json(const ModelBundle& b) {
    ordered_json j = ordered_json::object();
    j["schema_version"] = b.schema_version;
    j["representation"] = representation_name(b.rep);
    j["window_len"] = b.window_len;
    j["stride"] = b.stride;
    j["vocabulary"] = {{"ceiling", b.vocab_ceiling}, {"ids", b.vocab_ids}};
    j["idf"] = b.idf ? ordered_json(*b.idf) : ordered_json(nullptr);
    if (b.pca) {
        ordered_json p = ordered_json::object();
        p["mean"] = b.pca->mean;
        p["components"] = ordered_json::array();
        for (std::size_t r = 0; r < b.pca->components.rows(); ++r) {
            const auto row = b.pca->components.row(r);
            p["components"].push_back(std::vector<double>(row.begin(), row.end()));
        }
        p["explained_variance"] = b.pca->explained_variance;
        p["explained_variance_ratio"] = b.pca->explained_variance_ratio;
        j["pca"] = std::move(p);
    } else {
        j["pca"] = nullptr;
    }
    ordered_json m = ordered_json::object();
    m["dims"] = b.mlp.dims;
    m["weights"] = ordered_json::array();
    for (const Matrix& w : b.mlp.weights) m["weights"].push_back(w.data());
    m["biases"] = b.mlp.biases;
    j["mlp"] = std::move(m);
    ordered_json meta = ordered_json::object();
    meta["seed"] = b.seed;
    meta["config"] = b.config_echo;
    meta["dataset_fingerprint"] = b.dataset_fp;
    meta["stages"] = b.stages;
    j["metadata"] = std::move(meta);
    return j;
}

// Digest of the canonical serialized form; identifies the model in alerts.
inline std::string bundle_fingerprint(const ModelBundle& b) {
    const std::string text = bundle_to_json(b).dump();
    return to_hex16(fnv1a64(text.data(), text.size()));
}

inline void save_model_bundle(const ModelBundle& b, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out << bundle_to_json(b).dump(2) << "\n";
    if (!out) throw IoError("write failed: " + path);
}

namespace detail {

inline void check_bundle(bool ok, const std::string& invariant) {
    if (!ok) throw CorruptBundle(invariant);
}

template <typename T>
inline T get_field(const ordered_json& j, const std::string& key) {
    check_bundle(j.is_object() && j.contains(key), key + " missing");
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw CorruptBundle(key + " type");
    }
}

} // namespace detail

// Parses and validates a serialized bundle, reporting the first violated
// invariant by name.
inline ModelBundle load_model_bundle(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::stringstream buf;
    buf << in.rdbuf();

    ordered_json j;
    try {
        j = ordered_json::parse(buf.str());
    } catch (const nlohmann::json::exception&) {
        throw CorruptBundle("invalid json");
    }
    detail::check_bundle(j.is_object(), "top-level object");

    const int version = detail::get_field<int>(j, "schema_version");
    if (version != 1)
        throw UnsupportedSchema("schema_version " + std::to_string(version) + " (expected 1)");

    ModelBundle b;
    b.schema_version = version;
    b.rep = representation_from_name(detail::get_field<std::string>(j, "representation"));
    b.window_len = detail::get_field<int>(j, "window_len");
    b.stride = detail::get_field<int>(j, "stride");
    detail::check_bundle(b.window_len >= 1, "window_len range");
    detail::check_bundle(b.stride >= 1, "stride range");

    const ordered_json vocab = detail::get_field<ordered_json>(j, "vocabulary");
    b.vocab_ceiling = detail::get_field<int>(vocab, "ceiling");
    b.vocab_ids = detail::get_field<std::vector<int>>(vocab, "ids");
    detail::check_bundle(b.vocab_ceiling >= 0, "vocabulary ceiling range");
    for (std::size_t i = 0; i < b.vocab_ids.size(); ++i) {
        detail::check_bundle(b.vocab_ids[i] >= 0, "vocabulary ids range");
        if (i > 0) detail::check_bundle(b.vocab_ids[i - 1] < b.vocab_ids[i], "vocabulary ids order");
    }
    if (b.rep == Representation::Trivial)
        detail::check_bundle(b.vocab_ceiling >= 2, "vocabulary ceiling range");

    detail::check_bundle(j.contains("idf"), "idf missing");
    if (b.rep == Representation::Tfidf) {
        detail::check_bundle(!j.at("idf").is_null(), "idf missing for tfidf");
        b.idf = detail::get_field<std::vector<double>>(j, "idf");
        detail::check_bundle(b.idf->size() == b.vocab_ids.size(), "idf length");
    } else {
        detail::check_bundle(j.at("idf").is_null(), "idf must be null");
    }

    detail::check_bundle(j.contains("pca"), "pca missing");
    if (!j.at("pca").is_null()) {
        const ordered_json p = j.at("pca");
        PcaModel model;
        model.mean = detail::get_field<std::vector<double>>(p, "mean");
        detail::check_bundle(model.mean.size() == b.feature_dim(), "pca mean length");
        const auto comp_rows = detail::get_field<std::vector<std::vector<double>>>(p, "components");
        model.components = Matrix(comp_rows.size(), model.mean.size());
        for (std::size_t r = 0; r < comp_rows.size(); ++r) {
            detail::check_bundle(comp_rows[r].size() == model.mean.size(),
                                 "pca components shape");
            for (std::size_t c = 0; c < comp_rows[r].size(); ++c)
                model.components(r, c) = comp_rows[r][c];
        }
        model.explained_variance = detail::get_field<std::vector<double>>(p, "explained_variance");
        model.explained_variance_ratio =
            detail::get_field<std::vector<double>>(p, "explained_variance_ratio");
        detail::check_bundle(model.explained_variance.size() == comp_rows.size(),
                             "explained_variance length");
        detail::check_bundle(model.explained_variance_ratio.size() == comp_rows.size(),
                             "explained_variance_ratio length");
        b.pca = std::move(model);
    }

    const ordered_json m = detail::get_field<ordered_json>(j, "mlp");
    b.mlp.dims = detail::get_field<std::vector<int>>(m, "dims");
    detail::check_bundle(b.mlp.dims.size() >= 2, "mlp dims count");
    for (int d : b.mlp.dims) detail::check_bundle(d >= 1, "mlp dims range");
    detail::check_bundle(b.mlp.dims.back() == 1, "mlp output dim");
    const std::size_t expected_in = b.pca ? b.pca->n_components() : b.feature_dim();
    detail::check_bundle(static_cast<std::size_t>(b.mlp.dims[0]) == expected_in, "mlp input dim");

    const auto weights = detail::get_field<std::vector<std::vector<double>>>(m, "weights");
    const auto biases = detail::get_field<std::vector<std::vector<double>>>(m, "biases");
    detail::check_bundle(weights.size() == b.mlp.dims.size() - 1, "mlp weights count");
    detail::check_bundle(biases.size() == b.mlp.dims.size() - 1, "mlp biases count");
    for (std::size_t l = 0; l < weights.size(); ++l) {
        const auto fan_in = static_cast<std::size_t>(b.mlp.dims[l]);
        const auto fan_out = static_cast<std::size_t>(b.mlp.dims[l + 1]);
        detail::check_bundle(weights[l].size() == fan_in * fan_out,
                             "weights[" + std::to_string(l) + "] shape");
        detail::check_bundle(biases[l].size() == fan_out,
                             "biases[" + std::to_string(l) + "] shape");
        Matrix w(fan_out, fan_in);
        w.data() = weights[l];
        b.mlp.weights.push_back(std::move(w));
        b.mlp.biases.push_back(biases[l]);
    }
    detail::check_bundle(b.mlp.all_finite(), "mlp values finite");

    const ordered_json meta = detail::get_field<ordered_json>(j, "metadata");
    b.seed = detail::get_field<std::uint64_t>(meta, "seed");
    b.config_echo = detail::get_field<ordered_json>(meta, "config");
    b.dataset_fp = detail::get_field<std::string>(meta, "dataset_fingerprint");
    b.stages = detail::get_field<std::vector<std::string>>(meta, "stages");
    return b;
}

// ---------------------------------------------------------------------------
// Prediction from a bundle
// ---------------------------------------------------------------------------

inline FittedPipeline bundle_pipeline(const ModelBundle& b) {
    FittedPipeline fitted;
    fitted.space.rep = b.rep;
    fitted.space.window_len = b.window_len;
    fitted.space.stride = b.stride;
    fitted.space.vocab_ceiling = b.vocab_ceiling;
    fitted.space.vocab = Vocabulary::from_ids(b.vocab_ids);
    if (b.idf) {
        IdfModel idf;
        idf.idf = *b.idf;
        idf.df.assign(b.idf->size(), 0); // df counts are not persisted
        idf.n_docs = 0;
        fitted.space.idf = std::move(idf);
    }
    fitted.pca = b.pca;
    return fitted;
}

// Scores one trace with a loaded bundle. Throws NoWindows when the trace is
// shorter than the window length.
inline Verdict bundle_predict(const ModelBundle& b, const Trace& trace, double threshold) {
    const FittedPipeline fitted = bundle_pipeline(b);
    Dataset ds;
    ds.traces.push_back(trace);
    ds.vocab_ceiling = b.vocab_ceiling;
    const FeatureMatrix fm = transform_pipeline(fitted, ds, {0});
    if (fm.rows() == 0) throw NoWindows("trace " + trace.id + " produced no windows");
    const std::vector<double> probs = predict_proba(b.mlp, fm.values);
    return classify_trace(trace.id, probs, threshold);
}

inline ordered_json verdict_to_json(const Verdict& v) {
    ordered_json j = ordered_json::object();
    j["trace_id"] = v.trace_id;
    j["score"] = v.score;
    j["label"] = v.label == 1 ? "attack" : "benign";
    j["n_windows"] = v.n_windows;
    return j;
}

// ---------------------------------------------------------------------------
// Alerts
// ---------------------------------------------------------------------------

struct AlertRecord {
    std::string timestamp; // UTC ISO-8601
    std::string trace_id;
    double score = 0.0;
    double threshold = 0.0;
    std::string model_fingerprint;
};

inline ordered_json alert_to_json(const AlertRecord& a) {
    ordered_json j = ordered_json::object();
    j["timestamp"] = a.timestamp;
    j["trace_id"] = a.trace_id;
    j["score"] = a.score;
    j["threshold"] = a.threshold;
    j["model_fingerprint"] = a.model_fingerprint;
    return j;
}

// Current UTC time in ISO-8601; a fixed value substitutes for the system
// clock so alert streams can be compared byte-for-byte.
inline std::string utc_timestamp_iso8601(const std::optional<std::string>& fixed_clock = {}) {
    if (fixed_clock) return *fixed_clock;
    const std::time_t now = std::time(nullptr);
    std::tm tm_utc{};
    gmtime_r(&now, &tm_utc);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
    return buf;
}

} // namespace fedhids
