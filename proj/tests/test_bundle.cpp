#include <catch2/catch_amalgamated.hpp>

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "fedhids/bundle.hpp"
#include "fedhids/pipeline.hpp"

using namespace fedhids;
namespace fs = std::filesystem;

namespace {

fs::path scratch() {
    const fs::path dir = fs::temp_directory_path() / "fedhids_bundle_tests";
    fs::create_directories(dir);
    return dir;
}

std::string read_text(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_text(const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    out << text;
}

struct Built {
    Dataset ds;
    PipelineConfig cfg;
    CentralRunResult run;
    ModelBundle bundle;
};

Built build_small(Representation rep, PcaMode mode) {
    Built b;
    SynthConfig sc;
    sc.seed = 3;
    sc.n_benign = 20;
    sc.n_attack = 20;
    sc.trace_len_min = 30;
    sc.trace_len_max = 50;
    sc.vocab_size = 20;
    b.ds = generate_synthetic(sc);

    b.cfg.rep = rep;
    b.cfg.pca_mode = mode;
    b.cfg.window_len = 10;
    b.cfg.stride = 5;
    b.cfg.hidden = {4};
    b.cfg.train.epochs = 3;
    b.cfg.seed = 2;
    b.run = run_central(b.ds, b.cfg);

    ordered_json echo = ordered_json::object();
    echo["seed"] = 2;
    b.bundle = make_bundle(b.run.fitted, b.run.model, b.cfg.seed, echo, dataset_fingerprint(b.ds));
    return b;
}

const Built& tfidf_built() {
    static const Built b = build_small(Representation::Tfidf, PcaMode::Auto);
    return b;
}

// serialize, tamper via a callback, reload
template <typename Fn>
ModelBundle reload_tampered(const ModelBundle& b, const fs::path& path, Fn&& tamper) {
    ordered_json j = bundle_to_json(b);
    tamper(j);
    write_text(path, j.dump(2) + "\n");
    return load_model_bundle(path.string());
}

} // namespace

TEST_CASE("a saved bundle predicts exactly like the live pipeline") {
    const Built& built = tfidf_built();
    const fs::path path = scratch() / "roundtrip.json";
    save_model_bundle(built.bundle, path.string());
    const ModelBundle loaded = load_model_bundle(path.string());

    REQUIRE(loaded.stages == std::vector<std::string>{"window", "tfidf", "pca", "mlp"});
    REQUIRE(loaded.vocab_ids == built.bundle.vocab_ids);
    REQUIRE(loaded.seed == built.bundle.seed);
    REQUIRE(loaded.dataset_fp == built.bundle.dataset_fp);

    for (std::size_t i : built.run.splits.test) {
        const Trace& t = built.ds.traces[i];
        const Verdict got = bundle_predict(loaded, t, built.cfg.threshold);

        const FeatureMatrix fm = transform_pipeline(built.run.fitted, built.ds, {i});
        const Verdict want =
            classify_trace(t.id, predict_proba(built.run.model, fm.values), built.cfg.threshold);
        REQUIRE(got.score == Catch::Approx(want.score).margin(1e-12));
        REQUIRE(got.label == want.label);
        REQUIRE(got.n_windows == want.n_windows);
    }
}

TEST_CASE("load-save is byte-identical") {
    const Built& built = tfidf_built();
    const fs::path first = scratch() / "stable_a.json";
    const fs::path second = scratch() / "stable_b.json";
    save_model_bundle(built.bundle, first.string());
    save_model_bundle(load_model_bundle(first.string()), second.string());
    REQUIRE(read_text(first) == read_text(second));
    REQUIRE(bundle_fingerprint(load_model_bundle(first.string())) ==
            bundle_fingerprint(built.bundle));
}

TEST_CASE("a projection-free bundle serializes pca and idf as null") {
    const Built built = build_small(Representation::Trivial, PcaMode::Off);
    REQUIRE(built.bundle.stages == std::vector<std::string>{"window", "trivial", "mlp"});

    const fs::path path = scratch() / "trivial.json";
    save_model_bundle(built.bundle, path.string());
    const ordered_json j = ordered_json::parse(read_text(path));
    REQUIRE(j.at("pca").is_null());
    REQUIRE(j.at("idf").is_null());

    const ModelBundle loaded = load_model_bundle(path.string());
    REQUIRE_FALSE(loaded.pca.has_value());
    REQUIRE_FALSE(loaded.idf.has_value());
    const Trace& t = built.ds.traces.front();
    const Verdict got = bundle_predict(loaded, t, 0.5);
    REQUIRE(got.n_windows >= 1);
}

TEST_CASE("unknown schema versions are refused") {
    const fs::path path = scratch() / "schema2.json";
    REQUIRE_THROWS_AS(reload_tampered(tfidf_built().bundle, path,
                                      [](ordered_json& j) { j["schema_version"] = 2; }),
                      UnsupportedSchema);
}

TEST_CASE("malformed files name the broken invariant") {
    const Built& built = tfidf_built();
    const fs::path path = scratch() / "tampered.json";

    write_text(path, "this is not json{{{");
    REQUIRE_THROWS_WITH(load_model_bundle(path.string()), "invalid json");

    REQUIRE_THROWS_WITH(reload_tampered(built.bundle, path,
                                        [](ordered_json& j) {
                                            auto& w = j["mlp"]["weights"][0];
                                            w.erase(w.size() - 1);
                                        }),
                        "weights[0] shape");

    REQUIRE_THROWS_WITH(reload_tampered(built.bundle, path,
                                        [](ordered_json& j) { j["idf"].push_back(1.0); }),
                        "idf length");

    REQUIRE_THROWS_WITH(reload_tampered(built.bundle, path,
                                        [](ordered_json& j) {
                                            j["vocabulary"]["ids"] = std::vector<int>{3, 2};
                                        }),
                        "vocabulary ids order");

    REQUIRE_THROWS_WITH(reload_tampered(built.bundle, path,
                                        [](ordered_json& j) { j.erase("mlp"); }),
                        "mlp missing");

    REQUIRE_THROWS_WITH(reload_tampered(built.bundle, path,
                                        [](ordered_json& j) { j["idf"] = nullptr; }),
                        "idf missing for tfidf");

    REQUIRE_THROWS_WITH(reload_tampered(built.bundle, path,
                                        [](ordered_json& j) {
                                            j["mlp"]["weights"][0][0] = "oops";
                                        }),
                        "weights type");

    REQUIRE_THROWS_AS(load_model_bundle((scratch() / "missing.json").string()), IoError);
}

TEST_CASE("a non-tfidf bundle must not carry idf values") {
    const Built built = build_small(Representation::Count, PcaMode::Off);
    const fs::path path = scratch() / "count_idf.json";
    REQUIRE_THROWS_WITH(reload_tampered(built.bundle, path,
                                        [](ordered_json& j) {
                                            j["idf"] = std::vector<double>{1.0};
                                        }),
                        "idf must be null");
}

TEST_CASE("dataset fingerprints react to any content change") {
    Dataset ds;
    Trace t;
    t.id = "a";
    t.syscalls = {1, 2, 3};
    t.label = Label::Benign;
    ds.traces.push_back(t);

    const std::string fp = dataset_fingerprint(ds);
    REQUIRE(fp == dataset_fingerprint(ds));
    REQUIRE(fp.size() == 16);

    Dataset flipped = ds;
    flipped.traces[0].label = Label::Attack;
    REQUIRE(dataset_fingerprint(flipped) != fp);

    Dataset edited = ds;
    edited.traces[0].syscalls[1] = 9;
    REQUIRE(dataset_fingerprint(edited) != fp);

    Dataset renamed = ds;
    renamed.traces[0].id = "b";
    REQUIRE(dataset_fingerprint(renamed) != fp);
}

TEST_CASE("bundle fingerprints identify the parameters") {
    const Built& built = tfidf_built();
    ModelBundle copy = built.bundle;
    REQUIRE(bundle_fingerprint(copy) == bundle_fingerprint(built.bundle));
    copy.mlp.weights[0](0, 0) += 1.0;
    REQUIRE(bundle_fingerprint(copy) != bundle_fingerprint(built.bundle));
}

TEST_CASE("bundle_predict rejects traces shorter than one window") {
    const Built& built = tfidf_built();
    Trace stub;
    stub.id = "stub";
    stub.syscalls = {1, 2, 3}; // window_len is 10
    REQUIRE_THROWS_AS(bundle_predict(built.bundle, stub, 0.5), NoWindows);
}

TEST_CASE("verdicts and alerts serialize with fixed keys") {
    Verdict v;
    v.trace_id = "t1";
    v.score = 0.75;
    v.label = 1;
    v.n_windows = 4;
    const ordered_json vj = verdict_to_json(v);
    std::vector<std::string> keys;
    for (const auto& item : vj.items()) keys.push_back(item.key());
    REQUIRE(keys == std::vector<std::string>{"trace_id", "score", "label", "n_windows"});
    REQUIRE(vj["label"] == "attack");
    v.label = 0;
    REQUIRE(verdict_to_json(v)["label"] == "benign");

    AlertRecord a;
    a.timestamp = "2024-01-02T03:04:05Z";
    a.trace_id = "t1";
    a.score = 0.9;
    a.threshold = 0.5;
    a.model_fingerprint = "deadbeefdeadbeef";
    const ordered_json aj = alert_to_json(a);
    keys.clear();
    for (const auto& item : aj.items()) keys.push_back(item.key());
    REQUIRE(keys == std::vector<std::string>{"timestamp", "trace_id", "score", "threshold",
                                             "model_fingerprint"});
}

TEST_CASE("timestamps honour the fixed clock and the ISO form") {
    REQUIRE(utc_timestamp_iso8601(std::string("2024-01-02T03:04:05Z")) == "2024-01-02T03:04:05Z");
    const std::string live = utc_timestamp_iso8601();
    REQUIRE_THAT(live, Catch::Matchers::Matches(R"(\d{4}-\d{2}-\d{2}T\d{2}:\d{2}:\d{2}Z)"));
}
