#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "fedhids/error.hpp"
#include "fedhids/rng.hpp"

namespace fedhids {

enum class Label : int { Benign = 0, Attack = 1 };

inline int label_to_int(Label l) { return static_cast<int>(l); }

// One system-call trace: the ordered syscall IDs a process issued.
struct Trace {
    std::string id;            // source file basename or synthetic tag
    std::vector<int> syscalls; // non-empty, every element >= 0
    Label label = Label::Benign;

    bool operator==(const Trace&) const = default;
};

struct Dataset {
    std::vector<Trace> traces;
    int vocab_ceiling = 0; // 1 + max syscall ID observed, or the configured vocabulary size

    bool operator==(const Dataset&) const = default;
};

// A simulated client's slice of the training set. sample_count is the
// aggregation weight n_k.
struct ClientShard {
    int client_id = 0;
    std::vector<std::size_t> trace_indices;
    std::size_t sample_count = 0;
};

struct SynthConfig {
    std::uint64_t seed = 1;
    int n_benign = 400;
    int n_attack = 400;
    int trace_len_min = 60;
    int trace_len_max = 120;
    int vocab_size = 200;
    double rho = 0.3; // per-step probability that an attack trace emits from the hot set
};

// ---------------------------------------------------------------------------
// Trace file parsing
// ---------------------------------------------------------------------------

// Parses a whitespace-separated list of non-negative integers.
// Throws EmptyTrace when the file holds no tokens, ParseError on a bad token.
inline Trace parse_trace_file(const std::filesystem::path& path, Label label) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open trace file: " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    if (in.bad()) throw IoError("read failure: " + path.string());
    const std::string text = buf.str();

    Trace trace;
    trace.id = path.filename().string();
    trace.label = label;

    std::size_t pos = 0, token_index = 0;
    const auto is_space = [](char c) {
        return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
    };
    while (pos < text.size()) {
        while (pos < text.size() && is_space(text[pos])) ++pos;
        if (pos >= text.size()) break;
        std::size_t end = pos;
        while (end < text.size() && !is_space(text[end])) ++end;
        const std::string_view tok(text.data() + pos, end - pos);
        int value = 0;
        const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
        if (ec != std::errc{} || ptr != tok.data() + tok.size() || value < 0)
            throw ParseError(std::string(tok), token_index, path.string());
        trace.syscalls.push_back(value);
        ++token_index;
        pos = end;
    }
    if (trace.syscalls.empty()) throw EmptyTrace(path.string());
    return trace;
}

namespace detail {

inline std::vector<std::filesystem::path> sorted_regular_files(const std::filesystem::path& dir) {
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::recursive_directory_iterator(dir))
        if (entry.is_regular_file()) files.push_back(entry.path());
    std::sort(files.begin(), files.end(),
              [](const auto& a, const auto& b) { return a.string() < b.string(); });
    return files;
}

inline int max_syscall_id(const Dataset& ds) {
    int max_id = -1;
    for (const auto& t : ds.traces)
        for (int s : t.syscalls) max_id = std::max(max_id, s);
    return max_id;
}

} // namespace detail

// Loads the ADFA-LD directory layout: Training_Data_Master and
// Validation_Data_Master hold benign traces, Attack_Data_Master holds attack
// traces nested one level by attack family. Files are visited in lexicographic
// path order.
inline Dataset load_adfa_dataset(const std::filesystem::path& root) {
    static const char* kBenignDirs[] = {"Training_Data_Master", "Validation_Data_Master"};
    static const char* kAttackDir = "Attack_Data_Master";

    for (const char* name : kBenignDirs)
        if (!std::filesystem::is_directory(root / name)) throw MissingDirectory(name);
    if (!std::filesystem::is_directory(root / kAttackDir)) throw MissingDirectory(kAttackDir);

    Dataset ds;
    for (const char* name : kBenignDirs)
        for (const auto& file : detail::sorted_regular_files(root / name))
            ds.traces.push_back(parse_trace_file(file, Label::Benign));
    for (const auto& file : detail::sorted_regular_files(root / kAttackDir))
        ds.traces.push_back(parse_trace_file(file, Label::Attack));

    ds.vocab_ceiling = detail::max_syscall_id(ds) + 1;
    return ds;
}

// Fallback loader for custom captures: one directory of benign trace files,
// one of attack trace files.
inline Dataset load_dirs_dataset(const std::filesystem::path& benign_dir,
                                 const std::filesystem::path& attack_dir) {
    if (!std::filesystem::is_directory(benign_dir)) throw MissingDirectory(benign_dir.string());
    if (!std::filesystem::is_directory(attack_dir)) throw MissingDirectory(attack_dir.string());
    Dataset ds;
    for (const auto& file : detail::sorted_regular_files(benign_dir))
        ds.traces.push_back(parse_trace_file(file, Label::Benign));
    for (const auto& file : detail::sorted_regular_files(attack_dir))
        ds.traces.push_back(parse_trace_file(file, Label::Attack));
    ds.vocab_ceiling = detail::max_syscall_id(ds) + 1;
    return ds;
}

// ---------------------------------------------------------------------------
// Synthetic trace generation
// ---------------------------------------------------------------------------

namespace detail {

// Markov step for the benign chain: 80% of the mass goes to the "hot"
// successors {(s+1) mod V, (s+7) mod V}, the remaining 20% is uniform over
// every other state.
inline int markov_step(Rng& rng, int state, int vocab) {
    int a = (state + 1) % vocab;
    int b = (state + 7) % vocab;
    if (a > b) std::swap(a, b);
    const int n_hot = (a == b) ? 1 : 2;
    if (rng.next_double() < 0.8) {
        if (n_hot == 1) return a;
        return rng.next_below(2) == 0 ? a : b;
    }
    // uniform over the complement; r counts states skipping the hot ones
    auto r = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(vocab - n_hot)));
    if (r >= a) ++r;
    if (n_hot == 2 && r >= b) ++r;
    return r;
}

// Emits one trace of the given length. Draw order per position t:
// transition draw(s) when t > 0, then (only when rho > 0) the substitution
// coin, then the hot-set pick when the coin fires. With rho == 0 the chain
// output is emitted untouched and the hot set is never consulted.
inline std::vector<int> emit_trace(Rng& rng, int length, int vocab, double rho,
                                   const std::vector<int>& hot_set) {
    std::vector<int> out;
    out.reserve(static_cast<std::size_t>(length));
    int state = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(vocab)));
    for (int t = 0; t < length; ++t) {
        if (t > 0) state = markov_step(rng, state, vocab);
        if (rho > 0.0 && rng.next_double() < rho) {
            out.push_back(hot_set[rng.next_below(hot_set.size())]);
        } else {
            out.push_back(state);
        }
    }
    return out;
}

} // namespace detail

inline void validate_synth_config(const SynthConfig& cfg) {
    if (cfg.n_benign < 0 || cfg.n_attack < 0)
        throw InvalidConfig("synthetic trace counts must be non-negative");
    if (cfg.trace_len_min < 1 || cfg.trace_len_min > cfg.trace_len_max)
        throw InvalidConfig("trace length range requires 1 <= min <= max");
    if (cfg.vocab_size < 3)
        throw InvalidConfig("vocab_size must be at least 3");
    if (cfg.rho < 0.0 || cfg.rho > 1.0)
        throw InvalidConfig("rho must lie in [0, 1]");
}

// Deterministic synthetic dataset: benign traces from a first-order Markov
// chain, attack traces from the same chain with hot-set substitutions at rate
// rho. Every trace has its own derived PRNG stream, so output is fully
// reproducible from cfg.seed.
inline Dataset generate_synthetic(const SynthConfig& cfg) {
    validate_synth_config(cfg);

    const int vocab = cfg.vocab_size;
    const auto hot_count = static_cast<std::size_t>((vocab + 19) / 20); // ceil(V/20)
    Rng hot_rng(derive_seed(cfg.seed, 0));
    std::vector<int> hot_set;
    for (std::size_t idx : hot_rng.sample_without_replacement(static_cast<std::size_t>(vocab), hot_count))
        hot_set.push_back(static_cast<int>(idx));

    Dataset ds;
    ds.vocab_ceiling = vocab;
    ds.traces.reserve(static_cast<std::size_t>(cfg.n_benign + cfg.n_attack));

    char tag[64];
    for (int i = 0; i < cfg.n_benign; ++i) {
        Rng rng(derive_seed(cfg.seed, 1, static_cast<std::uint64_t>(i)));
        const int len = static_cast<int>(rng.next_int(cfg.trace_len_min, cfg.trace_len_max));
        std::snprintf(tag, sizeof tag, "synth_benign_%05d", i);
        ds.traces.push_back({tag, detail::emit_trace(rng, len, vocab, 0.0, hot_set), Label::Benign});
    }
    for (int i = 0; i < cfg.n_attack; ++i) {
        Rng rng(derive_seed(cfg.seed, 2, static_cast<std::uint64_t>(i)));
        const int len = static_cast<int>(rng.next_int(cfg.trace_len_min, cfg.trace_len_max));
        std::snprintf(tag, sizeof tag, "synth_attack_%05d", i);
        ds.traces.push_back({tag, detail::emit_trace(rng, len, vocab, cfg.rho, hot_set), Label::Attack});
    }
    return ds;
}

// ---------------------------------------------------------------------------
// Splitting, balancing, client partitioning
// ---------------------------------------------------------------------------

namespace detail {

inline std::pair<std::vector<std::size_t>, std::vector<std::size_t>>
indices_by_class(const std::vector<std::size_t>& indices, const Dataset& ds) {
    std::vector<std::size_t> benign, attack;
    for (std::size_t i : indices)
        (ds.traces[i].label == Label::Benign ? benign : attack).push_back(i);
    return {benign, attack};
}

} // namespace detail

// Stratified trace-level split: each class contributes floor(fraction * n)
// test traces. Returned index lists are sorted ascending.
inline std::pair<std::vector<std::size_t>, std::vector<std::size_t>>
split_train_test(const Dataset& ds, double test_fraction, std::uint64_t seed) {
    if (!(test_fraction > 0.0 && test_fraction < 1.0))
        throw InvalidConfig("test_fraction must lie strictly between 0 and 1");

    std::vector<std::size_t> all(ds.traces.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    auto [benign, attack] = detail::indices_by_class(all, ds);
    if (benign.size() < 2 || attack.size() < 2)
        throw TooFewSamples("each class needs at least 2 traces to split");

    std::vector<std::size_t> train, test;
    int class_tag = 0;
    for (auto* cls : {&benign, &attack}) {
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(class_tag++)));
        rng.shuffle(*cls);
        const auto n_test = static_cast<std::size_t>(
            std::floor(test_fraction * static_cast<double>(cls->size())));
        test.insert(test.end(), cls->begin(), cls->begin() + static_cast<std::ptrdiff_t>(n_test));
        train.insert(train.end(), cls->begin() + static_cast<std::ptrdiff_t>(n_test), cls->end());
    }
    std::sort(train.begin(), train.end());
    std::sort(test.begin(), test.end());
    return {train, test};
}

// Undersamples the majority class (seeded, without replacement) down to the
// minority count; result is sorted ascending, size 2 * min(n0, n1).
inline std::vector<std::size_t> balance_classes(const std::vector<std::size_t>& indices,
                                                const Dataset& ds, std::uint64_t seed) {
    auto [benign, attack] = detail::indices_by_class(indices, ds);
    if (benign.empty() || attack.empty())
        throw TooFewSamples("balancing requires samples from both classes");

    auto& minority = benign.size() <= attack.size() ? benign : attack;
    auto& majority = benign.size() <= attack.size() ? attack : benign;
    Rng rng(seed);
    rng.shuffle(majority);
    majority.resize(minority.size());

    std::vector<std::size_t> out;
    out.reserve(2 * minority.size());
    out.insert(out.end(), minority.begin(), minority.end());
    out.insert(out.end(), majority.begin(), majority.end());
    std::sort(out.begin(), out.end());
    return out;
}

// Splits the training set across simulated clients. skew = 0 gives IID
// round-robin shards (sizes differ by at most 1); skew > 0 blends toward a
// linearly increasing size profile, with largest-remainder rounding:
//   share_k = (1-skew)/n + skew * 2(k+1) / (n(n+1))
inline std::vector<ClientShard> partition_clients(const std::vector<std::size_t>& train_indices,
                                                  const Dataset& /*ds*/, int n_clients,
                                                  double skew, std::uint64_t seed) {
    if (n_clients < 1) throw InvalidConfig("n_clients must be >= 1");
    if (skew < 0.0 || skew > 1.0) throw InvalidConfig("skew must lie in [0, 1]");
    if (static_cast<std::size_t>(n_clients) > train_indices.size())
        throw InvalidConfig("more clients than training traces");

    std::vector<std::size_t> shuffled = train_indices;
    Rng rng(seed);
    rng.shuffle(shuffled);

    std::vector<ClientShard> shards(static_cast<std::size_t>(n_clients));
    for (int k = 0; k < n_clients; ++k) shards[static_cast<std::size_t>(k)].client_id = k;

    if (skew == 0.0) {
        for (std::size_t i = 0; i < shuffled.size(); ++i)
            shards[i % static_cast<std::size_t>(n_clients)].trace_indices.push_back(shuffled[i]);
    } else {
        const auto n = static_cast<double>(n_clients);
        const auto total = static_cast<double>(shuffled.size());
        std::vector<std::size_t> counts(static_cast<std::size_t>(n_clients));
        std::vector<std::pair<double, int>> remainders; // (fraction, client)
        std::size_t assigned = 0;
        for (int k = 0; k < n_clients; ++k) {
            const double share =
                (1.0 - skew) / n + skew * 2.0 * (k + 1) / (n * (n + 1.0));
            const double target = share * total;
            const auto base = static_cast<std::size_t>(std::floor(target));
            counts[static_cast<std::size_t>(k)] = base;
            assigned += base;
            remainders.emplace_back(target - std::floor(target), k);
        }
        // hand out the leftover units to the largest remainders; ties favour
        // the lower client id
        std::stable_sort(remainders.begin(), remainders.end(),
                         [](const auto& a, const auto& b) { return a.first > b.first; });
        for (std::size_t i = 0; assigned < shuffled.size(); ++i, ++assigned)
            ++counts[static_cast<std::size_t>(remainders[i % remainders.size()].second)];

        std::size_t cursor = 0;
        for (int k = 0; k < n_clients; ++k) {
            auto& shard = shards[static_cast<std::size_t>(k)];
            shard.trace_indices.assign(
                shuffled.begin() + static_cast<std::ptrdiff_t>(cursor),
                shuffled.begin() + static_cast<std::ptrdiff_t>(cursor + counts[static_cast<std::size_t>(k)]));
            cursor += counts[static_cast<std::size_t>(k)];
        }
    }

    for (auto& shard : shards) shard.sample_count = shard.trace_indices.size();
    return shards;
}

// ---------------------------------------------------------------------------
// Synthetic dataset persistence (trace files + manifest.json)
// ---------------------------------------------------------------------------

inline void save_synthetic(const Dataset& ds, const SynthConfig& cfg,
                           const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory: " + dir.string());

    nlohmann::ordered_json files = nlohmann::ordered_json::object();
    for (const auto& trace : ds.traces) {
        const std::string name = trace.id + ".txt";
        std::ofstream out(dir / name, std::ios::binary);
        if (!out) throw IoError("cannot write trace file: " + (dir / name).string());
        for (std::size_t i = 0; i < trace.syscalls.size(); ++i) {
            if (i) out << ' ';
            out << trace.syscalls[i];
        }
        out << '\n';
        files[name] = label_to_int(trace.label);
    }

    nlohmann::ordered_json manifest;
    manifest["schema_version"] = 1;
    manifest["config"] = {{"seed", cfg.seed},
                          {"n_benign", cfg.n_benign},
                          {"n_attack", cfg.n_attack},
                          {"trace_len_min", cfg.trace_len_min},
                          {"trace_len_max", cfg.trace_len_max},
                          {"vocab_size", cfg.vocab_size},
                          {"rho", cfg.rho}};
    manifest["files"] = std::move(files);

    std::ofstream out(dir / "manifest.json", std::ios::binary);
    if (!out) throw IoError("cannot write manifest: " + (dir / "manifest.json").string());
    out << manifest.dump(2) << '\n';
}

inline Dataset load_synthetic(const std::filesystem::path& dir) {
    std::ifstream in(dir / "manifest.json", std::ios::binary);
    if (!in) throw IoError("cannot open manifest: " + (dir / "manifest.json").string());
    nlohmann::ordered_json manifest;
    try {
        in >> manifest;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::Data, std::string("bad manifest: ") + e.what());
    }
    if (!manifest.contains("schema_version") || manifest["schema_version"] != 1)
        throw UnsupportedSchema("manifest schema_version must be 1");

    Dataset ds;
    for (const auto& [name, label] : manifest.at("files").items()) {
        const int value = label.get<int>();
        if (value != 0 && value != 1)
            throw Error(ErrorKind::Data, "manifest label must be 0 or 1: " + name);
        Trace t = parse_trace_file(dir / name, value == 0 ? Label::Benign : Label::Attack);
        t.id = name.substr(0, name.rfind(".txt")); // keep the synthetic tag
        ds.traces.push_back(std::move(t));
    }
    const int configured = manifest.at("config").value("vocab_size", 0);
    ds.vocab_ceiling = std::max(configured, detail::max_syscall_id(ds) + 1);
    return ds;
}

// True when the directory looks like a persisted synthetic dataset.
inline bool has_manifest(const std::filesystem::path& dir) {
    return std::filesystem::is_regular_file(dir / "manifest.json");
}

} // namespace fedhids
