#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

#include <json.hpp>

using ordered_json = nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

fs::path scratch() {
    const fs::path dir = fs::temp_directory_path() / "fedhids_cli_tests";
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

struct CmdResult {
    int status = -1;
    std::string out;
    std::string err;
};

CmdResult run_cmd(const std::string& args) {
    static int counter = 0;
    const fs::path out_file = scratch() / ("stdout_" + std::to_string(counter) + ".txt");
    const fs::path err_file = scratch() / ("stderr_" + std::to_string(counter) + ".txt");
    ++counter;

    const std::string cmd = std::string(FEDHIDS_BIN_PATH) + " " + args + " > " +
                            out_file.string() + " 2> " + err_file.string();
    const int rc = std::system(cmd.c_str());

    CmdResult r;
    r.status = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
    r.out = read_text(out_file);
    r.err = read_text(err_file);
    return r;
}

void clear_dataset_env() { unsetenv("ADFA_LD_ROOT"); }

// small shared dataset + trained bundle, generated once per test binary run
const std::string kGenArgs =
    "--seed 3 --n-benign 12 --n-attack 12 --len-min 30 --len-max 40 --vocab 30";
const std::string kTrainArgs =
    "--window-len 10 --stride 5 --hidden 8 --epochs 4 --seed 2";

fs::path dataset_dir() {
    static const fs::path dir = [] {
        const fs::path d = scratch() / "data";
        fs::remove_all(d);
        const CmdResult r = run_cmd("gen --out " + d.string() + " " + kGenArgs);
        REQUIRE(r.status == 0);
        return d;
    }();
    return dir;
}

fs::path model_path() {
    static const fs::path path = [] {
        const fs::path p = scratch() / "model.json";
        const CmdResult r =
            run_cmd("train --data " + dataset_dir().string() + " " + kTrainArgs + " --out " +
                    p.string());
        REQUIRE(r.status == 0);
        return p;
    }();
    return path;
}

std::size_t count_lines(const std::string& text) {
    std::size_t n = 0;
    for (char c : text)
        if (c == '\n') ++n;
    return n;
}

} // namespace

TEST_CASE("gen writes a reproducible dataset") {
    const fs::path d2 = scratch() / "data_repeat";
    fs::remove_all(d2);
    const CmdResult r = run_cmd("gen --out " + d2.string() + " " + kGenArgs);
    REQUIRE(r.status == 0);

    const ordered_json j = ordered_json::parse(r.out);
    REQUIRE(j["out"] == d2.string());
    REQUIRE(j["n_benign"] == 12);
    REQUIRE(j["n_attack"] == 12);
    REQUIRE(j["vocab_ceiling"] == 30);

    // same seed, same bytes
    REQUIRE(read_text(d2 / "manifest.json") == read_text(dataset_dir() / "manifest.json"));
    REQUIRE(read_text(d2 / "synth_attack_00000.txt") ==
            read_text(dataset_dir() / "synth_attack_00000.txt"));
}

TEST_CASE("train reports both metric levels and writes the bundle") {
    const fs::path bundle = model_path();
    REQUIRE(fs::is_regular_file(bundle));
    const ordered_json b = ordered_json::parse(read_text(bundle));
    REQUIRE(b["schema_version"] == 1);
    REQUIRE(b["representation"] == "tfidf");
    REQUIRE(b["metadata"]["config"]["epochs"] == 4);

    // a repeat run produces byte-identical output and bundle
    const fs::path again = scratch() / "model_again.json";
    const CmdResult r1 = run_cmd("train --data " + dataset_dir().string() + " " + kTrainArgs +
                                 " --out " + again.string());
    const CmdResult r2 = run_cmd("train --data " + dataset_dir().string() + " " + kTrainArgs +
                                 " --out " + again.string());
    REQUIRE(r1.status == 0);
    REQUIRE(r2.status == 0);
    REQUIRE(r1.out == r2.out);
    REQUIRE(read_text(again) == read_text(bundle));

    const ordered_json report = ordered_json::parse(r1.out);
    REQUIRE(report.contains("window"));
    REQUIRE(report.contains("trace"));
    REQUIRE(report["trace"].contains("f1"));
    REQUIRE(report["trace"]["degenerate_flags"].is_array());
}

TEST_CASE("train in federated mode reports per-round history") {
    const CmdResult r = run_cmd("train --data " + dataset_dir().string() + " " + kTrainArgs +
                                " --mode federated --clients 2 --rounds 2 --local-epochs 1");
    REQUIRE(r.status == 0);
    const ordered_json report = ordered_json::parse(r.out);
    REQUIRE(report.contains("rounds"));
    REQUIRE(report["rounds"].size() == 2);
    REQUIRE(report["rounds"][0]["per_client_loss"].size() == 2);
    REQUIRE(report["rounds"][1]["round"] == 1);
}

TEST_CASE("eval scores a saved bundle against a dataset") {
    const CmdResult r = run_cmd("eval --data " + dataset_dir().string() + " --model " +
                                model_path().string());
    REQUIRE(r.status == 0);
    const ordered_json report = ordered_json::parse(r.out);
    REQUIRE(report.contains("window"));
    REQUIRE(report.contains("trace"));
    REQUIRE(r.err.find("evaluated 24 of 24 traces") != std::string::npos);
}

TEST_CASE("predict emits one verdict line per scoreable trace") {
    const fs::path benign = dataset_dir() / "synth_benign_00000.txt";
    const fs::path attack = dataset_dir() / "synth_attack_00000.txt";
    const CmdResult r = run_cmd("predict --model " + model_path().string() + " " +
                                benign.string() + " " + attack.string());
    REQUIRE(r.status == 0);
    REQUIRE(count_lines(r.out) == 2);

    std::istringstream lines(r.out);
    std::string line;
    std::getline(lines, line);
    const ordered_json first = ordered_json::parse(line);
    REQUIRE(first["trace_id"] == "synth_benign_00000.txt");
    REQUIRE((first["label"] == "benign" || first["label"] == "attack"));
    REQUIRE(first["n_windows"].get<int>() >= 1);
}

TEST_CASE("predict appends fixed-clock alerts for attack verdicts") {
    const fs::path log = scratch() / "alerts.jsonl";
    fs::remove(log);

    // score every attack trace so at least one alert fires
    std::string files;
    for (int i = 0; i < 12; ++i) {
        char name[40];
        std::snprintf(name, sizeof name, "synth_attack_%05d.txt", i);
        files += " " + (dataset_dir() / name).string();
    }
    const std::string cmd = "predict --model " + model_path().string() + " --alert-log " +
                            log.string() + " --fixed-clock 2024-01-02T03:04:05Z" + files;
    const CmdResult r1 = run_cmd(cmd);
    REQUIRE(r1.status == 0);
    const std::string first_pass = read_text(log);
    REQUIRE(count_lines(first_pass) >= 1);

    std::istringstream lines(first_pass);
    std::string line;
    while (std::getline(lines, line)) {
        const ordered_json alert = ordered_json::parse(line);
        REQUIRE(alert["timestamp"] == "2024-01-02T03:04:05Z");
        REQUIRE(alert["threshold"] == 0.5);
        REQUIRE(alert["model_fingerprint"].get<std::string>().size() == 16);
    }

    // append mode plus the fixed clock makes the second pass double the file
    const CmdResult r2 = run_cmd(cmd);
    REQUIRE(r2.status == 0);
    REQUIRE(read_text(log) == first_pass + first_pass);
}

TEST_CASE("predict warns and continues on too-short traces") {
    const fs::path stub = scratch() / "short_trace.txt";
    write_text(stub, "1 2 3\n");
    const CmdResult r = run_cmd("predict --model " + model_path().string() + " " + stub.string());
    REQUIRE(r.status == 0);
    REQUIRE(r.out.empty());
    REQUIRE(r.err.find("shorter than the window length") != std::string::npos);
}

TEST_CASE("usage errors exit with status 1") {
    clear_dataset_env();
    const CmdResult unknown_flag = run_cmd("train --bogus 1");
    REQUIRE(unknown_flag.status == 1);
    REQUIRE(unknown_flag.err.find("error:") != std::string::npos);

    const CmdResult unknown_sub = run_cmd("frobnicate");
    REQUIRE(unknown_sub.status == 1);

    const CmdResult no_data = run_cmd("train --epochs 1");
    REQUIRE(no_data.status == 1);
    REQUIRE(no_data.err.find("no dataset given") != std::string::npos);

    const CmdResult bad_mode = run_cmd("train --data " + dataset_dir().string() +
                                       " --mode sideways");
    REQUIRE(bad_mode.status == 1);
}

TEST_CASE("data errors exit with status 2") {
    const CmdResult missing = run_cmd("train --data " + (scratch() / "nowhere").string());
    REQUIRE(missing.status == 2);

    const fs::path garbage = scratch() / "garbage_model.json";
    write_text(garbage, "{]");
    const CmdResult corrupt = run_cmd("eval --data " + dataset_dir().string() + " --model " +
                                      garbage.string());
    REQUIRE(corrupt.status == 2);
    REQUIRE(corrupt.err.find("invalid json") != std::string::npos);
}

TEST_CASE("config files fill in unset flags only") {
    const fs::path cfg = scratch() / "flags.json";
    write_text(cfg, "{\"window-len\": 25}\n");

    // trivial representation: one column per window position
    const CmdResult from_config = run_cmd("featurize --data " + dataset_dir().string() +
                                          " --rep trivial --config " + cfg.string());
    REQUIRE(from_config.status == 0);
    std::istringstream header(from_config.out);
    std::string head;
    std::getline(header, head);
    REQUIRE(head.find(",c24") != std::string::npos);
    REQUIRE(head.find(",c25") == std::string::npos);

    // an explicit flag beats the config value
    const CmdResult overridden = run_cmd("featurize --data " + dataset_dir().string() +
                                         " --rep trivial --window-len 10 --config " +
                                         cfg.string());
    REQUIRE(overridden.status == 0);
    std::istringstream header2(overridden.out);
    std::getline(header2, head);
    REQUIRE(head.find(",c9") != std::string::npos);
    REQUIRE(head.find(",c10") == std::string::npos);

    const fs::path bad = scratch() / "bad_flags.json";
    write_text(bad, "{\"does-not-exist\": 1}\n");
    const CmdResult unknown = run_cmd("featurize --data " + dataset_dir().string() +
                                      " --config " + bad.string());
    REQUIRE(unknown.status == 1);
    REQUIRE(unknown.err.find("unknown config key") != std::string::npos);
}

TEST_CASE("sweep prints one window and one trace row per length") {
    const std::string base = "sweep --data " + dataset_dir().string() +
                             " --lengths 10,20 --hidden 8 --epochs 2 --seed 2";
    const CmdResult r = run_cmd(base);
    REQUIRE(r.status == 0);

    std::istringstream lines(r.out);
    std::string line;
    std::getline(lines, line);
    REQUIRE(line == "L,scope,tp,fp,tn,fn,accuracy,precision,recall,f1,fpr,fnr");
    std::vector<std::string> rows;
    while (std::getline(lines, line)) rows.push_back(line);
    REQUIRE(rows.size() == 4);
    REQUIRE(rows[0].rfind("10,window,", 0) == 0);
    REQUIRE(rows[1].rfind("10,trace,", 0) == 0);
    REQUIRE(rows[2].rfind("20,window,", 0) == 0);
    REQUIRE(rows[3].rfind("20,trace,", 0) == 0);

    // reruns are byte-identical
    const CmdResult again = run_cmd(base);
    REQUIRE(again.out == r.out);

    const CmdResult dup = run_cmd("sweep --data " + dataset_dir().string() +
                                  " --lengths 10,10 --hidden 8 --epochs 2 --seed 2");
    REQUIRE(dup.status == 0);
    REQUIRE(count_lines(dup.out) == 3); // header + one length, two scopes
    REQUIRE(dup.err.find("duplicate window length 10") != std::string::npos);
}

TEST_CASE("fedcompare emits the per-round comparison table") {
    const CmdResult r = run_cmd("fedcompare --data " + dataset_dir().string() +
                                " --window-len 10 --stride 5 --hidden 8 --seed 2" +
                                " --clients 2 --skew 1.0 --rounds 2 --local-epochs 1 --seeds 2");
    REQUIRE(r.status == 0);

    std::istringstream lines(r.out);
    std::string line;
    std::getline(lines, line);
    REQUIRE(line == "aggregator,seed,round,accuracy,f1,fpr,fnr");
    std::vector<std::string> rows;
    while (std::getline(lines, line)) rows.push_back(line);
    REQUIRE(rows.size() == 8); // 2 aggregators x 2 seeds x 2 rounds
    REQUIRE(rows[0].rfind("FA,2,0,", 0) == 0);
    REQUIRE(rows[2].rfind("WFA,2,0,", 0) == 0);
    REQUIRE(rows[4].rfind("FA,3,0,", 0) == 0);

    REQUIRE(r.err.find("median final accuracy FA=") != std::string::npos);
}
