// Stage runner and artifact-file coverage: option validation, file
// outputs, hand-edited artifact handling, rerun determinism, and the CLI
// binary's exit-code contract.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <sys/wait.h>

#include <cstdlib>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "core/common.hpp"
#include "core/features.hpp"
#include "core/ingest.hpp"
#include "core/io.hpp"
#include "core/pipeline.hpp"
#include "support/testutil.hpp"

using namespace txgc;
using txgc::testing::TempDir;
using txgc::testing::read_file;
using txgc::testing::write_file;
using nlohmann::json;

namespace {

// Small deterministic ledger shared by the stage-chain tests.
json small_synth_options(const std::string& out_dir, uint64_t seed) {
    return json{{"out_dir", out_dir}, {"n_accounts", 90},         {"n_targets", 16},
                {"malicious_fraction", 0.5}, {"bridge_density", 2.0}, {"subordinate_fanout", 1.5},
                {"seed", seed}};
}

const json small_gbdt = json{{"n_trees", 20}, {"max_depth", 3}};

size_t kept_count(const std::vector<bool>& mask) {
    size_t n = 0;
    for (bool b : mask) n += b ? 1 : 0;
    return n;
}

}  // namespace

TEST_CASE("run_stage rejects unknown stages and malformed options") {
    CHECK_THROWS_AS(run_stage("frobnicate", json::object()), ConfigError);
    CHECK_THROWS_AS(run_stage("synth", json::array()), ConfigError);
    // Missing required option.
    CHECK_THROWS_AS(run_stage("synth", json{{"n_accounts", 50}}), ConfigError);

    TempDir tmp("txgc-pipe-opts");
    write_file(tmp.file("edges.csv"), "u,v\na,b\n");
    // Unknown keys are rejected, not ignored.
    CHECK_THROWS_WITH_AS(run_stage("stats", json{{"edges", tmp.file("edges.csv")}, {"bogus", 1}}),
                         doctest::Contains("unknown option 'bogus'"), ConfigError);
    // Missing input files are config errors that name the path.
    CHECK_THROWS_WITH_AS(run_stage("stats", json{{"edges", tmp.file("nope.csv")}}),
                         doctest::Contains(tmp.file("nope.csv").c_str()), ConfigError);
    // Type errors.
    CHECK_THROWS_AS(run_stage("synth", json{{"out_dir", tmp.file("d")}, {"n_accounts", "many"}}),
                    ConfigError);
    CHECK_THROWS_AS(run_stage("synth", json{{"out_dir", tmp.file("d")}, {"n_accounts", -5}}), ConfigError);
}

TEST_CASE("stats stage reports exact connectivity for hand graphs") {
    TempDir tmp("txgc-pipe-stats");
    write_file(tmp.file("triangle.csv"), "u,v\na,b\nb,c\nc,a\n");
    json rep = run_stage("stats", json{{"edges", tmp.file("triangle.csv")}});
    CHECK(rep.at("accounts").get<size_t>() == 3);
    CHECK(rep.at("transactions").get<size_t>() == 3);
    CHECK(rep.at("average_degree").get<double>() == 2.0);
    CHECK(rep.at("connectivity").get<double>() == 1.0);

    write_file(tmp.file("split.csv"), "u,v\na,b\nc,d\n");
    json rep2 = run_stage("stats", json{{"edges", tmp.file("split.csv")}, {"out", tmp.file("s.json")}});
    CHECK(rep2.at("connectivity").get<double>() == 0.5);
    json on_disk = read_json_file(tmp.file("s.json"));
    CHECK(on_disk.at("connectivity").get<double>() == 0.5);
}

TEST_CASE("synth and ingest stages chain through files") {
    TempDir tmp("txgc-pipe-chain");
    json synth_rep = run_stage("synth", small_synth_options(tmp.file("data"), 7));
    CHECK(synth_rep.at("stage") == "synth");
    CHECK(synth_rep.at("labeled").get<size_t>() == 16);
    CHECK(synth_rep.at("malicious").get<size_t>() == 8);

    std::string tx = synth_rep.at("paths").at("transactions").get<std::string>();
    std::string acc = synth_rep.at("paths").at("accounts").get<std::string>();
    // The written ledger is loadable and matches the report.
    std::vector<AccountProfile> profiles = load_accounts(acc);
    CHECK(profiles.size() == synth_rep.at("accounts").get<size_t>());

    json ingest_rep = run_stage(
        "ingest", json{{"transactions", tx}, {"accounts", acc}, {"out_dir", tmp.file("graph")}});
    CHECK(ingest_rep.at("rows").at("dropped_malformed").get<size_t>() == 0);
    CHECK(ingest_rep.at("rows").at("dropped_out_of_window").get<size_t>() == 0);
    Graph g = read_edges_csv(ingest_rep.at("paths").at("edges").get<std::string>());
    CHECK(g.node_count() == ingest_rep.at("graph").at("accounts").get<size_t>());
    CHECK(g.edge_count() == ingest_rep.at("graph").at("edges").get<size_t>());
}

TEST_CASE("rank and attack stages produce nested evasion masks on disk") {
    TempDir tmp("txgc-pipe-attack");
    json synth_rep = run_stage("synth", small_synth_options(tmp.file("data"), 11));
    std::string tx = synth_rep.at("paths").at("transactions").get<std::string>();
    std::string acc = synth_rep.at("paths").at("accounts").get<std::string>();

    run_stage("features",
              json{{"transactions", tx}, {"accounts", acc}, {"out", tmp.file("features.csv")}});
    json rank_rep = run_stage("rank", json{{"features", tmp.file("features.csv")},
                                           {"accounts", acc},
                                           {"gbdt", small_gbdt},
                                           {"out", tmp.file("ranking.json")}});
    CHECK(rank_rep.at("labeled_rows").get<size_t>() == 16);
    CHECK(rank_rep.at("top_importance").size() == 5);

    json attack_rep = run_stage("attack", json{{"ranking", tmp.file("ranking.json")},
                                               {"mode", "evasion"},
                                               {"sizes", json::array({29, 24, 19, 14, 9})},
                                               {"out", tmp.file("masks.json")}});
    CHECK(attack_rep.at("sizes") == json::array({29, 24, 19, 14, 9}));

    MaskFile mf = read_masks_json(tmp.file("masks.json"));
    REQUIRE(mf.masks.size() == 5);
    for (size_t i = 0; i < mf.masks.size(); ++i) {
        CHECK(kept_count(mf.masks[i].second) == mf.masks[i].first);
        if (i == 0) continue;
        // Each smaller mask keeps a subset of the previous one.
        for (size_t c = 0; c < kFeatureCount; ++c) {
            if (mf.masks[i].second[c]) CHECK(mf.masks[i - 1].second[c]);
        }
    }
}

TEST_CASE("keep-low preset attack works without a measured ranking") {
    TempDir tmp("txgc-pipe-preset");
    run_stage("attack", json{{"mode", "keep-low"},
                             {"preset", "paper"},
                             {"sizes", json::array({9})},
                             {"out", tmp.file("masks.json")}});
    MaskFile mf = read_masks_json(tmp.file("masks.json"));
    REQUIRE(mf.masks.size() == 1);
    CHECK(mf.masks[0].first == 9);
    std::set<std::string> kept;
    for (size_t c = 0; c < kFeatureCount; ++c)
        if (mf.masks[0].second[c]) kept.insert(feature_names()[c]);
    std::set<std::string> expected;
    for (const auto& name : paper_low_importance_preset()) expected.insert(name);
    CHECK(kept == expected);

    // Evasion without a ranking is a config error.
    CHECK_THROWS_AS(
        run_stage("attack", json{{"mode", "evasion"}, {"out", tmp.file("m2.json")}}), ConfigError);
}

TEST_CASE("hand-edited artifacts are accepted when valid and rejected when inconsistent") {
    TempDir tmp("txgc-pipe-edit");
    // Build a real ranking file first.
    std::array<double, kFeatureCount> scores{};
    for (size_t c = 0; c < kFeatureCount; ++c) scores[c] = static_cast<double>(c);
    ImportanceRanking ranking = make_ranking(scores);
    write_ranking_json(tmp.file("ranking.json"), ranking);

    json j = read_json_file(tmp.file("ranking.json"));
    std::swap(j["order"][0], j["order"][1]);
    write_json_file(tmp.file("swapped.json"), j);
    ImportanceRanking swapped = read_ranking_json(tmp.file("swapped.json"));
    CHECK(swapped.order[0] == ranking.order[1]);
    CHECK(swapped.order[1] == ranking.order[0]);
    CHECK(swapped.order.size() == kFeatureCount);

    json dup = j;
    dup["order"][1] = dup["order"][0];
    write_json_file(tmp.file("dup.json"), dup);
    CHECK_THROWS_WITH_AS(read_ranking_json(tmp.file("dup.json")), doctest::Contains("duplicate"),
                         DataError);

    json unknown = j;
    unknown["order"][0] = "no_such_feature";
    write_json_file(tmp.file("unknown.json"), unknown);
    CHECK_THROWS_AS(read_ranking_json(tmp.file("unknown.json")), DataError);

    // Mask files must keep size and keep-list consistent.
    MaskFile mf;
    mf.mode = "evasion";
    mf.masks.emplace_back(9, select_low_importance(ranking, 9, true));
    write_masks_json(tmp.file("masks.json"), mf);
    json mj = read_json_file(tmp.file("masks.json"));
    mj["masks"][0]["size"] = 10;
    write_json_file(tmp.file("bad-masks.json"), mj);
    CHECK_THROWS_WITH_AS(read_masks_json(tmp.file("bad-masks.json")),
                         doctest::Contains("does not match"), DataError);
}

TEST_CASE("coarsen stage gives identical artifacts for initial and focused input") {
    TempDir tmp("txgc-pipe-coarsen");
    json synth_rep = run_stage("synth", small_synth_options(tmp.file("data"), 19));
    std::string tx = synth_rep.at("paths").at("transactions").get<std::string>();
    std::string acc = synth_rep.at("paths").at("accounts").get<std::string>();
    json ingest_rep =
        run_stage("ingest", json{{"transactions", tx}, {"accounts", acc}, {"out_dir", tmp.file("g")}});
    std::string initial_edges = ingest_rep.at("paths").at("edges").get<std::string>();
    run_stage("features",
              json{{"transactions", tx}, {"accounts", acc}, {"out", tmp.file("features.csv")}});

    json focus_rep = run_stage(
        "focus", json{{"edges", initial_edges}, {"accounts", acc}, {"out_dir", tmp.file("focused")}});
    std::string focused_edges = focus_rep.at("paths").at("edges").get<std::string>();
    // Focus keeps every target.
    CHECK(focus_rep.at("focused").at("role_counts").at("target").get<size_t>() == 16);

    json from_initial = run_stage("coarsen", json{{"edges", initial_edges},
                                                  {"accounts", acc},
                                                  {"features", tmp.file("features.csv")},
                                                  {"out_dir", tmp.file("c1")}});
    json from_focused = run_stage("coarsen", json{{"edges", focused_edges},
                                                  {"accounts", acc},
                                                  {"features", tmp.file("features.csv")},
                                                  {"out_dir", tmp.file("c2")}});
    CHECK(from_initial.at("nodes") == from_focused.at("nodes"));
    for (const char* name : {"edges.csv", "nodes.csv", "features.csv", "provenance.json"}) {
        CHECK(read_file(tmp.file("c1/") + name) == read_file(tmp.file("c2/") + name));
    }

    // Cross-mode check: node structure is mode-independent, features differ
    // only on composite rows.
    json alt = run_stage("coarsen", json{{"edges", focused_edges},
                                         {"accounts", acc},
                                         {"features", tmp.file("features.csv")},
                                         {"mode", "per-side-mean"},
                                         {"out_dir", tmp.file("c3")}});
    CHECK(alt.at("mode") == "per-side-mean");
    CHECK(read_file(tmp.file("c2/edges.csv")) == read_file(tmp.file("c3/edges.csv")));
    CHECK(read_file(tmp.file("c2/nodes.csv")) == read_file(tmp.file("c3/nodes.csv")));
}

TEST_CASE("detect stage writes one result row per mask-model cell") {
    TempDir tmp("txgc-pipe-detect");
    json synth_rep = run_stage("synth", small_synth_options(tmp.file("data"), 23));
    std::string tx = synth_rep.at("paths").at("transactions").get<std::string>();
    std::string acc = synth_rep.at("paths").at("accounts").get<std::string>();
    json ingest_rep =
        run_stage("ingest", json{{"transactions", tx}, {"accounts", acc}, {"out_dir", tmp.file("g")}});
    run_stage("features",
              json{{"transactions", tx}, {"accounts", acc}, {"out", tmp.file("features.csv")}});

    json rep = run_stage("detect", json{{"edges", ingest_rep.at("paths").at("edges")},
                                        {"features", tmp.file("features.csv")},
                                        {"accounts", acc},
                                        {"models", json::array({"mlp", "gbdt"})},
                                        {"seeds", json::array({1, 2})},
                                        {"model", json{{"epochs", 30}, {"patience", 10}, {"hidden_dim", 8}}},
                                        {"gbdt", small_gbdt},
                                        {"out_dir", tmp.file("out")}});
    CHECK(rep.at("labeled").get<size_t>() == 16);
    // One implicit all-columns mask, two models.
    CHECK(rep.at("cells").get<size_t>() == 2);
    json results = read_json_file(tmp.file("out/results.json"));
    REQUIRE(results.size() == 2);
    for (const auto& cell : results) {
        CHECK(cell.at("mask_size").get<size_t>() == kFeatureCount);
        CHECK(cell.at("repeats").size() == 2);
        double acc_mean = cell.at("acc_mean").get<double>();
        CHECK(acc_mean >= 0.0);
        CHECK(acc_mean <= 1.0);
    }
    std::string csv = read_file(tmp.file("out/results.csv"));
    CHECK(csv.rfind("graph,mask,mask_size,model,repeats,", 0) == 0);
}

TEST_CASE("pipeline reruns are byte-identical") {
    TempDir tmp("txgc-pipe-rerun");
    json synth_cfg = small_synth_options("", 31);
    synth_cfg.erase("out_dir");
    json options = json{{"out_dir", tmp.file("run")},
                        {"synth", synth_cfg},
                        {"models", json::array({"mlp", "gbdt"})},
                        {"seeds", json::array({1})},
                        {"attack", json{{"sizes", json::array({29, 9})}}},
                        {"model", json{{"epochs", 25}, {"patience", 10}, {"hidden_dim", 8}}},
                        {"gbdt", small_gbdt}};

    json rep1 = run_stage("pipeline", options);
    std::string summary1 = read_file(tmp.file("run/summary.json"));
    std::string results1 = read_file(tmp.file("run/results.csv"));
    CHECK(rep1.at("compression").at("coarsened").at("accounts").get<size_t>() > 0);

    json rep2 = run_stage("pipeline", options);
    CHECK(read_file(tmp.file("run/summary.json")) == summary1);
    CHECK(read_file(tmp.file("run/results.csv")) == results1);
}

TEST_CASE("pipeline validates its variant and source configuration") {
    TempDir tmp("txgc-pipe-valid");
    CHECK_THROWS_AS(run_stage("pipeline", json{{"out_dir", tmp.file("x")}}), ConfigError);
    CHECK_THROWS_AS(run_stage("pipeline", json{{"out_dir", tmp.file("x")},
                                               {"synth", json{{"seed", 1}}},
                                               {"transactions", "t.csv"}}),
                    ConfigError);
    CHECK_THROWS_AS(run_stage("pipeline", json{{"out_dir", tmp.file("x")},
                                               {"synth", json{{"seed", 1}}},
                                               {"variants", json::array({"zoomed"})}}),
                    ConfigError);
}

// Exit-code contract of the installed command-line binary: 0 success,
// 2 config, 3 data errors. Runs the real executable.
namespace {

struct CliResult {
    int exit_code = -1;
    std::string err;
};

CliResult run_cli(const std::string& args, const std::string& err_path) {
    std::string cmd = std::string(TXGC_CLI_PATH) + " " + args + " 2> " + err_path;
    int status = std::system(cmd.c_str());
    CliResult r;
    if (WIFEXITED(status)) r.exit_code = WEXITSTATUS(status);
    r.err = read_file(err_path);
    return r;
}

}  // namespace

TEST_CASE("cli exits 0 on success and writes the report file") {
    TempDir tmp("txgc-pipe-cli");
    CliResult r = run_cli("synth --out-dir " + tmp.file("data") +
                              " --n-accounts 40 --n-targets 6 --seed 3 --report " + tmp.file("rep.json"),
                          tmp.file("err.txt"));
    CHECK(r.exit_code == 0);
    json rep = read_json_file(tmp.file("rep.json"));
    CHECK(rep.at("stage") == "synth");
    CHECK(r.err.find("synth: done") != std::string::npos);

    // Data goes to files, logs to stderr: stdout stays empty.
    std::string out_cmd = std::string(TXGC_CLI_PATH) + " stats --edges " + tmp.file("tri.csv") + " > " +
                          tmp.file("out.txt") + " 2> " + tmp.file("err2.txt");
    write_file(tmp.file("tri.csv"), "u,v\na,b\nb,c\nc,a\n");
    int status = std::system(out_cmd.c_str());
    CHECK(WIFEXITED(status));
    CHECK(WEXITSTATUS(status) == 0);
    CHECK(read_file(tmp.file("out.txt")).empty());
}

TEST_CASE("cli maps config and data failures to exit codes 2 and 3") {
    TempDir tmp("txgc-pipe-cli-err");
    // Missing input file: config error naming the path.
    CliResult r = run_cli("ingest --transactions " + tmp.file("missing.csv") + " --out-dir " +
                              tmp.file("out"),
                          tmp.file("err.txt"));
    CHECK(r.exit_code == 2);
    CHECK(r.err.find(tmp.file("missing.csv")) != std::string::npos);

    // Present but corrupt input: data error.
    write_file(tmp.file("bad.csv"), "not,a,ledger\n1,2,3\n");
    CliResult r2 = run_cli("ingest --transactions " + tmp.file("bad.csv") + " --out-dir " + tmp.file("out"),
                           tmp.file("err.txt"));
    CHECK(r2.exit_code == 3);
}
