// Contract tests for the C shared-library surface: status codes, error
// messages, report strings and the direct graph accessors.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstring>
#include <string>

#include <nlohmann/json.hpp>

#include "support/testutil.hpp"
#include "txgc/txgc.h"

using txgc::testing::TempDir;
using txgc::testing::write_file;
using nlohmann::json;

namespace {

// RAII wrappers keep the tests leak-free even on assertion failure.
struct Ctx {
    txgc_ctx* p = txgc_ctx_new();
    ~Ctx() { txgc_ctx_free(p); }
};

struct OwnedString {
    char* p = nullptr;
    ~OwnedString() { txgc_string_free(p); }
};

}  // namespace

TEST_CASE("version and context lifecycle") {
    const char* v = txgc_version();
    REQUIRE(v != nullptr);
    CHECK(std::strlen(v) > 0);

    Ctx ctx;
    REQUIRE(ctx.p != nullptr);
    // A fresh context has no error.
    CHECK(std::string(txgc_last_error(ctx.p)).empty());

    // Freeing NULL handles is a no-op.
    txgc_ctx_free(nullptr);
    txgc_graph_close(nullptr);
    txgc_string_free(nullptr);
}

TEST_CASE("txgc_run maps errors to status codes and messages") {
    Ctx ctx;

    CHECK(txgc_run(ctx.p, "no-such-stage", "{}", nullptr) == TXGC_ERROR_CONFIG);
    CHECK(std::string(txgc_last_error(ctx.p)).find("no-such-stage") != std::string::npos);

    // Unparseable options are config errors, not crashes.
    CHECK(txgc_run(ctx.p, "stats", "{not json", nullptr) == TXGC_ERROR_CONFIG);
    CHECK(!std::string(txgc_last_error(ctx.p)).empty());

    // NULL stage is rejected.
    CHECK(txgc_run(ctx.p, nullptr, "{}", nullptr) == TXGC_ERROR_CONFIG);

    TempDir tmp("txgc-capi-run");
    std::string opts = json{{"edges", tmp.file("missing.csv")}}.dump();
    CHECK(txgc_run(ctx.p, "stats", opts.c_str(), nullptr) == TXGC_ERROR_CONFIG);
    CHECK(std::string(txgc_last_error(ctx.p)).find(tmp.file("missing.csv")) != std::string::npos);

    // A successful call clears the sticky error message.
    write_file(tmp.file("tri.csv"), "u,v\na,b\nb,c\nc,a\n");
    std::string good = json{{"edges", tmp.file("tri.csv")}}.dump();
    OwnedString report;
    CHECK(txgc_run(ctx.p, "stats", good.c_str(), &report.p) == TXGC_OK);
    CHECK(std::string(txgc_last_error(ctx.p)).empty());
    REQUIRE(report.p != nullptr);
    json rep = json::parse(report.p);
    CHECK(rep.at("connectivity").get<double>() == 1.0);
}

TEST_CASE("txgc_run drives a synth round trip through the C surface") {
    Ctx ctx;
    TempDir tmp("txgc-capi-synth");
    std::string opts = json{{"out_dir", tmp.file("data")},
                            {"n_accounts", 50},
                            {"n_targets", 8},
                            {"seed", 4}}
                           .dump();
    OwnedString report;
    REQUIRE(txgc_run(ctx.p, "synth", opts.c_str(), &report.p) == TXGC_OK);
    REQUIRE(report.p != nullptr);
    json rep = json::parse(report.p);
    CHECK(rep.at("stage") == "synth");
    CHECK(rep.at("labeled").get<size_t>() == 8);

    // NULL options mean {}: missing required out_dir.
    CHECK(txgc_run(ctx.p, "synth", nullptr, nullptr) == TXGC_ERROR_CONFIG);
}

TEST_CASE("graph handles expose counts and stats") {
    Ctx ctx;
    TempDir tmp("txgc-capi-graph");

    txgc_graph* g = nullptr;
    CHECK(txgc_graph_open(ctx.p, tmp.file("missing.csv").c_str(), &g) == TXGC_ERROR_DATA);
    CHECK(g == nullptr);
    CHECK(!std::string(txgc_last_error(ctx.p)).empty());

    write_file(tmp.file("edges.csv"), "u,v\na,b\nb,c\nc,a\nd,e\n");
    REQUIRE(txgc_graph_open(ctx.p, tmp.file("edges.csv").c_str(), &g) == TXGC_OK);
    REQUIRE(g != nullptr);
    CHECK(txgc_graph_nodes(g) == 5);
    CHECK(txgc_graph_edges(g) == 4);

    OwnedString stats;
    REQUIRE(txgc_graph_stats(ctx.p, g, &stats.p) == TXGC_OK);
    json s = json::parse(stats.p);
    CHECK(s.at("accounts").get<size_t>() == 5);
    CHECK(s.at("transactions").get<size_t>() == 4);
    CHECK(s.at("connectivity").get<double>() == doctest::Approx(0.6));
    txgc_graph_close(g);
}
