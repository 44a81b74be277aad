#include "txgc/txgc.h"

#include <cstdlib>
#include <cstring>
#include <new>
#include <string>

#include <nlohmann/json.hpp>

#include "core/common.hpp"
#include "core/graph.hpp"
#include "core/io.hpp"
#include "core/pipeline.hpp"

struct txgc_ctx {
    std::string last_error;
};

struct txgc_graph {
    txgc::Graph graph;
};

namespace {

constexpr const char* kVersion = "1.0.0";

char* dup_string(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (out == nullptr) return nullptr;
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

// Runs `f`, capturing exceptions into the context's error slot.
template <typename F>
txgc_status guarded(txgc_ctx* ctx, F&& f) {
    if (ctx == nullptr) return TXGC_ERROR_CONFIG;
    ctx->last_error.clear();
    try {
        return f();
    } catch (const txgc::Error& e) {
        ctx->last_error = e.what();
        return static_cast<txgc_status>(static_cast<int>(e.code()));
    } catch (const std::bad_alloc&) {
        ctx->last_error = "out of memory";
        return TXGC_ERROR_INTERNAL;
    } catch (const std::exception& e) {
        ctx->last_error = e.what();
        return TXGC_ERROR_INTERNAL;
    }
}

}  // namespace

extern "C" {

txgc_ctx* txgc_ctx_new(void) { return new (std::nothrow) txgc_ctx(); }

void txgc_ctx_free(txgc_ctx* ctx) { delete ctx; }

const char* txgc_last_error(const txgc_ctx* ctx) {
    if (ctx == nullptr) return "";
    return ctx->last_error.c_str();
}

const char* txgc_version(void) { return kVersion; }

txgc_status txgc_run(txgc_ctx* ctx, const char* stage, const char* options_json, char** report_json) {
    return guarded(ctx, [&]() -> txgc_status {
        if (stage == nullptr) throw txgc::ConfigError("stage must not be null");
        nlohmann::json options = nlohmann::json::object();
        if (options_json != nullptr && options_json[0] != '\0') {
            try {
                options = nlohmann::json::parse(options_json);
            } catch (const nlohmann::json::exception& e) {
                throw txgc::ConfigError(std::string("options are not valid JSON: ") + e.what());
            }
        }
        nlohmann::json report = txgc::run_stage(stage, options);
        if (report_json != nullptr) {
            *report_json = dup_string(report.dump(2));
            if (*report_json == nullptr) throw std::bad_alloc();
        }
        return TXGC_OK;
    });
}

void txgc_string_free(char* s) { std::free(s); }

txgc_status txgc_graph_open(txgc_ctx* ctx, const char* edges_csv_path, txgc_graph** out_graph) {
    return guarded(ctx, [&]() -> txgc_status {
        if (edges_csv_path == nullptr) throw txgc::ConfigError("edges path must not be null");
        if (out_graph == nullptr) throw txgc::ConfigError("out_graph must not be null");
        auto* handle = new txgc_graph{txgc::read_edges_csv(edges_csv_path)};
        *out_graph = handle;
        return TXGC_OK;
    });
}

void txgc_graph_close(txgc_graph* graph) { delete graph; }

size_t txgc_graph_nodes(const txgc_graph* graph) {
    return graph == nullptr ? 0 : graph->graph.node_count();
}

size_t txgc_graph_edges(const txgc_graph* graph) {
    return graph == nullptr ? 0 : graph->graph.edge_count();
}

txgc_status txgc_graph_stats(txgc_ctx* ctx, const txgc_graph* graph, char** stats_json) {
    return guarded(ctx, [&]() -> txgc_status {
        if (graph == nullptr) throw txgc::ConfigError("graph must not be null");
        if (stats_json == nullptr) throw txgc::ConfigError("stats_json must not be null");
        txgc::GraphStats stats = txgc::compute_stats(graph->graph);
        nlohmann::json j{{"accounts", stats.accounts},
                         {"transactions", stats.transactions},
                         {"average_degree", stats.average_degree},
                         {"connectivity", stats.connectivity}};
        *stats_json = dup_string(j.dump(2));
        if (*stats_json == nullptr) throw std::bad_alloc();
        return TXGC_OK;
    });
}

}  // extern "C"
