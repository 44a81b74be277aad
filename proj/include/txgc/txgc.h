/* C interface to the transaction-graph compression library.
 *
 * All functions are thread-compatible: one context per thread. Strings
 * returned through out-parameters are heap-allocated and must be released
 * with txgc_string_free().
 */
#ifndef TXGC_TXGC_H
#define TXGC_TXGC_H

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum txgc_status {
    TXGC_OK = 0,
    TXGC_ERROR_CONFIG = 2,   /* invalid options, missing inputs */
    TXGC_ERROR_DATA = 3,     /* unreadable or inconsistent data */
    TXGC_ERROR_INTERNAL = 4  /* broken invariant; please report */
} txgc_status;

/* Opaque handle carrying the last error message of its operations. */
typedef struct txgc_ctx txgc_ctx;

txgc_ctx* txgc_ctx_new(void);
void txgc_ctx_free(txgc_ctx* ctx);

/* Message of the most recent failed call on this context; empty string if
 * the last call succeeded. Owned by the context, valid until the next call. */
const char* txgc_last_error(const txgc_ctx* ctx);

/* Library version, static storage. */
const char* txgc_version(void);

/* Runs one pipeline stage. `stage` is one of: synth, ingest, features,
 * rank, attack, focus, coarsen, sample, stats, detect, pipeline.
 * `options_json` is a JSON object (stage-specific keys; NULL means {}).
 * On success and when `report_json` is non-NULL, *report_json receives the
 * stage report as a JSON string; free it with txgc_string_free(). */
txgc_status txgc_run(txgc_ctx* ctx, const char* stage, const char* options_json, char** report_json);

void txgc_string_free(char* s);

/* ---- direct graph access ---- */

typedef struct txgc_graph txgc_graph;

/* Loads an undirected graph from a `u,v` edge CSV. */
txgc_status txgc_graph_open(txgc_ctx* ctx, const char* edges_csv_path, txgc_graph** out_graph);
void txgc_graph_close(txgc_graph* graph);

size_t txgc_graph_nodes(const txgc_graph* graph);
size_t txgc_graph_edges(const txgc_graph* graph);

/* Node/edge counts, average degree and largest-component share as a JSON
 * string; free with txgc_string_free(). */
txgc_status txgc_graph_stats(txgc_ctx* ctx, const txgc_graph* graph, char** stats_json);

#ifdef __cplusplus
}
#endif

#endif
