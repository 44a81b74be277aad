#ifndef TXGC_CORE_INGEST_HPP
#define TXGC_CORE_INGEST_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "core/graph.hpp"

namespace txgc {

struct TransactionRecord {
    std::string from_id;
    std::string to_id;
    double value_eth = 0.0;
    int64_t timestamp = 0;
};

enum class AccountLabel { Malicious, Normal, Unlabeled };

struct AccountProfile {
    std::string id;
    bool is_contract = false;
    bool is_token = false;
    AccountLabel label = AccountLabel::Unlabeled;
    std::optional<double> starting_balance_eth;
};

// Half-open interval [start, end) in epoch seconds.
struct StudyWindow {
    int64_t start = 0;
    int64_t end = 0;

    bool contains(int64_t ts) const { return ts >= start && ts < end; }
};

// Default study period, 2018-01-01 to 2020-01-01 UTC.
StudyWindow default_window();

// Accepts epoch seconds or an ISO date "YYYY-MM-DD" (UTC midnight).
int64_t parse_time_point(const std::string& text);
StudyWindow make_window(const std::string& start, const std::string& end);

struct IngestReport {
    size_t total_rows = 0;
    size_t records = 0;
    size_t dropped_out_of_window = 0;
    size_t dropped_self_transfer = 0;
    size_t dropped_malformed = 0;
};

struct IngestOptions {
    bool strict = false;  // malformed row becomes fatal instead of skipped
};

// Reads `from,to,value_eth,timestamp` CSV, or JSON-lines with the same field
// names when the first non-blank byte is '{'.
std::vector<TransactionRecord> load_transactions(const std::string& path, const StudyWindow& window,
                                                 IngestReport& report, const IngestOptions& opts = {});

// Reads `id,is_contract,is_token,label,starting_balance_eth` CSV.
std::vector<AccountProfile> load_accounts(const std::string& path, const IngestOptions& opts = {});

struct GraphBuildReport {
    std::vector<std::string> excluded_labeled_accounts;  // labeled, zero in-window transactions
};

struct InitialGraph {
    Graph graph;
    // Per node, indices into the ingested transaction list, both directions.
    std::vector<std::vector<size_t>> tx_index;
    std::vector<TransactionRecord> transactions;
};

InitialGraph build_initial_graph(std::vector<TransactionRecord> txs, const std::vector<AccountProfile>& profiles,
                                 GraphBuildReport& report);

// Target node indices: labeled accounts present in the graph, ascending.
std::vector<int32_t> target_indices(const Graph& g, const std::vector<AccountProfile>& profiles);

}  // namespace txgc

#endif
