#ifndef TXGC_CORE_IO_HPP
#define TXGC_CORE_IO_HPP

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "core/detect.hpp"
#include "core/features.hpp"
#include "core/graph.hpp"
#include "core/ingest.hpp"
#include "core/topology.hpp"

namespace txgc {

// All artifacts are plain CSV or JSON so any stage can be inspected or
// replaced by external tooling. Doubles are written in shortest
// round-trip form, which keeps reruns byte-identical.

void write_transactions_csv(const std::string& path, const std::vector<TransactionRecord>& records);
void write_accounts_csv(const std::string& path, const std::vector<AccountProfile>& profiles);

void write_features_csv(const std::string& path, const FeatureMatrix& m);
FeatureMatrix read_features_csv(const std::string& path);

void write_ranking_json(const std::string& path, const ImportanceRanking& ranking);
ImportanceRanking read_ranking_json(const std::string& path);

struct MaskFile {
    std::string mode;  // evasion | random | keep-low | preset
    bool has_seed = false;
    uint64_t seed = 0;
    // (kept-column count, per-column keep flags) per requested size.
    std::vector<std::pair<size_t, std::vector<bool>>> masks;
};

void write_masks_json(const std::string& path, const MaskFile& file);
MaskFile read_masks_json(const std::string& path);

void write_edges_csv(const std::string& path, const Graph& g);
Graph read_edges_csv(const std::string& path);

// One row per node; `annotations` holds the role or composite-kind name.
void write_nodes_csv(const std::string& path, const Graph& g, const std::vector<std::string>& annotations);

void write_provenance_json(const std::string& path, const std::vector<CompositeProvenance>& provenance);

void write_stats_json(const std::string& path, const GraphStats& stats);

nlohmann::json results_to_json(const std::vector<CellResult>& results);
void write_results_csv(const std::string& path, const std::vector<CellResult>& results);

void write_json_file(const std::string& path, const nlohmann::json& j);
nlohmann::json read_json_file(const std::string& path);

}  // namespace txgc

#endif
