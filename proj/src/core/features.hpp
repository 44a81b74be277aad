#ifndef TXGC_CORE_FEATURES_HPP
#define TXGC_CORE_FEATURES_HPP

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "core/ingest.hpp"

namespace txgc {

inline constexpr size_t kFeatureCount = 29;

// Canonical column order: balance (3), income (5), expenditure (5),
// undirected neighbor (4), directed neighbor (5), lifecycle/frequency (5),
// account type (2).
const std::array<std::string, kFeatureCount>& feature_names();
int feature_index(std::string_view name);  // -1 if unknown

struct FeatureMatrix {
    std::vector<std::string> account_ids;       // row order
    std::vector<double> data;                   // row-major, account_ids.size() x 29
    std::vector<bool> mask;                     // per column, true = selected

    size_t rows() const { return account_ids.size(); }
    double at(size_t row, size_t col) const { return data[row * kFeatureCount + col]; }
    double& at(size_t row, size_t col) { return data[row * kFeatureCount + col]; }

    // -1 if the id has no row.
    int64_t row_of(const std::string& id) const;
    void rebuild_row_lookup();

    size_t selected_count() const;
    std::vector<int> selected_columns() const;

  private:
    std::unordered_map<std::string, int64_t> row_lookup_;
};

struct FeatureOptions {
    bool require_snapshots = false;
    // Swaps the two directed-neighbor count columns to the intuitive
    // received=in / sent=out reading; the default follows the canonical
    // description strings (received=unique payees, sent=unique payers).
    bool invert_directed_neighbor_naming = false;
};

// One row per graph node. Every node is expected to have at least one
// indexed transaction; a node without any is an internal error.
FeatureMatrix extract_features(const InitialGraph& ig, const std::vector<AccountProfile>& profiles,
                               const FeatureOptions& opts = {});

struct ZScoreStats {
    std::array<double, kFeatureCount> mean{};
    std::array<double, kFeatureCount> stddev{};  // population
};

// Stats come from `fit_rows` only (training rows); all rows are transformed.
// Zero-variance columns map to 0. Only selected (mask=true) columns are touched.
ZScoreStats fit_zscore(const FeatureMatrix& m, const std::vector<size_t>& fit_rows);
FeatureMatrix apply_zscore(const FeatureMatrix& m, const ZScoreStats& stats);

struct ImportanceRanking {
    std::array<double, kFeatureCount> scores{};  // total split gain per column
    std::vector<int> order;                      // descending score, ties by canonical index
};

ImportanceRanking make_ranking(const std::array<double, kFeatureCount>& scores);

// Keeps the k lowest-scored columns. With use_paper_preset and k=9 returns
// the fixed 9-column low-importance set instead of consulting the ranking.
std::vector<bool> select_low_importance(const ImportanceRanking& ranking, size_t k, bool use_paper_preset = false);

const std::array<std::string, 9>& paper_low_importance_preset();

// For each size s, removes the (29-s) highest-importance columns; the masks
// nest across sizes by construction.
std::vector<std::vector<bool>> evasion_attack(const ImportanceRanking& ranking, const std::vector<size_t>& sizes);

// For each size s, removes (29-s) uniformly random columns; deterministic per
// (seed, s) and independent across sizes (no nesting guarantee).
std::vector<std::vector<bool>> random_removal(const std::vector<size_t>& sizes, uint64_t seed);

}  // namespace txgc

#endif
