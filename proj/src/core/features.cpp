#include "core/features.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "core/common.hpp"
#include "core/rng.hpp"

namespace txgc {

const std::array<std::string, kFeatureCount>& feature_names() {
    static const std::array<std::string, kFeatureCount> names = {
        "starting_balance_eth",
        "final_balance_eth",
        "diff_balance_eth",
        "total_received_eth",
        "max_value_received_eth",
        "min_value_received_eth",
        "avg_value_received_eth",
        "std_value_received_eth",
        "total_sent_eth",
        "max_value_sent_eth",
        "min_value_sent_eth",
        "avg_value_sent_eth",
        "std_value_sent_eth",
        "max_single_neighbor_count",
        "max_single_neighbor_value_eth",
        "avg_single_neighbor_count",
        "avg_single_neighbor_value_eth",
        "num_received_single_neighbor",
        "num_sent_single_neighbor",
        "diff_rs_neighbor_count",
        "std_dev_received",
        "std_dev_sent",
        "lifecycle_min",
        "avg_min_between_sent_tnx",
        "avg_min_between_sent_value_eth",
        "avg_min_between_received_tnx",
        "avg_min_between_received_value_eth",
        "if_sc",
        "if_token",
    };
    return names;
}

int feature_index(std::string_view name) {
    const auto& names = feature_names();
    for (size_t i = 0; i < names.size(); ++i) {
        if (names[i] == name) return static_cast<int>(i);
    }
    return -1;
}

int64_t FeatureMatrix::row_of(const std::string& id) const {
    auto it = row_lookup_.find(id);
    return it == row_lookup_.end() ? -1 : it->second;
}

void FeatureMatrix::rebuild_row_lookup() {
    row_lookup_.clear();
    row_lookup_.reserve(account_ids.size());
    for (size_t i = 0; i < account_ids.size(); ++i) row_lookup_.emplace(account_ids[i], static_cast<int64_t>(i));
}

size_t FeatureMatrix::selected_count() const {
    size_t n = 0;
    for (bool b : mask) n += b ? 1 : 0;
    return n;
}

std::vector<int> FeatureMatrix::selected_columns() const {
    std::vector<int> out;
    for (size_t i = 0; i < mask.size(); ++i) {
        if (mask[i]) out.push_back(static_cast<int>(i));
    }
    return out;
}

namespace {

// Fold in ascending value order so results do not depend on transaction
// order in the input file.
double sorted_sum(std::vector<double>& values) {
    std::sort(values.begin(), values.end());
    double s = 0.0;
    for (double v : values) s += v;
    return s;
}

double population_std(const std::vector<double>& values, double mean) {
    if (values.size() < 2) return 0.0;
    double acc = 0.0;
    for (double v : values) acc += (v - mean) * (v - mean);
    return std::sqrt(acc / static_cast<double>(values.size()));
}

struct DirStats {
    double total = 0.0, maxv = 0.0, minv = 0.0, avg = 0.0, stddev = 0.0;
    size_t count = 0;
};

DirStats direction_stats(std::vector<double>& values) {
    DirStats s;
    s.count = values.size();
    if (values.empty()) return s;
    s.total = sorted_sum(values);  // sorts in place
    s.minv = values.front();
    s.maxv = values.back();
    s.avg = s.total / static_cast<double>(values.size());
    s.stddev = population_std(values, s.avg);
    return s;
}

}  // namespace

FeatureMatrix extract_features(const InitialGraph& ig, const std::vector<AccountProfile>& profiles,
                               const FeatureOptions& opts) {
    const Graph& g = ig.graph;
    std::unordered_map<std::string, const AccountProfile*> profile_of;
    profile_of.reserve(profiles.size());
    for (const auto& p : profiles) profile_of[p.id] = &p;

    FeatureMatrix m;
    m.account_ids = g.ids();
    m.data.assign(g.node_count() * kFeatureCount, 0.0);
    m.mask.assign(kFeatureCount, true);

    for (int32_t node = 0; node < static_cast<int32_t>(g.node_count()); ++node) {
        const std::string& id = g.id_of(node);
        if (ig.tx_index[node].empty()) throw InternalError("graph node without transactions: " + id);

        const AccountProfile* prof = nullptr;
        if (auto it = profile_of.find(id); it != profile_of.end()) prof = it->second;
        if (opts.require_snapshots && (prof == nullptr || !prof->starting_balance_eth.has_value()))
            throw DataError("account " + id + " has no starting-balance snapshot (required)");

        std::vector<double> in_values, out_values;
        // Keyed by neighbor index so iteration order is canonical.
        std::map<int32_t, std::vector<double>> neighbor_values;
        std::map<int32_t, int64_t> neighbor_counts;
        std::map<int32_t, int64_t> payer_counts;  // unique senders to this account
        std::map<int32_t, int64_t> payee_counts;  // unique recipients from this account
        int64_t first_ts = 0, last_ts = 0;
        bool any_tx = false;

        for (size_t ti : ig.tx_index[node]) {
            const TransactionRecord& tx = ig.transactions[ti];
            bool incoming = tx.to_id == id;
            int32_t other = g.index_of(incoming ? tx.from_id : tx.to_id);
            if (incoming) {
                in_values.push_back(tx.value_eth);
                payer_counts[other] += 1;
            } else {
                out_values.push_back(tx.value_eth);
                payee_counts[other] += 1;
            }
            neighbor_values[other].push_back(tx.value_eth);
            neighbor_counts[other] += 1;
            if (!any_tx) {
                first_ts = last_ts = tx.timestamp;
                any_tx = true;
            } else {
                first_ts = std::min(first_ts, tx.timestamp);
                last_ts = std::max(last_ts, tx.timestamp);
            }
        }

        DirStats in = direction_stats(in_values);
        DirStats out = direction_stats(out_values);

        double starting = 0.0;
        if (prof && prof->starting_balance_eth.has_value()) starting = *prof->starting_balance_eth;
        double final_balance = starting + in.total - out.total;

        double* row = &m.data[static_cast<size_t>(node) * kFeatureCount];
        row[0] = starting;
        row[1] = final_balance;
        row[2] = final_balance - starting;
        row[3] = in.total;
        row[4] = in.maxv;
        row[5] = in.minv;
        row[6] = in.avg;
        row[7] = in.stddev;
        row[8] = out.total;
        row[9] = out.maxv;
        row[10] = out.minv;
        row[11] = out.avg;
        row[12] = out.stddev;

        double max_cnt = 0.0, max_val = 0.0, sum_cnt = 0.0, sum_val = 0.0;
        size_t n_neighbors = neighbor_counts.size();
        for (auto& [nbr, vals] : neighbor_values) {
            double total = sorted_sum(vals);
            double cnt = static_cast<double>(neighbor_counts[nbr]);
            max_cnt = std::max(max_cnt, cnt);
            max_val = std::max(max_val, total);
            sum_cnt += cnt;
            sum_val += total;
        }
        row[13] = max_cnt;
        row[14] = max_val;
        row[15] = n_neighbors ? sum_cnt / static_cast<double>(n_neighbors) : 0.0;
        row[16] = n_neighbors ? sum_val / static_cast<double>(n_neighbors) : 0.0;

        double n_payees = static_cast<double>(payee_counts.size());
        double n_payers = static_cast<double>(payer_counts.size());
        std::vector<double> per_payer, per_payee;
        per_payer.reserve(payer_counts.size());
        per_payee.reserve(payee_counts.size());
        for (const auto& [k, c] : payer_counts) per_payer.push_back(static_cast<double>(c));
        for (const auto& [k, c] : payee_counts) per_payee.push_back(static_cast<double>(c));
        double payer_mean = per_payer.empty() ? 0.0 : std::accumulate(per_payer.begin(), per_payer.end(), 0.0) /
                                                          static_cast<double>(per_payer.size());
        double payee_mean = per_payee.empty() ? 0.0 : std::accumulate(per_payee.begin(), per_payee.end(), 0.0) /
                                                          static_cast<double>(per_payee.size());
        // Canonical reading: num_received counts unique payees, num_sent
        // counts unique payers; the invert flag swaps the two.
        row[17] = opts.invert_directed_neighbor_naming ? n_payers : n_payees;
        row[18] = opts.invert_directed_neighbor_naming ? n_payees : n_payers;
        row[19] = row[17] - row[18];
        row[20] = population_std(per_payer, payer_mean);
        row[21] = population_std(per_payee, payee_mean);

        double lifecycle_min = std::max(1.0, static_cast<double>(last_ts - first_ts) / 60.0);
        row[22] = lifecycle_min;
        row[23] = static_cast<double>(out.count) / lifecycle_min;
        row[24] = out.total / lifecycle_min;
        row[25] = static_cast<double>(in.count) / lifecycle_min;
        row[26] = in.total / lifecycle_min;

        row[27] = (prof && prof->is_contract) ? 1.0 : 0.0;
        row[28] = (prof && prof->is_token) ? 1.0 : 0.0;
    }

    m.rebuild_row_lookup();
    return m;
}

ZScoreStats fit_zscore(const FeatureMatrix& m, const std::vector<size_t>& fit_rows) {
    if (fit_rows.empty()) throw ConfigError("z-score fit requires at least one row");
    ZScoreStats s;
    double n = static_cast<double>(fit_rows.size());
    for (size_t c = 0; c < kFeatureCount; ++c) {
        if (!m.mask[c]) continue;
        double sum = 0.0;
        for (size_t r : fit_rows) sum += m.at(r, c);
        double mean = sum / n;
        double acc = 0.0;
        for (size_t r : fit_rows) {
            double d = m.at(r, c) - mean;
            acc += d * d;
        }
        s.mean[c] = mean;
        s.stddev[c] = std::sqrt(acc / n);
    }
    return s;
}

FeatureMatrix apply_zscore(const FeatureMatrix& m, const ZScoreStats& stats) {
    FeatureMatrix out = m;
    for (size_t c = 0; c < kFeatureCount; ++c) {
        if (!m.mask[c]) continue;
        double sd = stats.stddev[c];
        for (size_t r = 0; r < m.rows(); ++r) {
            out.at(r, c) = sd > 0.0 ? (m.at(r, c) - stats.mean[c]) / sd : 0.0;
        }
    }
    out.rebuild_row_lookup();
    return out;
}

ImportanceRanking make_ranking(const std::array<double, kFeatureCount>& scores) {
    ImportanceRanking r;
    r.scores = scores;
    r.order.resize(kFeatureCount);
    std::iota(r.order.begin(), r.order.end(), 0);
    std::stable_sort(r.order.begin(), r.order.end(), [&](int a, int b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        return a < b;
    });
    return r;
}

const std::array<std::string, 9>& paper_low_importance_preset() {
    static const std::array<std::string, 9> preset = {
        "starting_balance_eth",
        "max_value_received_eth",
        "avg_value_received_eth",
        "std_value_received_eth",
        "max_single_neighbor_count",
        "max_single_neighbor_value_eth",
        "avg_single_neighbor_value_eth",
        "avg_min_between_sent_value_eth",
        "avg_min_between_received_tnx",
    };
    return preset;
}

std::vector<bool> select_low_importance(const ImportanceRanking& ranking, size_t k, bool use_paper_preset) {
    if (k < 1 || k > kFeatureCount) throw ConfigError("feature count k must be in [1, 29]");
    std::vector<bool> mask(kFeatureCount, false);
    if (use_paper_preset) {
        if (k != 9) throw ConfigError("the low-importance preset is defined for k=9 only");
        for (const auto& name : paper_low_importance_preset()) mask[feature_index(name)] = true;
        return mask;
    }
    // Lowest k = tail of the descending order.
    for (size_t i = kFeatureCount - k; i < kFeatureCount; ++i) mask[ranking.order[i]] = true;
    return mask;
}

std::vector<std::vector<bool>> evasion_attack(const ImportanceRanking& ranking, const std::vector<size_t>& sizes) {
    std::vector<std::vector<bool>> out;
    out.reserve(sizes.size());
    for (size_t s : sizes) {
        if (s < 1 || s > kFeatureCount) throw ConfigError("feature-set size must be in [1, 29]");
        std::vector<bool> mask(kFeatureCount, true);
        for (size_t i = 0; i < kFeatureCount - s; ++i) mask[ranking.order[i]] = false;
        out.push_back(std::move(mask));
    }
    return out;
}

std::vector<std::vector<bool>> random_removal(const std::vector<size_t>& sizes, uint64_t seed) {
    std::vector<std::vector<bool>> out;
    out.reserve(sizes.size());
    for (size_t s : sizes) {
        if (s < 1 || s > kFeatureCount) throw ConfigError("feature-set size must be in [1, 29]");
        Rng rng = Rng::derive(seed, s);
        std::vector<bool> mask(kFeatureCount, true);
        for (size_t idx : rng.sample_without_replacement(kFeatureCount, kFeatureCount - s)) mask[idx] = false;
        out.push_back(std::move(mask));
    }
    return out;
}

}  // namespace txgc
