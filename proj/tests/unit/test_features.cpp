#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>

#include "core/common.hpp"
#include "core/features.hpp"
#include "core/ingest.hpp"
#include "core/rng.hpp"
#include "core/synth.hpp"
#include "support/oracles.hpp"
#include "support/testutil.hpp"

using namespace txgc;
using txgc::testing::oracle_features_for;
using txgc::testing::rel_close;

namespace {

InitialGraph graph_of(std::vector<TransactionRecord> txs, const std::vector<AccountProfile>& profiles) {
    GraphBuildReport report;
    return build_initial_graph(std::move(txs), profiles, report);
}

// A three-account ledger small enough to check columns by hand.
std::vector<TransactionRecord> hand_ledger() {
    return {
        {"a", "b", 2.0, 1514764800},
        {"a", "b", 4.0, 1514764860},   // one minute later
        {"b", "a", 10.0, 1514765100},  // five minutes after start
        {"b", "c", 1.0, 1514765400},
    };
}

}  // namespace

TEST_CASE("column names are unique and the index is their inverse") {
    const auto& names = feature_names();
    std::set<std::string> unique(names.begin(), names.end());
    CHECK(unique.size() == kFeatureCount);
    for (size_t i = 0; i < kFeatureCount; ++i) CHECK(feature_index(names[i]) == static_cast<int>(i));
    CHECK(feature_index("bogus") == -1);
}

TEST_CASE("hand-checked ledger values") {
    std::vector<AccountProfile> profiles = {
        {"a", false, false, AccountLabel::Unlabeled, 100.0},
        {"b", true, false, AccountLabel::Unlabeled, 0.5},
    };
    auto ig = graph_of(hand_ledger(), profiles);
    auto m = extract_features(ig, profiles);
    auto row = [&](const char* id, const char* col) {
        return m.at(static_cast<size_t>(m.row_of(id)), static_cast<size_t>(feature_index(col)));
    };

    // Account a: sent 2+4, received 10.
    CHECK(row("a", "starting_balance_eth") == 100.0);
    CHECK(row("a", "total_sent_eth") == 6.0);
    CHECK(row("a", "total_received_eth") == 10.0);
    CHECK(row("a", "final_balance_eth") == doctest::Approx(104.0));
    CHECK(row("a", "diff_balance_eth") == doctest::Approx(4.0));
    CHECK(row("a", "max_value_sent_eth") == 4.0);
    CHECK(row("a", "min_value_sent_eth") == 2.0);
    CHECK(row("a", "avg_value_sent_eth") == 3.0);
    CHECK(row("a", "std_value_sent_eth") == 1.0);  // population std of {2,4}
    // a's whole activity spans 5 minutes.
    CHECK(row("a", "lifecycle_min") == 5.0);
    CHECK(row("a", "avg_min_between_sent_tnx") == doctest::Approx(2.0 / 5.0));
    CHECK(row("a", "avg_min_between_received_value_eth") == doctest::Approx(10.0 / 5.0));
    // One counterparty (b), three transactions, 16 eth both ways combined.
    CHECK(row("a", "max_single_neighbor_count") == 3.0);
    CHECK(row("a", "avg_single_neighbor_count") == 3.0);
    CHECK(row("a", "max_single_neighbor_value_eth") == 16.0);
    // a paid one unique account and was paid by one.
    CHECK(row("a", "num_received_single_neighbor") == 1.0);
    CHECK(row("a", "num_sent_single_neighbor") == 1.0);
    CHECK(row("a", "diff_rs_neighbor_count") == 0.0);
    CHECK(row("a", "if_sc") == 0.0);

    // Account b: two unique payees (a, c), one payer (a).
    CHECK(row("b", "num_received_single_neighbor") == 2.0);
    CHECK(row("b", "num_sent_single_neighbor") == 1.0);
    CHECK(row("b", "diff_rs_neighbor_count") == 1.0);
    CHECK(row("b", "if_sc") == 1.0);

    // Account c has no profile row: balance columns fall back to zero.
    CHECK(row("c", "starting_balance_eth") == 0.0);
    CHECK(row("c", "final_balance_eth") == 1.0);

    // A single transaction still yields the 1-minute lifecycle floor.
    CHECK(row("c", "lifecycle_min") == 1.0);
    CHECK(row("c", "avg_min_between_received_tnx") == 1.0);
}

TEST_CASE("directed-neighbor naming swap flips the two columns and the diff") {
    std::vector<AccountProfile> profiles;
    auto ig = graph_of(hand_ledger(), profiles);
    auto plain = extract_features(ig, profiles);
    FeatureOptions opts;
    opts.invert_directed_neighbor_naming = true;
    auto swapped = extract_features(ig, profiles, opts);

    size_t b = static_cast<size_t>(plain.row_of("b"));
    int received = feature_index("num_received_single_neighbor");
    int sent = feature_index("num_sent_single_neighbor");
    int diff = feature_index("diff_rs_neighbor_count");
    CHECK(plain.at(b, received) == swapped.at(b, sent));
    CHECK(plain.at(b, sent) == swapped.at(b, received));
    CHECK(plain.at(b, diff) == -swapped.at(b, diff));
}

TEST_CASE("snapshot requirement") {
    std::vector<AccountProfile> profiles = {{"a", false, false, AccountLabel::Unlabeled, 1.0}};
    auto ig = graph_of({{"a", "b", 1.0, 1514764800}}, profiles);
    FeatureOptions opts;
    opts.require_snapshots = true;
    CHECK_THROWS_AS(extract_features(ig, profiles, opts), DataError);  // b lacks a snapshot
    CHECK_NOTHROW(extract_features(ig, profiles));
}

TEST_CASE("random ledgers match the scan-everything oracle") {
    for (uint64_t seed = 1; seed <= 8; ++seed) {
        SyntheticSpec spec;
        spec.n_accounts = 15;
        spec.n_targets = 4;
        spec.seed = seed;
        auto data = synthesize(spec);
        auto ig = graph_of(data.transactions, data.profiles);
        auto m = extract_features(ig, data.profiles);
        for (size_t r = 0; r < m.rows(); ++r) {
            auto expect = oracle_features_for(m.account_ids[r], data.transactions, data.profiles);
            for (size_t c = 0; c < kFeatureCount; ++c) {
                INFO("seed ", seed, " account ", m.account_ids[r], " column ", feature_names()[c]);
                CHECK(rel_close(m.at(r, c), expect[c], 1e-9));
            }
        }
    }
}

TEST_CASE("z-score uses population statistics from the fit rows only") {
    FeatureMatrix m;
    m.account_ids = {"a", "b", "c", "d"};
    m.data.assign(4 * kFeatureCount, 0.0);
    m.mask.assign(kFeatureCount, true);
    m.mask[1] = false;  // deselected column must pass through untouched
    for (size_t r = 0; r < 4; ++r) {
        m.at(r, 0) = static_cast<double>(r);  // 0,1,2,3
        m.at(r, 1) = 7.0;
        m.at(r, 2) = 5.0;  // constant: zero variance
    }
    m.rebuild_row_lookup();

    auto stats = fit_zscore(m, {0, 1});  // mean 0.5, population std 0.5
    CHECK(stats.mean[0] == 0.5);
    CHECK(stats.stddev[0] == 0.5);
    auto z = apply_zscore(m, stats);
    CHECK(z.at(0, 0) == doctest::Approx(-1.0));
    CHECK(z.at(3, 0) == doctest::Approx(5.0));  // transforms all rows, stats from two
    CHECK(z.at(2, 1) == 7.0);                   // masked-out column unchanged
    CHECK(z.at(2, 2) == 0.0);                   // zero variance maps to zero
    CHECK_THROWS_AS(fit_zscore(m, {}), ConfigError);
}

TEST_CASE("ranking breaks score ties by canonical column index") {
    std::array<double, kFeatureCount> scores{};
    scores[5] = 2.0;
    scores[3] = 2.0;
    scores[10] = 9.0;
    auto r = make_ranking(scores);
    CHECK(r.order[0] == 10);
    CHECK(r.order[1] == 3);
    CHECK(r.order[2] == 5);
    // The zero-score tail keeps index order too.
    CHECK(r.order[3] == 0);
    CHECK(r.order[4] == 1);
}

TEST_CASE("low-importance selection keeps the tail of the ranking") {
    std::array<double, kFeatureCount> scores{};
    for (size_t i = 0; i < kFeatureCount; ++i) scores[i] = static_cast<double>(kFeatureCount - i);
    auto ranking = make_ranking(scores);  // order = 0,1,2,...
    auto mask = select_low_importance(ranking, 4);
    for (size_t i = 0; i < kFeatureCount; ++i) CHECK(mask[i] == (i >= kFeatureCount - 4));
    CHECK_THROWS_AS(select_low_importance(ranking, 0), ConfigError);
    CHECK_THROWS_AS(select_low_importance(ranking, 30), ConfigError);
}

TEST_CASE("fixed nine-column preset ignores the measured ranking") {
    std::array<double, kFeatureCount> scores{};
    scores[0] = 100.0;  // starting_balance_eth ranked most important
    auto ranking = make_ranking(scores);
    auto mask = select_low_importance(ranking, 9, true);
    CHECK(mask[0]);  // still selected: the preset is fixed
    size_t count = 0;
    for (bool b : mask) count += b ? 1 : 0;
    CHECK(count == 9);
    for (const auto& name : paper_low_importance_preset()) CHECK(mask[feature_index(name)]);
    CHECK_THROWS_AS(select_low_importance(ranking, 8, true), ConfigError);
}

TEST_CASE("evasion masks nest across sizes") {
    Rng rng(42);
    std::array<double, kFeatureCount> scores{};
    for (auto& s : scores) s = rng.next_double();
    auto ranking = make_ranking(scores);
    auto masks = evasion_attack(ranking, {29, 24, 19, 14, 9});
    for (size_t k = 1; k < masks.size(); ++k) {
        for (size_t c = 0; c < kFeatureCount; ++c) {
            if (masks[k][c]) CHECK(masks[k - 1][c]);  // smaller sets are subsets
        }
    }
    // Size 29 removes nothing; size 9 removes the top 20.
    for (bool b : masks[0]) CHECK(b);
    CHECK_FALSE(masks[4][ranking.order[0]]);
}

TEST_CASE("random removal is deterministic per seed and size") {
    auto a = random_removal({20, 9}, 7);
    auto b = random_removal({20, 9}, 7);
    CHECK(a == b);
    auto c = random_removal({20, 9}, 8);
    CHECK(a != c);
    size_t kept = 0;
    for (bool keep : a[1]) kept += keep ? 1 : 0;
    CHECK(kept == 9);
}
