#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <map>
#include <set>

#include "core/common.hpp"
#include "core/rng.hpp"
#include "core/topology.hpp"
#include "support/oracles.hpp"
#include "support/testutil.hpp"

using namespace txgc;
using txgc::testing::oracle_roles;
using txgc::testing::random_graph;
using txgc::testing::rel_close;

namespace {

Graph make_graph(std::vector<std::string> ids, const std::vector<std::pair<std::string, std::string>>& edge_list) {
    Graph g = Graph::from_nodes(std::move(ids));
    for (const auto& [a, b] : edge_list) g.add_edge(g.index_of(a), g.index_of(b));
    g.finalize();
    return g;
}

std::vector<int32_t> targets_of(const Graph& g, const std::vector<std::string>& ids) {
    std::vector<int32_t> out;
    for (const auto& id : ids) out.push_back(g.index_of(id));
    std::sort(out.begin(), out.end());
    return out;
}

// Feature matrix whose first column carries the given scalar per account;
// all other columns stay zero.
FeatureMatrix scalar_features(const std::map<std::string, double>& values) {
    FeatureMatrix m;
    for (const auto& [id, v] : values) m.account_ids.push_back(id);
    m.data.assign(m.account_ids.size() * kFeatureCount, 0.0);
    m.mask.assign(kFeatureCount, true);
    for (size_t r = 0; r < m.account_ids.size(); ++r) m.at(r, 0) = values.at(m.account_ids[r]);
    m.rebuild_row_lookup();
    return m;
}

double coarse_value(const CoarsenedGraph& gc, const std::string& id) {
    int64_t row = gc.features.row_of(id);
    REQUIRE(row >= 0);
    return gc.features.at(static_cast<size_t>(row), 0);
}

}  // namespace

TEST_CASE("common neighbor of two targets is a first-order bridge") {
    Graph g = make_graph({"t1", "t2", "b"}, {{"t1", "b"}, {"b", "t2"}});
    auto targets = targets_of(g, {"t1", "t2"});
    auto roles = classify_roles(g, targets);
    int32_t b = g.index_of("b");
    CHECK(roles.roles[b] == Role::Bridge1);
    REQUIRE(roles.memberships[b].size() == 1);
    CHECK(roles.memberships[b][0] == BridgeMembership{targets[0], targets[1], 1, BridgeSide::None});
}

TEST_CASE("interior nodes of a length-3 path are second-order bridges with sides") {
    Graph g = make_graph({"t1", "t2", "c1", "c2"}, {{"t1", "c1"}, {"c1", "c2"}, {"c2", "t2"}});
    auto targets = targets_of(g, {"t1", "t2"});
    auto roles = classify_roles(g, targets);
    int32_t c1 = g.index_of("c1"), c2 = g.index_of("c2");
    CHECK(roles.roles[c1] == Role::Bridge2);
    CHECK(roles.roles[c2] == Role::Bridge2);
    // t1 is the lexicographically smaller target, and c1 touches it.
    CHECK(roles.memberships[c1][0].side == BridgeSide::Lesser);
    CHECK(roles.memberships[c2][0].side == BridgeSide::Greater);
}

TEST_CASE("a node serving both orders is hybrid") {
    Graph g = make_graph({"t1", "t2", "b", "c"},
                         {{"t1", "b"}, {"b", "t2"}, {"b", "c"}, {"c", "t2"}});
    auto targets = targets_of(g, {"t1", "t2"});
    auto roles = classify_roles(g, targets);
    CHECK(roles.roles[g.index_of("b")] == Role::Hybrid);
    CHECK(roles.roles[g.index_of("c")] == Role::Bridge2);
}

TEST_CASE("plain target neighbors are subordinates, the rest background") {
    Graph g = make_graph({"t1", "s", "x", "y"}, {{"t1", "s"}, {"x", "y"}});
    auto roles = classify_roles(g, targets_of(g, {"t1"}));
    CHECK(roles.roles[g.index_of("s")] == Role::Subordinate);
    CHECK(roles.memberships[g.index_of("s")].empty());
    CHECK(roles.roles[g.index_of("x")] == Role::Background);
    CHECK_FALSE(roles.empty_target_warning);
}

TEST_CASE("empty target set flags a warning and leaves everything background") {
    Graph g = make_graph({"a", "b"}, {{"a", "b"}});
    auto roles = classify_roles(g, {});
    CHECK(roles.empty_target_warning);
    CHECK(roles.roles[0] == Role::Background);
}

TEST_CASE("randomized role maps match the path-enumeration oracle") {
    Rng picker(2024);
    for (int trial = 0; trial < 150; ++trial) {
        size_t n = 4 + static_cast<size_t>(picker.below(7));  // 4..10 nodes
        Graph g = random_graph(n, 0.35, 5000 + static_cast<uint64_t>(trial));
        size_t n_targets = 1 + static_cast<size_t>(picker.below(3));
        Rng tr(9000 + static_cast<uint64_t>(trial));
        std::vector<int32_t> targets;
        for (size_t idx : tr.sample_without_replacement(n, n_targets)) targets.push_back(static_cast<int32_t>(idx));
        std::sort(targets.begin(), targets.end());

        auto got = classify_roles(g, targets);
        auto want = oracle_roles(g, targets);
        for (size_t v = 0; v < n; ++v) {
            INFO("trial ", trial, " node ", v);
            CHECK(got.roles[v] == want.roles[v]);
            std::set<BridgeMembership> got_ms(got.memberships[v].begin(), got.memberships[v].end());
            CHECK(got_ms == want.memberships[v]);
        }
    }
}

TEST_CASE("focusing prunes redundant order-2 structure per the worked example") {
    // Pair (t1, t2) has both a direct middleman and a two-node relay; the
    // relay's memberships disappear and its nodes downgrade to subordinates.
    Graph g = make_graph({"t1", "t2", "b", "c1", "c2"},
                         {{"t1", "b"}, {"b", "t2"}, {"t1", "c1"}, {"c1", "c2"}, {"c2", "t2"}});
    auto targets = targets_of(g, {"t1", "t2"});
    auto roles = classify_roles(g, targets);
    auto focused = focus(g, targets, roles);

    CHECK(focused.graph.node_count() == 5);  // nobody dropped, roles change
    int32_t b = focused.graph.index_of("b");
    int32_t c1 = focused.graph.index_of("c1");
    int32_t c2 = focused.graph.index_of("c2");
    CHECK(focused.roles[b] == Role::Bridge1);
    CHECK(focused.roles[c1] == Role::Subordinate);
    CHECK(focused.roles[c2] == Role::Subordinate);
    CHECK(focused.memberships[c1].empty());
    CHECK(focused.memberships[c2].empty());
    CHECK(focused.graph.has_edge(c1, c2));  // retained wholesale

    // Both targets stay connected through the surviving bridge.
    auto labels = focused.graph.component_labels();
    CHECK(labels[focused.graph.index_of("t1")] == labels[focused.graph.index_of("t2")]);
}

TEST_CASE("focusing drops pure background nodes and keeps target stars intact") {
    Graph g = make_graph({"t1", "s1", "s2", "s3", "x", "y"},
                         {{"t1", "s1"}, {"t1", "s2"}, {"t1", "s3"}, {"x", "y"}, {"s1", "x"}});
    auto targets = targets_of(g, {"t1"});
    auto roles = classify_roles(g, targets);
    auto focused = focus(g, targets, roles);
    CHECK(focused.graph.node_count() == 4);  // x and y are gone
    CHECK(focused.graph.index_of("x") == -1);
    auto counts = role_counts(focused.roles);
    CHECK(counts["target"] == 1);
    CHECK(counts["subordinate"] == 3);
    CHECK(counts["background"] == 0);
}

TEST_CASE("randomized focusing keeps 2-hop-connected target pairs connected") {
    for (int trial = 0; trial < 150; ++trial) {
        size_t n = 5 + static_cast<size_t>(trial % 6);  // 5..10 nodes
        Graph g = random_graph(n, 0.3, 7000 + static_cast<uint64_t>(trial));
        Rng tr(300 + static_cast<uint64_t>(trial));
        std::vector<int32_t> targets;
        for (size_t idx : tr.sample_without_replacement(n, 1 + trial % 3))
            targets.push_back(static_cast<int32_t>(idx));
        std::sort(targets.begin(), targets.end());

        auto roles = classify_roles(g, targets);
        auto focused = focus(g, targets, roles);

        std::vector<bool> is_target(n, false);
        for (int32_t t : targets) is_target[t] = true;

        // Pairs served by an order-1 bridge carry no order-2 membership
        // after pruning.
        std::set<std::pair<int32_t, int32_t>> bridged1;
        for (const auto& ms : roles.memberships)
            for (const auto& m : ms)
                if (m.order == 1) bridged1.insert({m.lo, m.hi});
        for (const auto& ms : focused.memberships)
            for (const auto& m : ms)
                if (m.order == 2) CHECK_FALSE(bridged1.count({m.lo, m.hi}));

        // Focused node -> component id, for connectivity checks.
        auto comp = focused.graph.component_labels();
        auto focused_of = [&](int32_t orig) {
            for (size_t v = 0; v < focused.orig_index.size(); ++v)
                if (focused.orig_index[v] == orig) return static_cast<int32_t>(v);
            return static_cast<int32_t>(-1);
        };

        for (size_t i = 0; i < targets.size(); ++i) {
            for (size_t j = i + 1; j < targets.size(); ++j) {
                int32_t ti = targets[i], tj = targets[j];
                bool close = g.has_edge(ti, tj);
                for (int32_t c = 0; c < static_cast<int32_t>(n) && !close; ++c) {
                    if (is_target[c]) continue;
                    if (g.has_edge(ti, c) && g.has_edge(c, tj)) close = true;
                    for (int32_t d = 0; d < static_cast<int32_t>(n) && !close; ++d) {
                        if (d == c || is_target[d]) continue;
                        if (g.has_edge(ti, c) && g.has_edge(c, d) && g.has_edge(d, tj)) close = true;
                    }
                }
                if (close) {
                    INFO("trial ", trial, " pair ", ti, ",", tj);
                    CHECK(comp[focused_of(ti)] == comp[focused_of(tj)]);
                }
            }
        }
    }
}

TEST_CASE("target aggregation averages the target with its subordinates") {
    Graph g = make_graph({"t", "s1", "s2"}, {{"t", "s1"}, {"t", "s2"}});
    auto targets = targets_of(g, {"t"});
    auto focused = focus(g, targets, classify_roles(g, targets));
    auto features = scalar_features({{"t", 2.0}, {"s1", 4.0}, {"s2", 6.0}});
    auto gc = coarsen(focused, features);
    CHECK(gc.graph.node_count() == 1);
    CHECK(coarse_value(gc, "t") == doctest::Approx(4.0).epsilon(1e-12));
    CHECK(gc.pair_count_order1 == 0);
    CHECK(gc.pair_count_order2 == 0);
}

TEST_CASE("first-order composite takes the member mean and connects both targets") {
    Graph g = make_graph({"t1", "t2", "b1", "b2"},
                         {{"t1", "b1"}, {"b1", "t2"}, {"t1", "b2"}, {"b2", "t2"}});
    auto targets = targets_of(g, {"t1", "t2"});
    auto focused = focus(g, targets, classify_roles(g, targets));
    auto features = scalar_features({{"t1", 0.0}, {"t2", 0.0}, {"b1", 1.0}, {"b2", 3.0}});
    auto gc = coarsen(focused, features);

    CHECK(gc.graph.node_count() == 3);
    CHECK(gc.pair_count_order1 == 1);
    std::string comp = "br1|t1|t2";
    CHECK(coarse_value(gc, comp) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(gc.graph.has_edge(gc.graph.index_of("t1"), gc.graph.index_of(comp)));
    CHECK(gc.graph.has_edge(gc.graph.index_of(comp), gc.graph.index_of("t2")));
    REQUIRE(gc.provenance.size() == 1);
    CHECK(gc.provenance[0].sources == std::vector<std::string>{"b1", "b2"});
}

TEST_CASE("order-2 normalization differs between the two modes by design") {
    Graph g = make_graph({"t1", "t2", "c", "d"}, {{"t1", "c"}, {"c", "d"}, {"d", "t2"}});
    auto targets = targets_of(g, {"t1", "t2"});
    auto focused = focus(g, targets, classify_roles(g, targets));
    auto features = scalar_features({{"t1", 0.0}, {"t2", 0.0}, {"c", 2.0}, {"d", 4.0}});

    auto literal = coarsen(focused, features, CoarsenMode::PaperLiteral);
    // Two distinct order-2 members for the pair: each side sum is divided
    // by 2 * 2 = 4.
    CHECK(coarse_value(literal, "br2l|t1|t2") == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(coarse_value(literal, "br2r|t1|t2") == doctest::Approx(1.0).epsilon(1e-12));

    auto mean = coarsen(focused, features, CoarsenMode::PerSideMean);
    CHECK(coarse_value(mean, "br2l|t1|t2") == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(coarse_value(mean, "br2r|t1|t2") == doctest::Approx(4.0).epsilon(1e-12));

    // Wiring forms the chain t1 - L - R - t2.
    const Graph& cg = literal.graph;
    CHECK(cg.node_count() == 4);
    CHECK(literal.pair_count_order2 == 1);
    CHECK(cg.has_edge(cg.index_of("t1"), cg.index_of("br2l|t1|t2")));
    CHECK(cg.has_edge(cg.index_of("br2l|t1|t2"), cg.index_of("br2r|t1|t2")));
    CHECK(cg.has_edge(cg.index_of("br2r|t1|t2"), cg.index_of("t2")));
    CHECK_FALSE(cg.has_edge(cg.index_of("t1"), cg.index_of("br2r|t1|t2")));
}

TEST_CASE("coarsening structure counts and conservation on synthetic graphs") {
    for (uint64_t seed = 1; seed <= 6; ++seed) {
        Graph g = random_graph(30, 0.12, 40000 + seed);
        Rng tr(seed);
        std::vector<int32_t> targets;
        for (size_t idx : tr.sample_without_replacement(30, 5)) targets.push_back(static_cast<int32_t>(idx));
        std::sort(targets.begin(), targets.end());

        auto roles = classify_roles(g, targets);
        auto focused = focus(g, targets, roles);

        std::map<std::string, double> values;
        Rng vr(seed * 77);
        for (const auto& id : focused.graph.ids()) values[id] = vr.uniform(-5.0, 5.0);
        auto features = scalar_features(values);
        auto gc = coarsen(focused, features);

        // Node count identity and the no-subordinate guarantee.
        CHECK(gc.graph.node_count() ==
              focused.targets.size() + gc.pair_count_order1 + 2 * gc.pair_count_order2);
        std::map<CoarseKind, size_t> kind_count;
        for (auto k : gc.kinds) kind_count[k] += 1;
        CHECK(kind_count[CoarseKind::Target] == focused.targets.size());
        CHECK(kind_count[CoarseKind::CompositeBridge2Lesser] == kind_count[CoarseKind::CompositeBridge2Greater]);

        // Mean aggregation conserves the per-group feature sum.
        for (int32_t t : focused.targets) {
            const std::string& id = focused.graph.id_of(t);
            double group_sum = values.at(id);
            size_t group = 1;
            for (int32_t v = 0; v < static_cast<int32_t>(focused.graph.node_count()); ++v) {
                if (focused.roles[v] != Role::Subordinate) continue;
                if (focused.graph.has_edge(v, t)) {
                    group_sum += values.at(focused.graph.id_of(v));
                    group += 1;
                }
            }
            CHECK(rel_close(coarse_value(gc, id) * static_cast<double>(group), group_sum, 1e-9));
        }

        // Every focused bridge node shows up in some composite provenance
        // unless its pair structure was dropped as one-sided.
        if (gc.dropped_one_sided_pairs == 0) {
            std::set<std::string> in_provenance;
            for (const auto& p : gc.provenance) in_provenance.insert(p.sources.begin(), p.sources.end());
            for (int32_t v = 0; v < static_cast<int32_t>(focused.graph.node_count()); ++v) {
                Role r = focused.roles[v];
                if (r == Role::Bridge1 || r == Role::Bridge2 || r == Role::Hybrid) {
                    INFO("seed ", seed, " node ", focused.graph.id_of(v));
                    CHECK(in_provenance.count(focused.graph.id_of(v)) == 1);
                }
            }
        }
    }
}

TEST_CASE("missing feature rows are a data error") {
    Graph g = make_graph({"t", "s"}, {{"t", "s"}});
    auto targets = targets_of(g, {"t"});
    auto focused = focus(g, targets, classify_roles(g, targets));
    auto features = scalar_features({{"t", 1.0}});  // no row for s
    CHECK_THROWS_AS(coarsen(focused, features), DataError);
}

TEST_CASE("random sampling keeps targets, honors the budget and the seed") {
    Graph g = random_graph(40, 0.1, 99);
    std::vector<int32_t> targets = {3, 17, 25};
    auto a = random_sample(g, targets, 12, 5);
    auto b = random_sample(g, targets, 12, 5);
    auto c = random_sample(g, targets, 12, 6);

    CHECK(a.graph.node_count() == 12);
    CHECK(a.orig_index == b.orig_index);
    CHECK(a.orig_index != c.orig_index);
    for (int32_t t : targets)
        CHECK(std::find(a.orig_index.begin(), a.orig_index.end(), t) != a.orig_index.end());

    auto full = random_sample(g, targets, 40, 1);
    CHECK(full.graph.node_count() == g.node_count());
    CHECK(full.graph.edge_count() == g.edge_count());

    CHECK_THROWS_AS(random_sample(g, targets, 2, 1), ConfigError);
    CHECK_THROWS_AS(random_sample(g, targets, 41, 1), ConfigError);
}

TEST_CASE("role name round trips") {
    for (Role r : {Role::Target, Role::Subordinate, Role::Bridge1, Role::Bridge2, Role::Hybrid, Role::Background})
        CHECK(role_from_name(role_name(r)) == r);
    CHECK_THROWS_AS(role_from_name("boss"), DataError);
    CHECK(coarsen_mode_from_name("paper-literal") == CoarsenMode::PaperLiteral);
    CHECK(coarsen_mode_from_name("per-side-mean") == CoarsenMode::PerSideMean);
    CHECK_THROWS_AS(coarsen_mode_from_name("other"), ConfigError);
}
