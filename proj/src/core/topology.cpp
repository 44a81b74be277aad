#include "core/topology.hpp"

#include <algorithm>
#include <set>

#include "core/common.hpp"
#include "core/rng.hpp"

namespace txgc {

const char* role_name(Role r) {
    switch (r) {
        case Role::Target: return "target";
        case Role::Subordinate: return "subordinate";
        case Role::Bridge1: return "bridge1";
        case Role::Bridge2: return "bridge2";
        case Role::Hybrid: return "hybrid";
        case Role::Background: return "background";
    }
    return "background";
}

Role role_from_name(std::string_view name) {
    if (name == "target") return Role::Target;
    if (name == "subordinate") return Role::Subordinate;
    if (name == "bridge1") return Role::Bridge1;
    if (name == "bridge2") return Role::Bridge2;
    if (name == "hybrid") return Role::Hybrid;
    if (name == "background") return Role::Background;
    throw DataError("unknown role name '" + std::string(name) + "'");
}

CoarsenMode coarsen_mode_from_name(std::string_view name) {
    if (name == "paper-literal") return CoarsenMode::PaperLiteral;
    if (name == "per-side-mean") return CoarsenMode::PerSideMean;
    throw ConfigError("unknown coarsen mode '" + std::string(name) + "' (expected paper-literal or per-side-mean)");
}

const char* coarsen_mode_name(CoarsenMode m) {
    return m == CoarsenMode::PaperLiteral ? "paper-literal" : "per-side-mean";
}

namespace {

Role role_from_memberships(const std::vector<BridgeMembership>& ms, bool adjacent_to_target) {
    bool has1 = false, has2 = false;
    for (const auto& m : ms) {
        if (m.order == 1) has1 = true;
        else has2 = true;
    }
    if (has1 && has2) return Role::Hybrid;
    if (has1) return Role::Bridge1;
    if (has2) return Role::Bridge2;
    return adjacent_to_target ? Role::Subordinate : Role::Background;
}

}  // namespace

RoleMap classify_roles(const Graph& g, const std::vector<int32_t>& targets) {
    RoleMap out;
    size_t n = g.node_count();
    out.roles.assign(n, Role::Background);
    out.memberships.resize(n);
    if (targets.empty()) {
        out.empty_target_warning = true;
        return out;
    }

    std::vector<bool> is_target(n, false);
    for (int32_t t : targets) {
        if (t < 0 || static_cast<size_t>(t) >= n) throw ConfigError("target index out of range");
        is_target[t] = true;
        out.roles[t] = Role::Target;
    }

    // Adjacent targets per non-target node, ascending (index order is id order).
    std::vector<std::vector<int32_t>> target_adj(n);
    for (int32_t v = 0; v < static_cast<int32_t>(n); ++v) {
        if (is_target[v]) continue;
        for (int32_t u : g.neighbors(v)) {
            if (is_target[u]) target_adj[v].push_back(u);
        }
    }

    // First order: common neighbor of two distinct targets.
    for (int32_t v = 0; v < static_cast<int32_t>(n); ++v) {
        const auto& ts = target_adj[v];
        for (size_t a = 0; a + 1 < ts.size(); ++a) {
            for (size_t b = a + 1; b < ts.size(); ++b) {
                out.memberships[v].push_back({ts[a], ts[b], 1, BridgeSide::None});
            }
        }
    }

    // Second order: background edge (u, v) with u adjacent to Ti and v
    // adjacent to Tj, Ti != Tj. The endpoint adjacent to the smaller target
    // id is the pair's lesser side.
    for (int32_t u = 0; u < static_cast<int32_t>(n); ++u) {
        if (is_target[u]) continue;
        for (int32_t v : g.neighbors(u)) {
            if (v <= u || is_target[v]) continue;
            for (int32_t ti : target_adj[u]) {
                for (int32_t tj : target_adj[v]) {
                    if (ti == tj) continue;
                    int32_t lo = std::min(ti, tj), hi = std::max(ti, tj);
                    out.memberships[u].push_back({lo, hi, 2, ti < tj ? BridgeSide::Lesser : BridgeSide::Greater});
                    out.memberships[v].push_back({lo, hi, 2, tj < ti ? BridgeSide::Lesser : BridgeSide::Greater});
                }
            }
        }
    }

    for (int32_t v = 0; v < static_cast<int32_t>(n); ++v) {
        auto& ms = out.memberships[v];
        std::sort(ms.begin(), ms.end());
        ms.erase(std::unique(ms.begin(), ms.end()), ms.end());
        if (!is_target[v]) out.roles[v] = role_from_memberships(ms, !target_adj[v].empty());
    }
    return out;
}

FocusedGraph focus(const Graph& g, const std::vector<int32_t>& targets, const RoleMap& roles) {
    size_t n = g.node_count();
    if (roles.roles.size() != n) throw InternalError("role map does not match graph");

    std::vector<bool> is_target(n, false);
    for (int32_t t : targets) is_target[t] = true;

    // Pairs that can be served by a first-order bridge lose all their
    // second-order memberships.
    std::set<std::pair<int32_t, int32_t>> bridged1;
    for (const auto& ms : roles.memberships) {
        for (const auto& m : ms) {
            if (m.order == 1) bridged1.insert({m.lo, m.hi});
        }
    }

    std::vector<std::vector<BridgeMembership>> pruned(n);
    for (size_t v = 0; v < n; ++v) {
        for (const auto& m : roles.memberships[v]) {
            if (m.order == 2 && bridged1.count({m.lo, m.hi})) continue;
            pruned[v].push_back(m);
        }
    }

    std::vector<int32_t> keep;
    for (int32_t v = 0; v < static_cast<int32_t>(n); ++v) {
        if (is_target[v]) {
            keep.push_back(v);
            continue;
        }
        bool adjacent_to_target = false;
        for (int32_t u : g.neighbors(v)) {
            if (is_target[u]) {
                adjacent_to_target = true;
                break;
            }
        }
        if (!pruned[v].empty() || adjacent_to_target) keep.push_back(v);
    }

    FocusedGraph out;
    auto [sub, old_of_new] = g.induced_subgraph(keep);
    out.graph = std::move(sub);
    out.orig_index = std::move(old_of_new);
    out.roles.resize(out.graph.node_count());
    out.memberships.resize(out.graph.node_count());
    for (int32_t v = 0; v < static_cast<int32_t>(out.graph.node_count()); ++v) {
        int32_t old = out.orig_index[v];
        out.memberships[v] = pruned[old];
        if (is_target[old]) {
            out.roles[v] = Role::Target;
            out.targets.push_back(v);
        } else {
            bool adjacent_to_target = false;
            for (int32_t u : g.neighbors(old)) {
                if (is_target[u]) {
                    adjacent_to_target = true;
                    break;
                }
            }
            out.roles[v] = role_from_memberships(pruned[old], adjacent_to_target);
            if (out.roles[v] == Role::Background)
                throw InternalError("focused graph retained a pure background node");
        }
    }
    return out;
}

namespace {

struct PairAccumulator {
    std::set<int32_t> order1;          // focused node indices
    std::set<int32_t> order2_lesser;
    std::set<int32_t> order2_greater;
};

std::string composite_id(const char* prefix, const std::string& lo, const std::string& hi) {
    return std::string(prefix) + "|" + lo + "|" + hi;
}

}  // namespace

CoarsenedGraph coarsen(const FocusedGraph& focused, const FeatureMatrix& features, CoarsenMode mode) {
    const Graph& fg = focused.graph;
    size_t n = fg.node_count();

    auto feature_row = [&](int32_t focused_node) -> const double* {
        int64_t row = features.row_of(fg.id_of(focused_node));
        if (row < 0) throw DataError("missing feature row for account " + fg.id_of(focused_node));
        return &features.data[static_cast<size_t>(row) * kFeatureCount];
    };

    std::vector<bool> is_target(n, false);
    for (int32_t t : focused.targets) is_target[t] = true;

    // Pair structures, keyed by target pair in initial-graph index space.
    std::map<std::pair<int32_t, int32_t>, PairAccumulator> pairs;
    for (int32_t v = 0; v < static_cast<int32_t>(n); ++v) {
        for (const auto& m : focused.memberships[v]) {
            auto& acc = pairs[{m.lo, m.hi}];
            if (m.order == 1) acc.order1.insert(v);
            else if (m.side == BridgeSide::Lesser) acc.order2_lesser.insert(v);
            else acc.order2_greater.insert(v);
        }
    }

    // Subordinates fold into their unique adjacent target.
    std::vector<std::vector<int32_t>> subordinates_of(n);
    for (int32_t v = 0; v < static_cast<int32_t>(n); ++v) {
        if (focused.roles[v] != Role::Subordinate) continue;
        int32_t owner = -1;
        for (int32_t u : fg.neighbors(v)) {
            if (is_target[u]) {
                if (owner >= 0) throw InternalError("subordinate adjacent to multiple targets");
                owner = u;
            }
        }
        if (owner < 0) throw InternalError("subordinate without adjacent target");
        subordinates_of[owner].push_back(v);
    }

    // Translate pair keys (initial-graph indices) to focused target indices.
    // Index order equals id order in both graphs, so lo/hi stay consistent.
    std::map<int32_t, int32_t> focused_target_of_orig;
    for (int32_t t : focused.targets) focused_target_of_orig[focused.orig_index[t]] = t;
    auto focused_index_of_orig = [&](int32_t orig) -> int32_t {
        auto it = focused_target_of_orig.find(orig);
        if (it == focused_target_of_orig.end()) throw InternalError("bridged target missing from focused graph");
        return it->second;
    };

    CoarsenedGraph out;
    std::vector<std::string> node_ids;
    for (int32_t t : focused.targets) node_ids.push_back(fg.id_of(t));

    struct CompositePlan {
        std::string id;
        int32_t lo_focused, hi_focused;
        int order;
        BridgeSide side;
        std::vector<int32_t> members;  // focused indices, ascending
    };
    std::vector<CompositePlan> plans;

    for (const auto& [key, acc] : pairs) {
        int32_t lo_f = focused_index_of_orig(key.first);
        int32_t hi_f = focused_index_of_orig(key.second);
        const std::string& lo_id = fg.id_of(lo_f);
        const std::string& hi_id = fg.id_of(hi_f);
        if (!acc.order1.empty()) {
            plans.push_back({composite_id("br1", lo_id, hi_id), lo_f, hi_f, 1, BridgeSide::None,
                             {acc.order1.begin(), acc.order1.end()}});
            ++out.pair_count_order1;
        }
        if (!acc.order2_lesser.empty() || !acc.order2_greater.empty()) {
            if (acc.order2_lesser.empty() || acc.order2_greater.empty()) {
                // A single-sided order-2 remnant cannot form the
                // target-L-R-target chain; drop it.
                ++out.dropped_one_sided_pairs;
            } else {
                plans.push_back({composite_id("br2l", lo_id, hi_id), lo_f, hi_f, 2, BridgeSide::Lesser,
                                 {acc.order2_lesser.begin(), acc.order2_lesser.end()}});
                plans.push_back({composite_id("br2r", lo_id, hi_id), lo_f, hi_f, 2, BridgeSide::Greater,
                                 {acc.order2_greater.begin(), acc.order2_greater.end()}});
                ++out.pair_count_order2;
            }
        }
    }
    for (const auto& plan : plans) node_ids.push_back(plan.id);

    out.graph = Graph::from_nodes(node_ids);
    out.kinds.assign(out.graph.node_count(), CoarseKind::Target);
    out.features.account_ids = out.graph.ids();
    out.features.data.assign(out.graph.node_count() * kFeatureCount, 0.0);
    out.features.mask = features.mask;

    // Target rows: mean over the target plus its subordinate set.
    for (int32_t t : focused.targets) {
        int32_t node = out.graph.index_of(fg.id_of(t));
        out.kinds[node] = CoarseKind::Target;
        double* dst = &out.features.data[static_cast<size_t>(node) * kFeatureCount];
        const double* tgt = feature_row(t);
        for (size_t c = 0; c < kFeatureCount; ++c) dst[c] = tgt[c];
        for (int32_t s : subordinates_of[t]) {
            const double* src = feature_row(s);
            for (size_t c = 0; c < kFeatureCount; ++c) dst[c] += src[c];
        }
        double denom = static_cast<double>(subordinates_of[t].size() + 1);
        for (size_t c = 0; c < kFeatureCount; ++c) dst[c] /= denom;
    }

    // Composite rows and wiring.
    std::map<std::pair<int32_t, int32_t>, size_t> order2_member_total;
    for (const auto& [key, acc] : pairs) {
        std::set<int32_t> all;
        all.insert(acc.order2_lesser.begin(), acc.order2_lesser.end());
        all.insert(acc.order2_greater.begin(), acc.order2_greater.end());
        order2_member_total[key] = all.size();
    }

    for (const auto& plan : plans) {
        int32_t node = out.graph.index_of(plan.id);
        int32_t lo_node = out.graph.index_of(fg.id_of(plan.lo_focused));
        int32_t hi_node = out.graph.index_of(fg.id_of(plan.hi_focused));

        double* dst = &out.features.data[static_cast<size_t>(node) * kFeatureCount];
        for (int32_t member : plan.members) {
            const double* src = feature_row(member);
            for (size_t c = 0; c < kFeatureCount; ++c) dst[c] += src[c];
        }
        double denom;
        if (plan.order == 1) {
            denom = static_cast<double>(plan.members.size());
            out.kinds[node] = CoarseKind::CompositeBridge1;
            out.graph.add_edge(lo_node, node);
            out.graph.add_edge(node, hi_node);
        } else {
            auto key = std::make_pair(focused.orig_index[plan.lo_focused], focused.orig_index[plan.hi_focused]);
            denom = mode == CoarsenMode::PaperLiteral ? 2.0 * static_cast<double>(order2_member_total[key])
                                                      : static_cast<double>(plan.members.size());
            out.kinds[node] =
                plan.side == BridgeSide::Lesser ? CoarseKind::CompositeBridge2Lesser : CoarseKind::CompositeBridge2Greater;
            if (plan.side == BridgeSide::Lesser) out.graph.add_edge(lo_node, node);
            else out.graph.add_edge(node, hi_node);
        }
        for (size_t c = 0; c < kFeatureCount; ++c) dst[c] /= denom;

        CompositeProvenance prov;
        prov.composite_id = plan.id;
        prov.pair_lo = fg.id_of(plan.lo_focused);
        prov.pair_hi = fg.id_of(plan.hi_focused);
        prov.order = plan.order;
        prov.side = plan.side;
        for (int32_t member : plan.members) prov.sources.push_back(fg.id_of(member));
        std::sort(prov.sources.begin(), prov.sources.end());
        out.provenance.push_back(std::move(prov));
    }

    // Chain the order-2 composite pairs: L-R edge.
    for (const auto& [key, acc] : pairs) {
        if (acc.order2_lesser.empty() || acc.order2_greater.empty()) continue;
        const std::string& lo_id = fg.id_of(focused_index_of_orig(key.first));
        const std::string& hi_id = fg.id_of(focused_index_of_orig(key.second));
        int32_t l = out.graph.index_of(composite_id("br2l", lo_id, hi_id));
        int32_t r = out.graph.index_of(composite_id("br2r", lo_id, hi_id));
        out.graph.add_edge(l, r);
    }

    // Target-target edges carry over from the focused graph.
    for (size_t i = 0; i < focused.targets.size(); ++i) {
        int32_t t = focused.targets[i];
        for (int32_t u : fg.neighbors(t)) {
            if (u > t && is_target[u])
                out.graph.add_edge(out.graph.index_of(fg.id_of(t)), out.graph.index_of(fg.id_of(u)));
        }
    }

    out.graph.finalize();
    std::sort(out.provenance.begin(), out.provenance.end(),
              [](const CompositeProvenance& a, const CompositeProvenance& b) { return a.composite_id < b.composite_id; });
    out.features.rebuild_row_lookup();
    return out;
}

SampledGraph random_sample(const Graph& g, const std::vector<int32_t>& targets, size_t node_budget, uint64_t seed) {
    if (node_budget < targets.size())
        throw ConfigError("node budget " + std::to_string(node_budget) + " is below the target count " +
                          std::to_string(targets.size()));
    if (node_budget > g.node_count()) throw ConfigError("node budget exceeds the graph size");

    std::vector<bool> is_target(g.node_count(), false);
    for (int32_t t : targets) is_target[t] = true;
    std::vector<int32_t> background;
    for (int32_t v = 0; v < static_cast<int32_t>(g.node_count()); ++v) {
        if (!is_target[v]) background.push_back(v);
    }

    Rng rng(seed);
    std::vector<int32_t> keep(targets.begin(), targets.end());
    for (size_t idx : rng.sample_without_replacement(background.size(), node_budget - targets.size()))
        keep.push_back(background[idx]);
    std::sort(keep.begin(), keep.end());

    SampledGraph out;
    auto [sub, old_of_new] = g.induced_subgraph(keep);
    out.graph = std::move(sub);
    out.orig_index = std::move(old_of_new);
    return out;
}

std::map<std::string, size_t> role_counts(const RoleMap& roles) { return role_counts(roles.roles); }

std::map<std::string, size_t> role_counts(const std::vector<Role>& roles) {
    std::map<std::string, size_t> out{{"target", 0},      {"subordinate", 0}, {"bridge1", 0},
                                      {"bridge2", 0},     {"hybrid", 0},      {"background", 0}};
    for (Role r : roles) out[role_name(r)] += 1;
    return out;
}

}  // namespace txgc
