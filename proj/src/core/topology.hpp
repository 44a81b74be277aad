#ifndef TXGC_CORE_TOPOLOGY_HPP
#define TXGC_CORE_TOPOLOGY_HPP

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "core/features.hpp"
#include "core/graph.hpp"

namespace txgc {

enum class Role : uint8_t { Target, Subordinate, Bridge1, Bridge2, Hybrid, Background };

const char* role_name(Role r);
Role role_from_name(std::string_view name);

enum class BridgeSide : int8_t { None = -1, Lesser = 0, Greater = 1 };

// One (target pair, order, side) bridge membership. Pair endpoints are node
// indices with lo < hi; index order equals lexicographic id order, so the
// "lesser" side is adjacent to the smaller account id.
struct BridgeMembership {
    int32_t lo = -1;
    int32_t hi = -1;
    uint8_t order = 0;  // 1 or 2
    BridgeSide side = BridgeSide::None;

    friend bool operator==(const BridgeMembership&, const BridgeMembership&) = default;
    friend auto operator<=>(const BridgeMembership& a, const BridgeMembership& b) {
        return std::tie(a.lo, a.hi, a.order, a.side) <=> std::tie(b.lo, b.hi, b.order, b.side);
    }
};

struct RoleMap {
    std::vector<Role> roles;                                 // per graph node
    std::vector<std::vector<BridgeMembership>> memberships;  // sorted, deduplicated
    bool empty_target_warning = false;
};

// Targets must be valid node indices. Non-target common neighbors of two
// targets become first-order bridges; the two interior nodes of a
// target-b-b'-target path become second-order bridges. A node whose
// memberships span both orders is Hybrid. Non-bridge neighbors of targets
// are Subordinate, everything else Background.
RoleMap classify_roles(const Graph& g, const std::vector<int32_t>& targets);

struct FocusedGraph {
    Graph graph;
    std::vector<int32_t> orig_index;                         // focused node -> initial-graph node
    std::vector<Role> roles;                                 // per focused node
    std::vector<std::vector<BridgeMembership>> memberships;  // post-pruning, in initial-graph indices
    std::vector<int32_t> targets;                            // focused node indices, ascending
};

// Keeps targets, subordinates and bridge accounts. For every target pair
// that has a first-order bridge, all second-order memberships of that pair
// are deleted first; a node left without memberships survives only when it
// is adjacent to a target (as Subordinate). Edges among retained nodes are
// kept wholesale.
FocusedGraph focus(const Graph& g, const std::vector<int32_t>& targets, const RoleMap& roles);

enum class CoarsenMode { PaperLiteral, PerSideMean };

CoarsenMode coarsen_mode_from_name(std::string_view name);
const char* coarsen_mode_name(CoarsenMode m);

enum class CoarseKind : uint8_t { Target, CompositeBridge1, CompositeBridge2Lesser, CompositeBridge2Greater };

struct CompositeProvenance {
    std::string composite_id;
    std::string pair_lo;  // account ids of the bridged target pair
    std::string pair_hi;
    int order = 0;
    BridgeSide side = BridgeSide::None;
    std::vector<std::string> sources;  // aggregated account ids, ascending
};

struct CoarsenedGraph {
    Graph graph;
    std::vector<CoarseKind> kinds;   // per node
    FeatureMatrix features;          // per node; targets aggregated with their subordinates
    std::vector<CompositeProvenance> provenance;  // composites only, by composite id order
    size_t pair_count_order1 = 0;    // pairs with a first-order composite
    size_t pair_count_order2 = 0;    // pairs with a retained two-sided order-2 structure
    size_t dropped_one_sided_pairs = 0;
};

// Aggregates each target with its subordinates (mean over the target plus
// its subordinate set), then builds one composite per bridged pair for
// order-1 members and a lesser/greater composite pair for order-2 members.
// PaperLiteral divides each order-2 side sum by 2x the pair's distinct
// order-2 member count; PerSideMean takes the plain per-side mean.
CoarsenedGraph coarsen(const FocusedGraph& focused, const FeatureMatrix& features,
                       CoarsenMode mode = CoarsenMode::PaperLiteral);

// Keeps every target plus uniformly random non-targets up to node_budget,
// then induces the subgraph. Deterministic per seed.
struct SampledGraph {
    Graph graph;
    std::vector<int32_t> orig_index;
};

SampledGraph random_sample(const Graph& g, const std::vector<int32_t>& targets, size_t node_budget, uint64_t seed);

// Per-role node tallies keyed by role name.
std::map<std::string, size_t> role_counts(const RoleMap& roles);
std::map<std::string, size_t> role_counts(const std::vector<Role>& roles);

}  // namespace txgc

#endif
