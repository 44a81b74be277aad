#ifndef TXGC_TESTS_SUPPORT_ORACLES_HPP
#define TXGC_TESTS_SUPPORT_ORACLES_HPP

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "core/features.hpp"
#include "core/graph.hpp"
#include "core/ingest.hpp"
#include "core/topology.hpp"

namespace txgc::testing {

// Slow reference implementations used to cross-check the production code.
// Everything here favors obviousness over speed; nothing shares code with
// the implementations under test.

struct OracleRoles {
    std::vector<Role> roles;
    std::vector<std::set<BridgeMembership>> memberships;
};

// Enumerates every length-2 and length-3 path between each target pair.
OracleRoles oracle_roles(const Graph& g, const std::vector<int32_t>& targets);

// Breadth-first flood fill; edge count recomputed from adjacency lists.
GraphStats oracle_stats(const Graph& g);

// Recomputes all 29 columns for one account by scanning the full
// transaction list with plain loops.
std::array<double, kFeatureCount> oracle_features_for(const std::string& id,
                                                      const std::vector<TransactionRecord>& txs,
                                                      const std::vector<AccountProfile>& profiles,
                                                      const FeatureOptions& opts = {});

// Dense symmetric-normalized adjacency with self loops.
Eigen::MatrixXd oracle_normalized_adjacency(const Graph& g);

// Quadratic pair counting with half credit for ties.
double oracle_auc(const std::vector<double>& scores, const std::vector<int>& labels);

// Uniform random graph on n nodes, each possible edge kept with
// probability p; ids are short strings so index order is id order.
Graph random_graph(size_t n, double p, uint64_t seed);

}  // namespace txgc::testing

#endif
