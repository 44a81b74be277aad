#ifndef TXGC_CORE_GRAPH_HPP
#define TXGC_CORE_GRAPH_HPP

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

namespace txgc {

// Simple undirected graph shared by every pipeline stage. Node ids are
// interned; index order equals lexicographic id order, which makes index
// comparisons equivalent to id comparisons everywhere downstream.
class Graph {
  public:
    Graph() = default;

    // ids must be unique; they are sorted internally.
    static Graph from_nodes(std::vector<std::string> ids);

    int32_t index_of(const std::string& id) const;  // -1 if absent
    const std::string& id_of(int32_t idx) const { return ids_[idx]; }
    size_t node_count() const { return ids_.size(); }
    size_t edge_count() const { return edge_count_; }

    const std::vector<std::string>& ids() const { return ids_; }
    const std::vector<int32_t>& neighbors(int32_t idx) const { return adj_[idx]; }
    bool has_edge(int32_t u, int32_t v) const;

    // Ignores self loops and duplicates.
    void add_edge(int32_t u, int32_t v);
    // Sorts adjacency lists; call once after the last add_edge.
    void finalize();

    // Unordered unique edges as (u, v) with u < v, in lexicographic order.
    std::vector<std::pair<int32_t, int32_t>> edges() const;

    // Subgraph induced by `keep` (node indices into this graph). Returned
    // graph re-interns the kept ids; second result maps new index -> old.
    std::pair<Graph, std::vector<int32_t>> induced_subgraph(const std::vector<int32_t>& keep) const;

    std::vector<int32_t> component_labels() const;  // per node, root-indexed
    size_t largest_component_size() const;

  private:
    std::vector<std::string> ids_;
    std::unordered_map<std::string, int32_t> index_;
    std::vector<std::vector<int32_t>> adj_;
    size_t edge_count_ = 0;
    bool finalized_ = false;
};

struct GraphStats {
    size_t accounts = 0;
    size_t transactions = 0;  // edge count; one edge per transacting pair
    double average_degree = 0.0;
    double connectivity = 1.0;  // |largest component| / |nodes|, 1.0 for empty
};

GraphStats compute_stats(const Graph& g);

}  // namespace txgc

#endif
