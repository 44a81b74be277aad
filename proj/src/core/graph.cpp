#include "core/graph.hpp"

#include <algorithm>
#include <numeric>

#include "core/common.hpp"

namespace txgc {

Graph Graph::from_nodes(std::vector<std::string> ids) {
    std::sort(ids.begin(), ids.end());
    for (size_t i = 1; i < ids.size(); ++i) {
        if (ids[i] == ids[i - 1]) throw InternalError("duplicate node id: " + ids[i]);
    }
    Graph g;
    g.ids_ = std::move(ids);
    g.adj_.resize(g.ids_.size());
    g.index_.reserve(g.ids_.size());
    for (size_t i = 0; i < g.ids_.size(); ++i) g.index_.emplace(g.ids_[i], static_cast<int32_t>(i));
    return g;
}

int32_t Graph::index_of(const std::string& id) const {
    auto it = index_.find(id);
    return it == index_.end() ? -1 : it->second;
}

bool Graph::has_edge(int32_t u, int32_t v) const {
    const auto& nu = adj_[u];
    if (finalized_) return std::binary_search(nu.begin(), nu.end(), v);
    return std::find(nu.begin(), nu.end(), v) != nu.end();
}

void Graph::add_edge(int32_t u, int32_t v) {
    if (u == v) return;
    if (u < 0 || v < 0 || static_cast<size_t>(u) >= ids_.size() || static_cast<size_t>(v) >= ids_.size())
        throw InternalError("edge endpoint out of range");
    // Membership test against the smaller adjacency list.
    const auto& probe = adj_[u].size() <= adj_[v].size() ? adj_[u] : adj_[v];
    int32_t other = adj_[u].size() <= adj_[v].size() ? v : u;
    if (std::find(probe.begin(), probe.end(), other) != probe.end()) return;
    adj_[u].push_back(v);
    adj_[v].push_back(u);
    ++edge_count_;
    finalized_ = false;
}

void Graph::finalize() {
    for (auto& nbrs : adj_) std::sort(nbrs.begin(), nbrs.end());
    finalized_ = true;
}

std::vector<std::pair<int32_t, int32_t>> Graph::edges() const {
    std::vector<std::pair<int32_t, int32_t>> out;
    out.reserve(edge_count_);
    for (int32_t u = 0; u < static_cast<int32_t>(adj_.size()); ++u) {
        for (int32_t v : adj_[u]) {
            if (u < v) out.emplace_back(u, v);
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::pair<Graph, std::vector<int32_t>> Graph::induced_subgraph(const std::vector<int32_t>& keep) const {
    std::vector<std::string> kept_ids;
    kept_ids.reserve(keep.size());
    for (int32_t idx : keep) kept_ids.push_back(ids_[idx]);
    Graph sub = Graph::from_nodes(std::move(kept_ids));

    std::vector<int32_t> old_of_new(sub.node_count());
    std::vector<int32_t> new_of_old(ids_.size(), -1);
    for (int32_t idx : keep) {
        int32_t ni = sub.index_of(ids_[idx]);
        old_of_new[ni] = idx;
        new_of_old[idx] = ni;
    }
    for (int32_t u = 0; u < static_cast<int32_t>(adj_.size()); ++u) {
        if (new_of_old[u] < 0) continue;
        for (int32_t v : adj_[u]) {
            if (u < v && new_of_old[v] >= 0) sub.add_edge(new_of_old[u], new_of_old[v]);
        }
    }
    sub.finalize();
    return {std::move(sub), std::move(old_of_new)};
}

namespace {

struct UnionFind {
    std::vector<int32_t> parent;
    std::vector<int32_t> size;

    explicit UnionFind(size_t n) : parent(n), size(n, 1) { std::iota(parent.begin(), parent.end(), 0); }

    int32_t find(int32_t x) {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    }

    void unite(int32_t a, int32_t b) {
        a = find(a);
        b = find(b);
        if (a == b) return;
        if (size[a] < size[b]) std::swap(a, b);
        parent[b] = a;
        size[a] += size[b];
    }
};

}  // namespace

std::vector<int32_t> Graph::component_labels() const {
    UnionFind uf(node_count());
    for (int32_t u = 0; u < static_cast<int32_t>(adj_.size()); ++u) {
        for (int32_t v : adj_[u]) {
            if (u < v) uf.unite(u, v);
        }
    }
    std::vector<int32_t> labels(node_count());
    for (int32_t i = 0; i < static_cast<int32_t>(node_count()); ++i) labels[i] = uf.find(i);
    return labels;
}

size_t Graph::largest_component_size() const {
    if (node_count() == 0) return 0;
    UnionFind uf(node_count());
    for (int32_t u = 0; u < static_cast<int32_t>(adj_.size()); ++u) {
        for (int32_t v : adj_[u]) {
            if (u < v) uf.unite(u, v);
        }
    }
    size_t best = 0;
    for (int32_t i = 0; i < static_cast<int32_t>(node_count()); ++i) {
        if (uf.find(i) == i) best = std::max(best, static_cast<size_t>(uf.size[i]));
    }
    return best;
}

GraphStats compute_stats(const Graph& g) {
    GraphStats s;
    s.accounts = g.node_count();
    s.transactions = g.edge_count();
    if (g.node_count() == 0) {
        s.average_degree = 0.0;
        s.connectivity = 1.0;
        return s;
    }
    s.average_degree = 2.0 * static_cast<double>(g.edge_count()) / static_cast<double>(g.node_count());
    s.connectivity = static_cast<double>(g.largest_component_size()) / static_cast<double>(g.node_count());
    return s;
}

}  // namespace txgc
