#include "core/gbdt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "core/common.hpp"

namespace txgc {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

struct SplitCandidate {
    double gain = -std::numeric_limits<double>::infinity();
    int feature = -1;
    double threshold = 0.0;
    bool valid() const { return feature >= 0; }
};

double leaf_objective(double g, double h, double lambda) { return g * g / (h + lambda); }

}  // namespace

void Gbdt::train(const std::vector<double>& rows, size_t n_features, const std::vector<int>& labels,
                 const GbdtConfig& config) {
    size_t n = labels.size();
    if (n == 0 || n_features == 0) throw DataError("gbdt training requires a non-empty matrix");
    if (rows.size() != n * n_features) throw InternalError("gbdt matrix shape mismatch");
    size_t positives = 0;
    for (int y : labels) {
        if (y != 0 && y != 1) throw DataError("gbdt labels must be 0 or 1");
        positives += static_cast<size_t>(y);
    }
    if (positives == 0 || positives == n) throw DataError("degenerate labels: both classes required");

    n_features_ = n_features;
    learning_rate_ = config.learning_rate;
    trees_.clear();
    gain_.assign(n_features, 0.0);

    double p0 = static_cast<double>(positives) / static_cast<double>(n);
    base_margin_ = std::log(p0 / (1.0 - p0));

    // Global presort per feature by (value, row); reused by every tree.
    std::vector<std::vector<int>> sorted(n_features, std::vector<int>(n));
    for (size_t f = 0; f < n_features; ++f) {
        std::iota(sorted[f].begin(), sorted[f].end(), 0);
        std::sort(sorted[f].begin(), sorted[f].end(), [&](int a, int b) {
            double va = rows[static_cast<size_t>(a) * n_features + f];
            double vb = rows[static_cast<size_t>(b) * n_features + f];
            if (va != vb) return va < vb;
            return a < b;
        });
    }

    std::vector<double> margin(n, base_margin_);
    std::vector<double> grad(n), hess(n);
    std::vector<int> node_of_row(n);

    struct NodeState {
        double sum_g = 0.0, sum_h = 0.0;
        int count = 0;
        int depth = 0;
        bool active = false;  // still splittable this level
        SplitCandidate best;
    };

    for (int t = 0; t < config.n_trees; ++t) {
        for (size_t i = 0; i < n; ++i) {
            double p = sigmoid(margin[i]);
            grad[i] = p - static_cast<double>(labels[i]);
            hess[i] = p * (1.0 - p);
        }

        Tree tree;
        tree.nodes.emplace_back();
        std::vector<NodeState> states(1);
        states[0].active = true;
        states[0].depth = 0;
        for (size_t i = 0; i < n; ++i) {
            node_of_row[i] = 0;
            states[0].sum_g += grad[i];
            states[0].sum_h += hess[i];
            states[0].count += 1;
        }

        std::vector<int> frontier = {0};
        while (!frontier.empty()) {
            for (int nid : frontier) states[nid].best = SplitCandidate{};

            // One pass per feature over the global sorted order; rows are
            // routed to their node's running prefix, which yields each
            // node's rows in ascending feature order.
            struct Accum {
                double g = 0.0, h = 0.0;
                int cnt = 0;
                double last_value = 0.0;
                bool seen = false;
            };
            std::vector<Accum> acc(states.size());
            for (size_t f = 0; f < n_features; ++f) {
                for (int nid : frontier) acc[nid] = Accum{};
                for (int row : sorted[f]) {
                    int nid = node_of_row[row];
                    if (nid < 0 || !states[nid].active) continue;
                    double value = rows[static_cast<size_t>(row) * n_features + f];
                    Accum& a = acc[nid];
                    if (a.seen && value > a.last_value) {
                        // Candidate split between last_value and value.
                        const NodeState& st = states[nid];
                        double gl = a.g, hl = a.h;
                        double gr = st.sum_g - gl, hr = st.sum_h - hl;
                        int cl = a.cnt, cr = st.count - cl;
                        if (cl >= config.min_leaf_rows && cr >= config.min_leaf_rows &&
                            hl >= config.min_child_hessian && hr >= config.min_child_hessian) {
                            double gain = 0.5 * (leaf_objective(gl, hl, config.lambda_l2) +
                                                 leaf_objective(gr, hr, config.lambda_l2) -
                                                 leaf_objective(st.sum_g, st.sum_h, config.lambda_l2));
                            // Strict > keeps the lowest canonical feature
                            // index on ties (features scanned in order).
                            if (gain > states[nid].best.gain) {
                                states[nid].best.gain = gain;
                                states[nid].best.feature = static_cast<int>(f);
                                states[nid].best.threshold = 0.5 * (a.last_value + value);
                            }
                        }
                    }
                    a.g += grad[row];
                    a.h += hess[row];
                    a.cnt += 1;
                    a.last_value = value;
                    a.seen = true;
                }
            }

            // Materialize accepted splits.
            std::vector<int> next_frontier;
            for (int nid : frontier) {
                NodeState& st = states[nid];
                st.active = false;
                const SplitCandidate& best = st.best;
                if (!best.valid() || best.gain <= config.min_split_gain) continue;
                gain_[static_cast<size_t>(best.feature)] += best.gain;

                int left = static_cast<int>(tree.nodes.size());
                int right = left + 1;
                tree.nodes.emplace_back();
                tree.nodes.emplace_back();
                tree.nodes[nid].feature = best.feature;
                tree.nodes[nid].threshold = best.threshold;
                tree.nodes[nid].left = left;
                tree.nodes[nid].right = right;
                tree.nodes[nid].is_leaf = false;

                states.emplace_back();
                states.emplace_back();
                states[left].depth = states[right].depth = st.depth + 1;
                bool splittable = st.depth + 1 < config.max_depth;
                states[left].active = states[right].active = splittable;
                if (splittable) {
                    next_frontier.push_back(left);
                    next_frontier.push_back(right);
                }
            }

            // Route rows to children and restate child sums.
            for (size_t i = 0; i < n; ++i) {
                int nid = node_of_row[i];
                const Node& node = tree.nodes[nid];
                if (node.is_leaf) continue;
                int child = rows[i * n_features + static_cast<size_t>(node.feature)] <= node.threshold ? node.left
                                                                                                       : node.right;
                node_of_row[i] = child;
                states[child].sum_g += grad[i];
                states[child].sum_h += hess[i];
                states[child].count += 1;
            }
            frontier = std::move(next_frontier);
        }

        // Leaf values are the Newton step for the regularized objective;
        // node_of_row points at a leaf for every row by now.
        std::vector<double> leaf_g(tree.nodes.size(), 0.0), leaf_h(tree.nodes.size(), 0.0);
        for (size_t i = 0; i < n; ++i) {
            leaf_g[node_of_row[i]] += grad[i];
            leaf_h[node_of_row[i]] += hess[i];
        }
        for (size_t nid = 0; nid < tree.nodes.size(); ++nid) {
            Node& node = tree.nodes[nid];
            if (node.is_leaf) node.leaf_value = -leaf_g[nid] / (leaf_h[nid] + config.lambda_l2);
        }
        for (size_t i = 0; i < n; ++i) margin[i] += config.learning_rate * tree.nodes[node_of_row[i]].leaf_value;

        trees_.push_back(std::move(tree));
    }
}

double Gbdt::predict_margin(const double* row) const {
    double m = base_margin_;
    for (const Tree& tree : trees_) {
        int nid = 0;
        while (!tree.nodes[nid].is_leaf) {
            const Node& node = tree.nodes[nid];
            nid = row[node.feature] <= node.threshold ? node.left : node.right;
        }
        m += learning_rate_ * tree.nodes[nid].leaf_value;
    }
    return m;
}

double Gbdt::predict_proba(const double* row) const { return sigmoid(predict_margin(row)); }

std::vector<double> Gbdt::predict_proba_all(const std::vector<double>& rows, size_t n_features) const {
    if (n_features != n_features_) throw InternalError("gbdt prediction width mismatch");
    size_t n = rows.size() / n_features;
    std::vector<double> out(n);
    for (size_t i = 0; i < n; ++i) out[i] = predict_proba(&rows[i * n_features]);
    return out;
}

ImportanceRanking rank_importance(const FeatureMatrix& features, const std::vector<int>& labels,
                                  const std::vector<size_t>& labeled_rows, const GbdtConfig& config) {
    if (labeled_rows.size() != labels.size()) throw InternalError("labels/rows size mismatch");
    std::vector<double> rows;
    rows.reserve(labeled_rows.size() * kFeatureCount);
    for (size_t r : labeled_rows) {
        for (size_t c = 0; c < kFeatureCount; ++c) rows.push_back(features.at(r, c));
    }
    Gbdt model;
    model.train(rows, kFeatureCount, labels, config);

    std::array<double, kFeatureCount> scores{};
    const auto& gain = model.gain_importance();
    for (size_t c = 0; c < kFeatureCount; ++c) scores[c] = gain[c];
    return make_ranking(scores);
}

}  // namespace txgc
