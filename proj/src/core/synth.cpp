#include "core/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <unordered_set>

#include "core/common.hpp"
#include "core/rng.hpp"

namespace txgc {

namespace {

// Prefix-sum tree for weighted node sampling during attachment.
class WeightTree {
  public:
    explicit WeightTree(size_t n) : n_(n), tree_(n + 1, 0.0) {}

    void add(size_t i, double delta) {
        for (size_t k = i + 1; k <= n_; k += k & (~k + 1)) tree_[k] += delta;
    }

    double total() const {
        double t = 0.0;
        for (size_t k = n_; k > 0; k -= k & (~k + 1)) t += tree_[k];
        return t;
    }

    // Largest index with prefix sum <= target; target in [0, total).
    size_t find(double target) const {
        size_t pos = 0;
        size_t mask = 1;
        while ((mask << 1) <= n_) mask <<= 1;
        for (; mask > 0; mask >>= 1) {
            size_t next = pos + mask;
            if (next <= n_ && tree_[next] <= target) {
                pos = next;
                target -= tree_[next];
            }
        }
        return pos;  // 0-based index
    }

  private:
    size_t n_;
    std::vector<double> tree_;
};

// Class-conditioned behavior constants. Malicious targets transact more
// often with mildly larger amounts; the shifts are deliberately small so
// the classes overlap and no single column separates them. Contract,
// token and balance draws are identical across target classes, which
// keeps those columns uninformative by construction.
struct Behavior {
    double amount_mu, amount_sigma;
    double tx_rate;          // extra transactions per edge, Poisson mean
    double incoming_bias;    // probability a target-edge transaction pays the target
    double contract_rate, token_rate;
    double balance_mu;
};

constexpr Behavior kMalicious{0.4, 1.2, 2.2, 0.65, 0.08, 0.03, 3.0};
constexpr Behavior kNormalTarget{0.0, 1.2, 1.2, 0.50, 0.08, 0.03, 3.0};
constexpr Behavior kBackground{-0.5, 1.0, 0.6, 0.50, 0.05, 0.02, 2.0};

std::string target_id(size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "T%05zu", i);
    return buf;
}

std::string background_id(size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "B%06zu", i);
    return buf;
}

}  // namespace

SyntheticData synthesize(const SyntheticSpec& spec) {
    if (spec.n_targets > spec.n_accounts)
        throw ConfigError("synthetic spec infeasible: more targets than accounts");
    if (spec.malicious_fraction < 0.0 || spec.malicious_fraction > 1.0)
        throw ConfigError("malicious_fraction must lie in [0, 1]");
    if (spec.bridge_density < 0.0 || spec.subordinate_fanout < 0.0)
        throw ConfigError("motif rates must be non-negative");
    if (spec.n_accounts < 2) throw ConfigError("need at least two accounts");

    const size_t n = spec.n_accounts;
    const size_t n_targets = spec.n_targets;
    const size_t n_background = n - n_targets;
    const StudyWindow window = default_window();

    // Node index = account index; targets first, then background. All
    // structure below works on these indices and ids are attached at the end.
    auto is_target = [&](size_t v) { return v < n_targets; };

    // Class assignment.
    size_t n_malicious =
        static_cast<size_t>(std::llround(spec.malicious_fraction * static_cast<double>(n_targets)));
    std::vector<bool> malicious(n, false);
    {
        Rng rng = Rng::derive(spec.seed, 1);
        for (size_t i : rng.sample_without_replacement(n_targets, n_malicious)) malicious[i] = true;
    }

    std::set<std::pair<int32_t, int32_t>> edges;
    std::vector<int> degree(n, 0);
    auto add_edge = [&](size_t a, size_t b) {
        if (a == b) return false;
        int32_t lo = static_cast<int32_t>(std::min(a, b));
        int32_t hi = static_cast<int32_t>(std::max(a, b));
        if (!edges.emplace(lo, hi).second) return false;
        ++degree[a];
        ++degree[b];
        return true;
    };

    // Preferential-attachment backbone over all accounts in a shuffled
    // arrival order, two stubs per arrival.
    {
        Rng rng = Rng::derive(spec.seed, 2);
        std::vector<size_t> arrival(n);
        for (size_t i = 0; i < n; ++i) arrival[i] = i;
        rng.shuffle(arrival);

        WeightTree weights(n);
        auto node_weight = [&](size_t v) {
            return std::pow(static_cast<double>(degree[v] + 1), spec.attachment_exponent);
        };
        std::vector<double> current_weight(n, 0.0);
        auto refresh_weight = [&](size_t v) {
            double w = node_weight(v);
            weights.add(v, w - current_weight[v]);
            current_weight[v] = w;
        };

        refresh_weight(arrival[0]);
        for (size_t k = 1; k < n; ++k) {
            size_t u = arrival[k];
            size_t stubs = std::min<size_t>(2, k);
            for (size_t s = 0; s < stubs; ++s) {
                bool placed = false;
                for (int attempt = 0; attempt < 64 && !placed; ++attempt) {
                    size_t v = weights.find(rng.next_double() * weights.total());
                    if (v == u) continue;
                    if (add_edge(u, v)) {
                        refresh_weight(v);
                        placed = true;
                    }
                }
                // Dense collisions only happen on tiny graphs; dropping the
                // stub keeps the generator total.
            }
            refresh_weight(u);
        }
    }

    // Dedicated subordinate spokes: background nodes adjacent to exactly
    // one target each.
    std::vector<bool> target_adjacent(n, false);
    for (const auto& [a, b] : edges) {
        if (is_target(static_cast<size_t>(a))) target_adjacent[static_cast<size_t>(b)] = true;
        if (is_target(static_cast<size_t>(b))) target_adjacent[static_cast<size_t>(a)] = true;
    }
    if (n_background > 0) {
        Rng rng = Rng::derive(spec.seed, 3);
        for (size_t t = 0; t < n_targets; ++t) {
            int k = rng.poisson(spec.subordinate_fanout);
            for (int s = 0; s < k; ++s) {
                bool placed = false;
                for (int attempt = 0; attempt < 64 && !placed; ++attempt) {
                    size_t v = n_targets + static_cast<size_t>(rng.below(n_background));
                    if (target_adjacent[v]) continue;
                    if (add_edge(t, v)) {
                        target_adjacent[v] = true;
                        placed = true;
                    }
                }
            }
        }
    }

    // Bridge planting between target pairs, homophilous by class: a
    // same-class partner is preferred so the bridge web carries label
    // signal through the structure.
    if (n_targets >= 2 && n_background >= 2) {
        Rng rng = Rng::derive(spec.seed, 4);
        std::vector<size_t> by_class[2];
        for (size_t t = 0; t < n_targets; ++t) by_class[malicious[t] ? 1 : 0].push_back(t);

        size_t n_structures =
            static_cast<size_t>(std::llround(spec.bridge_density * static_cast<double>(n_targets)));
        for (size_t i = 0; i < n_structures; ++i) {
            size_t a = static_cast<size_t>(rng.below(n_targets));
            int cls = malicious[a] ? 1 : 0;
            const auto& same = by_class[cls];
            const auto& other = by_class[1 - cls];
            bool prefer_same = rng.next_double() < 0.8;
            const auto& pool = (prefer_same && same.size() >= 2) || other.empty() ? same : other;
            size_t b = a;
            for (int attempt = 0; attempt < 32 && b == a; ++attempt)
                b = pool[rng.below(pool.size())];
            if (b == a) continue;

            if (rng.next_double() < 0.5) {
                // Order-1: one shared middleman.
                size_t c = n_targets + static_cast<size_t>(rng.below(n_background));
                add_edge(a, c);
                add_edge(b, c);
            } else {
                // Order-2: a two-node relay path.
                size_t c = n_targets + static_cast<size_t>(rng.below(n_background));
                size_t d = n_targets + static_cast<size_t>(rng.below(n_background));
                if (c == d) continue;
                add_edge(a, c);
                add_edge(c, d);
                add_edge(d, b);
            }
        }
    }

    // Activity windows. Every target lives inside a random sub-window of
    // the study period; malicious windows skew shorter but the class
    // ranges overlap. Background accounts stay active throughout.
    std::vector<int64_t> window_start(n, window.start), window_len(n, window.end - window.start);
    {
        Rng rng = Rng::derive(spec.seed, 5);
        int64_t full = window.end - window.start;
        for (size_t t = 0; t < n_targets; ++t) {
            int64_t lo = malicious[t] ? kMaliciousWindowMin : kNormalWindowMin;
            int64_t hi = malicious[t] ? kMaliciousWindowMax : kNormalWindowMax;
            hi = std::min(hi, full);
            lo = std::min(lo, hi);
            int64_t len = lo + static_cast<int64_t>(rng.below(static_cast<uint64_t>(hi - lo + 1)));
            window_start[t] = window.start +
                              static_cast<int64_t>(rng.below(static_cast<uint64_t>(full - len + 1)));
            window_len[t] = len;
        }
    }

    auto behavior_of = [&](size_t v) -> const Behavior& {
        if (!is_target(v)) return kBackground;
        return malicious[v] ? kMalicious : kNormalTarget;
    };

    // Transactions per structural edge. Edge behavior follows the target
    // endpoint; for target-target edges the malicious profile dominates.
    SyntheticData out;
    out.window = window;
    {
        Rng rng = Rng::derive(spec.seed, 6);
        std::vector<std::string> id_of(n);
        for (size_t i = 0; i < n_targets; ++i) id_of[i] = target_id(i);
        for (size_t i = n_targets; i < n; ++i) id_of[i] = background_id(i - n_targets);

        for (const auto& [ia, ib] : edges) {
            size_t a = static_cast<size_t>(ia), b = static_cast<size_t>(ib);
            size_t driver;  // endpoint whose behavior shapes this edge
            if (is_target(a) && is_target(b)) driver = malicious[a] ? a : b;
            else if (is_target(a)) driver = a;
            else if (is_target(b)) driver = b;
            else driver = a;
            const Behavior& beh = behavior_of(driver);

            int n_tx = 1 + rng.poisson(beh.tx_rate);
            for (int k = 0; k < n_tx; ++k) {
                TransactionRecord rec;
                bool to_driver = rng.next_double() < beh.incoming_bias;
                size_t src = to_driver ? (driver == a ? b : a) : driver;
                size_t dst = (src == a) ? b : a;
                rec.from_id = id_of[src];
                rec.to_id = id_of[dst];
                rec.value_eth = rng.lognormal(beh.amount_mu, beh.amount_sigma);
                // A target sender never leaves its own activity window,
                // even when the other endpoint drives the edge.
                size_t ts_node = is_target(src) ? src : driver;
                rec.timestamp = window_start[ts_node] +
                                static_cast<int64_t>(rng.below(static_cast<uint64_t>(window_len[ts_node])));
                out.transactions.push_back(std::move(rec));
            }
        }
    }

    // Account profiles; labels only on targets, snapshots everywhere.
    {
        Rng rng = Rng::derive(spec.seed, 7);
        out.profiles.reserve(n);
        for (size_t v = 0; v < n; ++v) {
            const Behavior& beh = behavior_of(v);
            AccountProfile p;
            p.id = is_target(v) ? target_id(v) : background_id(v - n_targets);
            p.is_contract = rng.next_double() < beh.contract_rate;
            p.is_token = rng.next_double() < beh.token_rate;
            p.label = is_target(v) ? (malicious[v] ? AccountLabel::Malicious : AccountLabel::Normal)
                                   : AccountLabel::Unlabeled;
            p.starting_balance_eth = rng.lognormal(beh.balance_mu, 0.5);
            out.profiles.push_back(std::move(p));
        }
    }
    return out;
}

}  // namespace txgc
