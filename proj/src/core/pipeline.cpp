#include "core/pipeline.hpp"

#include <algorithm>
#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include "core/common.hpp"
#include "core/detect.hpp"
#include "core/features.hpp"
#include "core/gbdt.hpp"
#include "core/graph.hpp"
#include "core/ingest.hpp"
#include "core/io.hpp"
#include "core/synth.hpp"
#include "core/topology.hpp"

namespace txgc {

namespace fs = std::filesystem;

namespace {

// Strict option reader: every key must be consumed, unknown keys are
// config errors so typos fail fast instead of silently using defaults.
class Options {
  public:
    Options(const nlohmann::json& j, std::string context) : j_(j), context_(std::move(context)) {
        if (!j_.is_object() && !j_.is_null())
            throw ConfigError(context_ + ": options must be a JSON object");
    }

    bool has(const std::string& key) const { return j_.is_object() && j_.contains(key); }

    std::string str(const std::string& key) {
        require(key);
        return as_string(key);
    }

    std::string str_or(const std::string& key, const std::string& fallback) {
        if (!has(key)) return fallback;
        return as_string(key);
    }

    // Required input path; existence is part of config validation.
    std::string input_path(const std::string& key) {
        std::string p = str(key);
        if (!fs::exists(p)) throw ConfigError(context_ + ": input file not found: " + p);
        return p;
    }

    std::string input_path_or(const std::string& key) {
        if (!has(key)) return {};
        std::string p = as_string(key);
        if (!fs::exists(p)) throw ConfigError(context_ + ": input file not found: " + p);
        return p;
    }

    uint64_t u64(const std::string& key) {
        require(key);
        return as_u64(key);
    }

    uint64_t u64_or(const std::string& key, uint64_t fallback) {
        if (!has(key)) return fallback;
        return as_u64(key);
    }

    double num_or(const std::string& key, double fallback) {
        if (!has(key)) return fallback;
        mark(key);
        const auto& v = j_.at(key);
        if (!v.is_number()) throw ConfigError(context_ + ": '" + key + "' must be a number");
        return v.get<double>();
    }

    bool flag_or(const std::string& key, bool fallback) {
        if (!has(key)) return fallback;
        mark(key);
        const auto& v = j_.at(key);
        if (!v.is_boolean()) throw ConfigError(context_ + ": '" + key + "' must be a boolean");
        return v.get<bool>();
    }

    nlohmann::json sub_or(const std::string& key) {
        if (!has(key)) return nlohmann::json();
        mark(key);
        const auto& v = j_.at(key);
        if (!v.is_object()) throw ConfigError(context_ + ": '" + key + "' must be an object");
        return v;
    }

    nlohmann::json array_or(const std::string& key, nlohmann::json fallback) {
        if (!has(key)) return fallback;
        mark(key);
        const auto& v = j_.at(key);
        if (!v.is_array()) throw ConfigError(context_ + ": '" + key + "' must be an array");
        return v;
    }

    void finish() {
        if (!j_.is_object()) return;
        for (const auto& [key, _] : j_.items()) {
            if (!consumed_.count(key))
                throw ConfigError(context_ + ": unknown option '" + key + "'");
        }
    }

  private:
    void require(const std::string& key) {
        if (!has(key)) throw ConfigError(context_ + ": missing required option '" + key + "'");
    }
    void mark(const std::string& key) { consumed_.insert(key); }

    std::string as_string(const std::string& key) {
        mark(key);
        const auto& v = j_.at(key);
        if (!v.is_string()) throw ConfigError(context_ + ": '" + key + "' must be a string");
        return v.get<std::string>();
    }

    uint64_t as_u64(const std::string& key) {
        mark(key);
        const auto& v = j_.at(key);
        if (!v.is_number_integer() && !v.is_number_unsigned())
            throw ConfigError(context_ + ": '" + key + "' must be an integer");
        if (v.is_number_integer() && v.get<int64_t>() < 0)
            throw ConfigError(context_ + ": '" + key + "' must be non-negative");
        return v.get<uint64_t>();
    }

    const nlohmann::json j_;
    std::string context_;
    std::set<std::string> consumed_;
};

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw DataError("cannot create directory " + dir + ": " + ec.message());
}

StudyWindow window_from(Options& o) {
    std::string ws = o.str_or("window_start", "");
    std::string we = o.str_or("window_end", "");
    if (ws.empty() != we.empty())
        throw ConfigError("window_start and window_end must be given together");
    if (ws.empty()) return default_window();
    return make_window(ws, we);
}

SyntheticSpec synth_spec_from(Options& o) {
    SyntheticSpec spec;
    spec.n_accounts = o.u64_or("n_accounts", spec.n_accounts);
    spec.n_targets = o.u64_or("n_targets", spec.n_targets);
    spec.malicious_fraction = o.num_or("malicious_fraction", spec.malicious_fraction);
    spec.attachment_exponent = o.num_or("attachment_exponent", spec.attachment_exponent);
    spec.bridge_density = o.num_or("bridge_density", spec.bridge_density);
    spec.subordinate_fanout = o.num_or("subordinate_fanout", spec.subordinate_fanout);
    spec.seed = o.u64_or("seed", spec.seed);
    return spec;
}

GbdtConfig gbdt_config_from(const nlohmann::json& j, const std::string& context) {
    Options o(j, context);
    GbdtConfig c;
    c.n_trees = static_cast<int>(o.u64_or("n_trees", static_cast<uint64_t>(c.n_trees)));
    c.max_depth = static_cast<int>(o.u64_or("max_depth", static_cast<uint64_t>(c.max_depth)));
    c.learning_rate = o.num_or("learning_rate", c.learning_rate);
    c.lambda_l2 = o.num_or("lambda_l2", c.lambda_l2);
    c.min_child_hessian = o.num_or("min_child_hessian", c.min_child_hessian);
    c.min_leaf_rows = static_cast<int>(o.u64_or("min_leaf_rows", static_cast<uint64_t>(c.min_leaf_rows)));
    c.min_split_gain = o.num_or("min_split_gain", c.min_split_gain);
    o.finish();
    if (c.n_trees < 1 || c.max_depth < 1) throw ConfigError(context + ": n_trees and max_depth must be >= 1");
    return c;
}

ModelConfig model_config_from(const nlohmann::json& j, const nlohmann::json& gbdt_j) {
    Options o(j, "model");
    ModelConfig c;
    uint64_t layers = o.u64_or("layers", 2);
    if (layers != 2) throw ConfigError("model: only two-layer networks are supported");
    c.hidden_dim = static_cast<int>(o.u64_or("hidden_dim", 64));
    uint64_t output_dim = o.u64_or("output_dim", 2);
    if (output_dim != 2) throw ConfigError("model: output_dim must be 2 for binary detection");
    c.epochs = static_cast<int>(o.u64_or("epochs", 500));
    c.patience = static_cast<int>(o.u64_or("patience", 100));
    c.learning_rate = o.num_or("learning_rate", 0.05);
    c.weight_decay = o.num_or("weight_decay", 0.0);
    c.dropout = o.num_or("dropout", 0.0);
    c.propagation_hops = static_cast<int>(o.u64_or("propagation_hops", 2));
    o.finish();
    if (c.hidden_dim < 1 || c.epochs < 1 || c.patience < 1)
        throw ConfigError("model: dimensions, epochs and patience must be >= 1");
    if (c.dropout < 0.0 || c.dropout >= 1.0) throw ConfigError("model: dropout must lie in [0, 1)");
    if (c.propagation_hops < 0) throw ConfigError("model: propagation_hops must be >= 0");
    c.gbdt = gbdt_config_from(gbdt_j, "gbdt");
    return c;
}

std::vector<ModelKind> models_from(const nlohmann::json& arr) {
    std::vector<ModelKind> models;
    for (const auto& v : arr) {
        if (!v.is_string()) throw ConfigError("models must be an array of names");
        models.push_back(model_kind_from_name(v.get<std::string>()));
    }
    if (models.empty()) throw ConfigError("at least one model required");
    return models;
}

std::vector<uint64_t> seeds_from(const nlohmann::json& arr) {
    std::vector<uint64_t> seeds;
    for (const auto& v : arr) {
        if (!v.is_number_integer() && !v.is_number_unsigned())
            throw ConfigError("seeds must be an array of integers");
        seeds.push_back(v.get<uint64_t>());
    }
    if (seeds.empty()) throw ConfigError("at least one seed required");
    return seeds;
}

std::vector<size_t> sizes_from(const nlohmann::json& arr) {
    std::vector<size_t> sizes;
    for (const auto& v : arr) {
        if (!v.is_number_integer() && !v.is_number_unsigned())
            throw ConfigError("sizes must be an array of integers");
        sizes.push_back(v.get<size_t>());
    }
    if (sizes.empty()) throw ConfigError("at least one size required");
    return sizes;
}

// Labeled graph nodes with binary labels, ascending node order.
void labeled_nodes_of(const Graph& g, const std::vector<AccountProfile>& profiles,
                      std::vector<int32_t>& nodes, std::vector<int>& labels) {
    std::vector<std::pair<int32_t, int>> pairs;
    for (const auto& p : profiles) {
        if (p.label == AccountLabel::Unlabeled) continue;
        int32_t idx = g.index_of(p.id);
        if (idx < 0) continue;
        pairs.emplace_back(idx, p.label == AccountLabel::Malicious ? 1 : 0);
    }
    std::sort(pairs.begin(), pairs.end());
    nodes.clear();
    labels.clear();
    for (const auto& [idx, label] : pairs) {
        nodes.push_back(idx);
        labels.push_back(label);
    }
}

// Feature rows for exactly the nodes of `g`, in node-index order.
FeatureMatrix subset_features(const FeatureMatrix& full, const Graph& g) {
    FeatureMatrix out;
    out.mask = full.mask;
    out.account_ids = g.ids();
    out.data.resize(g.node_count() * kFeatureCount);
    for (size_t i = 0; i < g.node_count(); ++i) {
        int64_t r = full.row_of(g.id_of(static_cast<int32_t>(i)));
        if (r < 0) throw DataError("no feature row for account " + g.id_of(static_cast<int32_t>(i)));
        std::copy_n(&full.data[static_cast<size_t>(r) * kFeatureCount], kFeatureCount,
                    &out.data[i * kFeatureCount]);
    }
    out.rebuild_row_lookup();
    return out;
}

std::vector<MaskSpec> to_mask_specs(const MaskFile& mf) {
    std::vector<MaskSpec> specs;
    std::set<std::string> used;
    for (const auto& [size, mask] : mf.masks) {
        // A full mask removes nothing regardless of mode; label it by size.
        std::string base = size == kFeatureCount ? "feat" : mf.mode;
        std::string name = base + "-" + std::to_string(size);
        while (used.count(name)) name += "x";
        used.insert(name);
        specs.push_back(MaskSpec{name, mask});
    }
    return specs;
}

MaskFile all_columns_mask() {
    MaskFile mf;
    mf.mode = "feat";
    mf.masks.emplace_back(kFeatureCount, std::vector<bool>(kFeatureCount, true));
    return mf;
}

const char* coarse_kind_label(CoarseKind kind) {
    switch (kind) {
        case CoarseKind::Target: return "target";
        case CoarseKind::CompositeBridge1: return "composite-bridge1";
        case CoarseKind::CompositeBridge2Lesser: return "composite-bridge2-lesser";
        case CoarseKind::CompositeBridge2Greater: return "composite-bridge2-greater";
    }
    throw InternalError("bad coarse kind");
}

nlohmann::json stats_json(const GraphStats& s) {
    return nlohmann::json{{"accounts", s.accounts},
                          {"transactions", s.transactions},
                          {"average_degree", s.average_degree},
                          {"connectivity", s.connectivity}};
}

nlohmann::json ingest_rows_json(const IngestReport& r) {
    return nlohmann::json{{"total", r.total_rows},
                          {"kept", r.records},
                          {"dropped_malformed", r.dropped_malformed},
                          {"dropped_out_of_window", r.dropped_out_of_window},
                          {"dropped_self_transfer", r.dropped_self_transfer}};
}

// Re-derives roles and focuses the graph; idempotent when the input is
// already focused.
FocusedGraph focus_graph(const Graph& g, const std::vector<int32_t>& targets) {
    RoleMap roles = classify_roles(g, targets);
    return focus(g, targets, roles);
}

struct MaskSet {
    MaskFile file;
    std::vector<MaskSpec> specs;
};

MaskSet attack_masks(const nlohmann::json& attack_j, const ImportanceRanking& ranking) {
    Options o(attack_j, "attack");
    MaskSet out;
    std::string mode = o.str_or("mode", "evasion");
    std::vector<size_t> sizes = sizes_from(o.array_or("sizes", nlohmann::json::array({29, 9})));
    std::string preset = o.str_or("preset", "");
    uint64_t seed = o.u64_or("seed", 1);
    o.finish();

    out.file.mode = mode;
    if (mode == "evasion") {
        auto masks = evasion_attack(ranking, sizes);
        for (size_t i = 0; i < sizes.size(); ++i) out.file.masks.emplace_back(sizes[i], masks[i]);
    } else if (mode == "random") {
        out.file.has_seed = true;
        out.file.seed = seed;
        auto masks = random_removal(sizes, seed);
        for (size_t i = 0; i < sizes.size(); ++i) out.file.masks.emplace_back(sizes[i], masks[i]);
    } else if (mode == "keep-low") {
        bool use_preset = preset == "paper";
        if (!preset.empty() && !use_preset) throw ConfigError("attack: unknown preset '" + preset + "'");
        for (size_t s : sizes) out.file.masks.emplace_back(s, select_low_importance(ranking, s, use_preset));
    } else {
        throw ConfigError("attack: unknown mode '" + mode + "' (expected evasion, random or keep-low)");
    }
    out.specs = to_mask_specs(out.file);
    return out;
}

}  // namespace

nlohmann::json run_synth(const nlohmann::json& options) {
    Options o(options, "synth");
    std::string out_dir = o.str("out_dir");
    SyntheticSpec spec = synth_spec_from(o);
    o.finish();

    ensure_dir(out_dir);
    SyntheticData data = synthesize(spec);
    std::string tx_path = out_dir + "/transactions.csv";
    std::string acc_path = out_dir + "/accounts.csv";
    write_transactions_csv(tx_path, data.transactions);
    write_accounts_csv(acc_path, data.profiles);

    size_t malicious = 0, labeled = 0;
    for (const auto& p : data.profiles) {
        if (p.label == AccountLabel::Unlabeled) continue;
        ++labeled;
        malicious += p.label == AccountLabel::Malicious ? 1 : 0;
    }
    return nlohmann::json{{"stage", "synth"},
                          {"transactions", data.transactions.size()},
                          {"accounts", data.profiles.size()},
                          {"labeled", labeled},
                          {"malicious", malicious},
                          {"paths", {{"transactions", tx_path}, {"accounts", acc_path}}}};
}

nlohmann::json run_ingest(const nlohmann::json& options) {
    Options o(options, "ingest");
    std::string tx_path = o.input_path("transactions");
    std::string acc_path = o.input_path_or("accounts");
    StudyWindow window = window_from(o);
    bool strict = o.flag_or("strict", false);
    std::string out_dir = o.str("out_dir");
    o.finish();

    ensure_dir(out_dir);
    IngestOptions iopts{strict};
    IngestReport rows;
    std::vector<TransactionRecord> txs = load_transactions(tx_path, window, rows, iopts);
    std::vector<AccountProfile> profiles;
    if (!acc_path.empty()) profiles = load_accounts(acc_path, iopts);

    GraphBuildReport build;
    InitialGraph ig = build_initial_graph(std::move(txs), profiles, build);
    std::string edges_path = out_dir + "/edges.csv";
    write_edges_csv(edges_path, ig.graph);

    return nlohmann::json{{"stage", "ingest"},
                          {"window", {{"start", window.start}, {"end", window.end}}},
                          {"rows", ingest_rows_json(rows)},
                          {"graph", {{"accounts", ig.graph.node_count()}, {"edges", ig.graph.edge_count()}}},
                          {"excluded_labeled_accounts", build.excluded_labeled_accounts},
                          {"paths", {{"edges", edges_path}}}};
}

nlohmann::json run_features(const nlohmann::json& options) {
    Options o(options, "features");
    std::string tx_path = o.input_path("transactions");
    std::string acc_path = o.input_path_or("accounts");
    StudyWindow window = window_from(o);
    bool strict = o.flag_or("strict", false);
    FeatureOptions fopts;
    fopts.require_snapshots = o.flag_or("require_snapshots", false);
    fopts.invert_directed_neighbor_naming = o.flag_or("invert_directed_neighbor_naming", false);
    std::string out = o.str("out");
    o.finish();

    IngestOptions iopts{strict};
    IngestReport rows;
    std::vector<TransactionRecord> txs = load_transactions(tx_path, window, rows, iopts);
    std::vector<AccountProfile> profiles;
    if (!acc_path.empty()) profiles = load_accounts(acc_path, iopts);

    GraphBuildReport build;
    InitialGraph ig = build_initial_graph(std::move(txs), profiles, build);
    FeatureMatrix m = extract_features(ig, profiles, fopts);
    write_features_csv(out, m);

    return nlohmann::json{{"stage", "features"},
                          {"accounts", m.rows()},
                          {"columns", kFeatureCount},
                          {"rows", ingest_rows_json(rows)},
                          {"paths", {{"features", out}}}};
}

nlohmann::json run_rank(const nlohmann::json& options) {
    Options o(options, "rank");
    std::string feat_path = o.input_path("features");
    std::string acc_path = o.input_path("accounts");
    nlohmann::json gbdt_j = o.sub_or("gbdt");
    std::string out = o.str("out");
    o.finish();

    FeatureMatrix m = read_features_csv(feat_path);
    std::vector<AccountProfile> profiles = load_accounts(acc_path);

    std::vector<size_t> labeled_rows;
    std::vector<int> labels;
    size_t skipped = 0, malicious = 0;
    for (const auto& p : profiles) {
        if (p.label == AccountLabel::Unlabeled) continue;
        int64_t r = m.row_of(p.id);
        if (r < 0) {
            ++skipped;
            continue;
        }
        labeled_rows.push_back(static_cast<size_t>(r));
        labels.push_back(p.label == AccountLabel::Malicious ? 1 : 0);
        malicious += p.label == AccountLabel::Malicious ? 1 : 0;
    }

    ImportanceRanking ranking = rank_importance(m, labels, labeled_rows, gbdt_config_from(gbdt_j, "gbdt"));
    write_ranking_json(out, ranking);

    nlohmann::json top = nlohmann::json::array(), bottom = nlohmann::json::array();
    for (size_t i = 0; i < 5 && i < ranking.order.size(); ++i) {
        top.push_back(feature_names()[static_cast<size_t>(ranking.order[i])]);
        bottom.push_back(feature_names()[static_cast<size_t>(ranking.order[ranking.order.size() - 1 - i])]);
    }
    return nlohmann::json{{"stage", "rank"},
                          {"labeled_rows", labeled_rows.size()},
                          {"malicious", malicious},
                          {"normal", labeled_rows.size() - malicious},
                          {"skipped_labeled_without_row", skipped},
                          {"top_importance", top},
                          {"lowest_importance", bottom},
                          {"paths", {{"ranking", out}}}};
}

nlohmann::json run_attack(const nlohmann::json& options) {
    Options o(options, "attack");
    std::string mode = o.str_or("mode", "evasion");
    std::string preset = o.str_or("preset", "");
    // The fixed preset and pure random removal work without a measured
    // ranking; evasion and ranked keep-low need one.
    bool needs_ranking = mode == "evasion" || (mode == "keep-low" && preset != "paper");
    std::string ranking_path = needs_ranking ? o.input_path("ranking") : o.input_path_or("ranking");
    std::string out = o.str("out");
    nlohmann::json attack_j = nlohmann::json::object();
    if (o.has("sizes")) attack_j["sizes"] = o.array_or("sizes", nlohmann::json::array());
    if (!preset.empty()) attack_j["preset"] = preset;
    if (o.has("seed")) attack_j["seed"] = o.u64_or("seed", 1);
    attack_j["mode"] = mode;
    o.finish();

    ImportanceRanking ranking{};
    if (!ranking_path.empty()) ranking = read_ranking_json(ranking_path);
    MaskSet masks = attack_masks(attack_j, ranking);
    write_masks_json(out, masks.file);

    nlohmann::json sizes = nlohmann::json::array();
    for (const auto& [size, _] : masks.file.masks) sizes.push_back(size);
    return nlohmann::json{
        {"stage", "attack"}, {"mode", mode}, {"sizes", sizes}, {"paths", {{"masks", out}}}};
}

nlohmann::json run_focus(const nlohmann::json& options) {
    Options o(options, "focus");
    std::string edges_path = o.input_path("edges");
    std::string acc_path = o.input_path("accounts");
    std::string out_dir = o.str("out_dir");
    o.finish();

    Graph g = read_edges_csv(edges_path);
    std::vector<AccountProfile> profiles = load_accounts(acc_path);
    std::vector<int32_t> targets = target_indices(g, profiles);

    RoleMap roles = classify_roles(g, targets);
    FocusedGraph focused = focus(g, targets, roles);

    ensure_dir(out_dir);
    std::string out_edges = out_dir + "/edges.csv";
    std::string out_nodes = out_dir + "/nodes.csv";
    write_edges_csv(out_edges, focused.graph);
    std::vector<std::string> annotations;
    annotations.reserve(focused.graph.node_count());
    for (Role r : focused.roles) annotations.emplace_back(role_name(r));
    write_nodes_csv(out_nodes, focused.graph, annotations);

    return nlohmann::json{
        {"stage", "focus"},
        {"targets", targets.size()},
        {"warning_no_targets", roles.empty_target_warning},
        {"initial",
         {{"nodes", g.node_count()}, {"edges", g.edge_count()}, {"role_counts", role_counts(roles)}}},
        {"focused",
         {{"nodes", focused.graph.node_count()},
          {"edges", focused.graph.edge_count()},
          {"role_counts", role_counts(focused.roles)},
          {"stats", stats_json(compute_stats(focused.graph))}}},
        {"paths", {{"edges", out_edges}, {"nodes", out_nodes}}}};
}

nlohmann::json run_coarsen(const nlohmann::json& options) {
    Options o(options, "coarsen");
    std::string edges_path = o.input_path("edges");
    std::string acc_path = o.input_path("accounts");
    std::string feat_path = o.input_path("features");
    CoarsenMode mode = coarsen_mode_from_name(o.str_or("mode", "paper-literal"));
    std::string out_dir = o.str("out_dir");
    o.finish();

    Graph g = read_edges_csv(edges_path);
    std::vector<AccountProfile> profiles = load_accounts(acc_path);
    std::vector<int32_t> targets = target_indices(g, profiles);
    FocusedGraph focused = focus_graph(g, targets);
    FeatureMatrix full = read_features_csv(feat_path);
    CoarsenedGraph coarse = coarsen(focused, full, mode);

    ensure_dir(out_dir);
    std::string out_edges = out_dir + "/edges.csv";
    std::string out_nodes = out_dir + "/nodes.csv";
    std::string out_feats = out_dir + "/features.csv";
    std::string out_prov = out_dir + "/provenance.json";
    write_edges_csv(out_edges, coarse.graph);
    std::vector<std::string> annotations;
    annotations.reserve(coarse.graph.node_count());
    std::map<std::string, size_t> kind_counts;
    for (CoarseKind k : coarse.kinds) {
        annotations.emplace_back(coarse_kind_label(k));
        ++kind_counts[coarse_kind_label(k)];
    }
    write_nodes_csv(out_nodes, coarse.graph, annotations);
    write_features_csv(out_feats, coarse.features);
    write_provenance_json(out_prov, coarse.provenance);

    return nlohmann::json{{"stage", "coarsen"},
                          {"mode", coarsen_mode_name(mode)},
                          {"nodes", coarse.graph.node_count()},
                          {"edges", coarse.graph.edge_count()},
                          {"kinds", kind_counts},
                          {"pairs",
                           {{"order1", coarse.pair_count_order1},
                            {"order2", coarse.pair_count_order2},
                            {"dropped_one_sided", coarse.dropped_one_sided_pairs}}},
                          {"stats", stats_json(compute_stats(coarse.graph))},
                          {"paths",
                           {{"edges", out_edges},
                            {"nodes", out_nodes},
                            {"features", out_feats},
                            {"provenance", out_prov}}}};
}

nlohmann::json run_sample(const nlohmann::json& options) {
    Options o(options, "sample");
    std::string edges_path = o.input_path("edges");
    std::string acc_path = o.input_path("accounts");
    size_t budget = static_cast<size_t>(o.u64("node_budget"));
    uint64_t seed = o.u64_or("seed", 1);
    std::string out_dir = o.str("out_dir");
    o.finish();

    Graph g = read_edges_csv(edges_path);
    std::vector<AccountProfile> profiles = load_accounts(acc_path);
    std::vector<int32_t> targets = target_indices(g, profiles);
    SampledGraph sampled = random_sample(g, targets, budget, seed);

    ensure_dir(out_dir);
    std::string out_edges = out_dir + "/edges.csv";
    std::string out_nodes = out_dir + "/nodes.csv";
    write_edges_csv(out_edges, sampled.graph);
    std::set<int32_t> target_set(targets.begin(), targets.end());
    std::vector<std::string> annotations;
    annotations.reserve(sampled.graph.node_count());
    for (int32_t orig : sampled.orig_index)
        annotations.emplace_back(target_set.count(orig) ? "target" : "background");
    write_nodes_csv(out_nodes, sampled.graph, annotations);

    return nlohmann::json{{"stage", "sample"},
                          {"node_budget", budget},
                          {"seed", seed},
                          {"nodes", sampled.graph.node_count()},
                          {"edges", sampled.graph.edge_count()},
                          {"stats", stats_json(compute_stats(sampled.graph))},
                          {"paths", {{"edges", out_edges}, {"nodes", out_nodes}}}};
}

nlohmann::json run_stats(const nlohmann::json& options) {
    Options o(options, "stats");
    std::string edges_path = o.input_path("edges");
    std::string out = o.str_or("out", "");
    o.finish();

    GraphStats stats = compute_stats(read_edges_csv(edges_path));
    if (!out.empty()) write_stats_json(out, stats);
    nlohmann::json report = stats_json(stats);
    report["stage"] = "stats";
    if (!out.empty()) report["paths"] = {{"stats", out}};
    return report;
}

nlohmann::json run_detect(const nlohmann::json& options) {
    Options o(options, "detect");
    std::string edges_path = o.input_path("edges");
    std::string feat_path = o.input_path("features");
    std::string acc_path = o.input_path("accounts");
    std::string blind_path = o.input_path_or("blind_features");
    std::string masks_path = o.input_path_or("masks");
    std::vector<ModelKind> models =
        models_from(o.array_or("models", nlohmann::json::array({"gcn", "sgc", "mlp", "gbdt"})));
    std::vector<uint64_t> seeds = seeds_from(o.array_or("seeds", nlohmann::json::array({1, 2, 3, 4, 5})));
    std::string graph_name = o.str_or("graph_name", "graph");
    nlohmann::json model_j = o.sub_or("model");
    nlohmann::json gbdt_j = o.sub_or("gbdt");
    std::string out_dir = o.str("out_dir");
    std::string checkpoint_dir = o.str_or("checkpoint_dir", "");
    o.finish();

    ModelConfig config = model_config_from(model_j, gbdt_j);
    Graph g = read_edges_csv(edges_path);
    FeatureMatrix full = read_features_csv(feat_path);
    FeatureMatrix aligned = subset_features(full, g);
    FeatureMatrix blind;
    bool has_blind = !blind_path.empty();
    if (has_blind) blind = read_features_csv(blind_path);
    std::vector<AccountProfile> profiles = load_accounts(acc_path);

    DetectInput input;
    input.graph = &g;
    input.features = &aligned;
    input.blind_features = has_blind ? &blind : nullptr;
    labeled_nodes_of(g, profiles, input.labeled_nodes, input.labels);

    MaskFile mf = masks_path.empty() ? all_columns_mask() : read_masks_json(masks_path);
    std::vector<MaskSpec> specs = to_mask_specs(mf);

    ensure_dir(out_dir);
    if (!checkpoint_dir.empty()) ensure_dir(checkpoint_dir);
    std::vector<CellResult> results =
        run_experiment(input, graph_name, specs, models, seeds, config, checkpoint_dir);

    std::string out_csv = out_dir + "/results.csv";
    std::string out_json = out_dir + "/results.json";
    write_results_csv(out_csv, results);
    write_json_file(out_json, results_to_json(results));

    return nlohmann::json{{"stage", "detect"},
                          {"graph_name", graph_name},
                          {"labeled", input.labeled_nodes.size()},
                          {"cells", results.size()},
                          {"results", results_to_json(results)},
                          {"paths", {{"results_csv", out_csv}, {"results_json", out_json}}}};
}

namespace {

template <typename F>
auto stage_guard(const char* stage, F&& f) {
    try {
        return f();
    } catch (const Error& e) {
        throw Error(e.code(), std::string("stage ") + stage + ": " + e.what());
    }
}

}  // namespace

nlohmann::json run_pipeline(const nlohmann::json& options) {
    Options o(options, "pipeline");
    std::string out_dir = o.str("out_dir");
    nlohmann::json synth_j = o.sub_or("synth");
    std::string tx_path, acc_path;
    bool use_synth = !synth_j.is_null();
    if (use_synth) {
        if (o.has("transactions") || o.has("accounts"))
            throw ConfigError("pipeline: give either synth or transactions/accounts, not both");
    } else {
        tx_path = o.input_path("transactions");
        acc_path = o.input_path("accounts");
    }
    StudyWindow window = window_from(o);
    bool strict = o.flag_or("strict", false);
    FeatureOptions fopts;
    fopts.require_snapshots = o.flag_or("require_snapshots", false);
    fopts.invert_directed_neighbor_naming = o.flag_or("invert_directed_neighbor_naming", false);
    CoarsenMode coarsen_mode = coarsen_mode_from_name(o.str_or("coarsen_mode", "paper-literal"));
    nlohmann::json attack_j = o.sub_or("attack");
    if (attack_j.is_null()) attack_j = nlohmann::json::object();
    size_t node_budget = static_cast<size_t>(o.u64_or("node_budget", 0));  // 0 = match coarsened size
    std::vector<ModelKind> models =
        models_from(o.array_or("models", nlohmann::json::array({"gcn", "sgc", "mlp", "gbdt"})));
    std::vector<uint64_t> seeds = seeds_from(o.array_or("seeds", nlohmann::json::array({1, 2, 3, 4, 5})));
    uint64_t sample_seed = o.u64_or("sample_seed", 1);
    nlohmann::json model_j = o.sub_or("model");
    nlohmann::json gbdt_j = o.sub_or("gbdt");
    nlohmann::json variants_j =
        o.array_or("variants", nlohmann::json::array({"focused", "coarsened", "sampled"}));
    o.finish();
    ModelConfig config = model_config_from(model_j, gbdt_j);

    std::vector<std::string> variants;
    for (const auto& v : variants_j) {
        if (!v.is_string()) throw ConfigError("pipeline: variants must be an array of names");
        std::string name = v.get<std::string>();
        if (name != "focused" && name != "coarsened" && name != "sampled")
            throw ConfigError("pipeline: unknown variant '" + name + "'");
        variants.push_back(name);
    }

    ensure_dir(out_dir);
    nlohmann::json summary;
    summary["config"] = options;

    // Data source.
    if (use_synth) {
        stage_guard("synth", [&] {
            nlohmann::json synth_opts = synth_j;
            synth_opts["out_dir"] = out_dir + "/data";
            nlohmann::json rep = run_synth(synth_opts);
            tx_path = rep["paths"]["transactions"].get<std::string>();
            acc_path = rep["paths"]["accounts"].get<std::string>();
            summary["stages"]["synth"] = std::move(rep);
            return 0;
        });
    }

    // Ingest.
    IngestReport rows;
    std::vector<AccountProfile> profiles;
    InitialGraph ig;
    stage_guard("ingest", [&] {
        IngestOptions iopts{strict};
        std::vector<TransactionRecord> txs = load_transactions(tx_path, window, rows, iopts);
        if (!acc_path.empty()) profiles = load_accounts(acc_path, iopts);
        GraphBuildReport build;
        ig = build_initial_graph(std::move(txs), profiles, build);
        ensure_dir(out_dir + "/initial");
        write_edges_csv(out_dir + "/initial/edges.csv", ig.graph);
        summary["stages"]["ingest"] =
            nlohmann::json{{"rows", ingest_rows_json(rows)},
                           {"graph", {{"accounts", ig.graph.node_count()}, {"edges", ig.graph.edge_count()}}},
                           {"excluded_labeled_accounts", build.excluded_labeled_accounts}};
        return 0;
    });

    // Features.
    FeatureMatrix full;
    stage_guard("features", [&] {
        full = extract_features(ig, profiles, fopts);
        write_features_csv(out_dir + "/features.csv", full);
        summary["stages"]["features"] = nlohmann::json{{"accounts", full.rows()}, {"columns", kFeatureCount}};
        return 0;
    });

    // Importance ranking.
    ImportanceRanking ranking;
    stage_guard("rank", [&] {
        std::vector<size_t> labeled_rows;
        std::vector<int> labels;
        for (const auto& p : profiles) {
            if (p.label == AccountLabel::Unlabeled) continue;
            int64_t r = full.row_of(p.id);
            if (r < 0) continue;
            labeled_rows.push_back(static_cast<size_t>(r));
            labels.push_back(p.label == AccountLabel::Malicious ? 1 : 0);
        }
        ranking = rank_importance(full, labels, labeled_rows, config.gbdt);
        write_ranking_json(out_dir + "/ranking.json", ranking);
        summary["stages"]["rank"] = nlohmann::json{{"labeled_rows", labeled_rows.size()}};
        return 0;
    });

    // Feature masks.
    MaskSet masks;
    stage_guard("attack", [&] {
        masks = attack_masks(attack_j, ranking);
        write_masks_json(out_dir + "/masks.json", masks.file);
        nlohmann::json sizes = nlohmann::json::array();
        for (const auto& [size, _] : masks.file.masks) sizes.push_back(size);
        summary["stages"]["attack"] = nlohmann::json{{"mode", masks.file.mode}, {"sizes", sizes}};
        return 0;
    });

    // Focus.
    std::vector<int32_t> targets = target_indices(ig.graph, profiles);
    RoleMap roles;
    FocusedGraph focused;
    stage_guard("focus", [&] {
        roles = classify_roles(ig.graph, targets);
        focused = focus(ig.graph, targets, roles);
        ensure_dir(out_dir + "/focused");
        write_edges_csv(out_dir + "/focused/edges.csv", focused.graph);
        std::vector<std::string> annotations;
        for (Role r : focused.roles) annotations.emplace_back(role_name(r));
        write_nodes_csv(out_dir + "/focused/nodes.csv", focused.graph, annotations);
        return 0;
    });

    // Coarsen.
    CoarsenedGraph coarse;
    std::map<std::string, size_t> kind_counts;
    stage_guard("coarsen", [&] {
        coarse = coarsen(focused, full, coarsen_mode);
        ensure_dir(out_dir + "/coarsened");
        write_edges_csv(out_dir + "/coarsened/edges.csv", coarse.graph);
        std::vector<std::string> annotations;
        for (CoarseKind k : coarse.kinds) {
            annotations.emplace_back(coarse_kind_label(k));
            ++kind_counts[coarse_kind_label(k)];
        }
        write_nodes_csv(out_dir + "/coarsened/nodes.csv", coarse.graph, annotations);
        write_features_csv(out_dir + "/coarsened/features.csv", coarse.features);
        write_provenance_json(out_dir + "/coarsened/provenance.json", coarse.provenance);
        return 0;
    });

    // Random-sample baseline at the coarsened node budget.
    SampledGraph sampled;
    size_t budget = node_budget;
    stage_guard("sample", [&] {
        if (budget == 0) budget = coarse.graph.node_count();
        budget = std::max(budget, targets.size());
        budget = std::min(budget, ig.graph.node_count());
        sampled = random_sample(ig.graph, targets, budget, sample_seed);
        ensure_dir(out_dir + "/sampled");
        write_edges_csv(out_dir + "/sampled/edges.csv", sampled.graph);
        std::set<int32_t> target_set(targets.begin(), targets.end());
        std::vector<std::string> annotations;
        for (int32_t orig : sampled.orig_index)
            annotations.emplace_back(target_set.count(orig) ? "target" : "background");
        write_nodes_csv(out_dir + "/sampled/nodes.csv", sampled.graph, annotations);
        return 0;
    });

    // Compression summary across variants.
    summary["roles"] = nlohmann::json{{"initial", role_counts(roles)},
                                      {"focused", role_counts(focused.roles)},
                                      {"coarsened_kinds", kind_counts}};
    summary["structure"] = nlohmann::json{{"order1_composites", coarse.pair_count_order1},
                                          {"order2_pairs", coarse.pair_count_order2},
                                          {"dropped_one_sided_pairs", coarse.dropped_one_sided_pairs}};
    summary["compression"] = nlohmann::json{{"initial", stats_json(compute_stats(ig.graph))},
                                            {"focused", stats_json(compute_stats(focused.graph))},
                                            {"coarsened", stats_json(compute_stats(coarse.graph))},
                                            {"sampled", stats_json(compute_stats(sampled.graph))}};

    // Detection grid over the requested variants.
    std::vector<CellResult> all_results;
    stage_guard("detect", [&] {
        for (const std::string& variant : variants) {
            const Graph* g = nullptr;
            FeatureMatrix aligned;
            if (variant == "focused") {
                g = &focused.graph;
                aligned = subset_features(full, focused.graph);
            } else if (variant == "coarsened") {
                g = &coarse.graph;
                aligned = coarse.features;
            } else {
                g = &sampled.graph;
                aligned = subset_features(full, sampled.graph);
            }
            DetectInput input;
            input.graph = g;
            input.features = &aligned;
            input.blind_features = &full;
            labeled_nodes_of(*g, profiles, input.labeled_nodes, input.labels);
            std::vector<CellResult> cell =
                run_experiment(input, variant, masks.specs, models, seeds, config);
            all_results.insert(all_results.end(), cell.begin(), cell.end());
        }
        write_results_csv(out_dir + "/results.csv", all_results);
        write_json_file(out_dir + "/results.json", results_to_json(all_results));
        return 0;
    });
    summary["results"] = results_to_json(all_results);

    write_json_file(out_dir + "/summary.json", summary);
    summary["paths"] = {{"summary", out_dir + "/summary.json"}};
    return summary;
}

nlohmann::json run_stage(const std::string& stage, const nlohmann::json& options) {
    if (stage == "synth") return run_synth(options);
    if (stage == "ingest") return run_ingest(options);
    if (stage == "features") return run_features(options);
    if (stage == "rank") return run_rank(options);
    if (stage == "attack") return run_attack(options);
    if (stage == "focus") return run_focus(options);
    if (stage == "coarsen") return run_coarsen(options);
    if (stage == "sample") return run_sample(options);
    if (stage == "stats") return run_stats(options);
    if (stage == "detect") return run_detect(options);
    if (stage == "pipeline") return run_pipeline(options);
    throw ConfigError("unknown stage: " + stage);
}

}  // namespace txgc
