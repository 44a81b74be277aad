#include "core/io.hpp"

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include "core/common.hpp"

namespace txgc {

namespace {

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write file: " + path);
    return out;
}

std::ifstream open_in(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read file: " + path);
    return in;
}

double parse_double_field(std::string_view field, const std::string& path, size_t lineno) {
    double v = 0.0;
    auto res = std::from_chars(field.data(), field.data() + field.size(), v);
    if (res.ec != std::errc{} || res.ptr != field.data() + field.size())
        throw DataError(path + ":" + std::to_string(lineno) + ": bad number '" + std::string(field) + "'");
    return v;
}

const char* label_text(AccountLabel label) {
    switch (label) {
        case AccountLabel::Malicious: return "malicious";
        case AccountLabel::Normal: return "normal";
        case AccountLabel::Unlabeled: return "";
    }
    return "";
}

}  // namespace

void write_transactions_csv(const std::string& path, const std::vector<TransactionRecord>& records) {
    auto out = open_out(path);
    out << "from,to,value_eth,timestamp\n";
    for (const auto& r : records) {
        out << r.from_id << ',' << r.to_id << ',' << format_double(r.value_eth) << ',' << r.timestamp << '\n';
    }
}

void write_accounts_csv(const std::string& path, const std::vector<AccountProfile>& profiles) {
    auto out = open_out(path);
    out << "id,is_contract,is_token,label,starting_balance_eth\n";
    for (const auto& p : profiles) {
        out << p.id << ',' << (p.is_contract ? 1 : 0) << ',' << (p.is_token ? 1 : 0) << ','
            << label_text(p.label) << ',';
        if (p.starting_balance_eth) out << format_double(*p.starting_balance_eth);
        out << '\n';
    }
}

void write_features_csv(const std::string& path, const FeatureMatrix& m) {
    auto out = open_out(path);
    out << "account_id";
    for (const auto& name : feature_names()) out << ',' << name;
    out << '\n';
    for (size_t r = 0; r < m.rows(); ++r) {
        out << m.account_ids[r];
        for (size_t c = 0; c < kFeatureCount; ++c) out << ',' << format_double(m.at(r, c));
        out << '\n';
    }
}

FeatureMatrix read_features_csv(const std::string& path) {
    auto in = open_in(path);
    std::string line;
    if (!std::getline(in, line)) throw DataError(path + ": empty feature file");
    auto header = split_view(trim_view(line), ',');
    if (header.size() != kFeatureCount + 1 || header[0] != "account_id")
        throw DataError(path + ": unexpected feature header");
    for (size_t c = 0; c < kFeatureCount; ++c) {
        if (header[c + 1] != feature_names()[c])
            throw DataError(path + ": feature column " + std::to_string(c + 1) + " is '" +
                            std::string(header[c + 1]) + "', expected '" + feature_names()[c] + "'");
    }

    FeatureMatrix m;
    m.mask.assign(kFeatureCount, true);
    size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        auto t = trim_view(line);
        if (t.empty()) continue;
        auto fields = split_view(t, ',');
        if (fields.size() != kFeatureCount + 1)
            throw DataError(path + ":" + std::to_string(lineno) + ": expected " +
                            std::to_string(kFeatureCount + 1) + " fields, got " + std::to_string(fields.size()));
        m.account_ids.emplace_back(fields[0]);
        for (size_t c = 0; c < kFeatureCount; ++c)
            m.data.push_back(parse_double_field(fields[c + 1], path, lineno));
    }
    m.rebuild_row_lookup();
    if (m.data.size() != m.rows() * kFeatureCount) throw InternalError("feature row bookkeeping broken");
    return m;
}

void write_ranking_json(const std::string& path, const ImportanceRanking& ranking) {
    nlohmann::json scores;
    for (size_t c = 0; c < kFeatureCount; ++c) scores[feature_names()[c]] = ranking.scores[c];
    nlohmann::json order = nlohmann::json::array();
    for (int c : ranking.order) order.push_back(feature_names()[static_cast<size_t>(c)]);
    write_json_file(path, nlohmann::json{{"order", std::move(order)}, {"scores", std::move(scores)}});
}

ImportanceRanking read_ranking_json(const std::string& path) {
    nlohmann::json j = read_json_file(path);
    std::array<double, kFeatureCount> scores{};
    const auto& sc = j.at("scores");
    for (size_t c = 0; c < kFeatureCount; ++c) {
        const std::string& name = feature_names()[c];
        if (!sc.contains(name)) throw DataError(path + ": missing score for " + name);
        scores[c] = sc.at(name).get<double>();
    }
    ImportanceRanking ranking = make_ranking(scores);
    // A hand-edited order wins over the recomputed one as long as it is a
    // permutation of all columns.
    if (j.contains("order")) {
        std::vector<int> order;
        std::set<int> seen;
        for (const auto& name : j.at("order")) {
            int c = feature_index(name.get<std::string>());
            if (c < 0) throw DataError(path + ": unknown feature '" + name.get<std::string>() + "' in order");
            if (!seen.insert(c).second) throw DataError(path + ": duplicate feature in order");
            order.push_back(c);
        }
        if (order.size() != kFeatureCount) throw DataError(path + ": order must list every feature once");
        ranking.order = std::move(order);
    }
    return ranking;
}

void write_masks_json(const std::string& path, const MaskFile& file) {
    nlohmann::json j;
    j["mode"] = file.mode;
    if (file.has_seed) j["seed"] = file.seed;
    nlohmann::json masks = nlohmann::json::array();
    for (const auto& [size, mask] : file.masks) {
        nlohmann::json keep = nlohmann::json::array();
        for (size_t c = 0; c < kFeatureCount; ++c)
            if (mask[c]) keep.push_back(feature_names()[c]);
        masks.push_back(nlohmann::json{{"size", size}, {"keep", std::move(keep)}});
    }
    j["masks"] = std::move(masks);
    write_json_file(path, j);
}

MaskFile read_masks_json(const std::string& path) {
    nlohmann::json j = read_json_file(path);
    MaskFile file;
    file.mode = j.at("mode").get<std::string>();
    if (j.contains("seed")) {
        file.has_seed = true;
        file.seed = j.at("seed").get<uint64_t>();
    }
    for (const auto& entry : j.at("masks")) {
        std::vector<bool> mask(kFeatureCount, false);
        size_t kept = 0;
        for (const auto& name : entry.at("keep")) {
            int c = feature_index(name.get<std::string>());
            if (c < 0) throw DataError(path + ": unknown feature '" + name.get<std::string>() + "'");
            if (!mask[static_cast<size_t>(c)]) ++kept;
            mask[static_cast<size_t>(c)] = true;
        }
        size_t size = entry.at("size").get<size_t>();
        if (size != kept)
            throw DataError(path + ": mask size " + std::to_string(size) + " does not match keep list (" +
                            std::to_string(kept) + ")");
        file.masks.emplace_back(size, std::move(mask));
    }
    return file;
}

void write_edges_csv(const std::string& path, const Graph& g) {
    auto out = open_out(path);
    out << "u,v\n";
    for (const auto& [u, v] : g.edges()) out << g.id_of(u) << ',' << g.id_of(v) << '\n';
}

Graph read_edges_csv(const std::string& path) {
    auto in = open_in(path);
    std::string line;
    if (!std::getline(in, line)) throw DataError(path + ": empty edge file");
    if (trim_view(line) != "u,v") throw DataError(path + ": expected header 'u,v'");

    std::vector<std::pair<std::string, std::string>> pairs;
    std::set<std::string> ids;
    size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        auto t = trim_view(line);
        if (t.empty()) continue;
        auto fields = split_view(t, ',');
        if (fields.size() != 2 || fields[0].empty() || fields[1].empty())
            throw DataError(path + ":" + std::to_string(lineno) + ": expected 'u,v'");
        pairs.emplace_back(std::string(fields[0]), std::string(fields[1]));
        ids.insert(pairs.back().first);
        ids.insert(pairs.back().second);
    }

    Graph g = Graph::from_nodes(std::vector<std::string>(ids.begin(), ids.end()));
    for (const auto& [a, b] : pairs) g.add_edge(g.index_of(a), g.index_of(b));
    g.finalize();
    return g;
}

void write_nodes_csv(const std::string& path, const Graph& g, const std::vector<std::string>& annotations) {
    if (annotations.size() != g.node_count()) throw InternalError("node annotation count mismatch");
    auto out = open_out(path);
    out << "id,role\n";
    for (size_t i = 0; i < g.node_count(); ++i)
        out << g.id_of(static_cast<int32_t>(i)) << ',' << annotations[i] << '\n';
}

void write_provenance_json(const std::string& path, const std::vector<CompositeProvenance>& provenance) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& p : provenance) {
        nlohmann::json entry;
        entry["id"] = p.composite_id;
        entry["pair"] = {p.pair_lo, p.pair_hi};
        entry["order"] = p.order;
        if (p.side != BridgeSide::None) entry["side"] = p.side == BridgeSide::Lesser ? "lesser" : "greater";
        entry["sources"] = p.sources;
        arr.push_back(std::move(entry));
    }
    write_json_file(path, nlohmann::json{{"composites", std::move(arr)}});
}

void write_stats_json(const std::string& path, const GraphStats& stats) {
    write_json_file(path, nlohmann::json{{"accounts", stats.accounts},
                                         {"transactions", stats.transactions},
                                         {"average_degree", stats.average_degree},
                                         {"connectivity", stats.connectivity}});
}

nlohmann::json results_to_json(const std::vector<CellResult>& results) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& cell : results) {
        nlohmann::json reps = nlohmann::json::array();
        for (const auto& r : cell.repeats)
            reps.push_back(nlohmann::json{{"seed", r.seed}, {"accuracy", r.accuracy}, {"auc", r.auc}});
        arr.push_back(nlohmann::json{{"graph", cell.graph_name},
                                     {"mask", cell.mask_name},
                                     {"mask_size", cell.mask_size},
                                     {"model", cell.model},
                                     {"repeats", std::move(reps)},
                                     {"acc_mean", cell.acc_mean},
                                     {"acc_std", cell.acc_std},
                                     {"auc_mean", cell.auc_mean},
                                     {"auc_std", cell.auc_std}});
    }
    return arr;
}

void write_results_csv(const std::string& path, const std::vector<CellResult>& results) {
    auto out = open_out(path);
    out << "graph,mask,mask_size,model,repeats,acc_mean,acc_std,auc_mean,auc_std\n";
    for (const auto& cell : results) {
        out << cell.graph_name << ',' << cell.mask_name << ',' << cell.mask_size << ',' << cell.model << ','
            << cell.repeats.size() << ',' << format_double(cell.acc_mean) << ',' << format_double(cell.acc_std)
            << ',' << format_double(cell.auc_mean) << ',' << format_double(cell.auc_std) << '\n';
    }
}

void write_json_file(const std::string& path, const nlohmann::json& j) {
    auto out = open_out(path);
    out << j.dump(2) << '\n';
}

nlohmann::json read_json_file(const std::string& path) {
    auto in = open_in(path);
    try {
        nlohmann::json j;
        in >> j;
        return j;
    } catch (const nlohmann::json::exception& e) {
        throw DataError("malformed JSON in " + path + ": " + e.what());
    }
}

}  // namespace txgc
