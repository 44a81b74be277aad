#include "core/ingest.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

#include "core/common.hpp"

namespace txgc {

namespace {

// Days-from-civil (Gregorian, proleptic); avoids timegm portability issues.
int64_t days_from_civil(int y, int m, int d) {
    y -= m <= 2;
    int64_t era = (y >= 0 ? y : y - 399) / 400;
    int64_t yoe = y - era * 400;
    int64_t doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    int64_t doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + doe - 719468;
}

bool parse_bool_field(std::string_view v, bool& out) {
    if (v == "0" || v == "false" || v == "False" || v == "") {
        out = false;
        return true;
    }
    if (v == "1" || v == "true" || v == "True") {
        out = true;
        return true;
    }
    return false;
}

bool parse_double_field(std::string_view v, double& out) {
    if (v.empty()) return false;
    char* end = nullptr;
    std::string tmp(v);
    out = std::strtod(tmp.c_str(), &end);
    return end == tmp.c_str() + tmp.size();
}

bool parse_int_field(std::string_view v, int64_t& out) {
    if (v.empty()) return false;
    auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    return res.ec == std::errc() && res.ptr == v.data() + v.size();
}

}  // namespace

StudyWindow default_window() { return StudyWindow{1514764800, 1577836800}; }

int64_t parse_time_point(const std::string& text) {
    std::string_view v = trim_view(text);
    int64_t epoch;
    if (parse_int_field(v, epoch)) return epoch;
    int y, m, d;
    if (std::sscanf(std::string(v).c_str(), "%d-%d-%d", &y, &m, &d) == 3 && m >= 1 && m <= 12 && d >= 1 && d <= 31)
        return days_from_civil(y, m, d) * 86400;
    throw ConfigError("cannot parse time point '" + text + "' (expected epoch seconds or YYYY-MM-DD)");
}

StudyWindow make_window(const std::string& start, const std::string& end) {
    StudyWindow w{parse_time_point(start), parse_time_point(end)};
    if (w.start >= w.end) throw ConfigError("study window start must precede end");
    return w;
}

std::vector<TransactionRecord> load_transactions(const std::string& path, const StudyWindow& window,
                                                 IngestReport& report, const IngestOptions& opts) {
    if (window.start >= window.end) throw ConfigError("study window start must precede end");
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open transactions file: " + path);

    report = IngestReport{};
    std::vector<TransactionRecord> out;
    std::string line;

    // Sniff format from the first non-blank line.
    std::streampos data_start = in.tellg();
    bool jsonl = false;
    while (std::getline(in, line)) {
        std::string_view t = trim_view(line);
        if (t.empty()) {
            data_start = in.tellg();
            continue;
        }
        jsonl = t.front() == '{';
        break;
    }
    in.clear();
    in.seekg(data_start);

    auto fail_row = [&](size_t lineno, const std::string& why) {
        ++report.dropped_malformed;
        if (opts.strict) throw DataError(path + ":" + std::to_string(lineno) + ": malformed row (" + why + ")");
    };

    size_t lineno = 0;
    bool header_seen = jsonl;  // CSV consumes one header line
    int col_from = 0, col_to = 1, col_value = 2, col_ts = 3, ncols = 4;
    while (std::getline(in, line)) {
        ++lineno;
        std::string_view t = trim_view(line);
        if (t.empty()) continue;
        if (!header_seen) {
            header_seen = true;
            auto cols = split_view(t, ',');
            col_from = col_to = col_value = col_ts = -1;
            ncols = static_cast<int>(cols.size());
            for (int i = 0; i < ncols; ++i) {
                std::string_view c = trim_view(cols[i]);
                if (c == "from") col_from = i;
                else if (c == "to") col_to = i;
                else if (c == "value_eth") col_value = i;
                else if (c == "timestamp") col_ts = i;
            }
            if (col_from < 0 || col_to < 0 || col_value < 0 || col_ts < 0)
                throw DataError(path + ": transactions header must name from,to,value_eth,timestamp");
            continue;
        }
        ++report.total_rows;
        TransactionRecord rec;
        if (jsonl) {
            nlohmann::json j = nlohmann::json::parse(t, nullptr, false);
            if (j.is_discarded() || !j.is_object()) {
                fail_row(lineno, "invalid JSON");
                continue;
            }
            if (!j.contains("from") || !j.contains("to") || !j.contains("value_eth") || !j.contains("timestamp")) {
                fail_row(lineno, "missing field");
                continue;
            }
            try {
                rec.from_id = j.at("from").get<std::string>();
                rec.to_id = j.at("to").get<std::string>();
                const auto& v = j.at("value_eth");
                if (v.is_string()) {
                    if (!parse_double_field(v.get<std::string>(), rec.value_eth)) {
                        fail_row(lineno, "bad value_eth");
                        continue;
                    }
                } else {
                    rec.value_eth = v.get<double>();
                }
                rec.timestamp = j.at("timestamp").get<int64_t>();
            } catch (const nlohmann::json::exception&) {
                fail_row(lineno, "bad field type");
                continue;
            }
        } else {
            auto cols = split_view(t, ',');
            if (static_cast<int>(cols.size()) != ncols) {
                fail_row(lineno, "wrong column count");
                continue;
            }
            rec.from_id = std::string(trim_view(cols[col_from]));
            rec.to_id = std::string(trim_view(cols[col_to]));
            if (rec.from_id.empty() || rec.to_id.empty()) {
                fail_row(lineno, "empty account id");
                continue;
            }
            if (!parse_double_field(trim_view(cols[col_value]), rec.value_eth)) {
                fail_row(lineno, "bad value_eth");
                continue;
            }
            if (!parse_int_field(trim_view(cols[col_ts]), rec.timestamp)) {
                fail_row(lineno, "bad timestamp");
                continue;
            }
        }
        if (rec.value_eth < 0.0 || rec.from_id.empty() || rec.to_id.empty()) {
            fail_row(lineno, rec.value_eth < 0.0 ? "negative value" : "empty account id");
            continue;
        }
        // '|' is reserved for composite node ids.
        if (rec.from_id.find('|') != std::string::npos || rec.to_id.find('|') != std::string::npos) {
            fail_row(lineno, "account id contains '|'");
            continue;
        }
        if (!window.contains(rec.timestamp)) {
            ++report.dropped_out_of_window;
            continue;
        }
        if (rec.from_id == rec.to_id) {
            ++report.dropped_self_transfer;
            continue;
        }
        out.push_back(std::move(rec));
    }
    report.records = out.size();
    return out;
}

std::vector<AccountProfile> load_accounts(const std::string& path, const IngestOptions& opts) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open accounts file: " + path);

    std::vector<AccountProfile> out;
    std::set<std::string> seen;
    std::string line;
    bool header_seen = false;
    int col_id = -1, col_sc = -1, col_token = -1, col_label = -1, col_balance = -1;
    int ncols = 0;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string_view t = trim_view(line);
        if (t.empty()) continue;
        auto cols = split_view(t, ',');
        if (!header_seen) {
            header_seen = true;
            ncols = static_cast<int>(cols.size());
            for (int i = 0; i < ncols; ++i) {
                std::string_view c = trim_view(cols[i]);
                if (c == "id") col_id = i;
                else if (c == "is_contract") col_sc = i;
                else if (c == "is_token") col_token = i;
                else if (c == "label") col_label = i;
                else if (c == "starting_balance_eth") col_balance = i;
            }
            if (col_id < 0 || col_sc < 0 || col_token < 0 || col_label < 0 || col_balance < 0)
                throw DataError(path + ": accounts header must name id,is_contract,is_token,label,starting_balance_eth");
            continue;
        }
        auto fail = [&](const std::string& why) {
            if (opts.strict) throw DataError(path + ":" + std::to_string(lineno) + ": malformed account row (" + why + ")");
        };
        if (static_cast<int>(cols.size()) != ncols) {
            fail("wrong column count");
            continue;
        }
        AccountProfile p;
        p.id = std::string(trim_view(cols[col_id]));
        if (p.id.empty()) {
            fail("empty id");
            continue;
        }
        if (!parse_bool_field(trim_view(cols[col_sc]), p.is_contract) ||
            !parse_bool_field(trim_view(cols[col_token]), p.is_token)) {
            fail("bad boolean flag");
            continue;
        }
        std::string_view lab = trim_view(cols[col_label]);
        if (lab == "malicious") p.label = AccountLabel::Malicious;
        else if (lab == "normal") p.label = AccountLabel::Normal;
        else if (lab == "unlabeled" || lab.empty()) p.label = AccountLabel::Unlabeled;
        else {
            fail("unknown label '" + std::string(lab) + "'");
            continue;
        }
        std::string_view bal = trim_view(cols[col_balance]);
        if (!bal.empty()) {
            double b;
            if (!parse_double_field(bal, b)) {
                fail("bad starting balance");
                continue;
            }
            p.starting_balance_eth = b;
        }
        if (!seen.insert(p.id).second) throw DataError(path + ": duplicate account id " + p.id);
        out.push_back(std::move(p));
    }
    return out;
}

InitialGraph build_initial_graph(std::vector<TransactionRecord> txs, const std::vector<AccountProfile>& profiles,
                                 GraphBuildReport& report) {
    report = GraphBuildReport{};
    std::set<std::string> node_ids;
    for (const auto& tx : txs) {
        node_ids.insert(tx.from_id);
        node_ids.insert(tx.to_id);
    }
    for (const auto& p : profiles) {
        if (p.label != AccountLabel::Unlabeled && node_ids.find(p.id) == node_ids.end())
            report.excluded_labeled_accounts.push_back(p.id);
    }
    std::sort(report.excluded_labeled_accounts.begin(), report.excluded_labeled_accounts.end());

    InitialGraph result;
    result.graph = Graph::from_nodes(std::vector<std::string>(node_ids.begin(), node_ids.end()));
    result.tx_index.resize(result.graph.node_count());
    result.transactions = std::move(txs);
    for (size_t i = 0; i < result.transactions.size(); ++i) {
        const auto& tx = result.transactions[i];
        int32_t u = result.graph.index_of(tx.from_id);
        int32_t v = result.graph.index_of(tx.to_id);
        result.graph.add_edge(u, v);
        result.tx_index[u].push_back(i);
        result.tx_index[v].push_back(i);
    }
    result.graph.finalize();
    return result;
}

std::vector<int32_t> target_indices(const Graph& g, const std::vector<AccountProfile>& profiles) {
    std::vector<int32_t> out;
    for (const auto& p : profiles) {
        if (p.label == AccountLabel::Unlabeled) continue;
        int32_t idx = g.index_of(p.id);
        if (idx >= 0) out.push_back(idx);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

}  // namespace txgc
