// Command-line driver. Links only the shared C API; all heavy lifting
// happens behind txgc_run().
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include <nlohmann/json.hpp>

#include "txgc/txgc.h"

namespace {

using nlohmann::json;

// Shared flag state for one subcommand; only explicitly set flags end up
// in the options object so library defaults stay in charge.
struct StageArgs {
    json options = json::object();
    std::string report_path;
};

json parse_int_list(const std::string& text, const std::string& flag) {
    json arr = json::array();
    size_t start = 0;
    while (start <= text.size()) {
        size_t pos = text.find(',', start);
        std::string tok = text.substr(start, pos == std::string::npos ? std::string::npos : pos - start);
        if (tok.empty()) throw CLI::ValidationError(flag, "empty element in list");
        try {
            size_t used = 0;
            long long v = std::stoll(tok, &used);
            if (used != tok.size() || v < 0) throw std::invalid_argument(tok);
            arr.push_back(v);
        } catch (const std::exception&) {
            throw CLI::ValidationError(flag, "expected a comma-separated list of non-negative integers");
        }
        if (pos == std::string::npos) break;
        start = pos + 1;
    }
    return arr;
}

json parse_name_list(const std::string& text) {
    json arr = json::array();
    size_t start = 0;
    while (start <= text.size()) {
        size_t pos = text.find(',', start);
        arr.push_back(text.substr(start, pos == std::string::npos ? std::string::npos : pos - start));
        if (pos == std::string::npos) break;
        start = pos + 1;
    }
    return arr;
}

void add_report_flag(CLI::App* cmd, StageArgs& args) {
    cmd->add_option("--report", args.report_path, "Write the stage report JSON to this path");
}

// Option helpers: record the value only when the user passed the flag.
void opt_str(CLI::App* cmd, StageArgs& a, const std::string& flag, const char* key, const char* help,
             bool required = false) {
    auto* opt = cmd->add_option_function<std::string>(
        flag, [&a, key](const std::string& v) { a.options[key] = v; }, help);
    if (required) opt->required();
}

void opt_u64(CLI::App* cmd, StageArgs& a, const std::string& flag, const char* key, const char* help,
             bool required = false) {
    auto* opt = cmd->add_option_function<uint64_t>(
        flag, [&a, key](uint64_t v) { a.options[key] = v; }, help);
    if (required) opt->required();
}

void opt_num(CLI::App* cmd, StageArgs& a, const std::string& flag, const char* key, const char* help) {
    cmd->add_option_function<double>(flag, [&a, key](double v) { a.options[key] = v; }, help);
}

void opt_flag(CLI::App* cmd, StageArgs& a, const std::string& flag, const char* key, const char* help) {
    cmd->add_flag_function(flag, [&a, key](int64_t) { a.options[key] = true; }, help);
}

void opt_ints(CLI::App* cmd, StageArgs& a, const std::string& flag, const char* key, const char* help,
              bool required = false) {
    auto* opt = cmd->add_option_function<std::string>(
        flag, [&a, key, flag](const std::string& v) { a.options[key] = parse_int_list(v, flag); }, help);
    if (required) opt->required();
}

void opt_names(CLI::App* cmd, StageArgs& a, const std::string& flag, const char* key, const char* help) {
    cmd->add_option_function<std::string>(
        flag, [&a, key](const std::string& v) { a.options[key] = parse_name_list(v); }, help);
}

void add_window_flags(CLI::App* cmd, StageArgs& a) {
    opt_str(cmd, a, "--window-start", "window_start", "Study window start (epoch seconds or YYYY-MM-DD)");
    opt_str(cmd, a, "--window-end", "window_end", "Study window end (exclusive)");
    opt_flag(cmd, a, "--strict", "strict", "Treat malformed rows as fatal");
}

void add_model_flags(CLI::App* cmd, StageArgs& a) {
    auto set_model = [&a](const char* key) {
        return [&a, key](double v) { a.options["model"][key] = v; };
    };
    auto set_model_int = [&a](const char* key) {
        return [&a, key](uint64_t v) { a.options["model"][key] = v; };
    };
    cmd->add_option_function<uint64_t>("--hidden-dim", set_model_int("hidden_dim"), "Hidden layer width");
    cmd->add_option_function<uint64_t>("--epochs", set_model_int("epochs"), "Training epochs");
    cmd->add_option_function<uint64_t>("--patience", set_model_int("patience"), "Early-stopping patience");
    cmd->add_option_function<double>("--learning-rate", set_model("learning_rate"), "Optimizer step size");
    cmd->add_option_function<double>("--weight-decay", set_model("weight_decay"), "Decoupled weight decay");
    cmd->add_option_function<double>("--dropout", set_model("dropout"), "Hidden-layer dropout rate");
    cmd->add_option_function<uint64_t>("--propagation-hops", set_model_int("propagation_hops"),
                                       "Propagation steps for the sgc model");
}

int run_stage(const std::string& stage, const StageArgs& args) {
    txgc_ctx* ctx = txgc_ctx_new();
    if (ctx == nullptr) {
        std::fprintf(stderr, "error: cannot allocate library context\n");
        return TXGC_ERROR_INTERNAL;
    }
    char* report = nullptr;
    std::string options = args.options.dump();
    txgc_status status = txgc_run(ctx, stage.c_str(), options.c_str(), &report);
    int exit_code = static_cast<int>(status);
    if (status != TXGC_OK) {
        std::fprintf(stderr, "error: %s\n", txgc_last_error(ctx));
    } else {
        if (!args.report_path.empty() && report != nullptr) {
            std::ofstream out(args.report_path, std::ios::binary);
            if (!out) {
                std::fprintf(stderr, "error: cannot write report to %s\n", args.report_path.c_str());
                exit_code = TXGC_ERROR_DATA;
            } else {
                out << report << '\n';
            }
        }
        if (exit_code == TXGC_OK) std::fprintf(stderr, "%s: done\n", stage.c_str());
    }
    txgc_string_free(report);
    txgc_ctx_free(ctx);
    return exit_code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{std::string("transaction-graph compression toolkit (") + txgc_version() + ")"};
    app.require_subcommand(1);

    struct Sub {
        std::string stage;
        StageArgs args;
    };
    std::vector<std::unique_ptr<Sub>> subs;
    std::string selected;

    auto make = [&](const char* stage, const char* help) {
        auto sub = std::make_unique<Sub>();
        sub->stage = stage;
        CLI::App* cmd = app.add_subcommand(stage, help);
        Sub* raw = sub.get();
        cmd->callback([&selected, raw] { selected = raw->stage; });
        add_report_flag(cmd, raw->args);
        subs.push_back(std::move(sub));
        return std::pair<CLI::App*, StageArgs*>(cmd, &subs.back()->args);
    };

    {
        auto [cmd, a] = make("synth", "Generate a synthetic transaction ledger");
        opt_str(cmd, *a, "--out-dir", "out_dir", "Output directory", true);
        opt_u64(cmd, *a, "--n-accounts", "n_accounts", "Total account count");
        opt_u64(cmd, *a, "--n-targets", "n_targets", "Labeled target count");
        opt_num(cmd, *a, "--malicious-fraction", "malicious_fraction", "Fraction of targets labeled malicious");
        opt_num(cmd, *a, "--attachment-exponent", "attachment_exponent", "Preferential-attachment exponent");
        opt_num(cmd, *a, "--bridge-density", "bridge_density", "Planted bridge structures per target");
        opt_num(cmd, *a, "--subordinate-fanout", "subordinate_fanout", "Mean dedicated spokes per target");
        opt_u64(cmd, *a, "--seed", "seed", "Generator seed");
    }
    {
        auto [cmd, a] = make("ingest", "Validate a ledger and build the transaction graph");
        opt_str(cmd, *a, "--transactions", "transactions", "Transaction CSV or JSON-lines file", true);
        opt_str(cmd, *a, "--accounts", "accounts", "Account profile CSV");
        add_window_flags(cmd, *a);
        opt_str(cmd, *a, "--out-dir", "out_dir", "Output directory", true);
    }
    {
        auto [cmd, a] = make("features", "Extract per-account features");
        opt_str(cmd, *a, "--transactions", "transactions", "Transaction CSV or JSON-lines file", true);
        opt_str(cmd, *a, "--accounts", "accounts", "Account profile CSV");
        add_window_flags(cmd, *a);
        opt_flag(cmd, *a, "--require-snapshots", "require_snapshots",
                 "Fail when an account lacks a balance snapshot");
        opt_flag(cmd, *a, "--invert-directed-neighbor-naming", "invert_directed_neighbor_naming",
                 "Swap the two directed-neighbor count columns");
        opt_str(cmd, *a, "--out", "out", "Feature table output path", true);
    }
    {
        auto [cmd, a] = make("rank", "Rank features by boosted-tree split gain");
        opt_str(cmd, *a, "--features", "features", "Feature table", true);
        opt_str(cmd, *a, "--accounts", "accounts", "Account profile CSV with labels", true);
        auto set_gbdt = [a](const char* key) {
            return [a, key](uint64_t v) { a->options["gbdt"][key] = v; };
        };
        cmd->add_option_function<uint64_t>("--trees", set_gbdt("n_trees"), "Ensemble size");
        cmd->add_option_function<uint64_t>("--max-depth", set_gbdt("max_depth"), "Tree depth limit");
        cmd->add_option_function<double>(
            "--learning-rate", [a](double v) { a->options["gbdt"]["learning_rate"] = v; }, "Shrinkage");
        opt_str(cmd, *a, "--out", "out", "Ranking output path", true);
    }
    {
        auto [cmd, a] = make("attack", "Build feature masks (evasion, random or keep-low)");
        opt_str(cmd, *a, "--ranking", "ranking", "Importance ranking file");
        opt_str(cmd, *a, "--mode", "mode", "evasion | random | keep-low");
        opt_ints(cmd, *a, "--sizes", "sizes", "Kept-column counts, e.g. 29,24,19,14,9");
        opt_u64(cmd, *a, "--seed", "seed", "Seed for random removal");
        opt_str(cmd, *a, "--preset", "preset", "Fixed keep-low preset name (paper)");
        opt_str(cmd, *a, "--out", "out", "Mask file output path", true);
    }
    {
        auto [cmd, a] = make("focus", "Keep targets, bridges and subordinates");
        opt_str(cmd, *a, "--edges", "edges", "Edge CSV of the transaction graph", true);
        opt_str(cmd, *a, "--accounts", "accounts", "Account profile CSV with labels", true);
        opt_str(cmd, *a, "--out-dir", "out_dir", "Output directory", true);
    }
    {
        auto [cmd, a] = make("coarsen", "Aggregate subordinates and collapse bridges into composites");
        opt_str(cmd, *a, "--edges", "edges", "Edge CSV (focused graph)", true);
        opt_str(cmd, *a, "--accounts", "accounts", "Account profile CSV with labels", true);
        opt_str(cmd, *a, "--features", "features", "Feature table of the original accounts", true);
        opt_str(cmd, *a, "--coarsen-mode", "mode", "paper-literal | per-side-mean");
        opt_str(cmd, *a, "--out-dir", "out_dir", "Output directory", true);
    }
    {
        auto [cmd, a] = make("sample", "Random node-budget baseline that keeps all targets");
        opt_str(cmd, *a, "--edges", "edges", "Edge CSV", true);
        opt_str(cmd, *a, "--accounts", "accounts", "Account profile CSV with labels", true);
        opt_u64(cmd, *a, "--node-budget", "node_budget", "Nodes to keep", true);
        opt_u64(cmd, *a, "--seed", "seed", "Sampling seed");
        opt_str(cmd, *a, "--out-dir", "out_dir", "Output directory", true);
    }
    {
        auto [cmd, a] = make("stats", "Node, edge, degree and connectivity stats of a graph");
        opt_str(cmd, *a, "--edges", "edges", "Edge CSV", true);
        opt_str(cmd, *a, "--out", "out", "Stats JSON output path");
    }
    {
        auto [cmd, a] = make("detect", "Train and evaluate detection models on a graph artifact");
        opt_str(cmd, *a, "--edges", "edges", "Edge CSV", true);
        opt_str(cmd, *a, "--features", "features", "Feature table", true);
        opt_str(cmd, *a, "--accounts", "accounts", "Account profile CSV with labels", true);
        opt_str(cmd, *a, "--blind-features", "blind_features",
                "Feature table used by structure-blind models (mlp, gbdt)");
        opt_str(cmd, *a, "--masks", "masks", "Feature mask file");
        opt_names(cmd, *a, "--models", "models", "Comma list of gcn,sgc,mlp,gbdt");
        opt_ints(cmd, *a, "--seeds", "seeds", "Comma list of repeat seeds");
        opt_str(cmd, *a, "--graph-name", "graph_name", "Label for the result rows");
        add_model_flags(cmd, *a);
        opt_str(cmd, *a, "--checkpoint-dir", "checkpoint_dir", "Save best model snapshots here");
        opt_str(cmd, *a, "--out-dir", "out_dir", "Output directory", true);
    }
    {
        auto [cmd, a] = make("pipeline", "Run every stage end-to-end from a config file");
        StageArgs* pa = a;
        cmd->add_option_function<std::string>(
               "--config",
               [pa](const std::string& path) {
                   std::ifstream in(path, std::ios::binary);
                   if (!in) throw CLI::ValidationError("--config", "cannot read " + path);
                   try {
                       json fromfile = json::parse(in);
                       // Flags already recorded win over file values.
                       fromfile.update(pa->options);
                       pa->options = std::move(fromfile);
                   } catch (const json::exception& e) {
                       throw CLI::ValidationError("--config", std::string("invalid JSON: ") + e.what());
                   }
               },
               "Pipeline config JSON file")
            ->check(CLI::ExistingFile);
        opt_str(cmd, *a, "--out-dir", "out_dir", "Output directory");
        opt_str(cmd, *a, "--transactions", "transactions", "Transaction file (instead of synth config)");
        opt_str(cmd, *a, "--accounts", "accounts", "Account profile CSV");
        add_window_flags(cmd, *a);
        opt_str(cmd, *a, "--coarsen-mode", "coarsen_mode", "paper-literal | per-side-mean");
        opt_u64(cmd, *a, "--node-budget", "node_budget", "Sampling budget (default: coarsened size)");
        opt_names(cmd, *a, "--models", "models", "Comma list of gcn,sgc,mlp,gbdt");
        opt_ints(cmd, *a, "--seeds", "seeds", "Comma list of repeat seeds");
        opt_u64(cmd, *a, "--sample-seed", "sample_seed", "Seed for the sampling baseline");
    }

    CLI11_PARSE(app, argc, argv);

    for (const auto& sub : subs) {
        if (sub->stage == selected) return run_stage(sub->stage, sub->args);
    }
    std::fprintf(stderr, "error: no subcommand selected\n");
    return TXGC_ERROR_CONFIG;
}
