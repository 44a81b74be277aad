#include "core/detect.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>

#include <nlohmann/json.hpp>

#include "core/common.hpp"
#include "core/rng.hpp"

namespace txgc {

namespace {

constexpr double kInvSqrt2 = 0.7071067811865475244;
constexpr double kInvSqrt2Pi = 0.3989422804014326779;

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x * kInvSqrt2)); }

double gelu_grad(double x) {
    double phi = 0.5 * (1.0 + std::erf(x * kInvSqrt2));
    double dens = kInvSqrt2Pi * std::exp(-0.5 * x * x);
    return phi + x * dens;
}

Eigen::MatrixXd gelu_mat(const Eigen::MatrixXd& z) { return z.unaryExpr([](double v) { return gelu(v); }); }

Eigen::MatrixXd gelu_grad_mat(const Eigen::MatrixXd& z) {
    return z.unaryExpr([](double v) { return gelu_grad(v); });
}

// Propagate `hops` times; hops = 0 is the identity.
Eigen::MatrixXd propagate_n(const PropagationOperator& op, const Eigen::MatrixXd& x, int hops) {
    Eigen::MatrixXd out = x;
    for (int h = 0; h < hops; ++h) out = propagate(op, out);
    return out;
}

Eigen::MatrixXd uniform_fan_in(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
    double bound = 1.0 / std::sqrt(static_cast<double>(rows));
    Eigen::MatrixXd w(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c) w(r, c) = rng.uniform(-bound, bound);
    return w;
}

std::vector<int> argmax_rows(const Eigen::MatrixXd& probs, const std::vector<int32_t>& rows) {
    std::vector<int> out;
    out.reserve(rows.size());
    for (int32_t r : rows) {
        Eigen::Index best = 0;
        probs.row(r).maxCoeff(&best);
        out.push_back(static_cast<int>(best));
    }
    return out;
}

nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
    nlohmann::json data = nlohmann::json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
    return nlohmann::json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(data)}};
}

Eigen::MatrixXd matrix_from_json(const nlohmann::json& j) {
    Eigen::Index rows = j.at("rows").get<Eigen::Index>();
    Eigen::Index cols = j.at("cols").get<Eigen::Index>();
    const auto& data = j.at("data");
    if (static_cast<Eigen::Index>(data.size()) != rows * cols)
        throw DataError("checkpoint matrix size mismatch");
    Eigen::MatrixXd m(rows, cols);
    size_t k = 0;
    for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = data[k++].get<double>();
    return m;
}

}  // namespace

PropagationOperator normalize_adjacency(const Graph& g) {
    PropagationOperator op;
    op.n = static_cast<int64_t>(g.node_count());
    op.indptr.assign(static_cast<size_t>(op.n) + 1, 0);

    std::vector<double> inv_sqrt_deg(g.node_count());
    for (size_t u = 0; u < g.node_count(); ++u)
        inv_sqrt_deg[u] = 1.0 / std::sqrt(static_cast<double>(g.neighbors(static_cast<int32_t>(u)).size() + 1));

    for (size_t u = 0; u < g.node_count(); ++u) {
        const auto& nbrs = g.neighbors(static_cast<int32_t>(u));
        // Row u holds the self loop plus sorted neighbors; insert the self
        // entry at its sorted position.
        bool self_done = false;
        for (int32_t v : nbrs) {
            if (!self_done && static_cast<size_t>(v) > u) {
                op.indices.push_back(static_cast<int32_t>(u));
                op.values.push_back(inv_sqrt_deg[u] * inv_sqrt_deg[u]);
                self_done = true;
            }
            op.indices.push_back(v);
            op.values.push_back(inv_sqrt_deg[u] * inv_sqrt_deg[static_cast<size_t>(v)]);
        }
        if (!self_done) {
            op.indices.push_back(static_cast<int32_t>(u));
            op.values.push_back(inv_sqrt_deg[u] * inv_sqrt_deg[u]);
        }
        op.indptr[u + 1] = static_cast<int64_t>(op.indices.size());
    }
    return op;
}

Eigen::MatrixXd propagate(const PropagationOperator& op, const Eigen::MatrixXd& x) {
    if (x.rows() != op.n) throw InternalError("propagation operator and matrix row count differ");
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(x.rows(), x.cols());
    for (int64_t r = 0; r < op.n; ++r) {
        for (int64_t k = op.indptr[static_cast<size_t>(r)]; k < op.indptr[static_cast<size_t>(r) + 1]; ++k) {
            out.row(r) += op.values[static_cast<size_t>(k)] * x.row(op.indices[static_cast<size_t>(k)]);
        }
    }
    return out;
}

ModelKind model_kind_from_name(std::string_view name) {
    if (name == "gcn") return ModelKind::Gcn;
    if (name == "sgc") return ModelKind::Sgc;
    if (name == "mlp") return ModelKind::Mlp;
    if (name == "gbdt") return ModelKind::Gbdt;
    throw ConfigError("unknown model: " + std::string(name));
}

const char* model_kind_name(ModelKind kind) {
    switch (kind) {
        case ModelKind::Gcn: return "gcn";
        case ModelKind::Sgc: return "sgc";
        case ModelKind::Mlp: return "mlp";
        case ModelKind::Gbdt: return "gbdt";
    }
    throw InternalError("bad model kind");
}

bool is_structure_blind(ModelKind kind) { return kind == ModelKind::Mlp || kind == ModelKind::Gbdt; }

NnModel init_model(ModelKind kind, int input_dim, const ModelConfig& config, uint64_t seed) {
    if (input_dim <= 0) throw ConfigError("model needs at least one input feature");
    NnModel model;
    model.kind = kind;
    model.propagation_hops = config.propagation_hops;
    Rng r1 = Rng::derive(seed, 101);
    Rng r2 = Rng::derive(seed, 102);
    switch (kind) {
        case ModelKind::Gcn:
        case ModelKind::Mlp:
            model.w1 = uniform_fan_in(input_dim, config.hidden_dim, r1);
            model.w2 = uniform_fan_in(config.hidden_dim, config.output_dim, r2);
            break;
        case ModelKind::Sgc:
            model.w1 = uniform_fan_in(input_dim, config.output_dim, r1);
            break;
        case ModelKind::Gbdt:
            throw ConfigError("gbdt has no neural weights");
    }
    return model;
}

Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& logits) {
    Eigen::MatrixXd probs(logits.rows(), logits.cols());
    for (Eigen::Index r = 0; r < logits.rows(); ++r) {
        double m = logits.row(r).maxCoeff();
        Eigen::ArrayXd e = (logits.row(r).array() - m).exp();
        probs.row(r) = e / e.sum();
    }
    return probs;
}

Eigen::MatrixXd forward(const NnModel& model, const Eigen::MatrixXd& x, const PropagationOperator& op) {
    switch (model.kind) {
        case ModelKind::Gcn: {
            Eigen::MatrixXd h1 = propagate(op, x);
            Eigen::MatrixXd a1 = gelu_mat(h1 * model.w1);
            return softmax_rows(propagate(op, a1) * model.w2);
        }
        case ModelKind::Sgc:
            return softmax_rows(propagate_n(op, x, model.propagation_hops) * model.w1);
        case ModelKind::Mlp:
            return softmax_rows(gelu_mat(x * model.w1) * model.w2);
        case ModelKind::Gbdt:
            throw InternalError("gbdt is not a neural model");
    }
    throw InternalError("bad model kind");
}

double cross_entropy(const Eigen::MatrixXd& probs, const std::vector<int32_t>& rows, const std::vector<int>& labels) {
    if (rows.size() != labels.size()) throw InternalError("rows and labels length differ");
    if (rows.empty()) throw InternalError("cross entropy over empty row set");
    double total = 0.0;
    for (size_t i = 0; i < rows.size(); ++i) {
        double p = probs(rows[i], labels[i]);
        total += -std::log(std::max(p, 1e-300));
    }
    return total / static_cast<double>(rows.size());
}

Gradients loss_gradients(const NnModel& model, const Eigen::MatrixXd& x, const PropagationOperator& op,
                         const std::vector<int32_t>& rows, const std::vector<int>& labels,
                         const Eigen::MatrixXd* hidden_dropout) {
    // The loss must be recomputed with the dropout mask applied, so the
    // plain forward() is only reusable in the no-dropout case.
    Eigen::MatrixXd probs;
    Eigen::MatrixXd h1, z1, a1;  // shared intermediates for gcn/mlp
    switch (model.kind) {
        case ModelKind::Gcn:
            h1 = propagate(op, x);
            z1 = h1 * model.w1;
            a1 = gelu_mat(z1);
            if (hidden_dropout != nullptr) a1 = a1.cwiseProduct(*hidden_dropout);
            probs = softmax_rows(propagate(op, a1) * model.w2);
            break;
        case ModelKind::Mlp:
            h1 = x;
            z1 = x * model.w1;
            a1 = gelu_mat(z1);
            if (hidden_dropout != nullptr) a1 = a1.cwiseProduct(*hidden_dropout);
            probs = softmax_rows(a1 * model.w2);
            break;
        case ModelKind::Sgc:
            probs = forward(model, x, op);
            break;
        case ModelKind::Gbdt:
            throw InternalError("gbdt is not a neural model");
    }

    Gradients g;
    g.loss = cross_entropy(probs, rows, labels);

    // dL/dlogits is (P - Y) / n on labeled train rows, zero elsewhere.
    Eigen::MatrixXd dlogits = Eigen::MatrixXd::Zero(probs.rows(), probs.cols());
    double inv_n = 1.0 / static_cast<double>(rows.size());
    for (size_t i = 0; i < rows.size(); ++i) {
        dlogits.row(rows[i]) = probs.row(rows[i]) * inv_n;
        dlogits(rows[i], labels[i]) -= inv_n;
    }

    switch (model.kind) {
        case ModelKind::Gcn: {
            Eigen::MatrixXd h2 = propagate(op, a1);
            g.w2 = h2.transpose() * dlogits;
            // The operator is symmetric, so its transpose-product reuses
            // the same propagation.
            Eigen::MatrixXd da1 = propagate(op, dlogits * model.w2.transpose());
            if (hidden_dropout != nullptr) da1 = da1.cwiseProduct(*hidden_dropout);
            Eigen::MatrixXd dz1 = da1.cwiseProduct(gelu_grad_mat(z1));
            g.w1 = h1.transpose() * dz1;
            break;
        }
        case ModelKind::Sgc: {
            Eigen::MatrixXd p = propagate_n(op, x, model.propagation_hops);
            g.w1 = p.transpose() * dlogits;
            break;
        }
        case ModelKind::Mlp: {
            g.w2 = a1.transpose() * dlogits;
            Eigen::MatrixXd da1 = dlogits * model.w2.transpose();
            if (hidden_dropout != nullptr) da1 = da1.cwiseProduct(*hidden_dropout);
            Eigen::MatrixXd dz1 = da1.cwiseProduct(gelu_grad_mat(z1));
            g.w1 = h1.transpose() * dz1;
            break;
        }
        case ModelKind::Gbdt:
            throw InternalError("gbdt is not a neural model");
    }
    return g;
}

SplitPlan stratified_split(const std::vector<int>& labels, uint64_t seed) {
    std::vector<size_t> by_class[2];
    for (size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] != 0 && labels[i] != 1) throw DataError("labels must be 0 or 1");
        by_class[labels[i]].push_back(i);
    }
    if (by_class[0].size() < 2 || by_class[1].size() < 2)
        throw DataError("stratified split needs at least two labeled accounts per class");

    SplitPlan plan;
    for (int c = 0; c < 2; ++c) {
        auto& members = by_class[c];
        Rng rng = Rng::derive(seed, 11 + static_cast<uint64_t>(c));
        rng.shuffle(members);
        size_t n = members.size();
        size_t n_train = static_cast<size_t>(std::floor(0.6 * static_cast<double>(n)));
        size_t n_val = static_cast<size_t>(std::floor(0.2 * static_cast<double>(n)));
        for (size_t i = 0; i < n; ++i) {
            if (i < n_train) plan.train.push_back(members[i]);
            else if (i < n_train + n_val) plan.val.push_back(members[i]);
            else plan.test.push_back(members[i]);
        }
    }
    std::sort(plan.train.begin(), plan.train.end());
    std::sort(plan.val.begin(), plan.val.end());
    std::sort(plan.test.begin(), plan.test.end());
    return plan;
}

double accuracy(const std::vector<int>& predicted, const std::vector<int>& expected) {
    if (predicted.size() != expected.size()) throw InternalError("prediction and label counts differ");
    if (predicted.empty()) throw InternalError("accuracy over empty set");
    size_t hits = 0;
    for (size_t i = 0; i < predicted.size(); ++i)
        if (predicted[i] == expected[i]) ++hits;
    return static_cast<double>(hits) / static_cast<double>(predicted.size());
}

double auc_score(const std::vector<double>& scores, const std::vector<int>& labels) {
    if (scores.size() != labels.size()) throw InternalError("score and label counts differ");
    size_t n_pos = 0, n_neg = 0;
    for (int l : labels) (l == 1 ? n_pos : n_neg)++;
    if (n_pos == 0 || n_neg == 0) throw DataError("auc needs both classes in the evaluation set");

    std::vector<size_t> idx(scores.size());
    std::iota(idx.begin(), idx.end(), size_t{0});
    std::sort(idx.begin(), idx.end(), [&](size_t a, size_t b) { return scores[a] < scores[b]; });

    // Average ranks within tie groups give half credit for tied pairs.
    double pos_rank_sum = 0.0;
    size_t i = 0;
    while (i < idx.size()) {
        size_t j = i;
        while (j < idx.size() && scores[idx[j]] == scores[idx[i]]) ++j;
        double avg_rank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j));
        for (size_t k = i; k < j; ++k)
            if (labels[idx[k]] == 1) pos_rank_sum += avg_rank;
        i = j;
    }
    double np = static_cast<double>(n_pos), nn = static_cast<double>(n_neg);
    return (pos_rank_sum - np * (np + 1.0) / 2.0) / (np * nn);
}

namespace {

struct AdamState {
    Eigen::MatrixXd m, v;
    explicit AdamState(const Eigen::MatrixXd& shape_like)
        : m(Eigen::MatrixXd::Zero(shape_like.rows(), shape_like.cols())),
          v(Eigen::MatrixXd::Zero(shape_like.rows(), shape_like.cols())) {}
};

void adamw_step(Eigen::MatrixXd& w, const Eigen::MatrixXd& grad, AdamState& state, int t,
                const ModelConfig& config) {
    constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    state.m = beta1 * state.m + (1.0 - beta1) * grad;
    state.v = beta2 * state.v + (1.0 - beta2) * grad.cwiseProduct(grad);
    double bc1 = 1.0 - std::pow(beta1, t);
    double bc2 = 1.0 - std::pow(beta2, t);
    Eigen::MatrixXd m_hat = state.m / bc1;
    Eigen::MatrixXd v_hat = state.v / bc2;
    w -= config.learning_rate * (m_hat.array() / (v_hat.array().sqrt() + eps)).matrix();
    if (config.weight_decay != 0.0) w -= config.learning_rate * config.weight_decay * w;
}

}  // namespace

TrainOutcome train_nn(ModelKind kind, const Eigen::MatrixXd& x, const PropagationOperator& op,
                      const std::vector<int32_t>& labeled_rows, const std::vector<int>& labels,
                      const SplitPlan& split, const ModelConfig& config, uint64_t seed) {
    if (kind == ModelKind::Gbdt) throw ConfigError("train_nn does not handle gbdt");
    if (labeled_rows.size() != labels.size()) throw InternalError("labeled rows and labels length differ");

    auto gather_rows = [&](const std::vector<size_t>& positions) {
        std::vector<int32_t> rows;
        rows.reserve(positions.size());
        for (size_t p : positions) rows.push_back(labeled_rows[p]);
        return rows;
    };
    auto gather_labels = [&](const std::vector<size_t>& positions) {
        std::vector<int> out;
        out.reserve(positions.size());
        for (size_t p : positions) out.push_back(labels[p]);
        return out;
    };

    std::vector<int32_t> train_rows = gather_rows(split.train);
    std::vector<int> train_labels = gather_labels(split.train);
    std::vector<int32_t> val_rows = gather_rows(split.val);
    std::vector<int> val_labels = gather_labels(split.val);
    std::vector<int32_t> test_rows = gather_rows(split.test);
    std::vector<int> test_labels = gather_labels(split.test);
    if (train_rows.empty()) throw DataError("empty training split");

    NnModel model = init_model(kind, static_cast<int>(x.cols()), config, seed);

    // SGC propagation is fixed during training, so hoist it out of the
    // loop and train on the propagated features with a zero-hop clone.
    Eigen::MatrixXd train_x = x;
    int saved_hops = model.propagation_hops;
    if (kind == ModelKind::Sgc) {
        train_x = propagate_n(op, x, model.propagation_hops);
        model.propagation_hops = 0;
    }

    AdamState st1(model.w1);
    AdamState st2(model.w2.size() > 0 ? model.w2 : Eigen::MatrixXd::Zero(1, 1));

    NnModel best = model;
    double best_val = -1.0;
    int best_epoch = 0;
    int since_best = 0;
    bool use_early_stop = !val_rows.empty();

    bool use_dropout = config.dropout > 0.0 && kind != ModelKind::Sgc;
    Rng dropout_rng = Rng::derive(seed, 103);
    Eigen::MatrixXd dropout_mask;

    std::vector<double> loss_history;
    loss_history.reserve(static_cast<size_t>(config.epochs));

    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        const Eigen::MatrixXd* mask_ptr = nullptr;
        if (use_dropout) {
            double keep = 1.0 - config.dropout;
            dropout_mask = Eigen::MatrixXd::Zero(train_x.rows(), config.hidden_dim);
            for (Eigen::Index r = 0; r < dropout_mask.rows(); ++r)
                for (Eigen::Index c = 0; c < dropout_mask.cols(); ++c)
                    if (dropout_rng.next_double() < keep) dropout_mask(r, c) = 1.0 / keep;
            mask_ptr = &dropout_mask;
        }
        Gradients g = loss_gradients(model, train_x, op, train_rows, train_labels, mask_ptr);
        if (!std::isfinite(g.loss))
            throw InternalError("non-finite training loss at epoch " + std::to_string(epoch));
        loss_history.push_back(g.loss);
        adamw_step(model.w1, g.w1, st1, epoch, config);
        if (model.w2.size() > 0) adamw_step(model.w2, g.w2, st2, epoch, config);

        if (use_early_stop) {
            Eigen::MatrixXd probs = forward(model, train_x, op);
            double val_acc = accuracy(argmax_rows(probs, val_rows), val_labels);
            if (val_acc > best_val) {
                best_val = val_acc;
                best = model;
                best_epoch = epoch;
                since_best = 0;
            } else if (++since_best >= config.patience) {
                break;
            }
        } else {
            best = model;
            best_epoch = epoch;
        }
    }

    best.propagation_hops = saved_hops;
    NnModel eval_model = best;
    if (kind == ModelKind::Sgc) eval_model.propagation_hops = 0;

    Eigen::MatrixXd probs = forward(eval_model, train_x, op);
    TrainOutcome out;
    out.model = best;
    out.best_epoch = best_epoch;
    out.test_accuracy = accuracy(argmax_rows(probs, test_rows), test_labels);
    std::vector<double> scores;
    scores.reserve(test_rows.size());
    for (int32_t r : test_rows) scores.push_back(probs(r, 1));
    out.test_auc = auc_score(scores, test_labels);
    out.loss_history = std::move(loss_history);
    return out;
}

void save_checkpoint(const NnModel& model, const std::string& path) {
    nlohmann::json j;
    j["kind"] = model_kind_name(model.kind);
    j["propagation_hops"] = model.propagation_hops;
    j["w1"] = matrix_to_json(model.w1);
    if (model.w2.size() > 0) j["w2"] = matrix_to_json(model.w2);
    std::ofstream out(path);
    if (!out) throw DataError("cannot write checkpoint: " + path);
    out << j.dump(2) << '\n';
}

NnModel load_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot read checkpoint: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw DataError("malformed checkpoint " + path + ": " + e.what());
    }
    NnModel model;
    model.kind = model_kind_from_name(j.at("kind").get<std::string>());
    model.propagation_hops = j.at("propagation_hops").get<int>();
    model.w1 = matrix_from_json(j.at("w1"));
    if (j.contains("w2")) model.w2 = matrix_from_json(j.at("w2"));
    return model;
}

namespace {

// Column z-score fitted on the listed rows, applied everywhere. Constant
// columns map to zero.
void zscore_in_place(Eigen::MatrixXd& x, const std::vector<int32_t>& fit_rows) {
    if (fit_rows.empty()) throw InternalError("z-score fit over empty row set");
    double inv_n = 1.0 / static_cast<double>(fit_rows.size());
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
        double sum = 0.0;
        for (int32_t r : fit_rows) sum += x(r, c);
        double mean = sum * inv_n;
        double sq = 0.0;
        for (int32_t r : fit_rows) {
            double d = x(r, c) - mean;
            sq += d * d;
        }
        double sd = std::sqrt(sq * inv_n);
        if (sd == 0.0) {
            for (Eigen::Index r = 0; r < x.rows(); ++r) x(r, c) = 0.0;
        } else {
            for (Eigen::Index r = 0; r < x.rows(); ++r) x(r, c) = (x(r, c) - mean) / sd;
        }
    }
}

Eigen::MatrixXd dense_selected(const FeatureMatrix& features, const std::vector<bool>& mask,
                               const std::vector<int32_t>& rows) {
    size_t n_cols = 0;
    for (bool b : mask) n_cols += b ? 1 : 0;
    if (n_cols == 0) throw ConfigError("feature mask keeps no columns");
    Eigen::MatrixXd x(rows.size(), n_cols);
    for (size_t i = 0; i < rows.size(); ++i) {
        size_t c = 0;
        const double* row = &features.data[static_cast<size_t>(rows[i]) * kFeatureCount];
        for (size_t f = 0; f < kFeatureCount; ++f)
            if (mask[f]) x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c++)) = row[f];
    }
    return x;
}

void summarize(CellResult& cell) {
    double n = static_cast<double>(cell.repeats.size());
    double acc_sum = 0.0, auc_sum = 0.0;
    for (const auto& r : cell.repeats) {
        acc_sum += r.accuracy;
        auc_sum += r.auc;
    }
    cell.acc_mean = acc_sum / n;
    cell.auc_mean = auc_sum / n;
    double acc_sq = 0.0, auc_sq = 0.0;
    for (const auto& r : cell.repeats) {
        acc_sq += (r.accuracy - cell.acc_mean) * (r.accuracy - cell.acc_mean);
        auc_sq += (r.auc - cell.auc_mean) * (r.auc - cell.auc_mean);
    }
    cell.acc_std = std::sqrt(acc_sq / n);
    cell.auc_std = std::sqrt(auc_sq / n);
}

}  // namespace

std::vector<CellResult> run_experiment(const DetectInput& input, const std::string& graph_name,
                                       const std::vector<MaskSpec>& masks, const std::vector<ModelKind>& models,
                                       const std::vector<uint64_t>& seeds, const ModelConfig& config,
                                       const std::string& checkpoint_dir) {
    if (input.graph == nullptr || input.features == nullptr) throw InternalError("detect input incomplete");
    if (input.labeled_nodes.size() != input.labels.size())
        throw InternalError("labeled nodes and labels length differ");
    if (input.features->account_ids.size() != input.graph->node_count())
        throw DataError("feature rows do not cover the graph nodes");
    if (seeds.empty()) throw ConfigError("at least one seed required");

    bool needs_graph = false;
    for (ModelKind m : models) needs_graph = needs_graph || !is_structure_blind(m);
    PropagationOperator op;
    if (needs_graph) op = normalize_adjacency(*input.graph);

    // Structure-blind models read labeled rows from blind_features when
    // provided; that source is shared across graph variants so their
    // numbers repeat per variant, as they should for models that never
    // see edges.
    const FeatureMatrix* blind_src = input.blind_features != nullptr ? input.blind_features : input.features;
    std::vector<int32_t> blind_rows;
    blind_rows.reserve(input.labeled_nodes.size());
    for (int32_t node : input.labeled_nodes) {
        const std::string& id = input.graph->id_of(node);
        int64_t row = blind_src->row_of(id);
        if (row < 0) throw DataError("no feature row for labeled account " + id);
        blind_rows.push_back(static_cast<int32_t>(row));
    }

    std::vector<int32_t> all_nodes(input.graph->node_count());
    std::iota(all_nodes.begin(), all_nodes.end(), 0);

    std::vector<CellResult> results;
    for (const auto& mask : masks) {
        if (mask.mask.size() != kFeatureCount) throw ConfigError("mask must cover all feature columns");
        size_t mask_size = static_cast<size_t>(std::count(mask.mask.begin(), mask.mask.end(), true));

        Eigen::MatrixXd full_x;
        if (needs_graph) full_x = dense_selected(*input.features, mask.mask, all_nodes);
        Eigen::MatrixXd blind_x = dense_selected(*blind_src, mask.mask, blind_rows);

        for (ModelKind kind : models) {
            CellResult cell;
            cell.graph_name = graph_name;
            cell.mask_name = mask.name;
            cell.mask_size = mask_size;
            cell.model = model_kind_name(kind);

            for (uint64_t seed : seeds) {
                SplitPlan split = stratified_split(input.labels, seed);
                RepeatResult rep;
                rep.seed = seed;

                if (is_structure_blind(kind)) {
                    // Labeled-only submatrix; row i corresponds to
                    // labeled position i.
                    Eigen::MatrixXd x = blind_x;
                    std::vector<int32_t> fit_rows;
                    for (size_t p : split.train) fit_rows.push_back(static_cast<int32_t>(p));
                    zscore_in_place(x, fit_rows);

                    if (kind == ModelKind::Mlp) {
                        std::vector<int32_t> positions(input.labels.size());
                        std::iota(positions.begin(), positions.end(), 0);
                        PropagationOperator unused;
                        TrainOutcome out =
                            train_nn(ModelKind::Mlp, x, unused, positions, input.labels, split, config, seed);
                        rep.accuracy = out.test_accuracy;
                        rep.auc = out.test_auc;
                        if (!checkpoint_dir.empty())
                            save_checkpoint(out.model, checkpoint_dir + "/" + graph_name + "_" + mask.name +
                                                           "_mlp_seed" + std::to_string(seed) + ".json");
                    } else {
                        size_t d = static_cast<size_t>(x.cols());
                        std::vector<double> rows(split.train.size() * d);
                        std::vector<int> train_labels;
                        for (size_t i = 0; i < split.train.size(); ++i) {
                            size_t p = split.train[i];
                            for (size_t c = 0; c < d; ++c)
                                rows[i * d + c] = x(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(c));
                            train_labels.push_back(input.labels[p]);
                        }
                        GbdtConfig gc = config.gbdt;
                        gc.seed = seed;
                        Gbdt booster;
                        booster.train(rows, d, train_labels, gc);

                        std::vector<int> preds;
                        std::vector<double> scores;
                        std::vector<int> expected;
                        std::vector<double> row(d);
                        for (size_t p : split.test) {
                            for (size_t c = 0; c < d; ++c)
                                row[c] = x(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(c));
                            double prob = booster.predict_proba(row.data());
                            scores.push_back(prob);
                            preds.push_back(prob > 0.5 ? 1 : 0);
                            expected.push_back(input.labels[p]);
                        }
                        rep.accuracy = accuracy(preds, expected);
                        rep.auc = auc_score(scores, expected);
                    }
                } else {
                    Eigen::MatrixXd x = full_x;
                    std::vector<int32_t> fit_rows;
                    for (size_t p : split.train) fit_rows.push_back(input.labeled_nodes[p]);
                    zscore_in_place(x, fit_rows);
                    TrainOutcome out =
                        train_nn(kind, x, op, input.labeled_nodes, input.labels, split, config, seed);
                    rep.accuracy = out.test_accuracy;
                    rep.auc = out.test_auc;
                    if (!checkpoint_dir.empty())
                        save_checkpoint(out.model, checkpoint_dir + "/" + graph_name + "_" + mask.name + "_" +
                                                       cell.model + "_seed" + std::to_string(seed) + ".json");
                }
                cell.repeats.push_back(rep);
            }
            summarize(cell);
            results.push_back(std::move(cell));
        }
    }
    return results;
}

}  // namespace txgc
