#ifndef TXGC_CORE_DETECT_HPP
#define TXGC_CORE_DETECT_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "core/features.hpp"
#include "core/gbdt.hpp"
#include "core/graph.hpp"

namespace txgc {

// Symmetric degree-normalized adjacency with self loops, CSR layout.
struct PropagationOperator {
    int64_t n = 0;
    std::vector<int64_t> indptr;
    std::vector<int32_t> indices;
    std::vector<double> values;
};

PropagationOperator normalize_adjacency(const Graph& g);
Eigen::MatrixXd propagate(const PropagationOperator& op, const Eigen::MatrixXd& x);

enum class ModelKind { Gcn, Sgc, Mlp, Gbdt };

ModelKind model_kind_from_name(std::string_view name);
const char* model_kind_name(ModelKind kind);
bool is_structure_blind(ModelKind kind);

struct ModelConfig {
    int layers = 2;
    int hidden_dim = 64;
    int output_dim = 2;
    int epochs = 500;
    int patience = 100;
    double learning_rate = 0.05;
    double weight_decay = 0.0;  // decoupled
    double dropout = 0.0;
    int propagation_hops = 2;  // sgc
    GbdtConfig gbdt;
};

// Weight container for the neural models. SGC keeps a single matrix in w1.
struct NnModel {
    ModelKind kind = ModelKind::Gcn;
    int propagation_hops = 2;
    Eigen::MatrixXd w1;
    Eigen::MatrixXd w2;  // empty for sgc
};

NnModel init_model(ModelKind kind, int input_dim, const ModelConfig& config, uint64_t seed);

// Row softmax with max shift; rows sum to 1.
Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& logits);

// Class probabilities for every row. For gcn/mlp, `x` is the node-feature
// matrix; the operator is ignored by mlp. For sgc, pass the raw features;
// propagation happens inside according to the model's hop count.
Eigen::MatrixXd forward(const NnModel& model, const Eigen::MatrixXd& x, const PropagationOperator& op);

// Mean cross-entropy over the listed rows against one-hot labels.
double cross_entropy(const Eigen::MatrixXd& probs, const std::vector<int32_t>& rows, const std::vector<int>& labels);

// Analytic parameter gradients of the mean train-row cross-entropy.
// `hidden_dropout`, when given, is a pre-scaled keep mask applied to the
// hidden activation (training-time inverted dropout; gcn and mlp only).
struct Gradients {
    Eigen::MatrixXd w1;
    Eigen::MatrixXd w2;
    double loss = 0.0;
};
Gradients loss_gradients(const NnModel& model, const Eigen::MatrixXd& x, const PropagationOperator& op,
                         const std::vector<int32_t>& rows, const std::vector<int>& labels,
                         const Eigen::MatrixXd* hidden_dropout = nullptr);

struct SplitPlan {
    std::vector<size_t> train;  // positions into the labeled list, ascending
    std::vector<size_t> val;
    std::vector<size_t> test;
};

// Stratified 60/20/20 split of the labeled positions, deterministic per
// seed. Each class needs at least two members.
SplitPlan stratified_split(const std::vector<int>& labels, uint64_t seed);

double accuracy(const std::vector<int>& predicted, const std::vector<int>& expected);
// Rank-statistic AUC with half credit for ties; scores are the
// malicious-class probabilities. Requires both classes.
double auc_score(const std::vector<double>& scores, const std::vector<int>& labels);

struct TrainOutcome {
    NnModel model;  // best-validation snapshot
    double test_accuracy = 0.0;
    double test_auc = 0.0;
    int best_epoch = 0;
    std::vector<double> loss_history;  // train loss per completed epoch
};

// Full-batch AdamW with early stopping on validation accuracy (ties keep
// the earlier snapshot). Rows listed in `labeled_rows` carry labels.
TrainOutcome train_nn(ModelKind kind, const Eigen::MatrixXd& x, const PropagationOperator& op,
                      const std::vector<int32_t>& labeled_rows, const std::vector<int>& labels,
                      const SplitPlan& split, const ModelConfig& config, uint64_t seed);

void save_checkpoint(const NnModel& model, const std::string& path);
NnModel load_checkpoint(const std::string& path);

// ---- experiment harness ----

struct DetectInput {
    const Graph* graph = nullptr;
    const FeatureMatrix* features = nullptr;  // one row per graph node
    std::vector<int32_t> labeled_nodes;       // ascending node indices
    std::vector<int> labels;                  // parallel, malicious=1
    // Optional variant-independent source of labeled-account rows for the
    // structure-blind models; defaults to `features`.
    const FeatureMatrix* blind_features = nullptr;
};

struct MaskSpec {
    std::string name;  // e.g. "feat-29" or "evasion-9"
    std::vector<bool> mask;
};

struct RepeatResult {
    uint64_t seed = 0;
    double accuracy = 0.0;
    double auc = 0.0;
};

struct CellResult {
    std::string graph_name;
    std::string mask_name;
    size_t mask_size = 0;
    std::string model;
    std::vector<RepeatResult> repeats;
    double acc_mean = 0.0, acc_std = 0.0;
    double auc_mean = 0.0, auc_std = 0.0;
};

// Cross product of masks x models x seeds on one graph variant. Structure
// blind models (mlp, gbdt) see only the labeled-row submatrix, so their
// results depend on labeled rows and seeds alone. When checkpoint_dir is
// non-empty, each neural cell's best snapshot is saved there.
std::vector<CellResult> run_experiment(const DetectInput& input, const std::string& graph_name,
                                       const std::vector<MaskSpec>& masks, const std::vector<ModelKind>& models,
                                       const std::vector<uint64_t>& seeds, const ModelConfig& config,
                                       const std::string& checkpoint_dir = "");

}  // namespace txgc

#endif
