#ifndef TXGC_CORE_GBDT_HPP
#define TXGC_CORE_GBDT_HPP

#include <cstdint>
#include <vector>

#include "core/features.hpp"

namespace txgc {

struct GbdtConfig {
    int n_trees = 100;
    int max_depth = 6;
    double learning_rate = 0.1;
    double lambda_l2 = 0.0;
    double min_child_hessian = 1e-3;
    int min_leaf_rows = 1;
    double min_split_gain = 1e-12;
    uint64_t seed = 0;  // reserved; exact greedy training is deterministic
};

// Binary-classification gradient-boosted trees with exact greedy splits and
// second-order (gradient/hessian) gain. Gain importance per feature is the
// sum of split gains over the whole ensemble, matching the usual "gain"
// importance definition of boosted-tree libraries.
class Gbdt {
  public:
    struct Node {
        int feature = -1;
        double threshold = 0.0;
        int left = -1;
        int right = -1;
        double leaf_value = 0.0;
        bool is_leaf = true;
    };
    struct Tree {
        std::vector<Node> nodes;  // root at 0
    };

    // rows: n x n_features row-major; labels in {0, 1}.
    void train(const std::vector<double>& rows, size_t n_features, const std::vector<int>& labels,
               const GbdtConfig& config);

    double predict_margin(const double* row) const;
    double predict_proba(const double* row) const;  // sigmoid(margin)
    std::vector<double> predict_proba_all(const std::vector<double>& rows, size_t n_features) const;

    const std::vector<double>& gain_importance() const { return gain_; }
    const std::vector<Tree>& trees() const { return trees_; }
    double base_margin() const { return base_margin_; }

  private:
    std::vector<Tree> trees_;
    std::vector<double> gain_;
    double base_margin_ = 0.0;
    double learning_rate_ = 0.1;
    size_t n_features_ = 0;
};

// Trains on the labeled rows of `features` (malicious=1, normal=0) and
// returns per-column total split gain. Throws DataError when labels are
// degenerate (a class is absent).
ImportanceRanking rank_importance(const FeatureMatrix& features, const std::vector<int>& labels,
                                  const std::vector<size_t>& labeled_rows, const GbdtConfig& config = {});

}  // namespace txgc

#endif
