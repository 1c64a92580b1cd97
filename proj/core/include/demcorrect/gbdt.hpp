#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "demcorrect/dataset.hpp"

namespace demcorrect {

enum class Growth { depthwise, leafwise };

/// Boosting hyperparameters. Defaults follow the common library defaults:
/// depthwise with depth 6 (XGBoost-like), leafwise with 31 leaves
/// (LightGBM-like).
struct GbdtParams {
    int n_trees = 100;
    double learning_rate = 0.1;
    Growth growth = Growth::depthwise;
    int max_depth = 6;    ///< depthwise only; 0 means unlimited
    int max_leaves = 31;  ///< leafwise only
    int min_samples_leaf = 1;
    double min_gain = 0.0;
    double lambda = 1.0;  ///< L2 penalty on leaf values
    std::uint64_t seed = 0;

    void validate() const;
};

/// Internal nodes route x[feature] <= threshold to the left child. Leaves have
/// feature == -1 and carry the raw (unscaled) leaf value.
struct TreeNode {
    int feature = -1;
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;

    bool is_leaf() const noexcept { return feature < 0; }
};

struct RegressionTree {
    std::vector<TreeNode> nodes;
    int root = 0;

    double leaf_value(std::span<const double> x) const;
    int depth() const;
    int leaf_count() const;
};

struct GbdtModel {
    double base_score = 0.0;
    std::vector<RegressionTree> trees;
    GbdtParams params;
    std::vector<std::string> feature_names;
};

struct SplitCandidate {
    std::size_t feature = 0;
    double threshold = 0.0;
    double gain = 0.0;
};

/// Column-major feature view: columns[f][row].
using FeatureColumns = std::vector<std::vector<double>>;

/// Exact greedy search over every midpoint between consecutive distinct
/// values of every feature, restricted to `node_rows`. Gain is
/// G_L^2/(n_L+lambda) + G_R^2/(n_R+lambda) - G^2/(n+lambda) with G the residual
/// sum. Ties go to the lower feature index, then the lower threshold. Returns
/// nothing when no admissible split beats min_gain.
std::optional<SplitCandidate> best_split(const FeatureColumns& columns, std::span<const double> residuals,
                                         std::span<const std::size_t> node_rows, const GbdtParams& params);

/// Squared-error boosting on all features of `train`. When `train_rmse` is
/// given it receives the training RMSE after the base score and after each
/// tree (size trees + 1).
GbdtModel fit_gbdt(const SampleTable& train, const GbdtParams& params,
                   std::vector<double>* train_rmse = nullptr);

double predict_gbdt(const GbdtModel& model, std::span<const double> x);
std::vector<double> predict_gbdt(const GbdtModel& model, const SampleTable& table);

const char* growth_name(Growth g) noexcept;
Growth parse_growth(std::string_view name);

}  // namespace demcorrect
