#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "riskrules/dataset.hpp"
#include "riskrules/random.hpp"

namespace riskrules {

struct RgbConfig {
    int n_trees = 500;
    double learning_rate = 0.03;
    int max_leaves = 256;
    // 0 selects the default: floor(p/3) per tree (at least 1),
    // ceil(per_tree/3) per node.
    int per_tree_features = 0;
    int per_node_features = 0;
    double row_subsample = 0.5;
    int min_samples_leaf = 5;
    std::uint64_t seed = 0;
};

/// Copy of `cfg` with the feature-count defaults filled in for `p` features;
/// throws ValidationError on out-of-range values.
RgbConfig resolve(const RgbConfig& cfg, std::size_t p);

struct TreeNode {
    int feature = -1; // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;
    std::size_t samples = 0;

    bool is_leaf() const { return feature < 0; }
};

/// Binary regression tree; rows with x[feature] <= threshold go left.
struct RegressionTree {
    std::vector<TreeNode> nodes; // nodes[0] is the root
    std::vector<std::size_t> features; // subset the tree may split on, ascending

    double predict(const Eigen::Ref<const Eigen::VectorXd>& x) const;
    std::size_t leaf_count() const;
};

struct RgbEnsemble {
    double initial_score = 0.0;
    double learning_rate = 0.03;
    std::vector<RegressionTree> trees;
    std::vector<std::string> feature_names;

    /// initial_score + rate * sum of tree outputs, over the first `limit` trees.
    double decision_function(const Eigen::Ref<const Eigen::VectorXd>& x, std::size_t limit = SIZE_MAX) const;
};

/// Best-first growth on residuals: the frontier leaf with the largest
/// squared-error gain is split next, each leaf drawing a fresh subset of
/// per_node_features from `feature_subset`. Leaf values are Newton steps
/// sum(residual) / sum(hessian).
RegressionTree fit_gradient_tree(const Eigen::MatrixXd& x, std::span<const std::size_t> rows,
                                 std::span<const double> residuals, std::span<const double> hessians,
                                 std::span<const std::size_t> feature_subset, const RgbConfig& cfg, Engine& rng);

/// Sum of binomial deviance terms, -sum log P(y | F).
double binomial_deviance(std::span<const double> scores, std::span<const int> labels);

/// Boosts `cfg.n_trees` trees on logistic loss. When `deviance_trace` is set
/// it receives the training deviance after every tree.
RgbEnsemble fit_rgb(const Dataset& ds, const RgbConfig& cfg, std::vector<double>* deviance_trace = nullptr);

double rgb_predict_proba(const RgbEnsemble& model, const Eigen::Ref<const Eigen::VectorXd>& x);
Eigen::VectorXd rgb_predict_proba(const RgbEnsemble& model, const Dataset& ds);

} // namespace riskrules
