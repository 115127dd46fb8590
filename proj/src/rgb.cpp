#include "riskrules/rgb.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "riskrules/error.hpp"
#include "riskrules/sslr.hpp"

namespace riskrules {

namespace {

struct SplitCandidate {
    double gain = 0.0;
    int feature = -1;
    double threshold = 0.0;
};

struct FrontierLeaf {
    int node = 0;
    std::vector<std::size_t> rows; // positions into the caller's row span
    SplitCandidate best;
};

std::vector<std::size_t> draw_subset(std::span<const std::size_t> pool, std::size_t count, Engine& rng) {
    std::vector<std::size_t> out;
    out.reserve(std::min(count, pool.size()));
    std::sample(pool.begin(), pool.end(), std::back_inserter(out), count, rng);
    return out;
}

SplitCandidate best_split(const Eigen::MatrixXd& x, std::span<const std::size_t> rows,
                          std::span<const double> residuals, const std::vector<std::size_t>& members,
                          std::vector<std::size_t> features, std::size_t min_leaf) {
    SplitCandidate best;
    const std::size_t n = members.size();
    if (n < 2 * min_leaf || n < 2) return best;

    double total = 0.0, total_sq = 0.0;
    for (auto m : members) {
        total += residuals[m];
        total_sq += residuals[m] * residuals[m];
    }
    const double parent = total * total / static_cast<double>(n);
    const double min_gain = 1e-12 * (total_sq + 1e-300);

    std::sort(features.begin(), features.end());
    std::vector<std::pair<double, double>> column(n);
    for (auto f : features) {
        for (std::size_t i = 0; i < n; ++i)
            column[i] = {x(static_cast<Eigen::Index>(rows[members[i]]), static_cast<Eigen::Index>(f)),
                         residuals[members[i]]};
        std::sort(column.begin(), column.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });
        double left = 0.0;
        for (std::size_t i = 0; i + 1 < n; ++i) {
            left += column[i].second;
            const std::size_t n_left = i + 1;
            if (n_left < min_leaf) continue;
            if (n - n_left < min_leaf) break;
            if (column[i].first == column[i + 1].first) continue;
            const double right = total - left;
            const double gain = left * left / static_cast<double>(n_left) +
                                right * right / static_cast<double>(n - n_left) - parent;
            if (gain > min_gain && gain > best.gain) {
                best.gain = gain;
                best.feature = static_cast<int>(f);
                best.threshold = column[i].first + (column[i + 1].first - column[i].first) / 2.0;
            }
        }
    }
    return best;
}

double leaf_value(const std::vector<std::size_t>& members, std::span<const double> residuals,
                  std::span<const double> hessians) {
    double g = 0.0, h = 0.0;
    for (auto m : members) {
        g += residuals[m];
        h += hessians[m];
    }
    return g / std::max(h, 1e-12);
}

} // namespace

RgbConfig resolve(const RgbConfig& cfg, std::size_t p) {
    if (p == 0) throw ValidationError("boosting needs at least one feature");
    RgbConfig out = cfg;
    if (out.per_tree_features == 0) out.per_tree_features = std::max(1, static_cast<int>(p / 3));
    if (out.per_node_features == 0) out.per_node_features = (out.per_tree_features + 2) / 3;
    if (out.n_trees < 0) throw ValidationError("n_trees must be >= 0");
    if (!(out.learning_rate > 0.0 && out.learning_rate < 1.0))
        throw ValidationError("learning_rate must be in (0,1)");
    if (out.max_leaves < 1) throw ValidationError("max_leaves must be >= 1");
    if (out.min_samples_leaf < 1) throw ValidationError("min_samples_leaf must be >= 1");
    if (!(out.row_subsample > 0.0 && out.row_subsample <= 1.0))
        throw ValidationError("row_subsample must be in (0,1]");
    if (out.per_tree_features < 1 || static_cast<std::size_t>(out.per_tree_features) > p)
        throw ValidationError(fmt::format("per_tree_features must be in [1,{}]", p));
    if (out.per_node_features < 1 || out.per_node_features > out.per_tree_features)
        throw ValidationError("per_node_features must be in [1, per_tree_features]");
    return out;
}

double RegressionTree::predict(const Eigen::Ref<const Eigen::VectorXd>& x) const {
    int at = 0;
    while (!nodes[static_cast<std::size_t>(at)].is_leaf()) {
        const auto& node = nodes[static_cast<std::size_t>(at)];
        if (node.feature >= x.size())
            throw DataError(fmt::format("tree splits on feature {} but input has {}", node.feature, x.size()));
        at = x[node.feature] <= node.threshold ? node.left : node.right;
    }
    return nodes[static_cast<std::size_t>(at)].value;
}

std::size_t RegressionTree::leaf_count() const {
    return static_cast<std::size_t>(std::count_if(nodes.begin(), nodes.end(), [](const auto& n) { return n.is_leaf(); }));
}

double RgbEnsemble::decision_function(const Eigen::Ref<const Eigen::VectorXd>& x, std::size_t limit) const {
    double f = initial_score;
    const std::size_t count = std::min(limit, trees.size());
    for (std::size_t t = 0; t < count; ++t) f += learning_rate * trees[t].predict(x);
    return f;
}

RegressionTree fit_gradient_tree(const Eigen::MatrixXd& x, std::span<const std::size_t> rows,
                                 std::span<const double> residuals, std::span<const double> hessians,
                                 std::span<const std::size_t> feature_subset, const RgbConfig& cfg, Engine& rng) {
    if (rows.empty()) throw DataError("cannot grow a tree on zero rows");
    if (residuals.size() != rows.size() || hessians.size() != rows.size())
        throw DataError("residuals and hessians must have one entry per row");
    if (feature_subset.empty()) throw DataError("tree feature subset is empty");
    for (double h : hessians)
        if (!(h > 0.0)) throw DataError("hessians must be strictly positive");

    const auto per_node = static_cast<std::size_t>(std::max(1, cfg.per_node_features));
    const auto min_leaf = static_cast<std::size_t>(std::max(1, cfg.min_samples_leaf));

    RegressionTree tree;
    tree.features.assign(feature_subset.begin(), feature_subset.end());
    std::sort(tree.features.begin(), tree.features.end());

    auto make_leaf = [&](std::vector<std::size_t> members) {
        FrontierLeaf leaf;
        leaf.node = static_cast<int>(tree.nodes.size());
        TreeNode node;
        node.value = leaf_value(members, residuals, hessians);
        node.samples = members.size();
        tree.nodes.push_back(node);
        leaf.rows = std::move(members);
        return leaf;
    };
    auto evaluate = [&](FrontierLeaf& leaf) {
        if (cfg.max_leaves > 1)
            leaf.best = best_split(x, rows, residuals, leaf.rows, draw_subset(tree.features, per_node, rng), min_leaf);
    };

    std::vector<std::size_t> all(rows.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    std::vector<FrontierLeaf> frontier;
    frontier.push_back(make_leaf(std::move(all)));
    evaluate(frontier.back());

    int leaves = 1;
    while (leaves < cfg.max_leaves) {
        // Largest gain first; ties go to the earliest-created leaf.
        auto pick = frontier.end();
        for (auto it = frontier.begin(); it != frontier.end(); ++it)
            if (it->best.feature >= 0 && (pick == frontier.end() || it->best.gain > pick->best.gain)) pick = it;
        if (pick == frontier.end()) break;

        FrontierLeaf parent = std::move(*pick);
        frontier.erase(pick);
        std::vector<std::size_t> left_rows, right_rows;
        for (auto m : parent.rows) {
            const double v = x(static_cast<Eigen::Index>(rows[m]), parent.best.feature);
            (v <= parent.best.threshold ? left_rows : right_rows).push_back(m);
        }
        FrontierLeaf left = make_leaf(std::move(left_rows));
        FrontierLeaf right = make_leaf(std::move(right_rows));
        auto& node = tree.nodes[static_cast<std::size_t>(parent.node)];
        node.feature = parent.best.feature;
        node.threshold = parent.best.threshold;
        node.left = left.node;
        node.right = right.node;
        ++leaves;
        evaluate(left);
        evaluate(right);
        frontier.push_back(std::move(left));
        frontier.push_back(std::move(right));
    }
    return tree;
}

double binomial_deviance(std::span<const double> scores, std::span<const int> labels) {
    double total = 0.0;
    for (std::size_t d = 0; d < scores.size(); ++d) total += softplus(scores[d]) - (labels[d] ? scores[d] : 0.0);
    return total;
}

RgbEnsemble fit_rgb(const Dataset& ds, const RgbConfig& raw_cfg, std::vector<double>* deviance_trace) {
    const RgbConfig cfg = resolve(raw_cfg, ds.p());
    const std::size_t n = ds.n();
    const std::size_t pos = ds.positives();
    if (pos == 0 || pos == n) throw DataError("boosting needs both classes present");

    RgbEnsemble model;
    const double rate = static_cast<double>(pos) / static_cast<double>(n);
    model.initial_score = std::log(rate / (1.0 - rate));
    model.learning_rate = cfg.learning_rate;
    model.feature_names = ds.feature_names;

    Engine rng = make_engine(cfg.seed, {0x4b6bULL});
    std::vector<double> scores(n, model.initial_score);
    std::vector<std::size_t> all_features(ds.p()), all_rows(n);
    std::iota(all_features.begin(), all_features.end(), std::size_t{0});
    std::iota(all_rows.begin(), all_rows.end(), std::size_t{0});
    const auto sample_rows =
        static_cast<std::size_t>(std::ceil(cfg.row_subsample * static_cast<double>(n) - 1e-9));

    if (deviance_trace) deviance_trace->clear();
    std::vector<double> residuals, hessians;
    for (int t = 0; t < cfg.n_trees; ++t) {
        const auto features = draw_subset(all_features, static_cast<std::size_t>(cfg.per_tree_features), rng);
        const auto rows = sample_rows >= n ? all_rows : draw_subset(all_rows, std::max<std::size_t>(1, sample_rows), rng);
        residuals.resize(rows.size());
        hessians.resize(rows.size());
        for (std::size_t i = 0; i < rows.size(); ++i) {
            const double pr = sigmoid(scores[rows[i]]);
            residuals[i] = ds.labels[rows[i]] - pr;
            hessians[i] = std::max(pr * (1.0 - pr), 1e-16);
        }
        RegressionTree tree = fit_gradient_tree(ds.values, rows, residuals, hessians, features, cfg, rng);
        for (std::size_t d = 0; d < n; ++d)
            scores[d] += cfg.learning_rate * tree.predict(ds.values.row(static_cast<Eigen::Index>(d)).transpose());
        model.trees.push_back(std::move(tree));
        if (deviance_trace) deviance_trace->push_back(binomial_deviance(scores, ds.labels));
    }
    return model;
}

double rgb_predict_proba(const RgbEnsemble& model, const Eigen::Ref<const Eigen::VectorXd>& x) {
    return sigmoid(model.decision_function(x));
}

Eigen::VectorXd rgb_predict_proba(const RgbEnsemble& model, const Dataset& ds) {
    Eigen::VectorXd out(static_cast<Eigen::Index>(ds.n()));
    for (std::size_t d = 0; d < ds.n(); ++d)
        out[static_cast<Eigen::Index>(d)] = rgb_predict_proba(model, ds.values.row(static_cast<Eigen::Index>(d)).transpose());
    return out;
}

} // namespace riskrules
