#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "riskrules/dataset.hpp"
#include "riskrules/similarity.hpp"
#include "riskrules/sslr.hpp"

namespace riskrules {

struct RuleGenConfig {
    int k = 10;
    int bootstraps = 100;
    std::uint64_t seed = 0;
    int score_cap = 10;
    // Worker threads for replicate fits; 0 picks the hardware concurrency.
    // Results do not depend on this value.
    unsigned threads = 0;
    // Test hook: every replicate uses the original rows instead of a resample.
    bool identity_resample = false;
};

void validate(const RuleGenConfig& cfg);

struct BootstrapSummary {
    Eigen::VectorXd mean_weights;
    Eigen::VectorXd std_weights; // population std over replicates
    double mean_intercept = 0.0;
    int bootstraps = 0;
    Eigen::MatrixXd replicate_weights; // bootstraps x p
};

/// Fits one SSLR model per bootstrap resample of `ds` with `s` held fixed,
/// then averages the coefficient vectors.
BootstrapSummary bootstrap_average(const Dataset& ds, const SimilarityMatrix& s, const SslrConfig& sslr_cfg,
                                   const RuleGenConfig& rg_cfg);

/// Rows drawn with replacement for replicate `replicate`, redrawn on a
/// derived seed while the resample holds a single class.
std::vector<std::size_t> bootstrap_rows(const Dataset& ds, std::uint64_t seed, std::size_t replicate);

struct FeatureImportance {
    std::size_t index = 0;
    double importance = 0.0;
    double mean_weight = 0.0;
};

/// importance_i = |w_i| * sd_i, ranked descending with ties by index.
std::vector<FeatureImportance> rank_features(const Eigen::VectorXd& weights, const Eigen::VectorXd& column_sd);
std::vector<FeatureImportance> feature_importance(const BootstrapSummary& summary, const Dataset& ds);

struct RuleItem {
    std::size_t feature_index = 0;
    std::string feature_name;
    int score = 0;
    double score_std = 0.0;
};

struct PredictionRule {
    std::vector<RuleItem> items;
    int k = 0;
    int score_cap = 10;
};

/// Scales the top-k mean weights so the largest magnitude maps to the score
/// cap and rounds half away from zero; weights that round to zero become +-1.
PredictionRule derive_rule(const BootstrapSummary& summary, const std::vector<FeatureImportance>& ranking,
                           const std::vector<std::string>& feature_names, const RuleGenConfig& cfg);

/// Throws DataError when a PredictionRule invariant is broken.
void validate(const PredictionRule& rule);

enum class RuleScoring { Binary, Raw };

/// Sum of item scores over present (nonzero) rule features.
long rule_score(const PredictionRule& rule, const Eigen::Ref<const Eigen::VectorXd>& x);
/// Sum of score * value, for continuous features.
double rule_score_raw(const PredictionRule& rule, const Eigen::Ref<const Eigen::VectorXd>& x);
Eigen::VectorXd rule_scores(const PredictionRule& rule, const Dataset& ds, RuleScoring mode = RuleScoring::Binary);

struct RiskCurve {
    double slope = 0.0;
    double intercept = 0.0;
    std::vector<std::pair<long, double>> table;

    double probability(double score) const;
};

/// Univariate logistic regression of labels on rule scores.
RiskCurve fit_risk_curve(const PredictionRule& rule, const Dataset& ds, RuleScoring mode = RuleScoring::Binary);
RiskCurve fit_risk_curve(const Eigen::VectorXd& scores, const std::vector<int>& labels);

/// Score card laid out as "n. item  score (+-std)".
void write_score_card(const PredictionRule& rule, const RiskCurve& curve, std::ostream& out);

} // namespace riskrules
