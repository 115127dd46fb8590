#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "riskrules/dataset.hpp"
#include "riskrules/similarity.hpp"

namespace riskrules {

struct SslrConfig {
    double lambda = 5.0;
    double alpha = 0.5;
    int max_iterations = 10000;
    double tolerance = 1e-8;
    // Scaled subgradient residual required before the relative-decrease
    // test may stop the solver.
    double stationarity_tolerance = 1e-9;
    bool penalize_intercept = false;
};

void validate(const SslrConfig& cfg);

struct ModelWeights {
    double intercept = 0.0;
    Eigen::VectorXd coefficients;

    static ModelWeights zeros(std::size_t p) { return {0.0, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p))}; }
    std::size_t p() const { return static_cast<std::size_t>(coefficients.size()); }
};

/// Gradient of the smooth part over (intercept, coefficients).
struct Gradient {
    double intercept = 0.0;
    Eigen::VectorXd coefficients;
};

double sigmoid(double f);
/// log(1 + e^f) without overflow.
double softplus(double f);

double linear_score(const ModelWeights& m, const Eigen::Ref<const Eigen::VectorXd>& x);
double predict_proba(const ModelWeights& m, const Eigen::Ref<const Eigen::VectorXd>& x);
Eigen::VectorXd predict_proba(const ModelWeights& m, const Dataset& ds);

/// Negative log-likelihood -sum_d log P(y_d | x_d) with labels in {0,1}.
double negative_log_likelihood(const ModelWeights& m, const Dataset& ds);

/// Plain l1-penalized loss: NLL + lambda * sum_i |w_i|. Computed on its own
/// path, independent of the stabilized objective.
double lasso_objective(const ModelWeights& m, const Dataset& ds, double lambda, bool penalize_intercept = false);

/// NLL + lambda * sum_i (alpha |w_i| + (1-alpha)/2 (w_i - sum_{j!=i} S_ij w_j)^2).
double objective(const ModelWeights& m, const Dataset& ds, const SimilarityMatrix& s, const SslrConfig& cfg);

/// The objective without its l1 term.
double smooth_objective(const ModelWeights& m, const Dataset& ds, const SimilarityMatrix& s, const SslrConfig& cfg);

/// Gradient of smooth_objective.
Gradient smooth_gradient(const ModelWeights& m, const Dataset& ds, const SimilarityMatrix& s, const SslrConfig& cfg);

/// Proximal operator of t|.|.
double soft_threshold(double v, double t);

/// Largest violation of the l1 subgradient optimality conditions, divided by
/// (1 + max |gradient|).
double stationarity_residual(const ModelWeights& m, const Gradient& g, const SslrConfig& cfg);

struct SslrFit {
    ModelWeights weights;
    double objective = 0.0;
    int iterations = 0;
    bool converged = false;
    std::vector<double> objective_trace; // value after every accepted iteration
};

/// Minimizes `objective` by accelerated proximal gradient with backtracking
/// and a monotone safeguard: a trial point that does not lower the objective
/// is replaced by a plain proximal step from the current iterate.
SslrFit fit_sslr(const Dataset& ds, const SimilarityMatrix& s, const SslrConfig& cfg,
                 const std::optional<ModelWeights>& init = std::nullopt);

} // namespace riskrules
