#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <set>
#include <vector>

#include "riskrules/dataset.hpp"

namespace riskrules {

/// Pairwise product term added to the label logit.
struct Interaction {
    std::size_t first = 0;
    std::size_t second = 0;
    double weight = 0.0;
};

struct SynthConfig {
    std::size_t n = 1000;
    std::size_t p = 50;
    std::size_t group_size = 5;
    double rho = 0.0;                 // within-group correlation, [0,1)
    std::vector<double> true_weights; // length p; empty means all zero
    double intercept = 0.0;
    std::uint64_t seed = 0;
    std::vector<Interaction> interactions;
    // When set, every feature becomes the indicator latent > threshold and
    // labels are drawn from the indicators.
    std::optional<double> count_threshold;
};

void validate(const SynthConfig& cfg);

/// Equicorrelated Gaussian blocks x = sqrt(rho) g_block + sqrt(1-rho) e with
/// Bernoulli(sigmoid(intercept + x.w + interactions)) labels. Features are
/// named x0..x{p-1}, the label y.
Dataset generate(const SynthConfig& cfg);

/// Feature indices of every block; feature j sits in block j / group_size.
std::vector<std::vector<std::size_t>> feature_groups(const SynthConfig& cfg);

/// Mean Jaccard index over all unordered pairs; two empty sets count as 1.
double stability_jaccard(const std::vector<std::set<std::size_t>>& selections);

} // namespace riskrules
