#include "riskrules/synth.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>
#include <random>

#include <fmt/format.h>

#include "riskrules/error.hpp"
#include "riskrules/random.hpp"
#include "riskrules/sslr.hpp"

namespace riskrules {

void validate(const SynthConfig& cfg) {
    if (cfg.n == 0 || cfg.p == 0) throw ValidationError("n and p must be positive");
    if (cfg.group_size == 0 || cfg.p % cfg.group_size != 0)
        throw ValidationError("p must be divisible by group_size");
    if (!(cfg.rho >= 0.0 && cfg.rho < 1.0)) throw ValidationError("rho must be in [0,1)");
    if (!cfg.true_weights.empty() && cfg.true_weights.size() != cfg.p)
        throw ValidationError(fmt::format("true_weights has {} entries, expected {}", cfg.true_weights.size(), cfg.p));
    for (const auto& it : cfg.interactions)
        if (it.first >= cfg.p || it.second >= cfg.p) throw ValidationError("interaction feature index out of range");
}

Dataset generate(const SynthConfig& cfg) {
    validate(cfg);
    Engine rng = make_engine(cfg.seed, {0x5717ULL});
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    const auto n = static_cast<Eigen::Index>(cfg.n);
    const auto p = static_cast<Eigen::Index>(cfg.p);
    const auto groups = static_cast<Eigen::Index>(cfg.p / cfg.group_size);
    const double shared = std::sqrt(cfg.rho);
    const double own = std::sqrt(1.0 - cfg.rho);

    Dataset ds;
    ds.values.resize(n, p);
    ds.labels.resize(cfg.n);
    ds.label_name = "y";
    for (Eigen::Index j = 0; j < p; ++j) ds.feature_names.push_back(fmt::format("x{}", j));

    std::vector<double> factor(static_cast<std::size_t>(groups));
    for (Eigen::Index d = 0; d < n; ++d) {
        for (auto& g : factor) g = normal(rng);
        for (Eigen::Index j = 0; j < p; ++j) {
            const double latent = shared * factor[static_cast<std::size_t>(j) / cfg.group_size] + own * normal(rng);
            ds.values(d, j) = cfg.count_threshold ? (latent > *cfg.count_threshold ? 1.0 : 0.0) : latent;
        }
        double logit = cfg.intercept;
        for (std::size_t j = 0; j < cfg.true_weights.size(); ++j)
            logit += cfg.true_weights[j] * ds.values(d, static_cast<Eigen::Index>(j));
        for (const auto& it : cfg.interactions)
            logit += it.weight * ds.values(d, static_cast<Eigen::Index>(it.first)) *
                     ds.values(d, static_cast<Eigen::Index>(it.second));
        ds.labels[static_cast<std::size_t>(d)] = unit(rng) < sigmoid(logit) ? 1 : 0;
    }
    return ds;
}

std::vector<std::vector<std::size_t>> feature_groups(const SynthConfig& cfg) {
    validate(cfg);
    std::vector<std::vector<std::size_t>> out(cfg.p / cfg.group_size);
    for (std::size_t j = 0; j < cfg.p; ++j) out[j / cfg.group_size].push_back(j);
    return out;
}

double stability_jaccard(const std::vector<std::set<std::size_t>>& selections) {
    if (selections.size() < 2) throw ValidationError("stability needs at least two selections");
    double total = 0.0;
    std::size_t pairs = 0;
    for (std::size_t a = 0; a < selections.size(); ++a) {
        for (std::size_t b = a + 1; b < selections.size(); ++b) {
            const auto& sa = selections[a];
            const auto& sb = selections[b];
            std::vector<std::size_t> common;
            std::set_intersection(sa.begin(), sa.end(), sb.begin(), sb.end(), std::back_inserter(common));
            const std::size_t uni = sa.size() + sb.size() - common.size();
            total += uni == 0 ? 1.0 : static_cast<double>(common.size()) / static_cast<double>(uni);
            ++pairs;
        }
    }
    return total / static_cast<double>(pairs);
}

} // namespace riskrules
