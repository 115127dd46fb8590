#pragma once

// Reference computations used only by the tests. Everything here is written
// with plain loops and shares no code path with the library internals.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "riskrules/dataset.hpp"
#include "riskrules/random.hpp"
#include "riskrules/similarity.hpp"

namespace oracle {

inline double log1pexp(double f) { return f > 0 ? f + std::log1p(std::exp(-f)) : std::log1p(std::exp(f)); }

/// NLL + lambda sum_i (alpha|w_i| + (1-alpha)/2 (w_i - sum_{j!=i} S_ij w_j)^2), unpenalized intercept.
inline double objective(double w0, const std::vector<double>& w, const riskrules::Dataset& ds,
                        const Eigen::MatrixXd& s, double lambda, double alpha, bool with_l1 = true) {
    double nll = 0.0;
    for (std::size_t d = 0; d < ds.n(); ++d) {
        double f = w0;
        for (std::size_t i = 0; i < w.size(); ++i) f += w[i] * ds.values(static_cast<long>(d), static_cast<long>(i));
        nll += log1pexp(f) - (ds.labels[d] == 1 ? f : 0.0);
    }
    double pen = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
        double nb = 0.0;
        for (std::size_t j = 0; j < w.size(); ++j)
            if (j != i) nb += s(static_cast<long>(i), static_cast<long>(j)) * w[j];
        pen += (with_l1 ? alpha * std::abs(w[i]) : 0.0) + (1.0 - alpha) / 2.0 * (w[i] - nb) * (w[i] - nb);
    }
    return nll + lambda * pen;
}

/// Central differences of f over a vector argument.
inline std::vector<double> central_differences(const std::function<double(const std::vector<double>&)>& f,
                                               std::vector<double> x, double rel_step = 1e-5) {
    std::vector<double> g(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double h = rel_step * std::max(1.0, std::abs(x[i]));
        const double orig = x[i];
        x[i] = orig + h;
        const double up = f(x);
        x[i] = orig - h;
        const double down = f(x);
        x[i] = orig;
        g[i] = (up - down) / (2.0 * h);
    }
    return g;
}

/// Unregularized logistic regression by full Newton iterations on [1 X].
inline Eigen::VectorXd newton_logistic(const Eigen::MatrixXd& x, const std::vector<int>& y, double tol = 1e-10) {
    const long n = x.rows(), p = x.cols();
    Eigen::MatrixXd a(n, p + 1);
    a.col(0).setOnes();
    a.rightCols(p) = x;
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(p + 1);
    for (int it = 0; it < 100; ++it) {
        Eigen::VectorXd grad = Eigen::VectorXd::Zero(p + 1);
        Eigen::MatrixXd hess = Eigen::MatrixXd::Zero(p + 1, p + 1);
        for (long d = 0; d < n; ++d) {
            const double f = a.row(d).dot(beta);
            const double pr = 1.0 / (1.0 + std::exp(-f));
            grad += (pr - y[static_cast<std::size_t>(d)]) * a.row(d).transpose();
            hess += pr * (1.0 - pr) * a.row(d).transpose() * a.row(d);
        }
        const Eigen::VectorXd step = hess.ldlt().solve(grad);
        beta -= step;
        if (step.lpNorm<Eigen::Infinity>() < tol && grad.lpNorm<Eigen::Infinity>() < 1e-8) break;
    }
    return beta;
}

/// Mann-Whitney by counting every (positive, negative) pair.
inline double pair_count_auc(std::span<const double> scores, std::span<const int> labels) {
    double wins = 0.0;
    long pairs = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (labels[i] != 1) continue;
        for (std::size_t j = 0; j < scores.size(); ++j) {
            if (labels[j] != 0) continue;
            ++pairs;
            if (scores[i] > scores[j]) wins += 1.0;
            else if (scores[i] == scores[j]) wins += 0.5;
        }
    }
    return wins / static_cast<double>(pairs);
}

/// |sensitivity - specificity| at threshold tau, by direct counting.
inline double sens_spec_gap(std::span<const double> probs, std::span<const int> labels, double tau) {
    double tp = 0, fn = 0, tn = 0, fp = 0;
    for (std::size_t d = 0; d < probs.size(); ++d) {
        const bool hit = probs[d] >= tau;
        if (labels[d] == 1) (hit ? tp : fn) += 1;
        else (hit ? fp : tn) += 1;
    }
    return std::abs(tp / (tp + fn) - tn / (tn + fp));
}

/// Small random dataset with both classes present and a logistic signal.
inline riskrules::Dataset random_dataset(std::size_t n, std::size_t p, std::uint64_t seed, double signal = 1.0) {
    riskrules::Engine rng = riskrules::make_engine(seed, {77});
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    riskrules::Dataset ds;
    ds.values.resize(static_cast<long>(n), static_cast<long>(p));
    std::vector<double> beta(p);
    for (auto& b : beta) b = signal * normal(rng);
    for (std::size_t j = 0; j < p; ++j) ds.feature_names.push_back("f" + std::to_string(j));
    do {
        ds.labels.clear();
        for (std::size_t d = 0; d < n; ++d) {
            double f = 0.0;
            for (std::size_t j = 0; j < p; ++j) {
                const double v = normal(rng);
                ds.values(static_cast<long>(d), static_cast<long>(j)) = v;
                f += beta[j] * v;
            }
            ds.labels.push_back(unit(rng) < 1.0 / (1.0 + std::exp(-f)) ? 1 : 0);
        }
    } while (ds.positives() == 0 || ds.positives() == n);
    return ds;
}

} // namespace oracle
