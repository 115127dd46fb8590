#include "riskrules/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "riskrules/error.hpp"

namespace riskrules {

namespace {

void check_inputs(std::span<const double> scores, std::span<const int> labels) {
    if (scores.size() != labels.size())
        throw DataError(fmt::format("{} scores for {} labels", scores.size(), labels.size()));
    for (int y : labels)
        if (y != 0 && y != 1) throw DataError("label value outside {0,1}");
}

std::pair<std::size_t, std::size_t> class_counts(std::span<const int> labels) {
    const auto pos = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
    return {pos, labels.size() - pos};
}

std::optional<double> ratio(std::size_t num, std::size_t den) {
    if (den == 0) return std::nullopt;
    return static_cast<double>(num) / static_cast<double>(den);
}

std::vector<std::size_t> order_by_score(std::span<const double> scores) {
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return scores[a] < scores[b]; });
    return order;
}

} // namespace

double auc(std::span<const double> scores, std::span<const int> labels) {
    check_inputs(scores, labels);
    const auto [pos, neg] = class_counts(labels);
    if (pos == 0 || neg == 0) throw DataError("AUC needs both classes present");

    // Twice the positive rank sum with tied blocks sharing their mean rank;
    // stays an exact integer.
    const auto order = order_by_score(scores);
    unsigned long long twice_rank_sum = 0;
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
        const unsigned long long twice_rank = (i + 1) + j; // ranks i+1 .. j
        for (std::size_t m = i; m < j; ++m)
            if (labels[order[m]] == 1) twice_rank_sum += twice_rank;
        i = j;
    }
    const unsigned long long twice_u = twice_rank_sum - static_cast<unsigned long long>(pos) * (pos + 1);
    return static_cast<double>(twice_u) / (2.0 * static_cast<double>(pos) * static_cast<double>(neg));
}

EvalReport confusion_metrics(std::span<const double> probs, std::span<const int> labels, double threshold) {
    check_inputs(probs, labels);
    EvalReport r;
    r.threshold = threshold;
    for (std::size_t d = 0; d < probs.size(); ++d) {
        const bool predicted = probs[d] >= threshold;
        if (labels[d] == 1)
            ++(predicted ? r.tp : r.fn);
        else
            ++(predicted ? r.fp : r.tn);
    }
    r.sensitivity = ratio(r.tp, r.tp + r.fn);
    r.specificity = ratio(r.tn, r.tn + r.fp);
    r.ppv = ratio(r.tp, r.tp + r.fp);
    r.npv = ratio(r.tn, r.tn + r.fn);
    if (r.sensitivity && r.ppv && *r.sensitivity + *r.ppv > 0.0)
        r.f_measure = 2.0 * *r.sensitivity * *r.ppv / (*r.sensitivity + *r.ppv);
    return r;
}

std::vector<double> threshold_candidates(std::span<const double> probs) {
    std::vector<double> distinct(probs.begin(), probs.end());
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    std::vector<double> out;
    out.reserve(distinct.size() + 1);
    out.push_back(0.0);
    for (std::size_t i = 0; i + 1 < distinct.size(); ++i)
        out.push_back(distinct[i] + (distinct[i + 1] - distinct[i]) / 2.0);
    out.push_back(1.0);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

double select_threshold(std::span<const double> probs, std::span<const int> labels) {
    check_inputs(probs, labels);
    const auto [pos, neg] = class_counts(labels);
    if (pos == 0 || neg == 0) throw DataError("threshold selection needs both classes present");

    // Sweep candidates in ascending order; a pointer over the sorted
    // probabilities tracks how many of each class fall below the threshold.
    const auto order = order_by_score(probs);
    const auto candidates = threshold_candidates(probs);
    std::size_t below = 0, pos_below = 0;
    double best_tau = candidates.front();
    double best_gap = 2.0;
    for (double tau : candidates) {
        while (below < order.size() && probs[order[below]] < tau) {
            pos_below += static_cast<std::size_t>(labels[order[below]]);
            ++below;
        }
        const double sens = static_cast<double>(pos - pos_below) / static_cast<double>(pos);
        const double spec = static_cast<double>(below - pos_below) / static_cast<double>(neg);
        const double gap = std::abs(sens - spec);
        if (gap < best_gap) {
            best_gap = gap;
            best_tau = tau;
        }
    }
    return best_tau;
}

std::vector<std::pair<double, double>> roc_points(std::span<const double> scores, std::span<const int> labels) {
    check_inputs(scores, labels);
    const auto [pos, neg] = class_counts(labels);
    if (pos == 0 || neg == 0) throw DataError("ROC needs both classes present");
    auto order = order_by_score(scores);
    std::reverse(order.begin(), order.end());
    std::vector<std::pair<double, double>> out{{0.0, 0.0}};
    std::size_t tp = 0, fp = 0;
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j < order.size() && scores[order[j]] == scores[order[i]]) {
            ++(labels[order[j]] == 1 ? tp : fp);
            ++j;
        }
        out.emplace_back(static_cast<double>(fp) / static_cast<double>(neg),
                         static_cast<double>(tp) / static_cast<double>(pos));
        i = j;
    }
    return out;
}

} // namespace riskrules
