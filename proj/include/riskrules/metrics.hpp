#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace riskrules {

/// Threshold-dependent metrics plus AUC. A rate whose denominator is zero is
/// left empty rather than reported as 0.
struct EvalReport {
    double threshold = 0.5;
    std::optional<double> sensitivity;
    std::optional<double> specificity;
    std::optional<double> ppv;
    std::optional<double> npv;
    std::optional<double> f_measure;
    std::optional<double> auc;
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t tn = 0;
    std::size_t fn = 0;
};

/// Mann-Whitney AUC; ties between a positive and a negative count one half.
double auc(std::span<const double> scores, std::span<const int> labels);

/// Predicts 1 iff prob >= threshold.
EvalReport confusion_metrics(std::span<const double> probs, std::span<const int> labels, double threshold);

/// Candidate thresholds: 0, 1 and midpoints between sorted distinct probs.
std::vector<double> threshold_candidates(std::span<const double> probs);

/// Candidate minimizing |sensitivity - specificity|; ties go to the smaller one.
double select_threshold(std::span<const double> probs, std::span<const int> labels);

/// (fpr, tpr) points sweeping the threshold from +inf down through every
/// distinct score.
std::vector<std::pair<double, double>> roc_points(std::span<const double> scores, std::span<const int> labels);

} // namespace riskrules
