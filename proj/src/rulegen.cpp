#include "riskrules/rulegen.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <mutex>
#include <ostream>
#include <thread>

#include <fmt/format.h>

#include "riskrules/error.hpp"
#include "riskrules/random.hpp"

namespace riskrules {

namespace {

constexpr int kMaxResampleRetries = 100;
// Largest |logit| the risk curve may reach over the observed scores; keeps
// every tabulated probability representable strictly inside (0,1) when the
// scores separate the classes.
constexpr double kMaxCurveLogit = 30.0;

} // namespace

void validate(const RuleGenConfig& cfg) {
    if (cfg.k < 1) throw ValidationError("k must be >= 1");
    if (cfg.bootstraps < 1) throw ValidationError("B must be >= 1");
    if (cfg.score_cap < 1) throw ValidationError("score_cap must be >= 1");
}

std::vector<std::size_t> bootstrap_rows(const Dataset& ds, std::uint64_t seed, std::size_t replicate) {
    if (ds.n() == 0) throw DataError("cannot resample an empty dataset");
    for (int attempt = 0; attempt <= kMaxResampleRetries; ++attempt) {
        Engine rng = make_engine(seed, {0xb0075ULL, replicate, static_cast<std::uint64_t>(attempt)});
        std::uniform_int_distribution<std::size_t> pick(0, ds.n() - 1);
        std::vector<std::size_t> rows(ds.n());
        std::size_t pos = 0;
        for (auto& r : rows) {
            r = pick(rng);
            pos += static_cast<std::size_t>(ds.labels[r]);
        }
        if (pos != 0 && pos != rows.size()) return rows;
    }
    throw DataError(fmt::format("bootstrap replicate {} drew a single class on {} attempts", replicate,
                                kMaxResampleRetries + 1));
}

BootstrapSummary bootstrap_average(const Dataset& ds, const SimilarityMatrix& s, const SslrConfig& sslr_cfg,
                                   const RuleGenConfig& rg_cfg) {
    validate(rg_cfg);
    validate(sslr_cfg);
    if (ds.n() == 0) throw DataError("cannot bootstrap an empty dataset");

    const auto b = static_cast<std::size_t>(rg_cfg.bootstraps);
    const auto p = static_cast<Eigen::Index>(ds.p());
    BootstrapSummary out;
    out.bootstraps = rg_cfg.bootstraps;
    out.replicate_weights.resize(static_cast<Eigen::Index>(b), p);
    std::vector<double> intercepts(b, 0.0);

    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (std::size_t r = next++; r < b; r = next++) {
            try {
                SslrFit fit;
                if (rg_cfg.identity_resample) {
                    fit = fit_sslr(ds, s, sslr_cfg);
                } else {
                    const auto rows = bootstrap_rows(ds, rg_cfg.seed, r);
                    fit = fit_sslr(select_rows(ds, rows), s, sslr_cfg);
                }
                out.replicate_weights.row(static_cast<Eigen::Index>(r)) = fit.weights.coefficients.transpose();
                intercepts[r] = fit.weights.intercept;
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next = b;
            }
        }
    };

    unsigned threads = rg_cfg.threads ? rg_cfg.threads : std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, b));
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    }
    if (failure) std::rethrow_exception(failure);

    // Fixed summation order over replicates.
    out.mean_weights = Eigen::VectorXd::Zero(p);
    for (std::size_t r = 0; r < b; ++r) out.mean_weights += out.replicate_weights.row(static_cast<Eigen::Index>(r)).transpose();
    out.mean_weights /= static_cast<double>(b);
    out.std_weights = Eigen::VectorXd::Zero(p);
    for (std::size_t r = 0; r < b; ++r)
        out.std_weights +=
            (out.replicate_weights.row(static_cast<Eigen::Index>(r)).transpose() - out.mean_weights).cwiseAbs2();
    out.std_weights = (out.std_weights / static_cast<double>(b)).cwiseSqrt();
    double icpt = 0.0;
    for (double v : intercepts) icpt += v;
    out.mean_intercept = icpt / static_cast<double>(b);
    return out;
}

std::vector<FeatureImportance> rank_features(const Eigen::VectorXd& weights, const Eigen::VectorXd& column_sd) {
    if (weights.size() != column_sd.size())
        throw DataError(fmt::format("{} weights for {} feature deviations", weights.size(), column_sd.size()));
    std::vector<FeatureImportance> ranking;
    ranking.reserve(static_cast<std::size_t>(weights.size()));
    for (Eigen::Index i = 0; i < weights.size(); ++i)
        ranking.push_back({static_cast<std::size_t>(i), std::abs(weights[i]) * column_sd[i], weights[i]});
    std::stable_sort(ranking.begin(), ranking.end(), [](const auto& a, const auto& b) {
        if (a.importance != b.importance) return a.importance > b.importance;
        return a.index < b.index;
    });
    return ranking;
}

std::vector<FeatureImportance> feature_importance(const BootstrapSummary& summary, const Dataset& ds) {
    return rank_features(summary.mean_weights, column_std(ds));
}

PredictionRule derive_rule(const BootstrapSummary& summary, const std::vector<FeatureImportance>& ranking,
                           const std::vector<std::string>& feature_names, const RuleGenConfig& cfg) {
    validate(cfg);
    const auto k = static_cast<std::size_t>(cfg.k);
    const auto positive = static_cast<std::size_t>(std::count_if(
        ranking.begin(), ranking.end(), [](const FeatureImportance& f) { return f.importance > 0.0; }));
    if (positive < k)
        throw DataError(fmt::format("only {} features have positive importance, {} requested", positive, k));

    double largest = 0.0;
    for (std::size_t j = 0; j < k; ++j) largest = std::max(largest, std::abs(ranking[j].mean_weight));
    const double scale = static_cast<double>(cfg.score_cap) / largest;

    PredictionRule rule;
    rule.k = cfg.k;
    rule.score_cap = cfg.score_cap;
    for (std::size_t j = 0; j < k; ++j) {
        const auto& f = ranking[j];
        const double w = summary.mean_weights[static_cast<Eigen::Index>(f.index)];
        const double scaled = std::clamp(scale * w, -static_cast<double>(cfg.score_cap), static_cast<double>(cfg.score_cap));
        auto score = static_cast<int>(std::round(scaled));
        if (score == 0) score = w > 0.0 ? 1 : -1;
        const std::string name = f.index < feature_names.size() ? feature_names[f.index] : fmt::format("x{}", f.index);
        rule.items.push_back({f.index, name, score,
                              scale * summary.std_weights[static_cast<Eigen::Index>(f.index)]});
    }
    std::stable_sort(rule.items.begin(), rule.items.end(), [](const RuleItem& a, const RuleItem& b) {
        if (std::abs(a.score) != std::abs(b.score)) return std::abs(a.score) > std::abs(b.score);
        return a.feature_index < b.feature_index;
    });
    return rule;
}

void validate(const PredictionRule& rule) {
    if (rule.items.empty()) throw DataError("rule has no items");
    bool at_cap = false;
    for (std::size_t j = 0; j < rule.items.size(); ++j) {
        const auto& it = rule.items[j];
        if (it.score == 0 || std::abs(it.score) > rule.score_cap)
            throw DataError(fmt::format("rule item '{}' has score {} outside the allowed range", it.feature_name,
                                        it.score));
        if (!(it.score_std >= 0.0)) throw DataError("rule item std must be >= 0");
        at_cap = at_cap || std::abs(it.score) == rule.score_cap;
        if (j > 0) {
            const auto& prev = rule.items[j - 1];
            const bool ordered = std::abs(prev.score) > std::abs(it.score) ||
                                 (std::abs(prev.score) == std::abs(it.score) && prev.feature_index < it.feature_index);
            if (!ordered) throw DataError("rule items are not ordered by descending |score|");
        }
    }
    if (!at_cap) throw DataError("no rule item reaches the score cap");
}

long rule_score(const PredictionRule& rule, const Eigen::Ref<const Eigen::VectorXd>& x) {
    long total = 0;
    for (const auto& it : rule.items) {
        if (it.feature_index >= static_cast<std::size_t>(x.size()))
            throw DataError(fmt::format("rule feature index {} out of range", it.feature_index));
        if (x[static_cast<Eigen::Index>(it.feature_index)] != 0.0) total += it.score;
    }
    return total;
}

double rule_score_raw(const PredictionRule& rule, const Eigen::Ref<const Eigen::VectorXd>& x) {
    double total = 0.0;
    for (const auto& it : rule.items) {
        if (it.feature_index >= static_cast<std::size_t>(x.size()))
            throw DataError(fmt::format("rule feature index {} out of range", it.feature_index));
        total += it.score * x[static_cast<Eigen::Index>(it.feature_index)];
    }
    return total;
}

Eigen::VectorXd rule_scores(const PredictionRule& rule, const Dataset& ds, RuleScoring mode) {
    Eigen::VectorXd out(static_cast<Eigen::Index>(ds.n()));
    for (std::size_t d = 0; d < ds.n(); ++d) {
        const auto x = ds.values.row(static_cast<Eigen::Index>(d)).transpose();
        out[static_cast<Eigen::Index>(d)] =
            mode == RuleScoring::Binary ? static_cast<double>(rule_score(rule, x)) : rule_score_raw(rule, x);
    }
    return out;
}

double RiskCurve::probability(double score) const { return sigmoid(intercept + slope * score); }

RiskCurve fit_risk_curve(const PredictionRule& rule, const Dataset& ds, RuleScoring mode) {
    if (ds.n() == 0) throw DataError("cannot fit a risk curve on an empty dataset");
    return fit_risk_curve(rule_scores(rule, ds, mode), ds.labels);
}

RiskCurve fit_risk_curve(const Eigen::VectorXd& scores, const std::vector<int>& labels) {
    const auto n = scores.size();
    if (n == 0 || static_cast<std::size_t>(n) != labels.size())
        throw DataError("risk curve needs one label per score");
    const double lo = scores.minCoeff();
    const double hi = scores.maxCoeff();
    if (lo == hi) throw DataError("constant score: cannot fit a risk curve");

    // Fit on centered scores for conditioning, then undo the shift.
    const double center = scores.mean();
    const Eigen::VectorXd s = scores.array() - center;
    double pos = 0.0;
    for (int y : labels) pos += y;
    const double rate = std::clamp(pos / static_cast<double>(n), 1e-6, 1.0 - 1e-6);

    auto nll = [&](double a, double b) {
        double total = 0.0;
        for (Eigen::Index d = 0; d < n; ++d) {
            const double f = a + b * s[d];
            total += softplus(f) - (labels[static_cast<std::size_t>(d)] ? f : 0.0);
        }
        return total;
    };
    auto max_logit = [&](double a, double b) {
        return std::max(std::abs(a + b * (lo - center)), std::abs(a + b * (hi - center)));
    };

    double a = std::log(rate / (1.0 - rate));
    double b = 0.0;
    double value = nll(a, b);
    bool done = false;
    for (int it = 0; it < 200 && !done; ++it) {
        double g0 = 0.0, g1 = 0.0, h00 = 0.0, h01 = 0.0, h11 = 0.0;
        for (Eigen::Index d = 0; d < n; ++d) {
            const double pr = sigmoid(a + b * s[d]);
            const double r = pr - labels[static_cast<std::size_t>(d)];
            const double w = pr * (1.0 - pr);
            g0 += r;
            g1 += r * s[d];
            h00 += w;
            h01 += w * s[d];
            h11 += w * s[d] * s[d];
        }
        if (std::max(std::abs(g0), std::abs(g1)) <= 1e-10) break;
        const double ridge = 1e-12 * (h00 + h11) + 1e-300;
        h00 += ridge;
        h11 += ridge;
        const double det = h00 * h11 - h01 * h01;
        const double da = -(h11 * g0 - h01 * g1) / det;
        const double db = -(h00 * g1 - h01 * g0) / det;
        if (!std::isfinite(da) || !std::isfinite(db)) break;

        double t = 1.0;
        bool accepted = false;
        for (int half = 0; half < 60; ++half, t /= 2.0) {
            const double na = a + t * da;
            const double nb = b + t * db;
            if (max_logit(na, nb) > kMaxCurveLogit) continue;
            const double nv = nll(na, nb);
            if (nv <= value) {
                accepted = true;
                done = std::max(std::abs(na - a), std::abs(nb - b)) <= 1e-10;
                a = na;
                b = nb;
                value = nv;
                break;
            }
        }
        if (!accepted) break;
    }

    RiskCurve curve;
    curve.slope = b;
    curve.intercept = a - b * center;
    for (auto v = static_cast<long>(std::floor(lo)); v <= static_cast<long>(std::ceil(hi)); ++v)
        curve.table.emplace_back(v, curve.probability(static_cast<double>(v)));
    return curve;
}

void write_score_card(const PredictionRule& rule, const RiskCurve& curve, std::ostream& out) {
    std::size_t width = 4;
    for (std::size_t j = 0; j < rule.items.size(); ++j)
        width = std::max(width, fmt::format("{}. {}", j + 1, rule.items[j].feature_name).size());
    out << fmt::format("{:<{}}  {}\n", "Item", width, "Score");
    for (std::size_t j = 0; j < rule.items.size(); ++j) {
        const auto& it = rule.items[j];
        out << fmt::format("{:<{}}  {} (±{:.1f})\n", fmt::format("{}. {}", j + 1, it.feature_name), width,
                           it.score, it.score_std);
    }
    out << fmt::format("\nRisk curve: P(y=1 | score) = 1 / (1 + exp(-({:.6g} + {:.6g} * score)))\n", curve.intercept,
                       curve.slope);
    out << fmt::format("{:>6}  {}\n", "score", "risk");
    for (const auto& [score, prob] : curve.table) out << fmt::format("{:>6}  {:.1f}%\n", score, 100.0 * prob);
}

} // namespace riskrules
