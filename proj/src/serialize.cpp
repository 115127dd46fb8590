#include "riskrules/serialize.hpp"

#include <algorithm>
#include <cstdlib>

#include <fmt/format.h>

#include "riskrules/error.hpp"

namespace riskrules {

namespace {

const Json& require(const Json& j, const char* key) {
    if (!j.is_object() || !j.contains(key)) throw DataError(fmt::format("model JSON is missing \"{}\"", key));
    return j.at(key);
}

Json optional_number(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

} // namespace

Json to_json(const ModelWeights& m, const std::vector<std::string>& feature_names) {
    Json j;
    j["intercept"] = m.intercept;
    j["coefficients"] = std::vector<double>(m.coefficients.data(), m.coefficients.data() + m.coefficients.size());
    j["feature_names"] = feature_names;
    return j;
}

ModelWeights weights_from_json(const Json& j, std::vector<std::string>* feature_names) {
    ModelWeights m;
    try {
        m.intercept = require(j, "intercept").get<double>();
        const auto coefs = require(j, "coefficients").get<std::vector<double>>();
        m.coefficients = Eigen::Map<const Eigen::VectorXd>(coefs.data(), static_cast<Eigen::Index>(coefs.size()));
        if (feature_names) *feature_names = require(j, "feature_names").get<std::vector<std::string>>();
    } catch (const Json::exception& e) {
        throw DataError(fmt::format("malformed weights JSON: {}", e.what()));
    }
    if (feature_names && feature_names->size() != m.p())
        throw DataError("weights JSON has mismatched feature_names and coefficients");
    return m;
}

Json to_json(const PredictionRule& rule, const RiskCurve& curve) {
    Json items = Json::array();
    for (const auto& it : rule.items) items.push_back({{"feature", it.feature_name}, {"score", it.score}, {"std", it.score_std}});
    Json table = Json::array();
    for (const auto& [score, prob] : curve.table) table.push_back(Json::array({score, prob}));
    Json j;
    j["items"] = std::move(items);
    j["risk_curve"] = {{"slope", curve.slope}, {"intercept", curve.intercept}, {"table", std::move(table)}};
    return j;
}

std::pair<PredictionRule, RiskCurve> rule_from_json(const Json& j, const std::vector<std::string>& feature_names) {
    PredictionRule rule;
    RiskCurve curve;
    try {
        int cap = 0;
        for (const auto& item : require(j, "items")) {
            RuleItem it;
            it.feature_name = require(item, "feature").get<std::string>();
            it.score = require(item, "score").get<int>();
            it.score_std = require(item, "std").get<double>();
            const auto pos = std::find(feature_names.begin(), feature_names.end(), it.feature_name);
            if (pos == feature_names.end())
                throw DataError(fmt::format("rule feature '{}' is not a column of the data", it.feature_name));
            it.feature_index = static_cast<std::size_t>(pos - feature_names.begin());
            cap = std::max(cap, std::abs(it.score));
            rule.items.push_back(std::move(it));
        }
        rule.k = static_cast<int>(rule.items.size());
        rule.score_cap = cap;
        const auto& rc = require(j, "risk_curve");
        curve.slope = require(rc, "slope").get<double>();
        curve.intercept = require(rc, "intercept").get<double>();
        for (const auto& row : require(rc, "table")) curve.table.emplace_back(row.at(0).get<long>(), row.at(1).get<double>());
    } catch (const Json::exception& e) {
        throw DataError(fmt::format("malformed rule JSON: {}", e.what()));
    }
    return {std::move(rule), std::move(curve)};
}

Json to_json(const RgbEnsemble& model) {
    Json trees = Json::array();
    for (const auto& tree : model.trees) {
        Json nodes = Json::array();
        for (const auto& node : tree.nodes) {
            if (node.is_leaf())
                nodes.push_back({{"value", node.value}, {"samples", node.samples}});
            else
                nodes.push_back({{"feature", node.feature},
                                 {"threshold", node.threshold},
                                 {"left", node.left},
                                 {"right", node.right},
                                 {"samples", node.samples}});
        }
        trees.push_back({{"features", tree.features}, {"nodes", std::move(nodes)}});
    }
    Json j;
    j["f0"] = model.initial_score;
    j["rate"] = model.learning_rate;
    j["trees"] = std::move(trees);
    j["feature_names"] = model.feature_names;
    return j;
}

RgbEnsemble ensemble_from_json(const Json& j) {
    RgbEnsemble model;
    try {
        model.initial_score = require(j, "f0").get<double>();
        model.learning_rate = require(j, "rate").get<double>();
        if (j.contains("feature_names")) model.feature_names = j.at("feature_names").get<std::vector<std::string>>();
        for (const auto& t : require(j, "trees")) {
            RegressionTree tree;
            if (t.contains("features")) tree.features = t.at("features").get<std::vector<std::size_t>>();
            for (const auto& n : require(t, "nodes")) {
                TreeNode node;
                if (n.contains("feature")) {
                    node.feature = n.at("feature").get<int>();
                    node.threshold = require(n, "threshold").get<double>();
                    node.left = require(n, "left").get<int>();
                    node.right = require(n, "right").get<int>();
                } else {
                    node.value = require(n, "value").get<double>();
                }
                if (n.contains("samples")) node.samples = n.at("samples").get<std::size_t>();
                tree.nodes.push_back(node);
            }
            const auto count = static_cast<int>(tree.nodes.size());
            if (count == 0) throw DataError("tree with no nodes");
            for (const auto& node : tree.nodes)
                if (!node.is_leaf() && (node.left <= 0 || node.left >= count || node.right <= 0 || node.right >= count))
                    throw DataError("tree child index out of range");
            model.trees.push_back(std::move(tree));
        }
    } catch (const Json::exception& e) {
        throw DataError(fmt::format("malformed ensemble JSON: {}", e.what()));
    }
    return model;
}

Json to_json(const EvalReport& r) {
    Json j;
    j["threshold"] = r.threshold;
    j["sensitivity"] = optional_number(r.sensitivity);
    j["specificity"] = optional_number(r.specificity);
    j["ppv"] = optional_number(r.ppv);
    j["npv"] = optional_number(r.npv);
    j["f_measure"] = optional_number(r.f_measure);
    j["auc"] = optional_number(r.auc);
    j["tp"] = r.tp;
    j["fp"] = r.fp;
    j["tn"] = r.tn;
    j["fn"] = r.fn;
    return j;
}

std::string format_report(const EvalReport& r) {
    auto cell = [](const std::optional<double>& v) { return v ? fmt::format("{:.4f}", *v) : std::string("undefined"); };
    std::string out;
    out += fmt::format("{:<12} {:>10}\n", "threshold", fmt::format("{:.4f}", r.threshold));
    out += fmt::format("{:<12} {:>10}\n", "sensitivity", cell(r.sensitivity));
    out += fmt::format("{:<12} {:>10}\n", "specificity", cell(r.specificity));
    out += fmt::format("{:<12} {:>10}\n", "ppv", cell(r.ppv));
    out += fmt::format("{:<12} {:>10}\n", "npv", cell(r.npv));
    out += fmt::format("{:<12} {:>10}\n", "f_measure", cell(r.f_measure));
    out += fmt::format("{:<12} {:>10}\n", "auc", cell(r.auc));
    out += fmt::format("{:<12} {:>10}\n", "tp/fp/tn/fn", fmt::format("{}/{}/{}/{}", r.tp, r.fp, r.tn, r.fn));
    return out;
}

} // namespace riskrules
